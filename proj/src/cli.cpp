#include "psrplan/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "psrplan/harness.hpp"

namespace psrplan {

namespace {

struct CommonOpts {
  std::string config;
  std::string preset_name;
  std::string out;
  std::string model_path;
  std::string method;
  long seed = -1;
  long episodes = -1;
  std::vector<long> n_sims;
  std::vector<std::string> methods;
  std::vector<std::string> overrides;
};

void attach_common(CLI::App* cmd, CommonOpts& o, bool wants_config) {
  if (wants_config) {
    cmd->add_option("--config", o.config, "config file path or preset name");
    cmd->add_option("--preset", o.preset_name, "preset name");
    cmd->add_option("--seed", o.seed, "override experiment.seed");
    cmd->add_option("--episodes", o.episodes, "override experiment.episodes");
    cmd->add_option("--n-sims", o.n_sims, "override experiment.n_sims (repeatable)");
    cmd->add_option("--method", o.methods, "override experiment.methods (repeatable)");
    cmd->add_option("overrides", o.overrides, "key=value config overrides");
  }
  cmd->add_option("--out", o.out, "output file or directory");
}

ExperimentConfig resolve_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.preset_name.empty()) {
    cfg = preset(o.preset_name);
  } else if (!o.config.empty()) {
    if (is_preset(o.config))
      cfg = preset(o.config);
    else
      cfg = ExperimentConfig::from_key_values(KeyValueConfig::parse_file(o.config));
  } else {
    throw std::invalid_argument("missing --config or --preset");
  }
  KeyValueConfig kv = cfg.to_key_values();
  auto known = ExperimentConfig::known_keys();
  kv.apply_overrides(o.overrides, &known);
  if (o.seed >= 0) kv.set("experiment.seed", std::to_string(o.seed));
  if (o.episodes >= 0) kv.set("experiment.episodes", std::to_string(o.episodes));
  if (!o.n_sims.empty()) {
    std::string joined;
    for (size_t i = 0; i < o.n_sims.size(); ++i)
      joined += (i ? "," : "") + std::to_string(o.n_sims[i]);
    kv.set("experiment.n_sims", joined);
  }
  if (!o.methods.empty()) {
    std::string joined;
    for (size_t i = 0; i < o.methods.size(); ++i) joined += (i ? "," : "") + o.methods[i];
    kv.set("experiment.methods", joined);
  }
  return ExperimentConfig::from_key_values(kv);
}

void print_summary(std::ostream& out, const std::vector<SummaryRow>& summary) {
  for (const SummaryRow& s : summary) {
    out << s.method << " " << s.domain << " n_sims=" << s.n_sims << " episodes=" << s.episodes
        << " mean_return=" << s.mean_return;
    if (s.stderr_return) out << " +/- " << *s.stderr_return;
    out << " mean_action_seconds=" << s.mean_action_seconds << "\n";
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"psrplan: offline spectral model learning with online tree search"};
  app.require_subcommand(1);

  CommonOpts gen_o, learn_o, diag_o, plan_o, exp_o, presets_o;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a training corpus");
  attach_common(gen, gen_o, true);

  CLI::App* learn_cmd = app.add_subcommand("learn", "learn a model from scratch");
  attach_common(learn_cmd, learn_o, true);

  CLI::App* diag = app.add_subcommand("diagnose", "compare a model against the exact oracle");
  attach_common(diag, diag_o, true);
  diag->add_option("--model", diag_o.model_path, "model file")->required();

  CLI::App* plan = app.add_subcommand("plan", "run planning episodes");
  attach_common(plan, plan_o, true);
  plan->add_option("--model", plan_o.model_path, "model file (otherwise learned from config)");

  CLI::App* exp = app.add_subcommand("experiment", "run a full evaluation");
  attach_common(exp, exp_o, true);

  CLI::App* presets_cmd = app.add_subcommand("presets", "list presets");
  presets_cmd->add_option("--show", presets_o.preset_name, "dump one preset as a config");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (presets_cmd->parsed()) {
      if (!presets_o.preset_name.empty()) {
        preset(presets_o.preset_name).to_key_values().serialize(out);
      } else {
        for (const std::string& name : preset_names()) out << name << "\n";
      }
      return 0;
    }
    if (gen->parsed()) {
      ExperimentConfig cfg = resolve_config(gen_o);
      Environment env = make_environment(cfg.env);
      auto corpus =
          generate_trajectories(*env.spec, env.map, cfg.data, mix_seed(cfg.seed, 101));
      std::string path = gen_o.out.empty() ? "corpus.txt" : gen_o.out;
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write " + path);
      save_corpus(f, corpus);
      out << "wrote " << corpus.size() << " trajectories to " << path << "\n";
      return 0;
    }
    if (learn_cmd->parsed()) {
      ExperimentConfig cfg = resolve_config(learn_o);
      LearnedArtifacts la = learn_from_config(cfg, &err);
      std::string path = learn_o.out.empty() ? "model.psr" : learn_o.out;
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write " + path);
      save_model(f, la.model);
      out << "learned rank-" << la.chosen_rank << " model on " << la.env.spec->id << "; wrote "
          << path << "\n";
      return 0;
    }
    if (diag->parsed()) {
      ExperimentConfig cfg = resolve_config(diag_o);
      Environment env = make_environment(cfg.env);
      std::ifstream f(diag_o.model_path);
      if (!f) throw std::runtime_error("cannot open model " + diag_o.model_path);
      PsrModel model = load_model(f);
      DiagnosticsReport rep = model_diagnostics(model, *env.spec, env.map, env.alphabet);
      out << rep;
      return 0;
    }
    if (plan->parsed()) {
      ExperimentConfig cfg = resolve_config(plan_o);
      if (!plan_o.model_path.empty()) {
        std::ifstream f(plan_o.model_path);
        if (!f) throw std::runtime_error("cannot open model " + plan_o.model_path);
        PsrModel model = load_model(f);
        Environment env = make_environment(cfg.env);
        PlannerConfig pc = cfg.planner;
        pc.n_sims = cfg.n_sims_list.front();
        pc.gamma = env.spec->discount;
        std::vector<MetricsRow> rows;
        for (int ep = 0; ep < cfg.episodes; ++ep) {
          uint64_t ep_seed = mix_seed(cfg.seed, static_cast<uint64_t>(ep));
          EpisodeRecord rec =
              plan_psr_episode(model, *env.spec, env.map, pc, cfg.max_steps, ep_seed);
          rows.push_back({model.restricted ? "psr-mcts-ro" : "psr-mcts", env.spec->id,
                          pc.n_sims, ep_seed, ep, rec.undiscounted, rec.discounted,
                          rec.mean_action_seconds, rec.fallback_count, rec.reset_count});
        }
        if (!plan_o.out.empty()) {
          std::filesystem::create_directories(plan_o.out);
          std::ofstream csv(plan_o.out + "/episodes.csv");
          write_metrics_csv(csv, rows);
        }
        print_summary(out, summarize(rows));
        return 0;
      }
      RunResult rr = run_experiment(cfg, plan_o.out, &err);
      print_summary(out, rr.summary);
      return 0;
    }
    if (exp->parsed()) {
      ExperimentConfig cfg = resolve_config(exp_o);
      std::string dir = exp_o.out.empty() ? "out" : exp_o.out;
      RunResult rr = run_experiment(cfg, dir, &err);
      print_summary(out, rr.summary);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no command\n";
  return 1;
}

}  // namespace psrplan
