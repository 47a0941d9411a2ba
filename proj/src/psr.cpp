#include "psrplan/psr.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace psrplan {

Eigen::MatrixXd truncated_svd(const Eigen::MatrixXd& p_th, int k) {
  if (k < 1 || k > std::min(p_th.rows(), p_th.cols()))
    throw std::invalid_argument("truncated_svd: k exceeds matrix dimensions");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(p_th, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(k);
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_threshold) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  double cut = rel_threshold * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) ++rank;
  return rank;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cut = sv.size() > 0 ? rel_cutoff * sv[0] : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

PsrModel learn(const HankelEstimates& est, int k, const LearnOptions& opts) {
  const Alphabet& al = est.sets.alphabet;
  const Eigen::MatrixXd& p_th = est.p_th;
  if (k < 1) throw std::invalid_argument("learn: rank must be >= 1");
  if (p_th.norm() <= 0.0) throw std::runtime_error("learn: degenerate estimates (P_TH is zero)");
  if (k > std::min(p_th.rows(), p_th.cols()))
    throw std::invalid_argument("learn: rank exceeds Hankel dimensions");

  Sequence empty;
  int eps_col = est.sets.history_index(empty);
  if (eps_col < 0) throw std::runtime_error("learn: history set lacks the empty history");

  Eigen::MatrixXd u = truncated_svd(p_th, k);
  Eigen::MatrixXd w = u.transpose() * p_th;              // k x |H|
  Eigen::MatrixXd w_pinv = pseudo_inverse(w, opts.pinv_cutoff);  // |H| x k

  PsrModel m;
  m.rank = k;
  m.alphabet = al;
  m.b_star = w.col(eps_col);
  m.b_inf = w_pinv.transpose() * est.p_h;

  std::vector<int> pairs = opts.pairs;
  if (pairs.empty())
    for (int p = 0; p < al.n_pairs(); ++p) pairs.push_back(p);

  m.b_ao.assign(static_cast<size_t>(al.n_pairs()), Eigen::MatrixXd());
  m.w_ao.assign(static_cast<size_t>(al.n_pairs()), Eigen::RowVectorXd());
  for (int pair : pairs) {
    const Eigen::SparseMatrix<double>& p_ao = est.p_t_ao_h[static_cast<size_t>(pair)];
    Eigen::MatrixXd proj = u.transpose() * p_ao;  // k x |H|
    m.b_ao[static_cast<size_t>(pair)] = proj * w_pinv;
    m.w_ao[static_cast<size_t>(pair)] = m.b_inf.transpose() * m.b_ao[static_cast<size_t>(pair)];
  }

  m.candidates.assign(static_cast<size_t>(al.n_actions), {});
  for (int a = 0; a < al.n_actions; ++a)
    for (int o = 0; o < al.n_obs; ++o)
      if (m.has_operator(al.pair_id(a, o))) m.candidates[static_cast<size_t>(a)].push_back(o);
  return m;
}

std::optional<PredictiveState> try_update_state(const PsrModel& m, const PredictiveState& s,
                                                int action, int obs, double eps) {
  int pair = m.alphabet.pair_id(action, obs);
  if (!m.has_operator(pair)) return std::nullopt;
  Eigen::VectorXd next = m.b_ao[static_cast<size_t>(pair)] * s.b;
  double z = m.b_inf.dot(next);
  if (!(std::abs(z) >= eps)) return std::nullopt;
  next /= z;
  return PredictiveState{std::move(next)};
}

PredictiveState update_state(const PsrModel& m, const PredictiveState& s, int action, int obs) {
  auto next = try_update_state(m, s, action, obs);
  if (!next)
    throw std::runtime_error("update_state: impossible transition for pair (" +
                             std::to_string(action) + "," + std::to_string(obs) + ")");
  return std::move(*next);
}

void obs_distribution(const PsrModel& m, const PredictiveState& s, int action,
                      ObsDistribution& out) {
  const std::vector<int>& cand = m.candidates[static_cast<size_t>(action)];
  out.symbols = &cand;
  out.raw.resize(cand.size());
  out.probs.resize(cand.size());
  out.fallback = false;
  double total = 0.0;
  for (size_t i = 0; i < cand.size(); ++i) {
    double w = m.w_ao[static_cast<size_t>(m.alphabet.pair_id(action, cand[i]))].dot(s.b);
    out.raw[i] = w;
    double clamped = w > 0.0 ? w : 0.0;
    out.probs[i] = clamped;
    total += clamped;
  }
  if (!(total > 0.0)) {
    out.fallback = true;
    double p = cand.empty() ? 0.0 : 1.0 / static_cast<double>(cand.size());
    for (double& v : out.probs) v = p;
    return;
  }
  for (double& v : out.probs) v /= total;
}

int sample_obs(const PsrModel& m, const PredictiveState& s, int action, Rng& rng,
               ObsDistribution& scratch) {
  obs_distribution(m, s, action, scratch);
  if (scratch.symbols->empty()) return -1;
  int idx = rng.categorical(scratch.probs, 1.0);
  return (*scratch.symbols)[static_cast<size_t>(idx)];
}

double predict_sequence(const PsrModel& m, const Sequence& seq) {
  Eigen::VectorXd v = m.b_star;
  for (const AoPair& p : seq) {
    int pair = m.alphabet.pair_id(p.action, p.obs);
    if (!m.has_operator(pair)) return 0.0;
    v = m.b_ao[static_cast<size_t>(pair)] * v;
  }
  return m.b_inf.dot(v);
}

PsrModel restrict_to_seen(const PsrModel& m, const std::vector<int>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("restrict_to_seen: empty pair set");
  PsrModel out = m;
  out.restricted = true;
  out.seen.assign(static_cast<size_t>(m.alphabet.n_pairs()), 0);
  for (int p : pairs) out.seen[static_cast<size_t>(p)] = 1;
  for (int p = 0; p < m.alphabet.n_pairs(); ++p) {
    if (!out.seen[static_cast<size_t>(p)]) {
      out.b_ao[static_cast<size_t>(p)] = Eigen::MatrixXd();
      out.w_ao[static_cast<size_t>(p)] = Eigen::RowVectorXd();
    }
  }
  out.candidates.assign(static_cast<size_t>(m.alphabet.n_actions), {});
  for (int a = 0; a < m.alphabet.n_actions; ++a)
    for (int o = 0; o < m.alphabet.n_obs; ++o) {
      int pair = m.alphabet.pair_id(a, o);
      if (out.seen[static_cast<size_t>(pair)] && out.has_operator(pair))
        out.candidates[static_cast<size_t>(a)].push_back(o);
    }
  return out;
}

int map_unseen_observation(const PsrModel& m, int action, int obs, Rng& rng) {
  const std::vector<int>& cand = m.candidates[static_cast<size_t>(action)];
  for (int o : cand)
    if (o == obs) return obs;
  if (cand.empty())
    throw std::runtime_error("map_unseen_observation: no seen observation for action " +
                             std::to_string(action));
  return cand[static_cast<size_t>(rng.uniform_int(static_cast<int>(cand.size())))];
}

void save_model(std::ostream& out, const PsrModel& m) {
  out.precision(17);
  out << "psrplan-model 1\n";
  out << "rank " << m.rank << '\n';
  out << "restricted " << (m.restricted ? 1 : 0) << '\n';
  out << "actions " << m.alphabet.n_actions;
  for (const auto& n : m.alphabet.action_names) out << ' ' << n;
  out << "\nobservations " << m.alphabet.n_obs;
  for (const auto& n : m.alphabet.obs_names) out << ' ' << n;
  out << "\nb_star";
  for (int i = 0; i < m.b_star.size(); ++i) out << ' ' << m.b_star[i];
  out << "\nb_inf";
  for (int i = 0; i < m.b_inf.size(); ++i) out << ' ' << m.b_inf[i];
  out << '\n';
  int count = 0;
  for (int p = 0; p < m.alphabet.n_pairs(); ++p)
    if (m.has_operator(p)) ++count;
  out << "operators " << count << '\n';
  for (int p = 0; p < m.alphabet.n_pairs(); ++p) {
    if (!m.has_operator(p)) continue;
    AoPair ao = m.alphabet.pair_of(p);
    out << "B " << ao.action << ' ' << ao.obs << '\n';
    const Eigen::MatrixXd& b = m.b_ao[static_cast<size_t>(p)];
    for (int r = 0; r < b.rows(); ++r)
      for (int c = 0; c < b.cols(); ++c)
        out << b(r, c) << (c + 1 == b.cols() ? '\n' : ' ');
  }
  out << "end\n";
}

PsrModel load_model(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "psrplan-model" || version != 1)
    throw std::runtime_error("load_model: bad header");
  PsrModel m;
  int restricted = 0;
  in >> tag >> m.rank >> tag >> restricted;
  m.restricted = restricted != 0;
  in >> tag >> m.alphabet.n_actions;
  m.alphabet.action_names.resize(static_cast<size_t>(m.alphabet.n_actions));
  for (auto& n : m.alphabet.action_names) in >> n;
  in >> tag >> m.alphabet.n_obs;
  m.alphabet.obs_names.resize(static_cast<size_t>(m.alphabet.n_obs));
  for (auto& n : m.alphabet.obs_names) in >> n;
  in >> tag;
  m.b_star.resize(m.rank);
  for (int i = 0; i < m.rank; ++i) in >> m.b_star[i];
  in >> tag;
  m.b_inf.resize(m.rank);
  for (int i = 0; i < m.rank; ++i) in >> m.b_inf[i];
  int count = 0;
  in >> tag >> count;
  m.b_ao.assign(static_cast<size_t>(m.alphabet.n_pairs()), Eigen::MatrixXd());
  m.w_ao.assign(static_cast<size_t>(m.alphabet.n_pairs()), Eigen::RowVectorXd());
  for (int i = 0; i < count; ++i) {
    int a, o;
    in >> tag >> a >> o;
    Eigen::MatrixXd b(m.rank, m.rank);
    for (int r = 0; r < m.rank; ++r)
      for (int c = 0; c < m.rank; ++c) in >> b(r, c);
    int pair = m.alphabet.pair_id(a, o);
    m.b_ao[static_cast<size_t>(pair)] = std::move(b);
    m.w_ao[static_cast<size_t>(pair)] =
        m.b_inf.transpose() * m.b_ao[static_cast<size_t>(pair)];
  }
  in >> tag;
  if (tag != "end") throw std::runtime_error("load_model: truncated file");
  if (m.restricted) {
    m.seen.assign(static_cast<size_t>(m.alphabet.n_pairs()), 0);
    for (int p = 0; p < m.alphabet.n_pairs(); ++p)
      if (m.has_operator(p)) m.seen[static_cast<size_t>(p)] = 1;
  }
  m.candidates.assign(static_cast<size_t>(m.alphabet.n_actions), {});
  for (int a = 0; a < m.alphabet.n_actions; ++a)
    for (int o = 0; o < m.alphabet.n_obs; ++o)
      if (m.has_operator(m.alphabet.pair_id(a, o)))
        m.candidates[static_cast<size_t>(a)].push_back(o);
  return m;
}

}  // namespace psrplan
