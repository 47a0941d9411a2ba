#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psrplan {

// Flat key=value configuration with dotted section prefixes (env.*, data.*,
// psr.*, planner.*, experiment.*). '#' starts a comment; whitespace around
// keys and values is ignored. Keys keep insertion order on serialization.
class KeyValueConfig {
 public:
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws if absent

  std::string get_or(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated
  std::vector<long> get_int_list(const std::string& key) const;

  std::vector<std::string> keys() const { return order_; }

  // Applies "key=value" override strings; unknown keys are rejected when a
  // schema of known keys is supplied.
  void apply_overrides(const std::vector<std::string>& overrides,
                       const std::vector<std::string>* known_keys = nullptr);

  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_file(const std::string& path);
  void serialize(std::ostream& out) const;
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace psrplan
