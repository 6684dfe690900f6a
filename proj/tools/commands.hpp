#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mdimkit::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Schema or gate violation: exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Typed access to a params object that remembers which keys were read.
class Params {
 public:
  explicit Params(json j);

  bool has(const std::string& key) const { return j_.contains(key); }
  double num(const std::string& key, double def);
  int integer(const std::string& key, int def);
  std::uint64_t u64(const std::string& key, std::uint64_t def);
  bool flag(const std::string& key, bool def);
  std::string str(const std::string& key, const std::string& def);
  std::vector<double> nums(const std::string& key, const std::vector<double>& def);
  std::vector<std::int64_t> ints(const std::string& key, const std::vector<std::int64_t>& def);
  json raw(const std::string& key, const json& def);
  /// Rejects keys that no accessor asked for.
  void finish() const;

 private:
  const json& get(const std::string& key);
  json j_;
  std::set<std::string> used_;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  bool passed = true;
  std::vector<Artifact> artifacts;
  ordered_json summary = ordered_json::object();
};

const std::vector<std::string>& subcommands();

/// Validates the config and runs one subcommand in-process. Throws UsageError
/// for schema and gate violations.
RunResult run_subcommand(const std::string& name, const json& config, std::uint64_t seed);

/// Cartesian sweep of config["base"] over config["grid"] (at most 3 parameters, 10^4 cells).
RunResult run_sweep(const json& config, std::uint64_t seed);

/// FNV-1a 64 of the canonical config dump, as 16 hex digits.
std::string config_hash(const json& config);

/// Full run: writes artifacts, summary.json and manifest.json to `out`.
/// Returns 0 if every asserted invariant held, 2 otherwise, 1 on usage errors.
int run(const std::string& name, const json& config, const std::filesystem::path& out,
        std::optional<std::uint64_t> seed_override, std::ostream& log);

}  // namespace mdimkit::cli
