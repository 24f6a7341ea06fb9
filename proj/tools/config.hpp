#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bioremed/growth.hpp"
#include "bioremed/homogeneous.hpp"
#include "bioremed/twocomp.hpp"

namespace bioremed::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigEntry {
  std::string value;
  std::string origin;  // "file:line" or "--set"
};

/// Sectioned key = value document. Keys are validated against a fixed schema;
/// every entry remembers where it came from for diagnostics.
class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text, const std::string& source);
  static ConfigDoc load(const std::string& path);

  /// Applies "section.key=value" or "key=value" (key unique across sections).
  void apply_override(const std::string& assignment);

  const ConfigEntry* find(const std::string& section, const std::string& key) const;
  const std::map<std::string, ConfigEntry>& section(const std::string& name) const;

 private:
  void set(const std::string& section, const std::string& key, ConfigEntry entry);
  std::map<std::string, std::map<std::string, ConfigEntry>> data_;
};

enum class Model { kHomogeneous, kTwoComp };

struct Numerics {
  double rtol = 1e-9;
  std::size_t grid_size = 64;
  std::size_t hjb_nodes = 2000;
  std::size_t hjb_n1 = 200;
  std::size_t hjb_n2 = 200;
  std::size_t hjb_controls = 200;
  double hjb_margin = 1.05;       // grid upper end as a multiple of the initial level
  double hjb_s2_min = 0.02;       // lower S2 edge as a fraction of S_target
  double certify_tol_1d = 0.01;
  double certify_tol_2d = 0.02;
  bool allow_small_p = false;
};

/// Fully resolved scenario: exactly one of `homogeneous` / `twocomp` is set.
struct Scenario {
  Model model = Model::kHomogeneous;
  std::optional<HomogeneousScenario> homogeneous;
  std::optional<TwoCompScenario> twocomp;
  GrowthLaw law = GrowthLaw::monod(1.0, 1.0);
  std::string label;  // compact description for diagnostics
};

struct RunConfig {
  Scenario scenario;
  std::string strategy;                 // used by run
  std::vector<std::string> strategies;  // used by compare and sweep
  Numerics numerics;
  std::string out_dir = "out";
  // Swept keys ("section.key") with their value lists, sorted by key.
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
};

/// Fraction of V below which p > 0 requires numerics.allow_small_p.
inline constexpr double kSmallP = 0.01;

RunConfig resolve(const ConfigDoc& doc);

/// Splits a comma-separated list, trimming blanks; empty items rejected.
std::vector<std::string> split_list(const std::string& text);

/// Known strategy names.
const std::vector<std::string>& strategy_names();

}  // namespace bioremed::cli
