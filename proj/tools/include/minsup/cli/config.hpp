#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace minsup::cli {

struct NamedSpec {
  std::string name;
  std::map<std::string, double> params;
  bool operator==(const NamedSpec&) const = default;
};

struct GridParams {
  double x_lo = -5.0;
  double x_hi = 5.0;
  double dx = 0.02;
  double T = 1.0;
  double cfl_target = 0.9;
  std::optional<std::uint64_t> time_steps;
  bool operator==(const GridParams&) const = default;
};

struct LadderParams {
  int n_first = 1;
  int n_max = 32;
  double tol = 1e-3;
  double dual_spacing = 0.25;
  bool operator==(const LadderParams&) const = default;
};

struct McParams {
  std::uint64_t n_paths = 100000;
  std::uint64_t steps = 50;
  double x0 = 0.0;
  int level = 0;  // 0: the level at which the PDE ladder stopped
  int degree = 3;
  bool operator==(const McParams&) const = default;
};

struct StabilityParams {
  double x = 0.0;
  /// x_k = x + scale / k for k = 1..count ("harmonic") or x_k = x ("constant").
  std::string sequence = "harmonic";
  double scale = 1.0;
  std::uint64_t count = 64;
  std::uint64_t tail_start = 0;
  bool monotone = false;
  double tol = 5e-3;
  bool operator==(const StabilityParams&) const = default;
};

struct LocalityParams {
  double t = 0.5;
  NamedSpec diffusion2{"brownian", {{"mu", 0.5}}};
  std::string event = "above-x0";  // above-x0 | always | never
  bool operator==(const LocalityParams&) const = default;
};

struct MarkovParams {
  double t = 0.5;
  std::uint64_t buckets = 20;
  bool equality = true;
  bool operator==(const MarkovParams&) const = default;
};

struct ShiftParams {
  double t = 0.5;
  double x = 0.0;
  bool operator==(const ShiftParams&) const = default;
};

struct LimitsParams {
  std::vector<std::string> families{"oscillating", "shifted-parabola", "scaled-parabola", "random-increasing"};
  std::uint64_t members = 64;
  std::uint64_t trials = 100;
  bool operator==(const LimitsParams&) const = default;
};

struct ConjugateParams {
  int levels = 5;
  std::uint64_t trials = 100;
  bool operator==(const ConjugateParams&) const = default;
};

struct RunConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  NamedSpec generator{"zero", {}};
  NamedSpec terminal{"zero", {}};
  NamedSpec diffusion{"brownian", {}};
  GridParams grid;
  LadderParams ladder;
  McParams mc;
  std::vector<std::string> checks;
  StabilityParams stability;
  LocalityParams locality;
  MarkovParams markov;
  ShiftParams shift;
  LimitsParams limits;
  ConjugateParams conjugate;
  std::string output_dir = "out";
  std::uint64_t workers = 0;  // 0: one per check, capped by hardware threads

  bool operator==(const RunConfig&) const = default;
};

/// Valid check names, in execution order.
const std::vector<std::string>& check_names();

/// Parses a JSON document. Defaults come from the named scenario; every key
/// given overrides them. Unknown keys, missing "seed"/"scenario", unknown
/// registry names and out-of-range numbers are errors.
RunConfig parse_config(const std::string& text);

/// Canonical JSON; parse_config(serialize_config(c)) == c bit-exactly.
std::string serialize_config(const RunConfig& c);

/// Hex SHA-256 of the canonical JSON.
std::string config_hash(const RunConfig& c);

}  // namespace minsup::cli
