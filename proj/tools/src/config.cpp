#include "minsup/cli/config.hpp"

#include <algorithm>
#include <json.hpp>

#include "minsup/cli/runner.hpp"
#include "minsup/cli/scenarios.hpp"
#include "minsup/forward.hpp"
#include "minsup/generator.hpp"

namespace minsup::cli {

using json = nlohmann::ordered_json;

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"solve",  "ladder",   "conjugate", "stability", "locality",
                                              "markov", "shift",    "viscosity", "lsc",       "limits"};
  return names;
}

namespace {

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
  return out;
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

std::string qualified(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

void read_double(const json& j, const std::string& where, const char* key, double lo, double hi, double& target) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw Error(qualified(where, key) + " must be a number");
  const double d = v.get<double>();
  if (!(d >= lo && d <= hi))
    throw Error(qualified(where, key) + " out of range [" + format_double(lo) + ", " + format_double(hi) +
                "]: got " + format_double(d));
  target = d;
}

template <class Int>
void read_integer(const json& j, const std::string& where, const char* key, std::int64_t lo, std::int64_t hi,
                  Int& target) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw Error(qualified(where, key) + " must be an integer");
  const auto d = v.get<std::int64_t>();
  if (d < lo || d > hi)
    throw Error(qualified(where, key) + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                "]: got " + std::to_string(d));
  target = static_cast<Int>(d);
}

void read_bool(const json& j, const std::string& where, const char* key, bool& target) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_boolean()) throw Error(qualified(where, key) + " must be true or false");
  target = j.at(key).get<bool>();
}

void read_choice(const json& j, const std::string& where, const char* key, const std::vector<std::string>& choices,
                 std::string& target) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw Error(qualified(where, key) + " must be a string");
  const auto s = j.at(key).get<std::string>();
  if (std::find(choices.begin(), choices.end(), s) == choices.end())
    throw Error(qualified(where, key) + ": unknown value '" + s + "'; valid values: " + join(choices));
  target = s;
}

enum class SpecKind { generator, terminal, diffusion };

void read_spec(const json& j, const char* key, SpecKind kind, NamedSpec& target) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  NamedSpec spec;
  if (v.is_string()) {
    spec.name = v.get<std::string>();
  } else {
    check_keys(v, key, {"name", "params"});
    if (!v.contains("name") || !v.at("name").is_string()) throw Error(std::string(key) + ".name required");
    spec.name = v.at("name").get<std::string>();
    if (v.contains("params") && !v.at("params").is_object())
      throw Error(std::string(key) + ".params must be a JSON object");
  }
  if (v.is_object() && v.contains("params")) {
    for (const auto& [pk, pv] : v.at("params").items()) {
      if (!pv.is_number()) throw Error(std::string(key) + ".params." + pk + " must be a number");
      const double d = pv.get<double>();
      if (!std::isfinite(d) || std::abs(d) > 1e6)
        throw Error(std::string(key) + ".params." + pk + " out of range [-1e6, 1e6]");
      spec.params[pk] = d;
    }
  }
  switch (kind) {
    case SpecKind::generator: make_generator(spec.name, spec.params); break;
    case SpecKind::terminal: make_terminal(spec.name, spec.params); break;
    case SpecKind::diffusion: forward::make_diffusion(spec.name, spec.params); break;
  }
  target = std::move(spec);
}

json spec_json(const NamedSpec& s) {
  json params = json::object();
  for (const auto& [k, v] : s.params) params[k] = v;
  return json{{"name", s.name}, {"params", params}};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("config must be a JSON object");
  check_keys(j, "", {"scenario", "seed", "generator", "terminal", "diffusion", "grid", "ladder", "mc", "checks",
                     "stability", "locality", "markov", "shift", "limits", "conjugate", "output_dir", "workers"});
  if (!j.contains("seed")) throw Error("seed required");
  if (!j.at("seed").is_number_unsigned()) throw Error("seed must be a non-negative integer");
  if (!j.contains("scenario")) throw Error("scenario required");
  if (!j.at("scenario").is_string()) throw Error("scenario must be a string");

  RunConfig c = find_scenario(j.at("scenario").get<std::string>()).defaults;
  c.scenario = j.at("scenario").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();

  read_spec(j, "generator", SpecKind::generator, c.generator);
  read_spec(j, "terminal", SpecKind::terminal, c.terminal);
  read_spec(j, "diffusion", SpecKind::diffusion, c.diffusion);

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, "grid", {"x_lo", "x_hi", "dx", "T", "cfl_target", "time_steps"});
    read_double(g, "grid", "x_lo", -1e3, 1e3, c.grid.x_lo);
    read_double(g, "grid", "x_hi", -1e3, 1e3, c.grid.x_hi);
    read_double(g, "grid", "dx", 1e-4, 1.0, c.grid.dx);
    read_double(g, "grid", "T", 1e-6, 100.0, c.grid.T);
    read_double(g, "grid", "cfl_target", 1e-6, 1.0, c.grid.cfl_target);
    if (g.contains("time_steps") && g.at("time_steps").is_null()) {
      c.grid.time_steps.reset();
    } else if (g.contains("time_steps")) {
      std::uint64_t steps = 0;
      read_integer(g, "grid", "time_steps", 1, 100000000, steps);
      c.grid.time_steps = steps;
    }
  }
  if (!(c.grid.x_hi > c.grid.x_lo)) throw Error("grid: x_hi must exceed x_lo");

  if (j.contains("ladder")) {
    const json& l = j.at("ladder");
    check_keys(l, "ladder", {"n_first", "n_max", "tol", "dual_spacing"});
    read_integer(l, "ladder", "n_first", 1, 1024, c.ladder.n_first);
    read_integer(l, "ladder", "n_max", 1, 1024, c.ladder.n_max);
    read_double(l, "ladder", "tol", 1e-12, 1.0, c.ladder.tol);
    read_double(l, "ladder", "dual_spacing", 1e-3, 1.0, c.ladder.dual_spacing);
  }
  if (c.ladder.n_first > c.ladder.n_max) throw Error("ladder: n_first must not exceed n_max");

  if (j.contains("mc")) {
    const json& m = j.at("mc");
    check_keys(m, "mc", {"n_paths", "steps", "x0", "level", "degree"});
    read_integer(m, "mc", "n_paths", 2, 10000000, c.mc.n_paths);
    read_integer(m, "mc", "steps", 1, 100000, c.mc.steps);
    read_double(m, "mc", "x0", -1e3, 1e3, c.mc.x0);
    read_integer(m, "mc", "level", 0, 1024, c.mc.level);
    read_integer(m, "mc", "degree", 1, 6, c.mc.degree);
  }

  if (j.contains("checks")) {
    const json& cs = j.at("checks");
    if (!cs.is_array()) throw Error("checks must be an array of check names");
    c.checks.clear();
    for (const json& e : cs) {
      if (!e.is_string()) throw Error("checks must be an array of check names");
      const auto name = e.get<std::string>();
      if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
        throw Error("unknown check '" + name + "'; valid checks: " + join(check_names()));
      if (std::find(c.checks.begin(), c.checks.end(), name) == c.checks.end()) c.checks.push_back(name);
    }
  }

  if (j.contains("stability")) {
    const json& s = j.at("stability");
    check_keys(s, "stability", {"x", "sequence", "scale", "count", "tail_start", "monotone", "tol"});
    read_double(s, "stability", "x", -1e3, 1e3, c.stability.x);
    read_choice(s, "stability", "sequence", {"harmonic", "constant"}, c.stability.sequence);
    read_double(s, "stability", "scale", -1e3, 1e3, c.stability.scale);
    read_integer(s, "stability", "count", 1, 100000, c.stability.count);
    read_integer(s, "stability", "tail_start", 0, 100000, c.stability.tail_start);
    read_bool(s, "stability", "monotone", c.stability.monotone);
    read_double(s, "stability", "tol", 1e-12, 1.0, c.stability.tol);
  }
  if (c.stability.tail_start > c.stability.count) throw Error("stability: tail_start must not exceed count");

  if (j.contains("locality")) {
    const json& l = j.at("locality");
    check_keys(l, "locality", {"t", "diffusion2", "event"});
    read_double(l, "locality", "t", 0.0, 100.0, c.locality.t);
    read_spec(l, "diffusion2", SpecKind::diffusion, c.locality.diffusion2);
    read_choice(l, "locality", "event", {"above-x0", "always", "never"}, c.locality.event);
  }
  if (j.contains("markov")) {
    const json& m = j.at("markov");
    check_keys(m, "markov", {"t", "buckets", "equality"});
    read_double(m, "markov", "t", 0.0, 100.0, c.markov.t);
    read_integer(m, "markov", "buckets", 1, 1000, c.markov.buckets);
    read_bool(m, "markov", "equality", c.markov.equality);
  }
  if (j.contains("shift")) {
    const json& s = j.at("shift");
    check_keys(s, "shift", {"t", "x"});
    read_double(s, "shift", "t", 0.0, 100.0, c.shift.t);
    read_double(s, "shift", "x", -1e3, 1e3, c.shift.x);
  }
  if (j.contains("limits")) {
    const json& l = j.at("limits");
    check_keys(l, "limits", {"families", "members", "trials"});
    if (l.contains("families")) {
      const std::vector<std::string> valid{"oscillating", "shifted-parabola", "scaled-parabola", "random-increasing"};
      if (!l.at("families").is_array()) throw Error("limits.families must be an array");
      c.limits.families.clear();
      for (const json& e : l.at("families")) {
        if (!e.is_string()) throw Error("limits.families must be an array of names");
        const auto f = e.get<std::string>();
        if (std::find(valid.begin(), valid.end(), f) == valid.end())
          throw Error("limits.families: unknown family '" + f + "'; valid values: " + join(valid));
        c.limits.families.push_back(f);
      }
    }
    read_integer(l, "limits", "members", 2, 1024, c.limits.members);
    read_integer(l, "limits", "trials", 1, 10000, c.limits.trials);
  }
  if (j.contains("conjugate")) {
    const json& cj = j.at("conjugate");
    check_keys(cj, "conjugate", {"levels", "trials"});
    read_integer(cj, "conjugate", "levels", 1, 64, c.conjugate.levels);
    read_integer(cj, "conjugate", "trials", 1, 10000, c.conjugate.trials);
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string() || j.at("output_dir").get<std::string>().empty())
      throw Error("output_dir must be a non-empty string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  read_integer(j, "", "workers", 0, 256, c.workers);

  if (c.markov.t > c.grid.T) throw Error("markov.t must not exceed grid.T");
  if (c.locality.t >= c.grid.T) throw Error("locality.t must be below grid.T");
  if (c.shift.t >= c.grid.T) throw Error("shift.t must be below grid.T");
  return c;
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["generator"] = spec_json(c.generator);
  j["terminal"] = spec_json(c.terminal);
  j["diffusion"] = spec_json(c.diffusion);
  j["grid"] = {{"x_lo", c.grid.x_lo}, {"x_hi", c.grid.x_hi}, {"dx", c.grid.dx}, {"T", c.grid.T},
               {"cfl_target", c.grid.cfl_target}};
  if (c.grid.time_steps)
    j["grid"]["time_steps"] = *c.grid.time_steps;
  else
    j["grid"]["time_steps"] = nullptr;
  j["ladder"] = {{"n_first", c.ladder.n_first}, {"n_max", c.ladder.n_max}, {"tol", c.ladder.tol},
                 {"dual_spacing", c.ladder.dual_spacing}};
  j["mc"] = {{"n_paths", c.mc.n_paths}, {"steps", c.mc.steps}, {"x0", c.mc.x0}, {"level", c.mc.level},
             {"degree", c.mc.degree}};
  j["checks"] = c.checks;
  j["stability"] = {{"x", c.stability.x},         {"sequence", c.stability.sequence},
                    {"scale", c.stability.scale}, {"count", c.stability.count},
                    {"tail_start", c.stability.tail_start}, {"monotone", c.stability.monotone},
                    {"tol", c.stability.tol}};
  j["locality"] = {{"t", c.locality.t}, {"diffusion2", spec_json(c.locality.diffusion2)}, {"event", c.locality.event}};
  j["markov"] = {{"t", c.markov.t}, {"buckets", c.markov.buckets}, {"equality", c.markov.equality}};
  j["shift"] = {{"t", c.shift.t}, {"x", c.shift.x}};
  j["limits"] = {{"families", c.limits.families}, {"members", c.limits.members}, {"trials", c.limits.trials}};
  j["conjugate"] = {{"levels", c.conjugate.levels}, {"trials", c.conjugate.trials}};
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& c) { return sha256_hex(serialize_config(c)); }

}  // namespace minsup::cli
