#include "minsup/cli/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "minsup/rng.hpp"

namespace minsup::cli {

using json = nlohmann::ordered_json;
using analysis::CheckReport;
using analysis::Verdict;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write to " + tmp.string() + " failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace {

struct Problem {
  GeneratorSpec g;
  TerminalSpec phi;
  forward::DiffusionSpec d;
  backward::PdeGridConfig grid;
  backward::LadderSolveOptions ladder;
};

Problem problem(const RunConfig& c) {
  Problem p{make_generator(c.generator.name, c.generator.params), make_terminal(c.terminal.name, c.terminal.params),
            forward::make_diffusion(c.diffusion.name, c.diffusion.params), {}, {}};
  p.grid.x_lo = c.grid.x_lo;
  p.grid.x_hi = c.grid.x_hi;
  p.grid.dx = c.grid.dx;
  p.grid.T = c.grid.T;
  p.grid.cfl_target = c.grid.cfl_target;
  if (c.grid.time_steps) p.grid.time_steps = static_cast<std::size_t>(*c.grid.time_steps);
  p.ladder.n_first = c.ladder.n_first;
  p.ladder.n_max = c.ladder.n_max;
  p.ladder.tol = c.ladder.tol;
  p.ladder.ladder.dual_spacing = c.ladder.dual_spacing;
  return p;
}

CheckReport finish(CheckReport r, const RunConfig& c) {
  r.scenario = c.scenario;
  r.fingerprint.insert(r.fingerprint.begin(), {"config_seed", std::to_string(c.seed)});
  return r;
}

void run_solve(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  const backward::LadderSolve ls = backward::solve_ladder(p.g, p.phi, p.d, p.grid, p.ladder);
  std::ostringstream csv;
  backward::write_surface_csv(ls.surface, csv);
  out.artifacts.push_back({"surface.csv", csv.str()});
  out.artifacts.push_back({"solver_manifest.json", backward::solver_manifest_json(p.g.name, ls, p.ladder.tol, std::nullopt) + "\n"});

  CheckReport r;
  r.name = "solve";
  r.add("u0", ls.surface.evaluate(0.0, c.mc.x0));
  r.add("levels_used", ls.levels_used);
  r.add("cfl_ratio", ls.cfl.ratio);
  r.add("time_steps", static_cast<double>(ls.cfl.steps));
  r.add_fingerprint("dx", format_double(c.grid.dx));
  r.notes = ls.warnings;
  r.verdict = ls.converged ? Verdict::pass : Verdict::inconclusive;
  out.reports.push_back(finish(r, c));
}

void run_ladder(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  const backward::LadderSolve ls = backward::solve_ladder(p.g, p.phi, p.d, p.grid, p.ladder);
  std::vector<ladder::LadderLevel> levels;
  const int top = std::min(p.ladder.n_max, ls.levels_used + 1);
  for (int n = p.ladder.n_first; n <= top; ++n) levels.push_back(ladder::build_gn(p.g, n, p.ladder.ladder));
  const ladder::LadderCheck lc = ladder::verify_monotone_ladder(levels, p.ladder.ladder.probe);
  out.artifacts.push_back({"ladder_manifest.json", ladder::ladder_manifest_json(levels, lc) + "\n"});

  CheckReport r;
  r.name = "ladder";
  const auto max_of = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
  const double dec_all = max_of(ls.decrease_all);
  const double dec_win = max_of(ls.decrease_window);
  r.add("max_surface_decrease", dec_all);
  r.add("max_surface_decrease_window", dec_win);
  r.add("max_generator_step_violation", lc.max_step_violation);
  r.add("max_generator_limit_violation", lc.max_limit_violation);
  r.add("levels_used", ls.levels_used);
  for (std::size_t k = 0; k < ls.gaps.size(); ++k) r.add("gap[" + std::to_string(p.ladder.n_first + k) + "]", ls.gaps[k]);
  r.add_tolerance("monotonicity", 1e-12);
  r.add_tolerance("ladder_tol", p.ladder.tol);
  r.max_gap = std::max({dec_all, lc.max_step_violation, lc.max_limit_violation});
  r.tolerance = 1e-12;
  r.notes = ls.warnings;
  r.verdict = r.max_gap <= 1e-12 ? (ls.converged ? Verdict::pass : Verdict::inconclusive) : Verdict::fail;
  out.reports.push_back(finish(r, c));
}

/// Random proper PL function on [-2, 2]: a parabola plus Gaussian noise.
GridFunction random_pl(const NormalStream& normals, std::uint64_t trial) {
  const Axis axis{-2.0, 2.0, 81};
  std::vector<double> v(axis.count);
  for (std::size_t i = 0; i < axis.count; ++i) {
    const double x = axis.node(i);
    v[i] = 0.5 * x * x + 0.3 * normals.at(trial, i);
  }
  return GridFunction({axis}, std::move(v));
}

void run_conjugate(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  std::vector<ladder::LadderLevel> levels;
  for (int n = 1; n <= c.conjugate.levels; ++n) levels.push_back(ladder::build_gn(p.g, n, p.ladder.ladder));
  const ladder::LadderCheck lc = ladder::verify_monotone_ladder(levels, p.ladder.ladder.probe);
  out.artifacts.push_back({"ladder_manifest.json", ladder::ladder_manifest_json(levels, lc) + "\n"});
  CheckReport lr;
  lr.name = "ladder-order";
  lr.add("max_step_violation", lc.max_step_violation);
  lr.add("max_limit_violation", lc.max_limit_violation);
  lr.add_tolerance("violation", lc.tolerance);
  lr.add_fingerprint("levels", std::to_string(c.conjugate.levels));
  lr.max_gap = std::max(lc.max_step_violation, lc.max_limit_violation);
  lr.tolerance = lc.tolerance;
  lr.verdict = lc.pass ? Verdict::pass : Verdict::fail;
  out.reports.push_back(finish(lr, c));

  const NormalStream normals(c.seed, stream_id("biconjugation"));
  double worst_ratio = 0.0, worst_gap = 0.0, tol_at_worst = 0.0;
  std::size_t failures = 0;
  for (std::uint64_t k = 0; k < c.conjugate.trials; ++k) {
    const GridFunction f = random_pl(normals, k);
    const double eps = f.grid_modulus();
    double slope = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) slope = std::max(slope, std::abs(f[i + 1] - f[i]) / f.axis(0).spacing());
    // Dual grid covers every slope; its spacing keeps the sampling loss of the
    // second conjugate below eps over the width-4 box.
    const double dual_h = eps / 4.0;
    const double reach = std::ceil(slope / dual_h) * dual_h;
    const Axis dual = make_axis(-reach, reach, dual_h);
    const GridFunction fs = convexlab::legendre_conjugate(f, {dual});
    const GridFunction fss = convexlab::legendre_conjugate(fs, {f.axis(0)});
    const GridFunction hull = convexlab::convexify(f);
    double gap = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) gap = std::max(gap, std::abs(fss[i] - hull[i]));
    if (gap > 2.0 * eps) ++failures;
    if (gap / (2.0 * eps) >= worst_ratio) {
      worst_ratio = gap / (2.0 * eps);
      worst_gap = gap;
      tol_at_worst = 2.0 * eps;
    }
  }
  CheckReport br;
  br.name = "biconjugation";
  br.add("trials", static_cast<double>(c.conjugate.trials));
  br.add("failures", static_cast<double>(failures));
  br.add("worst_gap_over_tolerance", worst_ratio);
  br.add_tolerance("two_eps_grid_at_worst", tol_at_worst);
  br.add_fingerprint("seed", std::to_string(c.seed));
  br.max_gap = worst_gap;
  br.tolerance = tol_at_worst;
  br.verdict = failures == 0 ? Verdict::pass : Verdict::fail;
  out.reports.push_back(finish(br, c));
}

std::vector<double> stability_sequence(const StabilityParams& s) {
  std::vector<double> xs(s.count);
  for (std::uint64_t k = 1; k <= s.count; ++k)
    xs[k - 1] = s.sequence == "constant" ? s.x : s.x + s.scale / static_cast<double>(k);
  return xs;
}

void run_stability(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  const std::vector<double> xs = stability_sequence(c.stability);
  convexlab::RecProbe probe;
  probe.x_sequence = xs;
  probe.x_limit = c.stability.x;
  const convexlab::RecReport rec = convexlab::rec_check(p.g, probe, convexlab::RecCase::automatic);

  analysis::StabilityConfig cfg;
  cfg.grid = p.grid;
  cfg.ladder = p.ladder;
  cfg.tol = c.stability.tol;
  cfg.tail_start = c.stability.tail_start;
  cfg.monotone = c.stability.monotone;
  cfg.rec_established = rec.verdict == convexlab::RecVerdict::pass;
  CheckReport r = analysis::check_stability(p.g, p.phi, p.d, c.stability.x, xs, cfg);
  r.add_fingerprint("rec_verdict", convexlab::to_string(rec.verdict));
  if (rec.case_used) r.add_fingerprint("rec_case", convexlab::to_string(*rec.case_used));
  for (const auto& n : rec.notes) r.notes.push_back("rec_check: " + n);
  out.reports.push_back(finish(r, c));
}

void run_locality(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  analysis::LocalityConfig cfg;
  cfg.grid = forward::TimeGrid{0.0, c.grid.T, static_cast<std::size_t>(c.mc.steps)};
  cfg.n_paths = c.mc.n_paths;
  cfg.x0 = c.mc.x0;
  cfg.seed = c.seed;
  cfg.level = c.mc.level > 0 ? c.mc.level : c.ladder.n_max;
  cfg.regression.degree = c.mc.degree;
  analysis::EventRule event = analysis::event_above(c.mc.x0);
  if (c.locality.event == "always") event = analysis::event_always();
  if (c.locality.event == "never") event = [](const forward::PathBundle&, std::size_t, std::size_t) { return false; };
  const auto d2 = forward::make_diffusion(c.locality.diffusion2.name, c.locality.diffusion2.params);
  out.reports.push_back(finish(analysis::check_locality(p.g, p.phi, p.d, d2, c.locality.t, event, cfg), c));
}

void run_markov(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  analysis::MarkovConfig cfg;
  cfg.grid = p.grid;
  cfg.ladder = p.ladder;
  cfg.mc_grid = forward::TimeGrid{0.0, c.grid.T, static_cast<std::size_t>(c.mc.steps)};
  cfg.n_paths = c.mc.n_paths;
  cfg.x0 = c.mc.x0;
  cfg.seed = c.seed;
  cfg.buckets = c.markov.buckets;
  cfg.mc_level = c.mc.level;
  cfg.equality_expected = c.markov.equality;
  cfg.regression.degree = c.mc.degree;
  out.reports.push_back(finish(analysis::check_markov_identity(p.g, p.phi, p.d, c.markov.t, cfg), c));
}

void run_shift(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  analysis::ShiftConfig cfg{p.grid, p.ladder, c.scenario};
  out.reports.push_back(finish(analysis::check_shift_identity(p.g, p.phi, p.d, c.shift.t, c.shift.x, cfg), c));
}

void run_viscosity(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  const backward::LadderSolve ls = backward::solve_ladder(p.g, p.phi, p.d, p.grid, p.ladder);
  const GeneratorSpec g = p.g;
  CheckReport r = analysis::viscosity_residual(ls.surface, [g](double x, double y, double z) { return g(x, y, z); }, p.d);
  out.reports.push_back(finish(r, c));
}

void run_lsc(const RunConfig& c, CheckOutcome& out) {
  const Problem p = problem(c);
  const backward::LadderSolve ls = backward::solve_ladder(p.g, p.phi, p.d, p.grid, p.ladder);
  const std::size_t mid = (ls.surface.n_times() - 1) / 2;
  for (const double t : {0.0, ls.surface.times()[mid]}) out.reports.push_back(finish(analysis::check_lsc(ls.surface, t), c));
}

GridFunction sampled(const Axis& a, const std::function<double(double)>& f) { return GridFunction::sample(a, f); }

double max_node_gap(const GridFunction& a, const GridFunction& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
  return gap;
}

// Shortest tail whose infimum still enters the envelope sup.
constexpr std::size_t kMinTail = 4;

void run_limits(const RunConfig& c, CheckOutcome& out) {
  using convexlab::EpiMode;
  for (const std::string& family : c.limits.families) {
    CheckReport r;
    r.name = "limits-" + family;
    if (family == "oscillating") {
      const Axis a{-2.0, 2.0, 401};
      convexlab::EpiSequence seq;
      seq.tail_length = kMinTail;
      for (std::uint64_t n = 1; n <= c.limits.members; ++n) {
        const double s = n % 2 == 0 ? 1.0 : -1.0;
        seq.members.push_back(sampled(a, [s](double z) { return std::abs(z - s); }));
      }
      const GridFunction pk = convexlab::epi_liminf(seq, EpiMode::PK);
      const GridFunction cc = convexlab::epi_liminf(seq, EpiMode::CC);
      const double gap_pk = max_node_gap(pk, sampled(a, [](double z) { return std::min(std::abs(z - 1), std::abs(z + 1)); }));
      const double gap_cc = max_node_gap(cc, sampled(a, [](double z) { return std::max(std::abs(z) - 1.0, 0.0); }));
      r.add("pk_gap", gap_pk);
      r.add("cc_gap", gap_cc);
      r.add_tolerance("exact_on_nodes", 1e-12);
      r.max_gap = std::max(gap_pk, gap_cc);
      r.tolerance = 1e-12;
    } else if (family == "shifted-parabola") {
      const Axis a{-1.0, 1.0, 41};
      convexlab::EpiSequence seq;
      seq.tail_length = kMinTail;
      for (int n = 1; n <= 32; ++n) {
        const double s = 1.0 / n;
        seq.members.push_back(sampled(a, [s](double z) { return (z - s) * (z - s); }));
      }
      const GridFunction target = sampled(a, [](double z) { return z * z; });
      const double eps = target.grid_modulus();
      for (const auto& [mode, label] : {std::pair{EpiMode::PK, "pk_gap"}, std::pair{EpiMode::CC, "cc_gap"}}) {
        const double gap = max_node_gap(convexlab::epi_liminf(seq, mode), target);
        r.add(label, gap);
        r.max_gap = std::max(r.max_gap, gap);
      }
      r.add_tolerance("eps_grid", eps);
      r.tolerance = eps;
    } else if (family == "scaled-parabola") {
      const Axis a{-2.0, 2.0, 401};
      convexlab::EpiSequence seq;
      for (std::uint64_t n = 1; n <= c.limits.members; ++n) {
        const double w = 1.0 - 1.0 / static_cast<double>(n + 1);
        seq.members.push_back(sampled(a, [w](double z) { return z * z * w; }));
      }
      const CheckReport lemma = analysis::monotone_limit_check(seq);
      const GridFunction hstar = analysis::lower_limit(seq);
      const GridFunction target = sampled(a, [](double z) { return z * z; });
      const double tol = 2.0 * target.grid_modulus() + 4.0 / static_cast<double>(c.limits.members + 1);
      const double gap = max_node_gap(hstar, target);
      r.add("sup_gap", *lemma.get("sup_gap"));
      r.add("target_gap", gap);
      r.add_tolerance("sup_gap", lemma.tolerance);
      r.add_tolerance("target_gap", tol);
      r.max_gap = gap;
      r.tolerance = tol;
      if (lemma.verdict != Verdict::pass) r.max_gap = std::max(r.max_gap, kInf);
    } else {
      const NormalStream normals(c.seed, stream_id("random-increasing"));
      const Axis a{-1.0, 1.0, 201};
      std::size_t failures = 0;
      double worst = 0.0;
      for (std::uint64_t trial = 0; trial < c.limits.trials; ++trial) {
        convexlab::EpiSequence seq;
        std::vector<double> v(a.count);
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < a.count; ++i) v[i] = std::sin(3.0 * a.node(i)) + 0.1 * normals.at(trial, idx++);
        for (std::uint64_t n = 0; n < 16; ++n) {
          if (n > 0)
            for (std::size_t i = 0; i < a.count; ++i)
              v[i] += std::abs(normals.at(trial, idx++)) * 0.05 / static_cast<double>(n * n);
          seq.members.emplace_back(std::vector<Axis>{a}, v);
        }
        const CheckReport rep = analysis::monotone_limit_check(seq);
        if (rep.verdict != Verdict::pass) ++failures;
        worst = std::max(worst, rep.max_gap / rep.tolerance);
      }
      r.add("trials", static_cast<double>(c.limits.trials));
      r.add("failures", static_cast<double>(failures));
      r.add("worst_gap_over_tolerance", worst);
      r.max_gap = static_cast<double>(failures);
      r.tolerance = 0.0;
    }
    r.verdict = r.max_gap <= r.tolerance ? Verdict::pass : Verdict::fail;
    out.reports.push_back(finish(r, c));
  }
}

}  // namespace

CheckOutcome run_check(const RunConfig& config, const std::string& check) {
  CheckOutcome out;
  out.check = check;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (check == "solve") run_solve(config, out);
    else if (check == "ladder") run_ladder(config, out);
    else if (check == "conjugate") run_conjugate(config, out);
    else if (check == "stability") run_stability(config, out);
    else if (check == "locality") run_locality(config, out);
    else if (check == "markov") run_markov(config, out);
    else if (check == "shift") run_shift(config, out);
    else if (check == "viscosity") run_viscosity(config, out);
    else if (check == "lsc") run_lsc(config, out);
    else if (check == "limits") run_limits(config, out);
    else throw Error("unknown check '" + check + "'");
  } catch (const std::exception& e) {
    out.error = e.what();
    out.reports.clear();
    out.artifacts.clear();
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

int exit_code_for(const std::vector<CheckOutcome>& outcomes) {
  bool inconclusive = false;
  for (const CheckOutcome& o : outcomes) {
    if (!o.error.empty()) return 1;
    for (const CheckReport& r : o.reports) {
      if (r.verdict == Verdict::fail) return 1;
      if (r.verdict == Verdict::inconclusive) inconclusive = true;
    }
  }
  return inconclusive ? 2 : 0;
}

std::string manifest_json(const RunManifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  json versions = json::object();
  for (const auto& [k, v] : m.versions) versions[k] = v;
  j["versions"] = versions;
  json times = json::object();
  for (const auto& [k, v] : m.wall_times) times[k] = v;
  j["wall_times"] = times;
  json files = json::array();
  for (const FileEntry& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files;
  json verdicts = json::object();
  for (const auto& [k, v] : m.verdicts) verdicts[k] = v;
  j["verdicts"] = verdicts;
  j["diagnostics"] = m.diagnostics;
  j["exit_code"] = m.exit_code;
  return j.dump(2) + "\n";
}

RunManifest run(const RunConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.config_hash = config_hash(config);
  m.versions = {{"minsup", kVersion}, {"convexlab", kVersion}, {"ladder", kVersion}, {"forward", kVersion},
                {"backward", kVersion}, {"analysis", kVersion}, {"cli", kVersion}};

  std::vector<std::string> checks;
  for (const std::string& name : check_names())
    if (std::find(config.checks.begin(), config.checks.end(), name) != config.checks.end()) checks.push_back(name);

  std::vector<CheckOutcome> outcomes(checks.size());
  unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
  parallel_for(
      checks.size(), [&](std::size_t k) { outcomes[k] = run_check(config, checks[k]); }, workers);

  std::vector<Artifact> files;
  files.push_back({"config.json", serialize_config(config)});
  std::vector<CheckReport> all;
  for (const CheckOutcome& o : outcomes) {
    m.wall_times.emplace_back(o.check, o.wall_time);
    if (!o.error.empty()) m.diagnostics.push_back(o.check + ": " + o.error);
    for (const CheckReport& r : o.reports) {
      all.push_back(r);
      m.verdicts.emplace_back(o.check + "/" + r.name, analysis::to_string(r.verdict));
      files.push_back({"reports/" + o.check + "-" + r.name + ".json", analysis::report_json(r) + "\n"});
    }
    for (const Artifact& a : o.artifacts) {
      const bool taken = std::any_of(files.begin(), files.end(), [&](const Artifact& f) { return f.path == a.path; });
      files.push_back({taken ? o.check + "_" + a.path : a.path, a.content});
    }
  }
  std::ostringstream summary;
  analysis::write_summary_csv(all, summary);
  files.push_back({"summary.csv", summary.str()});

  m.exit_code = exit_code_for(outcomes);
  try {
    for (const Artifact& a : files) {
      write_atomic(out_dir / a.path, a.content);
      m.files.push_back({a.path, sha256_hex(a.content), a.content.size()});
    }
  } catch (const std::exception& e) {
    m.diagnostics.push_back(std::string("output: ") + e.what());
    m.exit_code = 1;
  }
  m.wall_times.emplace_back("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  write_atomic(out_dir / "run_manifest.json", manifest_json(m));
  return m;
}

}  // namespace minsup::cli
