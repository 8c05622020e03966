#include "minsup/ladder.hpp"

#include <algorithm>
#include <json.hpp>

namespace minsup::ladder {

namespace {

struct DualPoint {
  double a, b, c, conj;
};

double closed_conjugate(const SeparableForm& f, double a, double b, double c) {
  const double v = f.x.conjugate(a) + f.y.conjugate(b) + f.z.conjugate(c);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

std::size_t ConjugateTable::node_index(double a, double b, double c) const {
  auto idx = [](const Axis& ax, double v) {
    const double s = (v - ax.lo) / ax.spacing();
    const auto i = static_cast<std::size_t>(std::llround(s));
    if (std::abs(s - static_cast<double>(i)) > 1e-9 || i >= ax.count) throw Error("conjugate table: not a dual node");
    return i;
  };
  return index(idx(alpha, a), idx(beta, b), idx(gamma, c));
}

ConjugateTable conjugate_full(const GeneratorSpec& g, const ProbeBox& primal, double radius, double dual_spacing,
                              bool use_closed_form) {
  if (!g.flags.convex_xyz) throw Error("ladder requires jointly convex generator");
  if (!(radius > 0.0) || !(dual_spacing > 0.0)) throw Error("conjugate_full: radius and dual spacing must be > 0");
  ConjugateTable t;
  t.radius = radius;
  t.alpha = t.beta = t.gamma = make_axis(-radius, radius, dual_spacing);
  t.primal = primal;
  const std::size_t total = t.alpha.count * t.beta.count * t.gamma.count;
  t.values.assign(total, kInf);
  t.saturated.assign(total, 0);

  if (use_closed_form && g.closed_form) {
    t.closed_form = true;
    for (std::size_t i = 0; i < t.alpha.count; ++i)
      for (std::size_t j = 0; j < t.beta.count; ++j)
        for (std::size_t k = 0; k < t.gamma.count; ++k)
          t.values[t.index(i, j, k)] =
              closed_conjugate(*g.closed_form, t.alpha.node(i), t.beta.node(j), t.gamma.node(k));
    return t;
  }

  struct Node {
    double x, y, z, v;
  };
  std::vector<Node> interior, edge;
  const ProbeBox& p = primal;
  for (std::size_t i = 0; i < p.x.count; ++i)
    for (std::size_t j = 0; j < p.y.count; ++j)
      for (std::size_t k = 0; k < p.z.count; ++k) {
        const double x = p.x.node(i), y = p.y.node(j), z = p.z.node(k);
        const double v = g(x, y, z);
        if (!std::isfinite(v)) continue;
        const bool on_edge = i == 0 || j == 0 || k == 0 || i + 1 == p.x.count || j + 1 == p.y.count ||
                             k + 1 == p.z.count;
        (on_edge ? edge : interior).push_back({x, y, z, v});
      }
  if (interior.empty() && edge.empty()) throw Error("conjugate_full: generator is improper on the probe box");

  for (std::size_t i = 0; i < t.alpha.count; ++i)
    for (std::size_t j = 0; j < t.beta.count; ++j)
      for (std::size_t k = 0; k < t.gamma.count; ++k) {
        const double a = t.alpha.node(i), b = t.beta.node(j), c = t.gamma.node(k);
        auto best_of = [&](const std::vector<Node>& nodes) {
          double best = -kInf;
          for (const Node& n : nodes) best = std::max(best, a * n.x + b * n.y + c * n.z - n.v);
          return best;
        };
        const double bi = best_of(interior), be = best_of(edge);
        const double v = std::max(bi, be);
        t.values[t.index(i, j, k)] = v;
        if (be > bi + 1e-12 * std::max(1.0, std::abs(v))) t.saturated[t.index(i, j, k)] = 1;
      }
  return t;
}

LadderLevel LadderLevel::with_terminal(const TerminalSpec& phi) const {
  LadderLevel copy = *this;
  copy.terminal_ = truncate_terminal(phi, n_);
  return copy;
}

LadderLevel build_gn(const GeneratorSpec& g, int n, const LadderOptions& opts) {
  if (n < 1) throw Error("build_gn: level n must be >= 1");
  if (!g.flags.convex_xyz) throw Error("ladder requires jointly convex generator");
  LadderLevel level;
  level.n_ = n;
  level.generator_ = g;
  level.probe_ = opts.probe;
  level.dual_spacing_ = opts.dual_spacing;
  const double nn = static_cast<double>(n);

  if (g.closed_form && !opts.force_table) {
    const SeparableForm f = *g.closed_form;
    level.closed_form_ = true;
    level.floor_ = -closed_conjugate(f, 0.0, 0.0, 0.0);
    level.eval_ = [f, nn](double x, double y, double z) {
      return f.x.lipschitz_approx(nn, x) + f.y.lipschitz_approx(nn, y) + f.z.lipschitz_approx(nn, z);
    };
    return level;
  }

  auto table = std::make_shared<const ConjugateTable>(conjugate_full(g, opts.probe, nn, opts.dual_spacing));
  std::vector<DualPoint> pts;
  for (std::size_t i = 0; i < table->alpha.count; ++i)
    for (std::size_t j = 0; j < table->beta.count; ++j)
      for (std::size_t k = 0; k < table->gamma.count; ++k) {
        const double v = table->at(i, j, k);
        if (std::isfinite(v) && !table->is_saturated(i, j, k))
          pts.push_back({table->alpha.node(i), table->beta.node(j), table->gamma.node(k), v});
      }
  if (pts.empty()) {
    level.used_saturated_ = true;
    for (std::size_t i = 0; i < table->alpha.count; ++i)
      for (std::size_t j = 0; j < table->beta.count; ++j)
        for (std::size_t k = 0; k < table->gamma.count; ++k)
          if (std::isfinite(table->at(i, j, k)))
            pts.push_back({table->alpha.node(i), table->beta.node(j), table->gamma.node(k), table->at(i, j, k)});
  }
  const std::size_t origin = table->node_index(0.0, 0.0, 0.0);
  level.floor_ = -table->values[origin];
  level.table_ = table;
  level.eval_ = [pts = std::move(pts)](double x, double y, double z) {
    double best = -kInf;
    for (const DualPoint& p : pts) best = std::max(best, p.a * x + p.b * y + p.c * z - p.conj);
    return best;
  };
  return level;
}

TerminalSpec truncate_terminal(const TerminalSpec& phi, int n) {
  if (n < 1) throw Error("truncate_terminal: level n must be >= 1");
  const double cap = phi.cap ? std::min(*phi.cap, static_cast<double>(n)) : static_cast<double>(n);
  TerminalSpec out = phi;
  out.cap = cap;
  out.lower_bound = std::min(phi.lower_bound, cap);
  out.eval = [base = phi.eval, cap](double x) { return std::min(base(x), cap); };
  return out;
}

LadderCheck verify_monotone_ladder(const std::vector<LadderLevel>& levels, const ProbeBox& probe, double tolerance) {
  if (levels.empty()) throw Error("verify_monotone_ladder: no levels");
  for (const LadderLevel& l : levels)
    if (!(l.probe() == probe)) throw Error("verify_monotone_ladder: mismatched probe grids");
  LadderCheck out;
  out.tolerance = tolerance;
  for (std::size_t i = 0; i < probe.x.count; ++i)
    for (std::size_t j = 0; j < probe.y.count; ++j)
      for (std::size_t k = 0; k < probe.z.count; ++k) {
        const double x = probe.x.node(i), y = probe.y.node(j), z = probe.z.node(k);
        const double gv = levels.front().generator()(x, y, z);
        double prev = levels.front()(x, y, z);
        out.max_limit_violation = std::max(out.max_limit_violation, prev - gv);
        for (std::size_t l = 1; l < levels.size(); ++l) {
          const double cur = levels[l](x, y, z);
          out.max_step_violation = std::max(out.max_step_violation, prev - cur);
          out.max_limit_violation = std::max(out.max_limit_violation, cur - gv);
          prev = cur;
        }
      }
  out.pass = out.max_step_violation <= tolerance && out.max_limit_violation <= tolerance;
  return out;
}

std::string ladder_manifest_json(const std::vector<LadderLevel>& levels, const LadderCheck& check) {
  nlohmann::ordered_json j;
  j["generator"] = levels.empty() ? "" : levels.front().generator().name;
  j["n_levels"] = levels.size();
  j["dual_spacing"] = levels.empty() ? 0.0 : levels.front().dual_spacing();
  auto bounds = nlohmann::ordered_json::array();
  for (const LadderLevel& l : levels) bounds.push_back(l.lipschitz_bound());
  j["lipschitz_bounds"] = bounds;
  j["max_monotonicity_violation"] = std::max(check.max_step_violation, check.max_limit_violation);
  return j.dump(2);
}

}  // namespace minsup::ladder
