#include "minsup/convexlab.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace minsup::convexlab {

namespace {

void require_proper(const GridFunction& f) {
  if (!f.is_proper()) throw Error("improper function");
}

double value_scale(const GridFunction& f) {
  double s = 1.0;
  for (double v : f.values())
    if (std::isfinite(v)) s = std::max(s, std::abs(v));
  return s;
}

// Hull values are minorants of f; values within roundoff of f snap back to
// f so that the envelopes are idempotent on node values.
double snap_to(double hull, double original, double tol) {
  if (!std::isfinite(hull)) return hull;
  if (std::isfinite(original) && std::abs(hull - original) <= tol) return original;
  return std::min(hull, original);
}

struct Pt {
  double y, z, v;
};

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// 1D lower convex hull of (x, v) pairs sorted by x (monotone chain).
std::vector<std::pair<double, double>> lower_hull_1d(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().first == p.first) {
      if (p.second >= hull.back().second) continue;
      hull.pop_back();
    }
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      if (cross2(a.first - o.first, a.second - o.second, p.first - o.first, p.second - o.second) <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  return hull;
}

double eval_hull_1d(const std::vector<std::pair<double, double>>& hull, double x) {
  if (hull.empty()) return kInf;
  const double span = std::max(1.0, std::abs(hull.back().first - hull.front().first));
  const double tol = 1e-12 * span;
  if (x < hull.front().first - tol || x > hull.back().first + tol) return kInf;
  if (hull.size() == 1) return hull.front().second;
  auto it = std::lower_bound(hull.begin(), hull.end(), x,
                             [](const std::pair<double, double>& p, double v) { return p.first < v; });
  if (it == hull.end()) return hull.back().second;
  if (it->first == x || it == hull.begin()) return it->second;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (x - a.first) / (b.first - a.first);
  return (1.0 - w) * a.second + w * b.second;
}

GridFunction convexify_1d(const GridFunction& f) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::isfinite(f[i])) pts.emplace_back(f.axis(0).node(i), f[i]);
  const auto hull = lower_hull_1d(pts);
  const double tol = 1e-12 * value_scale(f);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = snap_to(eval_hull_1d(hull, f.axis(0).node(i)), f[i], tol);
  GridFunction r(f.axes(), std::move(out));
  r.set_convex_flag(true);
  r.set_lsc_flag(true);
  return r;
}

// Lower convex envelope of scattered points in the plane, evaluated per
// query point by a simplex on barycentric weights: the optimal basis is the
// lower-hull facet above the query.
class PlanarLowerHull {
 public:
  explicit PlanarLowerHull(std::vector<Pt> pts) : pts_(std::move(pts)) {
    for (const Pt& p : pts_) scale_ = std::max(scale_, std::abs(p.v));
    build_polygon();
  }

  double evaluate(double qy, double qz) const {
    if (pts_.empty()) return kInf;
    if (poly_.size() < 3) return evaluate_degenerate(qy, qz);
    std::array<std::size_t, 3> basis{};
    std::array<double, 3> lam{};
    if (!start_triangle(qy, qz, basis, lam)) return kInf;
    const double rc_tol = 1e-12 * scale_;
    const std::size_t max_iter = 20 * pts_.size() + 100;
    std::size_t degenerate = 0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      // Plane through the basis points.
      const Pt& A = pts_[basis[0]];
      const Pt& B = pts_[basis[1]];
      const Pt& C = pts_[basis[2]];
      const double det = cross2(B.y - A.y, B.z - A.z, C.y - A.y, C.z - A.z);
      const double b1 = cross2(B.v - A.v, B.z - A.z, C.v - A.v, C.z - A.z) / det;
      const double b2 = cross2(B.y - A.y, B.v - A.v, C.y - A.y, C.v - A.v) / det;
      const double a0 = A.v - b1 * A.y - b2 * A.z;
      const bool bland = degenerate > 50;
      std::size_t enter = pts_.size();
      double best = -rc_tol;
      for (std::size_t j = 0; j < pts_.size(); ++j) {
        const double r = pts_[j].v - (a0 + b1 * pts_[j].y + b2 * pts_[j].z);
        if (r < best) {
          enter = j;
          best = r;
          if (bland) break;
        }
      }
      if (enter == pts_.size()) {
        return lam[0] * A.v + lam[1] * B.v + lam[2] * C.v;
      }
      const auto mu = barycentric(basis, pts_[enter].y, pts_[enter].z);
      std::size_t leave = 3;
      double theta = kInf;
      for (std::size_t r = 0; r < 3; ++r) {
        if (mu[r] <= 1e-12) continue;
        const double ratio = lam[r] / mu[r];
        const bool tie = leave < 3 && std::abs(ratio - theta) <= 1e-15;
        if (leave == 3 || ratio < theta - 1e-15 || (tie && basis[r] < basis[leave])) {
          theta = ratio;
          leave = r;
        }
      }
      if (leave == 3) throw Error("convexify: lower hull simplex failed (unbounded direction)");
      if (theta <= 1e-14) ++degenerate;
      basis[leave] = enter;
      lam = barycentric(basis, qy, qz);
      for (double& l : lam) l = std::max(l, 0.0);
    }
    throw Error("convexify: lower hull simplex did not terminate");
  }

 private:
  std::array<double, 3> barycentric(const std::array<std::size_t, 3>& b, double qy, double qz) const {
    const Pt& A = pts_[b[0]];
    const Pt& B = pts_[b[1]];
    const Pt& C = pts_[b[2]];
    const double det = cross2(B.y - A.y, B.z - A.z, C.y - A.y, C.z - A.z);
    const double lb = cross2(qy - A.y, qz - A.z, C.y - A.y, C.z - A.z) / det;
    const double lc = cross2(B.y - A.y, B.z - A.z, qy - A.y, qz - A.z) / det;
    return {1.0 - lb - lc, lb, lc};
  }

  void build_polygon() {
    std::vector<std::size_t> idx(pts_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return pts_[a].y < pts_[b].y || (pts_[a].y == pts_[b].y && pts_[a].z < pts_[b].z);
    });
    if (idx.size() < 3) {
      poly_ = idx;
      return;
    }
    std::vector<std::size_t> h(2 * idx.size());
    std::size_t k = 0;
    auto turn = [&](std::size_t o, std::size_t a, std::size_t b) {
      return cross2(pts_[a].y - pts_[o].y, pts_[a].z - pts_[o].z, pts_[b].y - pts_[o].y, pts_[b].z - pts_[o].z);
    };
    for (std::size_t i : idx) {
      while (k >= 2 && turn(h[k - 2], h[k - 1], i) <= 0) --k;
      h[k++] = i;
    }
    for (std::size_t t = idx.size() - 1, lower = k + 1; t-- > 0;) {
      const std::size_t i = idx[t];
      while (k >= lower && turn(h[k - 2], h[k - 1], i) <= 0) --k;
      h[k++] = i;
    }
    h.resize(k - 1);
    poly_ = h;
  }

  bool start_triangle(double qy, double qz, std::array<std::size_t, 3>& basis, std::array<double, 3>& lam) const {
    const double eps = 1e-10;
    for (std::size_t i = 1; i + 1 < poly_.size(); ++i) {
      std::array<std::size_t, 3> b{poly_[0], poly_[i], poly_[i + 1]};
      auto l = barycentric(b, qy, qz);
      if (l[0] >= -eps && l[1] >= -eps && l[2] >= -eps) {
        for (double& x : l) x = std::max(x, 0.0);
        basis = b;
        lam = l;
        return true;
      }
    }
    return false;
  }

  // All finite points on one line (or a single point).
  double evaluate_degenerate(double qy, double qz) const {
    const Pt& a = pts_[poly_.front()];
    const Pt& b = pts_[poly_.back()];
    const double dy = b.y - a.y, dz = b.z - a.z;
    const double len2 = dy * dy + dz * dz;
    if (len2 == 0.0) return (qy == a.y && qz == a.z) ? a.v : kInf;
    const double off = cross2(dy, dz, qy - a.y, qz - a.z);
    if (std::abs(off) > 1e-10 * len2) return kInf;
    std::vector<std::pair<double, double>> line;
    for (const Pt& p : pts_) line.emplace_back(((p.y - a.y) * dy + (p.z - a.z) * dz) / len2, p.v);
    std::sort(line.begin(), line.end());
    const double t = ((qy - a.y) * dy + (qz - a.z) * dz) / len2;
    return eval_hull_1d(lower_hull_1d(line), t);
  }

  std::vector<Pt> pts_;
  std::vector<std::size_t> poly_;
  double scale_ = 1.0;
};

PlanarLowerHull make_planar_hull(const GridFunction& f) {
  std::vector<Pt> pts;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!std::isfinite(f[k])) continue;
    const auto p = f.point(k);
    pts.push_back({p[0], p[1], f[k]});
  }
  return PlanarLowerHull(std::move(pts));
}

}  // namespace

GridFunction lsc_envelope(const GridFunction& f) {
  require_proper(f);
  std::vector<double> out(f.values().begin(), f.values().end());
  const std::size_t d = f.dims();
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (std::isfinite(f[k])) continue;
    const auto idx = f.multi_index(k);
    bool isolated = true;
    double best = kInf;
    for (std::size_t ax = 0; ax < d && isolated; ++ax) {
      const std::size_t n = f.axis(ax).count;
      for (int side : {-1, 1}) {
        const auto pos = static_cast<long>(idx[ax]) + side;
        if (pos < 0 || pos >= static_cast<long>(n)) continue;
        auto neighbour = [&](long p) {
          auto m = idx;
          m[ax] = static_cast<std::size_t>(p);
          return d == 1 ? f[m[0]] : f[f.flat_index(m[0], m[1])];
        };
        const double v1 = neighbour(pos);
        if (!std::isfinite(v1)) {
          isolated = false;
          break;
        }
        const long pos2 = pos + side;
        double cand = v1;
        if (pos2 >= 0 && pos2 < static_cast<long>(n)) {
          const double v2 = neighbour(pos2);
          if (std::isfinite(v2)) cand = 2.0 * v1 - v2;
        }
        best = std::min(best, cand);
      }
    }
    if (isolated) out[k] = best;
  }
  GridFunction r(f.axes(), std::move(out));
  r.set_lsc_flag(true);
  r.set_convex_flag(f.is_convex_flag());
  return r;
}

GridFunction legendre_conjugate(const GridFunction& f, const std::vector<Axis>& dual_axes) {
  require_proper(f);
  if (dual_axes.empty()) throw Error("legendre_conjugate: empty dual grid");
  if (dual_axes.size() != f.dims()) throw Error("legendre_conjugate: dual grid dimension mismatch");
  GridFunction out = GridFunction::constant(dual_axes, 0.0);
  std::vector<std::uint8_t> sat(out.size(), 0);

  std::vector<std::array<double, 3>> interior, edge;  // (x0, x1, f)
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!std::isfinite(f[k])) continue;
    const auto p = f.point(k);
    (f.on_box_edge(k) ? edge : interior).push_back({p[0], p[1], f[k]});
  }
  for (std::size_t m = 0; m < out.size(); ++m) {
    const auto p = out.point(m);
    auto best_of = [&](const std::vector<std::array<double, 3>>& pts) {
      double best = -kInf;
      for (const auto& x : pts) best = std::max(best, p[0] * x[0] + p[1] * x[1] - x[2]);
      return best;
    };
    const double bi = best_of(interior);
    const double be = best_of(edge);
    const double v = std::max(bi, be);
    out[m] = v;
    if (be > bi + 1e-12 * std::max(1.0, std::abs(v))) sat[m] = 1;
  }
  out.set_saturated(std::move(sat));
  out.set_convex_flag(true);
  out.set_lsc_flag(true);
  return out;
}

GridFunction convexify(const GridFunction& f) {
  require_proper(f);
  if (f.dims() == 1) return convexify_1d(f);
  const PlanarLowerHull hull = make_planar_hull(f);
  const double tol = 1e-12 * value_scale(f);
  std::vector<double> out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto p = f.point(k);
    out[k] = snap_to(hull.evaluate(p[0], p[1]), f[k], tol);
  }
  GridFunction r(f.axes(), std::move(out));
  r.set_convex_flag(true);
  r.set_lsc_flag(true);
  return r;
}

double lower_hull_at(const GridFunction& f, std::size_t flat) {
  require_proper(f);
  if (f.dims() == 1) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (std::isfinite(f[i])) pts.emplace_back(f.axis(0).node(i), f[i]);
    return eval_hull_1d(lower_hull_1d(pts), f.axis(0).node(flat));
  }
  const auto p = f.point(flat);
  return make_planar_hull(f).evaluate(p[0], p[1]);
}

GridFunction convexify_z(const GridFunction& f) {
  if (f.dims() != 2) throw Error("convexify_z requires (y,z) grid");
  require_proper(f);
  const Axis& zax = f.axis(1);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.axis(0).count; ++i) {
    std::vector<double> row(zax.count);
    for (std::size_t j = 0; j < zax.count; ++j) row[j] = f.at(i, j);
    GridFunction slice({zax}, row);
    if (slice.is_proper()) {
      const GridFunction hull = convexify_1d(slice);
      for (std::size_t j = 0; j < zax.count; ++j) row[j] = hull[j];
    }
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(i * zax.count));
  }
  GridFunction r(f.axes(), std::move(out));
  r.set_lsc_flag(true);
  return r;
}

GridFunction pointwise_inf(std::span<const GridFunction> fs) {
  if (fs.empty()) throw Error("pointwise_inf: empty family");
  std::vector<double> out(fs.front().values().begin(), fs.front().values().end());
  for (const GridFunction& g : fs.subspan(1)) {
    if (!g.same_grid(fs.front())) throw Error("pointwise_inf: members must share one grid");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::min(out[k], g[k]);
  }
  return GridFunction(fs.front().axes(), std::move(out));
}

namespace {

GridFunction envelope(const GridFunction& f, EpiMode mode) {
  switch (mode) {
    case EpiMode::PK: return lsc_envelope(f);
    case EpiMode::CC: return convexify(f);
    case EpiMode::CCz: return convexify_z(f);
  }
  throw Error("unknown epi mode");
}

}  // namespace

std::vector<GridFunction> tail_envelopes(const EpiSequence& seq, EpiMode mode) {
  if (seq.members.empty()) throw Error("epi_liminf: empty sequence");
  const GridFunction& first = seq.members.front();
  for (const GridFunction& g : seq.members)
    if (!g.same_grid(first)) throw Error("epi_liminf: members must share one grid");
  if (mode == EpiMode::CCz && first.dims() != 2) throw Error("convexify_z requires (y,z) grid");

  const std::size_t len = seq.members.size();
  const std::size_t last_start = len - seq.effective_tail_length();
  // Suffix infima from the back, then envelopes for admissible starts.
  std::vector<double> suffix(first.size(), kInf);
  std::vector<GridFunction> out;
  for (std::size_t n = len; n-- > 0;) {
    const GridFunction& g = seq.members[n];
    for (std::size_t k = 0; k < suffix.size(); ++k) suffix[k] = std::min(suffix[k], g[k]);
    if (n <= last_start) out.push_back(envelope(GridFunction(first.axes(), suffix), mode));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

GridFunction epi_liminf(const EpiSequence& seq, EpiMode mode) {
  const auto envs = tail_envelopes(seq, mode);
  std::vector<double> out(envs.front().values().begin(), envs.front().values().end());
  for (const GridFunction& e : envs)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(out[k], e[k]);
  GridFunction r(envs.front().axes(), std::move(out));
  r.set_lsc_flag(true);
  r.set_convex_flag(mode == EpiMode::CC);
  return r;
}

GridFunction horizon_function(const GridFunction& h, const std::vector<Axis>& direction_axes) {
  require_proper(h);
  if (direction_axes.size() != h.dims()) throw Error("horizon_function: direction grid dimension mismatch");
  if (!is_discretely_convex(h, 1e-10 * value_scale(h)))
    throw Error("horizon function requires convex input");

  // Anchor: finite node closest to the box centre.
  std::array<double, 2> centre{};
  for (std::size_t k = 0; k < h.dims(); ++k) centre[k] = 0.5 * (h.axis(k).lo + h.axis(k).hi);
  std::size_t anchor = h.size();
  double best = kInf;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!std::isfinite(h[k])) continue;
    const auto p = h.point(k);
    const double d2 = (p[0] - centre[0]) * (p[0] - centre[0]) + (p[1] - centre[1]) * (p[1] - centre[1]);
    if (d2 < best) {
      best = d2;
      anchor = k;
    }
  }
  const auto x0 = h.point(anchor);
  const double h0 = h[anchor];

  GridFunction out = GridFunction::constant(direction_axes, 0.0);
  std::vector<std::uint8_t> sat(out.size(), 0);
  for (std::size_t m = 0; m < out.size(); ++m) {
    const auto y = out.point(m);
    double alpha = kInf;
    for (std::size_t k = 0; k < h.dims(); ++k) {
      if (y[k] > 0) alpha = std::min(alpha, (h.axis(k).hi - x0[k]) / y[k]);
      if (y[k] < 0) alpha = std::min(alpha, (h.axis(k).lo - x0[k]) / y[k]);
    }
    if (!std::isfinite(alpha) || alpha <= 0.0) {
      out[m] = 0.0;  // zero direction, or anchor already on the edge it points to
      if (std::isfinite(alpha)) sat[m] = 1;
      continue;
    }
    auto quotient = [&](double a) {
      std::array<double, 2> q{};
      for (std::size_t k = 0; k < h.dims(); ++k)
        q[k] = std::clamp(x0[k] + a * y[k], h.axis(k).lo, h.axis(k).hi);
      const double hv = h.evaluate(std::span<const double>(q.data(), h.dims()));
      return std::isfinite(hv) ? (hv - h0) / a : kInf;
    };
    const double q1 = quotient(alpha);
    const double q2 = quotient(0.5 * alpha);
    out[m] = q1;
    if (std::isfinite(q1) && std::abs(q1 - q2) > kHorizonStabilization * std::max(1.0, std::abs(q1))) sat[m] = 1;
  }
  out.set_saturated(std::move(sat));
  return out;
}

std::string to_string(RecCase c) {
  switch (c) {
    case RecCase::i: return "i";
    case RecCase::ii: return "ii";
    case RecCase::iii: return "iii";
    case RecCase::iv: return "iv";
    case RecCase::automatic: return "auto";
  }
  return "?";
}

std::string to_string(RecVerdict v) { return v == RecVerdict::pass ? "pass" : "inconclusive"; }

namespace {

struct CaseOutcome {
  bool pass = false;
  double gap = 0.0;
  std::vector<double> radii;
  std::string note;
};

GridFunction sample_yz(const GeneratorSpec& g, double x, const RecProbe& p) {
  return GridFunction::sample(p.y, p.z, [&](double y, double z) { return g(x, y, z); });
}

std::vector<double> sequence_with_limit(const RecProbe& p, double limit) {
  std::vector<double> xs = p.x_sequence;
  xs.push_back(limit);
  return xs;
}

CaseOutcome case_i(const GeneratorSpec& g, const RecProbe& p, double limit) {
  CaseOutcome o;
  if (!g.split) {
    o.note = "case i: no separable split declared";
    return o;
  }
  double gap = 0.0;
  for (double x : sequence_with_limit(p, limit))
    for (std::size_t j = 0; j < p.y.count; ++j)
      for (std::size_t k = 0; k < p.z.count; ++k) {
        const double y = p.y.node(j), z = p.z.node(k);
        const double full = g(x, y, z);
        const double parts = g.split->g1(x) + g.split->g2(y, z);
        gap = std::max(gap, std::abs(full - parts) / std::max(1.0, std::abs(full)));
      }
  // g1 lower semicontinuous along the sequence: g1(x) <= liminf g1(x_n).
  const std::size_t half = p.x_sequence.size() / 2;
  double tail_min = kInf;
  for (std::size_t n = half; n < p.x_sequence.size(); ++n) tail_min = std::min(tail_min, g.split->g1(p.x_sequence[n]));
  const double lsc_gap = std::max(0.0, g.split->g1(limit) - tail_min);
  o.gap = std::max(gap, lsc_gap);
  o.pass = o.gap <= p.tol;
  if (!o.pass) o.note = "case i: split or lsc of g1 not confirmed";
  return o;
}

CaseOutcome case_ii(const GeneratorSpec& g, const RecProbe& p) {
  CaseOutcome o;
  std::vector<GridFunction> family;
  for (double x : p.x_sequence) family.push_back(sample_yz(g, x, p));
  const GridFunction h = convexify(pointwise_inf(family));
  const std::vector<Axis> dirs{Axis{-1.0, 1.0, 5}, Axis{-1.0, 1.0, 5}};
  const GridFunction hh = horizon_function(h, dirs);
  std::size_t compared = 0;
  double gap = 0.0, magnitude = 0.0;
  for (const GridFunction& fn : family) {
    const GridFunction fh = horizon_function(fn, dirs);
    for (std::size_t m = 0; m < fh.size(); ++m) {
      if (fh.is_saturated(m) || hh.is_saturated(m)) continue;
      if (!std::isfinite(fh[m]) || !std::isfinite(hh[m])) continue;
      ++compared;
      gap = std::max(gap, std::abs(fh[m] - hh[m]));
      magnitude = std::max({magnitude, std::abs(fh[m]), std::abs(hh[m])});
    }
  }
  o.gap = gap;
  const double tol = std::max(p.tol, 1e-6);
  if (compared == 0) {
    o.note = "case ii: every direction boundary-saturated";
  } else if (magnitude <= tol) {
    o.note = "case ii: horizon functions vanish on all compared directions (sublevel sets unbounded in the box)";
  } else if (gap > tol) {
    o.note = "case ii: horizon functions differ";
  } else {
    o.pass = true;
  }
  return o;
}

bool inside_margin(const Axis& a, double v, double margin) {
  const double c = 0.5 * (a.lo + a.hi), hw = 0.5 * (a.hi - a.lo);
  return std::abs(v - c) <= (1.0 - margin) * hw + 1e-12 * hw;
}

CaseOutcome case_iii(const GeneratorSpec& g, const RecProbe& p) {
  CaseOutcome o;
  o.pass = true;
  for (double gamma : p.levels) {
    double radius = 0.0;
    for (double x : p.x_sequence)
      for (std::size_t j = 0; j < p.y.count; ++j)
        for (std::size_t k = 0; k < p.z.count; ++k) {
          const double y = p.y.node(j), z = p.z.node(k);
          if (!(g(x, y, z) <= gamma)) continue;
          radius = std::max(radius, std::hypot(y, z));
          if (!inside_margin(p.y, y, p.margin) || !inside_margin(p.z, z, p.margin)) o.pass = false;
        }
    o.radii.push_back(radius);
  }
  if (!o.pass) o.note = "case iii: a (y,z) sublevel set reaches the probe box margin";
  return o;
}

CaseOutcome case_iv(const GeneratorSpec& g, const RecProbe& p) {
  CaseOutcome o;
  o.pass = true;
  for (double gamma : p.levels) {
    double radius = 0.0;
    for (std::size_t j = 0; j < p.y.count; ++j)
      for (double x : p.x_sequence)
        for (std::size_t k = 0; k < p.z.count; ++k) {
          const double z = p.z.node(k);
          if (!(g(x, p.y.node(j), z) <= gamma)) continue;
          radius = std::max(radius, std::abs(z));
          if (!inside_margin(p.z, z, p.margin)) o.pass = false;
        }
    o.radii.push_back(radius);
  }
  if (!o.pass) o.note = "case iv: a z-sublevel set reaches the probe box margin";
  return o;
}

}  // namespace

RecReport rec_check(const GeneratorSpec& g, const RecProbe& probe, RecCase requested) {
  if (probe.x_sequence.empty()) throw Error("rec_check: empty x_sequence");
  for (double x : probe.x_sequence)
    if (!std::isfinite(x)) throw Error("rec_check: unbounded x_sequence");
  const double limit = probe.x_limit.value_or(probe.x_sequence.back());
  if (!std::isfinite(limit)) throw Error("rec_check: unbounded x_sequence");

  auto applicable = [&](RecCase c) {
    switch (c) {
      case RecCase::i: return g.split.has_value();
      case RecCase::ii:
      case RecCase::iii: return g.flags.jointly_convex;
      case RecCase::iv: return g.flags.monotone_in_y;
      default: return false;
    }
  };
  if (requested != RecCase::automatic && !applicable(requested)) {
    throw Error("rec_check: generator flags inconsistent with case " + to_string(requested) +
                (requested == RecCase::i ? " (no separable split)"
                 : requested == RecCase::iv ? " (requires monotone_in_y)"
                                            : " (requires jointly_convex)"));
  }

  RecReport report;
  const std::vector<RecCase> order =
      requested == RecCase::automatic ? std::vector<RecCase>{RecCase::i, RecCase::ii, RecCase::iii, RecCase::iv}
                                      : std::vector<RecCase>{requested};
  for (RecCase c : order) {
    if (!applicable(c)) continue;
    CaseOutcome o;
    switch (c) {
      case RecCase::i: o = case_i(g, probe, limit); break;
      case RecCase::ii: o = case_ii(g, probe); break;
      case RecCase::iii: o = case_iii(g, probe); break;
      case RecCase::iv: o = case_iv(g, probe); break;
      default: break;
    }
    report.max_gap = o.gap;
    report.level_set_radii = o.radii;
    if (!o.note.empty()) report.notes.push_back(o.note);
    if (o.pass) {
      report.verdict = RecVerdict::pass;
      report.case_used = c;
      return report;
    }
  }
  if (report.notes.empty()) report.notes.emplace_back("no sufficient condition applies");
  return report;
}

}  // namespace minsup::convexlab
