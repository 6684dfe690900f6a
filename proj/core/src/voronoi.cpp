#include "mdimkit/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mdimkit/parallel.hpp"
#include "mdimkit/rng.hpp"

namespace mdimkit {
namespace {

constexpr double kRadiusSlack = 1e-9;

bool box_holds_ball(const Box& b, const RealPoint& u, double r) {
  for (int i = 0; i < u.dim(); ++i)
    if (u[i] - r < static_cast<double>(b.lo[i]) || u[i] + r > static_cast<double>(b.hi[i])) return false;
  return true;
}

RealPoint uniform_in_ball(Rng& rng, const RealPoint& c, double r) {
  const int k = c.dim();
  RealPoint v(k);
  for (;;) {
    double n2 = 0;
    for (int i = 0; i < k; ++i) {
      v[i] = rng.uniform(-1.0, 1.0);
      n2 += v[i] * v[i];
    }
    if (n2 <= 1.0) break;
  }
  RealPoint p(k);
  for (int i = 0; i < k; ++i) p[i] = c[i] + r * v[i];
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flat cells

FlatTiling::FlatTiling(FlatCenters centers) : c_(std::move(centers)), index_(c_.C.points(), std::max(1, c_.L)) {
  if (c_.L < 1) throw Error("FlatTiling: L must be >= 1");
  for (const auto& p : c_.C)
    if (!c_.window.contains(p)) throw Error("FlatTiling: center " + to_string(p) + " outside window");
}

void FlatTiling::check_query(const RealPoint& u, double radius) const {
  if (!box_holds_ball(c_.window, u, radius))
    throw WindowError("flat tiling: query too close to the window edge (needs margin " + std::to_string(radius) + ")");
}

LatticePoint FlatTiling::owner(const RealPoint& u) const {
  const double rho = candidate_radius();
  check_query(u, rho);
  std::vector<std::size_t> cand;
  index_.query(u, rho, cand);
  if (cand.empty()) throw WindowError("flat tiling: no center near the query; syndeticity violated");
  const auto& pts = index_.points();
  std::size_t best = cand.front();
  double best_d2 = (to_real(pts[best]) - u).norm2();
  for (std::size_t j : cand) {
    const double d2 = (to_real(pts[j]) - u).norm2();
    if (d2 < best_d2 || (d2 == best_d2 && pts[j] < pts[best])) {
      best = j;
      best_d2 = d2;
    }
  }
  return pts[best];
}

LatticeSet FlatTiling::lattice_cell(const LatticePoint& n) const {
  std::vector<LatticePoint> pts;
  for (const auto& o : ball_offsets(c_.L, n.dim()))
    if (owner(n + o) == n) pts.push_back(n + o);
  return LatticeSet(n.dim(), std::move(pts));
}

double FlatTiling::boundary_distance(const LatticePoint& n, const RealPoint& u) const {
  if (owner(u) != n) throw Error("boundary_distance: point not owned by " + to_string(n));
  const int k = n.dim();
  const double reach = 2.0 * (c_.L + std::sqrt(static_cast<double>(k))) + 1.0;
  check_query(to_real(n), reach);
  const RealPoint du = u - to_real(n);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j : index_.query(to_real(n), reach)) {
    const LatticePoint m = index_.points()[j] - n;
    if (m.norm2() == 0) continue;
    double dot = 0;
    for (int i = 0; i < k; ++i) dot += static_cast<double>(m[i]) * du[i];
    best = std::min(best, (static_cast<double>(m.norm2()) - 2.0 * dot) / (2.0 * m.norm()));
  }
  return std::max(0.0, best);
}

double flat_cell_ratio_bound(int k, double L, double R) {
  const double sk = std::sqrt(static_cast<double>(k));
  const double a = 2.0 * (R + sk) / L;
  return (std::pow(1.0 + a, k) - std::pow(1.0 - a, k)) / std::pow(1.0 - 2.0 * sk / L, k);
}

CellReport flat_cell_check(const FlatTiling& tiling, const LatticePoint& n, double R, std::size_t ball_probes,
                           std::uint64_t seed) {
  const int k = n.dim();
  const double L = tiling.centers().L;
  const double sk = std::sqrt(static_cast<double>(k));
  if (!(L > 2 * sk)) throw Error("flat_cell_check: requires L > 2 sqrt(k)");
  if (!tiling.centers().C.contains(n)) throw Error("flat_cell_check: " + to_string(n) + " is not a center");
  if (!box_holds_ball(tiling.centers().window, to_real(n), 2 * L + sk + 1))
    throw WindowError("flat_cell_check: cell touches the window edge");

  CellReport rep;
  rep.center = n;
  rep.lattice_points = tiling.lattice_cell(n);
  rep.boundary_shell = shell(rep.lattice_points, R).boundary;
  rep.ratio = static_cast<double>(rep.boundary_shell.size()) / static_cast<double>(rep.lattice_points.size());
  rep.bound = flat_cell_ratio_bound(k, L, R);
  rep.ratio_within_bound = rep.ratio <= rep.bound;
  rep.ratio_below_inverse_R = rep.ratio < 1.0 / R;

  Rng rng(seed, static_cast<std::uint64_t>(LatticePointHash{}(n)));
  for (std::size_t i = 0; i < ball_probes; ++i) {
    const RealPoint p = uniform_in_ball(rng, to_real(n), L / 2);
    ++rep.ball_probes;
    if (tiling.owner(p) != n) {
      ++rep.ball_violations;
      if (!rep.ball_witness) rep.ball_witness = p;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Lifted cells

LiftedTiling::LiftedTiling(MarkerField field) : f_(std::move(field)) {
  validate_marker_field(f_);
  auto supp = f_.support();
  for (const auto& n : supp) heights_.push_back(1.0 / f_.at(n));
  index_ = SpatialIndex(std::move(supp), std::max(1, f_.L));
}

double LiftedTiling::candidate_radius(double h) const {
  // A height-1 center lies within L + sqrt(k) of u; centers have height >= 1.
  const double base = f_.L + std::sqrt(static_cast<double>(k()));
  if (h <= 1) return base + kRadiusSlack;
  return std::sqrt(base * base + (h - 1) * (h - 1)) + kRadiusSlack;
}

Box LiftedTiling::valid_box() const {
  return f_.window.inflated(-static_cast<std::int64_t>(std::ceil(candidate_radius(-H()))) - f_.L);
}

void LiftedTiling::check_query(const RealPoint& u, double radius) const {
  // Syndeticity is certified on the window eroded by L, so the witness center
  // used in the radius argument must come from there.
  if (!box_holds_ball(f_.window, u, radius + f_.L))
    throw WindowError("lifted tiling: query too close to the window edge");
}

std::size_t LiftedTiling::center_index(const LatticePoint& n) const {
  const auto& pts = index_.points();
  const auto it = std::lower_bound(pts.begin(), pts.end(), n);
  if (it == pts.end() || *it != n) throw Error("lifted tiling: " + to_string(n) + " is not a center");
  return static_cast<std::size_t>(it - pts.begin());
}

LatticePoint LiftedTiling::owner(const RealPoint& u, double h) const {
  const double rho = candidate_radius(h);
  check_query(u, rho);
  thread_local std::vector<std::size_t> cand;
  index_.query(u, rho, cand);
  if (cand.empty()) throw WindowError("lifted tiling: no center near the query; syndeticity violated");
  const auto& pts = index_.points();
  std::size_t best = SIZE_MAX;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j : cand) {
    // (h - t)^2 - (h - 1)^2, so equal heights reduce exactly to the flat comparison.
    const double t = heights_[j];
    const double d2 = (to_real(pts[j]) - u).norm2() + (t - 1) * (t + 1 - 2 * h);
    if (d2 < best_d2 || (d2 == best_d2 && pts[j] < pts[best])) {
      best = j;
      best_d2 = d2;
    }
  }
  return pts[best];
}

double LiftedTiling::boundary_distance(const LatticePoint& n, const RealPoint& u, double h) const {
  if (owner(u, h) != n) throw Error("w_boundary_distance: point not owned by " + to_string(n));
  const std::size_t ni = center_index(n);
  const double tn = heights_[ni];
  const int kk = k();
  // Cells adjacent to the cell of n have centers within 2(L + sqrt(k)).
  const double reach = 2.0 * (f_.L + std::sqrt(static_cast<double>(kk))) + 1.0;
  if (h > 1) throw Error("w_boundary_distance: slices above height 1 are not supported");
  check_query(to_real(n), reach);
  const RealPoint du = u - to_real(n);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j : index_.query(to_real(n), reach)) {
    if (j == ni) continue;
    const LatticePoint m = index_.points()[j] - n;
    const double tm = heights_[j];
    // Bisector: 2 w·m <= |m|^2 + (h - tm)^2 - (h - tn)^2 in coordinates centered at n.
    const double b = static_cast<double>(m.norm2()) + (tn - tm) * (2 * h - tm - tn);
    double dot = 0;
    for (int i = 0; i < kk; ++i) dot += static_cast<double>(m[i]) * du[i];
    best = std::min(best, (b - 2.0 * dot) / (2.0 * m.norm()));
  }
  return std::max(0.0, best);
}

LatticeSet LiftedTiling::lattice_cell(const LatticePoint& n, double h) const {
  std::vector<LatticePoint> pts;
  const double reach = candidate_radius(h);
  for (const auto& o : ball_offsets(reach, n.dim()))
    if (owner(n + o, h) == n) pts.push_back(n + o);
  return LatticeSet(n.dim(), std::move(pts));
}

LatticePoint flat_owner(const FlatTiling& t, const RealPoint& u) { return t.owner(u); }
LatticePoint lifted_owner(const LiftedTiling& t, const RealPoint& u, double h) { return t.owner(u, h); }
double w_boundary_distance(const LiftedTiling& t, const LatticePoint& n, const RealPoint& u) {
  return t.boundary_distance(n, u);
}

// ---------------------------------------------------------------------------
// Lifted-cell checks

bool Lemma41Report::passed() const {
  for (const auto& c : checks)
    if (c.status == "fail") return false;
  return true;
}

namespace {

RealPoint uniform_in_box(Rng& rng, const Box& b) {
  RealPoint p(b.dim());
  for (int i = 0; i < b.dim(); ++i) p[i] = rng.uniform(static_cast<double>(b.lo[i]), static_cast<double>(b.hi[i]));
  return p;
}

std::string point_text(const RealPoint& p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (int i = 0; i < p.dim(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

}  // namespace

Lemma41Report lemma41_check(const LiftedTiling& t, const Lemma41Params& p) {
  const MarkerField& f = t.field();
  const int k = f.k();
  const double sk = std::sqrt(static_cast<double>(k));
  const double H = f.H, s = f.s, M = f.M, L = f.L;
  const Box valid = t.valid_box();
  if (valid.empty()) throw WindowError("lemma41_check: window too small for the candidate radius");

  Lemma41Report rep;
  rep.radius_formula = (s - 1) * H * M / (2 * (s * H + 2));
  rep.offset_bound = 4 * (L + sk) / H;
  const double r_feed = rep.radius_formula - rep.offset_bound;
  rep.r_used = p.r < 0 ? r_feed : p.r;

  // Check (4) moves a by up to (1 - 1/s)(L + sqrt k) and then samples a ball of radius r around it;
  // balls wider than (s - 1)M / (2s) are gated before sampling.
  const double r4 = std::clamp(rep.r_used, 0.0, (s - 1) * M / (2 * s));
  const Box valid4 = valid.inflated(-static_cast<std::int64_t>(std::ceil((1 - 1 / s) * (L + sk) + r4)) - 1);
  if (valid4.empty()) throw WindowError("lemma41_check: window too small for the slice check");

  // Centers whose lifted ball lies in the decided region.
  std::vector<LatticePoint> inner_centers;
  for (const auto& c : t.centers())
    if (box_holds_ball(valid, to_real(c), M / 2 + 2)) inner_centers.push_back(c);

  struct ProbeOutcome {
    bool v1 = false, v2 = false, v3 = false, v4 = false, gate4 = false;
    double offset = 0;
    std::string w1, w2, w3, w4;
  };
  const auto outcomes = parallel_map<ProbeOutcome>(p.probes, [&](std::size_t i) {
    ProbeOutcome o;
    Rng rng(p.seed, i);
    // (1) ball around a lifted center.
    if (!inner_centers.empty()) {
      const LatticePoint n = inner_centers[rng.below(inner_centers.size())];
      const double tn = 1.0 / f.at(n);
      for (std::size_t b = 0; b < p.ball_samples && !o.v1; ++b) {
        RealPoint c(k + 1);
        for (int d = 0; d < k; ++d) c[d] = static_cast<double>(n[d]);
        c[k] = tn;
        const RealPoint q = uniform_in_ball(rng, c, M / 2 * (1 - 1e-12));
        RealPoint u(k);
        for (int d = 0; d < k; ++d) u[d] = q[d];
        if (t.owner(u, q[k]) != n) {
          o.v1 = true;
          o.w1 = "point " + point_text(q) + " not owned by " + to_string(n);
        }
      }
    }
    // (2), (3) at height -H.
    const RealPoint u = uniform_in_box(rng, valid);
    const LatticePoint n = t.owner(u, -H);
    const double tn = 1.0 / f.at(n);
    if (tn < 1 || tn > 2) {
      o.v2 = true;
      o.w2 = "owner " + to_string(n) + " of " + point_text(u) + " has height " + std::to_string(tn);
    }
    if (!((to_real(n) - u).norm() < L + sk)) {
      o.v3 = true;
      o.w3 = "owner " + to_string(n) + " at distance " + std::to_string((to_real(n) - u).norm());
    }
    // (4) at height -sH.
    const RealPoint a = uniform_in_box(rng, valid4);
    const LatticePoint na = t.owner(a, -s * H);
    const double ta = 1.0 / f.at(na);
    const RealPoint nr = to_real(na);
    RealPoint center(k), exact_center(k);
    const double lam = (s - 1) * H / (s * H + ta);
    for (int d = 0; d < k; ++d) {
      center[d] = a[d] / s + (1 - 1 / s) * nr[d];
      exact_center[d] = a[d] + lam * (nr[d] - a[d]);
    }
    o.offset = (center - exact_center).norm();
    const double radius_t = (s - 1) * H * M / (2 * (s * H + ta));
    if (rep.r_used <= 0 || rep.r_used + o.offset > radius_t + 1e-12) {
      o.gate4 = true;
    } else {
      for (std::size_t b = 0; b < p.ball_samples && !o.v4; ++b) {
        const RealPoint q = uniform_in_ball(rng, center, rep.r_used);
        if (t.owner(q, -H) != na) {
          o.v4 = true;
          o.w4 = "point " + point_text(q) + " of the ball about " + point_text(center) + " not owned by " +
                 to_string(na);
        }
      }
    }
    return o;
  });

  CheckResult c1{"ball_in_cell", "pass", p.probes, 0, ""};
  CheckResult c3{"owner_distance", "pass", p.probes, 0, ""};
  CheckResult c4{"ball_in_slice", "pass", p.probes, 0, ""};
  CheckResult c2{"height_range", "pass", p.probes, 0, ""};
  std::size_t gated = 0;
  for (const auto& o : outcomes) {
    if (o.v1 && c1.violations++ == 0) c1.detail = o.w1;
    if (o.v2 && c2.violations++ == 0) c2.detail = o.w2;
    if (o.v3 && c3.violations++ == 0) c3.detail = o.w3;
    if (o.v4 && c4.violations++ == 0) c4.detail = o.w4;
    if (o.gate4) ++gated;
    rep.max_offset_seen = std::max(rep.max_offset_seen, o.offset);
  }
  if (inner_centers.empty()) c1 = {"ball_in_cell", "gate", 0, 0, "no center far enough from the window edge"};

  // (2) also as a deterministic grid scan.
  std::size_t scanned = 0;
  const auto steps = static_cast<std::int64_t>(std::floor(static_cast<double>(valid.hi[0] - valid.lo[0]) / p.scan_pitch));
  Box grid{LatticePoint(k), LatticePoint(k)};
  for (int d = 0; d < k; ++d) grid.hi[d] = std::min<std::int64_t>(steps, 400);
  grid.for_each([&](const LatticePoint& g) {
    RealPoint u(k);
    for (int d = 0; d < k; ++d) u[d] = static_cast<double>(valid.lo[d]) + p.scan_pitch * static_cast<double>(g[d]);
    if (!box_holds_ball(valid, u, 0)) return;
    const LatticePoint n = t.owner(u, -H);
    const double tn = 1.0 / f.at(n);
    ++scanned;
    if ((tn < 1 || tn > 2) && c2.violations++ == 0)
      c2.detail = "grid point " + point_text(u) + " owned by height " + std::to_string(tn);
  });
  c2.probes += scanned;

  for (auto* c : {&c1, &c2, &c3, &c4})
    if (c->violations > 0) c->status = "fail";
  if (c4.violations == 0 && (rep.r_used <= 0 || gated > 0)) {
    c4.status = "gate";
    c4.detail = "M below threshold for the requested r";
    c4.probes = p.probes - gated;
  }
  rep.checks = {c1, c2, c3, c4};
  return rep;
}

// ---------------------------------------------------------------------------
// Boundary fraction

double boundary_fraction_bound(int k, double L, double s, double R) {
  const double q = (R - 2 * L - 2 * std::sqrt(static_cast<double>(k))) / R;
  if (q <= 0) return 1.0;
  return 1.0 - std::pow(s, -k) * std::pow(q, k);
}

FractionEstimate boundary_fraction(const LiftedTiling& t, double E, double R, std::size_t n_samples,
                                   std::uint64_t seed, const BoundaryFractionOptions& opt) {
  const int k = t.k();
  const double H = t.H();
  RealPoint center = opt.center.dim() == k ? opt.center : RealPoint(k);
  std::vector<RealPoint> net;
  if (opt.mode == BoundaryFractionOptions::Mode::ProbeNet && E > 0) {
    const double pitch = opt.fixed_pitch > 0 ? opt.fixed_pitch : E * opt.pitch_ratio;
    const auto steps = static_cast<std::int64_t>(std::floor(E / pitch));
    for (const auto& j : ball_offsets(static_cast<double>(steps), k)) {
      RealPoint v(k);
      for (int d = 0; d < k; ++d) v[d] = pitch * static_cast<double>(j[d]);
      if (v.norm() <= E && j != LatticePoint(k)) net.push_back(v);
    }
  }
  const auto hits = parallel_map<char>(n_samples, [&](std::size_t i) -> char {
    Rng rng(seed, i);
    const RealPoint u = uniform_in_ball(rng, center, R);
    const LatticePoint n = t.owner(u, -H);
    if (opt.mode == BoundaryFractionOptions::Mode::Exact) return t.boundary_distance(n, u, -H) <= E;
    for (const auto& v : net)
      if (t.owner(u + v, -H) != n) return 1;
    return 0;
  });
  FractionEstimate est;
  est.samples = n_samples;
  for (char h : hits) est.hits += static_cast<std::size_t>(h);
  if (n_samples > 0) {
    est.estimate = static_cast<double>(est.hits) / static_cast<double>(n_samples);
    est.std_error = std::sqrt(est.estimate * (1 - est.estimate) / static_cast<double>(n_samples));
  }
  return est;
}

}  // namespace mdimkit
