#include "mdimkit/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mdimkit/dimension.hpp"
#include "mdimkit/parallel.hpp"
#include "mdimkit/rng.hpp"

namespace mdimkit {

using json = nlohmann::json;

namespace {

double sqrt_k(int k) { return std::sqrt(static_cast<double>(k)); }

std::int64_t ceil_int(double v) { return static_cast<std::int64_t>(std::ceil(v - 1e-12)); }

Box cube_box(int k, std::int64_t r) {
  Box b{LatticePoint(k), LatticePoint(k)};
  for (int i = 0; i < k; ++i) {
    b.lo[i] = -r;
    b.hi[i] = r;
  }
  return b;
}

Box point_box(const LatticePoint& p) { return Box{p, p}; }

std::vector<LatticePoint> box_points(const Box& b) {
  std::vector<LatticePoint> out;
  out.reserve(static_cast<std::size_t>(b.volume()));
  b.for_each([&](const LatticePoint& p) { out.push_back(p); });
  return out;
}

json point_json(const LatticePoint& p) { return json(std::vector<std::int64_t>(p.begin(), p.end())); }

// Index of p in a sorted point list.
std::size_t index_in(const std::vector<LatticePoint>& pts, const LatticePoint& p) {
  const auto it = std::lower_bound(pts.begin(), pts.end(), p);
  if (it == pts.end() || *it != p) throw Error("site " + to_string(p) + " outside the block");
  return static_cast<std::size_t>(it - pts.begin());
}

// Margin around a region so that owner and boundary-distance queries of a
// lifted tiling are valid there.
std::int64_t lifted_margin(int L, int k) { return ceil_int(4.0 * L + 3.0 * sqrt_k(k) + 2.0); }

LiftedTiling lifted_tiling(const GridRotation& X, const RotationPoint& x, const Box& region, int M, int L, double H,
                           double s) {
  const Box window = region.inflated(lifted_margin(L, X.k()));
  return LiftedTiling(X.marker_field(x, window, M, L, H, s));
}

double default_height(double H, int L, int k) { return H > 0 ? H : height_gate(L, k); }

bool deep_in(const LiftedTiling& t, const LatticePoint& n, const LatticePoint& m, double margin) {
  if (t.owner(m, -t.H()) != n) return false;
  return t.boundary_distance(n, to_real(m)) >= margin;
}

struct Accum {
  double max_dev = 0;
  bool exact = true;
  void add(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("block identity: size mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) exact = false;
      max_dev = std::max(max_dev, std::fabs(a[i] - b[i]));
    }
  }
};

}  // namespace

double alpha_cutoff(double t) { return std::min(1.0, std::max(0.0, t)); }

double beta_cutoff(double t, double tau) {
  if (!(tau > 0)) throw Error("beta_cutoff: tau must be positive");
  return std::max(0.0, 1.0 - t / tau);
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("sup_distance: size mismatch");
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

std::vector<double> orbit_values(const GridRotation& X, const PointMap& f, const RotationPoint& x,
                                 const std::vector<LatticePoint>& sites) {
  std::vector<double> out;
  for (const auto& n : sites) {
    const auto v = f(X.shift(x, n));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

// ---------------------------------------------------------------- window embeddings

BaryPoint WindowEmbedding::map(const GridRotation& X, const RotationPoint& x) const {
  return nerve.map([&](std::size_t i) { return X.window_distance(x, net[i], omega); });
}

FiniteMetric WindowEmbedding::metric(const GridRotation& X) const {
  const auto* self = this;
  const auto* sys = &X;
  return {net.size(), [self, sys](std::size_t i, std::size_t j) {
            return sys->window_distance(self->net[i], self->net[j], self->omega);
          }};
}

WindowEmbedding window_embedding(const GridRotation& X, const LatticeSet& omega, double eps, std::size_t per_axis) {
  if (omega.empty()) throw Error("window_embedding: empty window");
  if (per_axis < 2) throw Error("window_embedding: need at least two grid points per axis");
  const int m = X.torus_dim();
  std::size_t total = 1;
  for (int j = 0; j < m; ++j) {
    total *= per_axis;
    if (total > 100000) throw Error("window_embedding: grid too large");
  }
  WindowEmbedding w;
  w.omega = omega;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> th;
    std::size_t r = idx;
    for (int j = 0; j < m; ++j) {
      th.push_back(static_cast<double>(r % per_axis) / static_cast<double>(per_axis));
      r /= per_axis;
    }
    w.net.push_back(X.point(LatticePoint(X.k()), th));
  }
  // Points of another phase are lambda away from the phase-0 point with equal angles.
  w.net_radius = std::max(X.phase_weight(), m > 0 ? 0.5 / static_cast<double>(per_axis) : 0.0);
  const FiniteMetric dm = w.metric(X);
  const Cover cover = greedy_cover(dm, eps / 2);
  w.nerve = nerve_embedding(dm, cover, eps, 0, NerveMode::Closure);
  if (!(w.net_radius < w.nerve.r_blend))
    throw Error("window_embedding: grid radius " + std::to_string(w.net_radius) + " is not below r_blend " +
                std::to_string(w.nerve.r_blend) + "; refine the grid or lower the phase weight");
  return w;
}

// ---------------------------------------------------------------- symbolic palette

PaletteMiss::PaletteMiss(const LatticeSet& s) : Error("palette miss: unseen cell shape " + [&] {
  std::string out = "{";
  for (const auto& p : s) out += (out.size() > 1 ? "," : "") + to_string(p);
  return out + "}";
}()),
                                                shape(s) {}

std::optional<std::size_t> TilePalette::find(const LatticeSet& shape) const {
  for (std::size_t i = 0; i < pieces.size(); ++i)
    if (pieces[i].omega == shape) return i;
  return std::nullopt;
}

std::vector<double> TilePalette::apply(std::size_t i, const GridRotation& X, const RotationPoint& y) const {
  const auto& pc = pieces.at(i);
  return pc.G(pc.p.map(X, y));
}

namespace {

FlatTiling flat_tiling(const GridRotation& X, const RotationPoint& x, const Box& region, int L) {
  const Box window = region.inflated(3 * static_cast<std::int64_t>(L) + 4);
  return FlatTiling(FlatCenters{X.markers(x, window), L, window});
}

LatticeSet canonical_shape(const LatticeSet& cell, LatticePoint& a) {
  a = cell.points().front();
  return cell.translated(-1 * a);
}

TilePiece build_piece(const GridRotation& X, const PointMap& f, const SymbolicSpec& spec, LatticeSet shape,
                      std::uint64_t seed) {
  TilePiece pc;
  pc.omega = std::move(shape);
  pc.interior = shell(pc.omega, 1).interior;
  pc.shell_ratio = folner_ratio(pc.omega, spec.R).ratio;
  if (pc.interior.empty()) throw Error("palette: cell shape has empty interior");
  pc.p = window_embedding(X, pc.omega, spec.eps, spec.net_per_axis);
  const int target = static_cast<int>(pc.interior.size()) * spec.D;
  if (!(2 * pc.p.nerve.complex.dim() < target))
    throw Error("palette: nerve dimension is not below (D/2)|int_1 Omega|");
  std::vector<std::vector<double>> values;
  for (const auto& y : pc.p.net) values.push_back(orbit_values(X, f, y, pc.interior.points()));
  const auto approx = approximate_by_linear(pc.p.nerve, pc.p.metric(X), values, spec.delta - spec.noise);
  pc.approx_error = approx.max_error;
  GenericOptions opt;
  opt.tag = GenericTag::Embedding;
  opt.target_dim = target;
  opt.cap = spec.cap;
  for (int v = 0; v < approx.g.complex().vertex_count(); ++v) opt.base.push_back(approx.g.image(v));
  opt.eta = spec.noise;
  auto gen = sample_generic_linear(pc.p.nerve.complex, opt, seed);
  pc.G = std::move(gen.map);
  pc.cert = gen.cert;
  return pc;
}

}  // namespace

TilePalette build_palette(const GridRotation& X, const PointMap& f, const SymbolicSpec& spec,
                          const std::vector<RotationPoint>& sample) {
  if (!(0 < spec.eps && spec.eps < spec.delta)) throw Error("symbolic painter: need 0 < eps < delta");
  if (!(spec.noise >= 0 && spec.noise < spec.delta)) throw Error("symbolic painter: noise must be below delta");
  TilePalette pal;
  for (const auto& x : sample) {
    const FlatTiling t = flat_tiling(X, x, point_box(LatticePoint(X.k())), spec.L);
    LatticePoint a;
    LatticeSet shape = canonical_shape(t.lattice_cell(t.owner(LatticePoint(X.k()))), a);
    if (pal.find(shape)) continue;
    const double ratio = folner_ratio(shape, spec.R).ratio;
    if (!(ratio < 1.0 / spec.R))
      throw Error("palette: cell shape has shell ratio " + std::to_string(ratio) + " >= 1/R");
    pal.pieces.push_back(build_piece(X, f, spec, std::move(shape), derive_seed(spec.seed, pal.pieces.size())));
  }
  return pal;
}

SymbolicPainter::SymbolicPainter(const GridRotation& X, PointMap f, SymbolicSpec spec,
                                 std::shared_ptr<const TilePalette> palette)
    : X_(X), f_(std::move(f)), spec_(spec), palette_(std::move(palette)) {
  if (!palette_) throw Error("symbolic painter: palette missing");
}

FlatTiling SymbolicPainter::tiling(const RotationPoint& x, const Box& region) const {
  return flat_tiling(X_, x, region, spec_.L);
}

TileLocation SymbolicPainter::locate(const RotationPoint& x) const {
  const LatticePoint zero(X_.k());
  const FlatTiling t = tiling(x, point_box(zero));
  TileLocation loc;
  loc.center = t.owner(zero);
  loc.cell = t.lattice_cell(loc.center);
  const LatticeSet shape = canonical_shape(loc.cell, loc.a);
  loc.piece = palette_->find(shape);
  if (loc.piece) loc.in_interior = palette_->pieces[*loc.piece].interior.contains(-1 * loc.a);
  else loc.in_interior = shell(loc.cell, 1).interior.contains(zero);
  if (loc.in_interior && !loc.piece) throw PaletteMiss(shape);
  return loc;
}

std::vector<double> SymbolicPainter::g(const RotationPoint& x) const {
  const TileLocation loc = locate(x);
  if (!loc.in_interior) return f_(x);
  const auto& pc = palette_->pieces[*loc.piece];
  const auto v = palette_->apply(*loc.piece, X_, X_.shift(x, loc.a));
  const std::size_t i = index_in(pc.interior.points(), -1 * loc.a);
  const auto D = static_cast<std::size_t>(spec_.D);
  return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * D),
                             v.begin() + static_cast<std::ptrdiff_t>((i + 1) * D));
}

std::vector<double> SymbolicPainter::image(const RotationPoint& x, const std::vector<LatticePoint>& sites) const {
  std::vector<double> out;
  for (const auto& m : sites) {
    const auto v = g(X_.shift(x, m));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

SymbolicPainter paint_symbolic(const GridRotation& X, PointMap f, const SymbolicSpec& spec,
                               std::shared_ptr<const TilePalette> palette) {
  return SymbolicPainter(X, std::move(f), spec, std::move(palette));
}

BlockIdentityCheck check_symbolic_claim(const SymbolicPainter& g, const RotationPoint& x, const Box& centers_box) {
  const GridRotation& X = g.system();
  const FlatTiling t = g.tiling(x, centers_box.inflated(g.spec().L + 2));
  BlockIdentityCheck out;
  for (const auto& c : X.markers(x, centers_box)) {
    LatticePoint a;
    const LatticeSet shape = canonical_shape(t.lattice_cell(c), a);
    const auto piece = g.palette().find(shape);
    if (!piece) throw PaletteMiss(shape);
    const auto& pc = g.palette().pieces[*piece];
    const LatticeSet sites = pc.interior.translated(a);
    Accum acc;
    acc.add(g.image(x, sites.points()), g.palette().apply(*piece, X, X.shift(x, a)));
    ++out.blocks;
    out.sites += sites.size();
    if (!acc.exact) ++out.mismatches;
    out.max_deviation = std::max(out.max_deviation, acc.max_dev);
  }
  return out;
}

// ---------------------------------------------------------------- tile painting

LatticePoint block_anchor(const LatticePoint& n, int N) {
  LatticePoint a(n.dim());
  for (int i = 0; i < n.dim(); ++i) a[i] = -(((-n[i]) % N + N) % N);
  return a;
}

TilePainter::TilePainter(const GridRotation& X, PointMap f, BlockMap F, int D, TilingSpec spec)
    : X_(X), f_(std::move(f)), F_(std::move(F)), D_(D), spec_(spec) {
  if (spec_.N < 1) throw Error("paint_tiles: N must be >= 1");
  if (D_ < 1) throw Error("paint_tiles: D must be >= 1");
  spec_.H = default_height(spec_.H, spec_.L, X.k());
  if (spec_.H < height_gate(spec_.L, X.k())) throw Error("H gate: H < (L + sqrt(k))^2");
  block_ = cube_window(spec_.N, X.k()).points();
}

LiftedTiling TilePainter::tiling(const RotationPoint& x, const Box& region) const {
  return lifted_tiling(X_, x, region, spec_.M, spec_.L, spec_.H, spec_.s);
}

std::vector<double> TilePainter::g_at(const LiftedTiling& t, const RotationPoint& x, const LatticePoint& m) const {
  const RotationPoint xm = X_.shift(x, m);
  const LatticePoint n = t.owner(m, -spec_.H);
  const double a_t = alpha_cutoff(t.boundary_distance(n, to_real(m)));
  if (a_t == 0) return f_(xm);
  const LatticePoint a = block_anchor(n - m, spec_.N);
  const auto Fv = F_(X_.shift(xm, a));
  const std::size_t i = index_in(block_, -1 * a);
  const auto fx = f_(xm);
  std::vector<double> out(static_cast<std::size_t>(D_));
  for (int d = 0; d < D_; ++d) {
    const auto c = static_cast<std::size_t>(d);
    out[c] = (1 - a_t) * fx[c] + a_t * Fv[i * static_cast<std::size_t>(D_) + c];
  }
  return out;
}

std::vector<double> TilePainter::g(const RotationPoint& x) const {
  const LatticePoint zero(X_.k());
  return g_at(tiling(x, point_box(zero)), x, zero);
}

std::vector<double> TilePainter::image(const RotationPoint& x, const Box& box) const {
  const LiftedTiling t = tiling(x, box);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(box.volume() * D_));
  box.for_each([&](const LatticePoint& m) {
    const auto v = g_at(t, x, m);
    out.insert(out.end(), v.begin(), v.end());
  });
  return out;
}

TilePainter paint_tiles(const GridRotation& X, PointMap f, BlockMap F, int D, const TilingSpec& spec) {
  return TilePainter(X, std::move(f), std::move(F), D, spec);
}

std::vector<std::pair<LatticePoint, LatticePoint>> aligned_blocks(const LiftedTiling& t, const Box& region, int N) {
  const int k = region.dim();
  Box anchors = region;
  for (int i = 0; i < k; ++i) anchors.hi[i] -= N - 1;
  std::vector<std::pair<LatticePoint, LatticePoint>> out;
  if (anchors.empty()) return out;
  const auto blk = cube_window(N, k).points();
  anchors.for_each([&](const LatticePoint& a) {
    const LatticePoint n = t.owner(a, -t.H());
    for (int i = 0; i < k; ++i)
      if (((a[i] - n[i]) % N + N) % N != 0) return;
    for (const auto& o : blk)
      if (!deep_in(t, n, a + o, 1.0)) return;
    out.emplace_back(n, a);
  });
  return out;
}

BlockIdentityCheck check_tile_claim(const TilePainter& g, const RotationPoint& x, const Box& region) {
  const GridRotation& X = g.system();
  const LiftedTiling t = g.tiling(x, region);
  BlockIdentityCheck out;
  for (const auto& [n, a] : aligned_blocks(t, region, g.spec().N)) {
    std::vector<double> lhs;
    for (const auto& o : g.block()) {
      const auto v = g.g(X.shift(x, a + o));
      lhs.insert(lhs.end(), v.begin(), v.end());
    }
    Accum acc;
    acc.add(lhs, g.block_map(X.shift(x, a)));
    ++out.blocks;
    out.sites += g.block().size();
    if (!acc.exact) ++out.mismatches;
    out.max_deviation = std::max(out.max_deviation, acc.max_dev);
  }
  return out;
}

// ---------------------------------------------------------------- zero sets

std::string ZeroSetReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "R,sites,max_zeros,normalized,max_edge_zeros,interior_term,decomposition_violations\n";
  for (const auto& r : rows)
    os << r.R << ',' << r.sites << ',' << r.max_zeros << ',' << r.normalized << ',' << r.max_edge_zeros << ','
       << r.interior_term << ',' << r.decomposition_violations << '\n';
  return os.str();
}

ZeroSetReport zero_set_ocap_check(const TilePainter& g, const GenericCertificate& F_cert, double eps, double delta,
                                  const std::vector<double>& R_grid, const std::vector<RotationPoint>& sample) {
  if (F_cert.tag != GenericTag::ZeroCoordinate || !F_cert.passed)
    throw Error("zero_set_ocap_check: zero-coordinate certificate missing");
  if (R_grid.empty() || sample.empty()) throw Error("zero_set_ocap_check: empty grid or sample");
  const int k = g.system().k();
  const int N = g.spec().N;
  const int D = g.D();
  const double L = g.spec().L;
  const double E = sqrt_k(k) * (N + 1);
  const double Rmax = *std::max_element(R_grid.begin(), R_grid.end());
  const Box region = cube_box(k, ceil_int(Rmax));
  const std::vector<LatticePoint> sites = box_points(region);
  int Nk = 1;
  for (int i = 0; i < k; ++i) Nk *= N;

  struct PerPoint {
    std::vector<std::size_t> zeros, edge;
    std::size_t blocks = 0, block_violations = 0, mismatches = 0;
  };
  const auto per = parallel_map<PerPoint>(sample.size(), [&](std::size_t si) {
    const RotationPoint& x = sample[si];
    const LiftedTiling t = g.tiling(x, region);
    std::vector<char> zero(sites.size()), edge(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto v = g.g_at(t, x, sites[i]);
      zero[i] = std::all_of(v.begin(), v.end(), [](double c) { return c == 0; });
      const LatticePoint n = t.owner(sites[i], -t.H());
      edge[i] = t.boundary_distance(n, to_real(sites[i])) < E;
    }
    PerPoint pp;
    for (double R : R_grid) {
      std::size_t z = 0, ez = 0;
      for (std::size_t i = 0; i < sites.size(); ++i)
        if (sites[i].norm() <= R && zero[i]) {
          ++z;
          if (edge[i]) ++ez;
        }
      pp.zeros.push_back(z);
      pp.edge.push_back(ez);
    }
    for (const auto& [n, a] : aligned_blocks(t, region, N)) {
      ++pp.blocks;
      std::size_t z = 0;
      for (const auto& o : cube_window(N, k)) z += zero[static_cast<std::size_t>(region.index(a + o))];
      if (!(static_cast<double>(z) < eps * Nk)) ++pp.block_violations;
      std::vector<double> lhs;
      for (const auto& o : cube_window(N, k)) {
        const auto i = static_cast<std::size_t>(region.index(a + o));
        (void)i;
        const auto v = g.g_at(t, x, a + o);
        lhs.insert(lhs.end(), v.begin(), v.end());
      }
      if (lhs != g.block_map(g.system().shift(x, a))) ++pp.mismatches;
    }
    (void)D;
    return pp;
  });

  ZeroSetReport rep;
  rep.eps = eps;
  rep.delta = delta;
  rep.certificate = F_cert;
  for (std::size_t r = 0; r < R_grid.size(); ++r) {
    ZeroSetRow row;
    row.R = R_grid[r];
    row.sites = ball_points(row.R, k).size();
    row.interior_term = eps * ball_volume(k, row.R + 2 * L + 2 * sqrt_k(k));
    for (const auto& pp : per) {
      row.max_zeros = std::max(row.max_zeros, pp.zeros[r]);
      row.max_edge_zeros = std::max(row.max_edge_zeros, pp.edge[r]);
      if (!(static_cast<double>(pp.zeros[r]) <= static_cast<double>(pp.edge[r]) + row.interior_term))
        ++row.decomposition_violations;
    }
    row.normalized = static_cast<double>(row.max_zeros) / static_cast<double>(row.sites);
    rep.rows.push_back(row);
  }
  for (const auto& pp : per) {
    rep.blocks += pp.blocks;
    rep.block_violations += pp.block_violations;
    rep.claim_mismatches += pp.mismatches;
  }
  std::size_t largest = 0;
  for (std::size_t r = 0; r < R_grid.size(); ++r)
    if (R_grid[r] > R_grid[largest]) largest = r;
  rep.estimate = rep.rows[largest].normalized;
  rep.below_two_eps = rep.estimate < 2 * eps && 2 * eps < delta;
  rep.passed = rep.below_two_eps && rep.block_violations == 0 && rep.claim_mismatches == 0 &&
               std::all_of(rep.rows.begin(), rep.rows.end(),
                           [](const ZeroSetRow& r) { return r.decomposition_violations == 0; });
  return rep;
}

// ---------------------------------------------------------------- metric mean dimension payload

std::string MmdimReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "R,sites,max_residual,residual_bound,min_blocks,qc_bound,chain_rhs,measured_log_cover,images\n";
  for (const auto& r : rows)
    os << r.R << ',' << r.sites << ',' << r.max_residual << ',' << r.residual_bound << ',' << r.min_blocks << ','
       << r.qc_bound << ',' << r.chain_rhs << ',' << r.measured_log_cover << ',' << r.images << '\n';
  return os.str();
}

MmdimReport mmdim_payload_check(const TilePainter& g, const LinearMap& F_linear, const MmdimSpec& spec,
                                const std::vector<double>& R_grid, const std::vector<RotationPoint>& sample) {
  if (R_grid.empty() || sample.empty()) throw Error("mmdim_payload_check: empty grid or sample");
  const int k = g.system().k();
  const int N = g.spec().N;
  const int D = g.D();
  const double eps = spec.eps;
  const double leps = std::fabs(std::log(eps));
  double Nk = 1;
  for (int i = 0; i < k; ++i) Nk *= N;

  MmdimReport rep;
  rep.spec = spec;
  rep.tau_gate = std::log(2.0) < spec.tau * leps;
  rep.log_gate = leps > 1;
  // Cubes of side < eps / sqrt(D) have diameter < eps.
  const double per_axis = D == 1 ? std::floor(1 / eps) + 1 : std::floor(sqrt_k(D) / eps) + 1;
  rep.log_A_K = D * std::log(per_axis);
  rep.cover = polytope_cover_count(F_linear, eps);
  rep.log_A_F = std::log(static_cast<double>(rep.cover.lattice_count));
  rep.spanning_target = Nk * (spec.mdim_input + spec.tau) * leps;
  rep.spanning_ok = rep.log_A_F < rep.spanning_target;
  if (!rep.tau_gate || !rep.log_gate) return rep;

  const double Rmax = *std::max_element(R_grid.begin(), R_grid.end());
  const Box region = cube_box(k, ceil_int(Rmax));
  const std::vector<LatticePoint> sites = box_points(region);

  struct PerPoint {
    std::vector<std::size_t> residual, blocks;
    std::vector<double> image;
    std::size_t mismatches = 0;
  };
  const auto per = parallel_map<PerPoint>(sample.size(), [&](std::size_t si) {
    const RotationPoint& x = sample[si];
    const LiftedTiling t = g.tiling(x, region);
    PerPoint pp;
    for (const auto& m : sites) {
      const auto v = g.g_at(t, x, m);
      pp.image.insert(pp.image.end(), v.begin(), v.end());
    }
    const auto blocks = aligned_blocks(t, region, N);
    for (const auto& [n, a] : blocks) {
      std::vector<double> lhs;
      for (const auto& o : cube_window(N, k)) {
        const auto i = static_cast<std::size_t>(region.index(a + o)) * static_cast<std::size_t>(D);
        lhs.insert(lhs.end(), pp.image.begin() + static_cast<std::ptrdiff_t>(i),
                   pp.image.begin() + static_cast<std::ptrdiff_t>(i) + D);
      }
      if (lhs != g.block_map(g.system().shift(x, a))) ++pp.mismatches;
    }
    const double H = t.H();
    for (double R : R_grid) {
      // Blocks of tiles whose lattice cell lies in B_R.
      std::vector<char> covered(sites.size(), 0);
      std::size_t nb = 0;
      for (const auto& [n, a] : blocks) {
        bool inside = true;
        for (const auto& o : cube_window(N, k))
          if ((a + o).norm() > R) inside = false;
        if (!inside) continue;
        if (n.norm() + g.spec().L + sqrt_k(k) > R) {
          // Only tiles near the rim need the exact cell.
          const LatticeSet cell = t.lattice_cell(n, -H);
          for (const auto& p : cell)
            if (p.norm() > R) inside = false;
        }
        if (!inside) continue;
        ++nb;
        for (const auto& o : cube_window(N, k)) covered[static_cast<std::size_t>(region.index(a + o))] = 1;
      }
      std::size_t res = 0;
      for (std::size_t i = 0; i < sites.size(); ++i)
        if (sites[i].norm() <= R && !covered[i]) ++res;
      pp.residual.push_back(res);
      pp.blocks.push_back(nb);
    }
    return pp;
  });

  for (const auto& pp : per) rep.claim_mismatches += pp.mismatches;
  for (std::size_t r = 0; r < R_grid.size(); ++r) {
    MmdimRow row;
    row.R = R_grid[r];
    const LatticeSet ball = ball_points(row.R, k);
    row.sites = ball.size();
    const double vol = ball_volume(k, row.R);
    row.residual_bound = spec.tau * vol / rep.log_A_K;
    row.min_blocks = std::numeric_limits<std::size_t>::max();
    for (const auto& pp : per) {
      row.max_residual = std::max(row.max_residual, pp.residual[r]);
      row.min_blocks = std::min(row.min_blocks, pp.blocks[r]);
      const double qc = static_cast<double>(pp.blocks[r]) * rep.log_A_F + static_cast<double>(pp.residual[r]) * rep.log_A_K;
      row.qc_bound = std::max(row.qc_bound, qc);
    }
    row.chain_rhs = static_cast<double>(row.sites) * (spec.mdim_input + 2 * spec.tau) * leps + spec.tau * vol;
    // Sup over sites of the Euclidean norm on K.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sites.size(); ++i)
      if (sites[i].norm() <= row.R) idx.push_back(i);
    auto images = std::make_shared<std::vector<std::vector<double>>>();
    for (const auto& pp : per) {
      std::vector<double> v;
      for (std::size_t i : idx)
        for (int d = 0; d < D; ++d) v.push_back(pp.image[i * static_cast<std::size_t>(D) + static_cast<std::size_t>(d)]);
      images->push_back(std::move(v));
    }
    row.images = images->size();
    const FiniteMetric m{images->size(), [images, D](std::size_t a, std::size_t b) {
                           const auto& u = (*images)[a];
                           const auto& w = (*images)[b];
                           double best = 0;
                           for (std::size_t s = 0; s < u.size(); s += static_cast<std::size_t>(D)) {
                             double e = 0;
                             for (int d = 0; d < D; ++d) {
                               const double diff = u[s + static_cast<std::size_t>(d)] - w[s + static_cast<std::size_t>(d)];
                               e += diff * diff;
                             }
                             best = std::max(best, std::sqrt(e));
                           }
                           return best;
                         }};
    row.measured_log_cover = std::log(static_cast<double>(std::max<std::size_t>(1, covering_number(m, eps).best())));
    row.residual_ok = static_cast<double>(row.max_residual) < row.residual_bound;
    row.chain_ok = row.qc_bound < row.chain_rhs;
    row.measured_ok = row.measured_log_cover < row.chain_rhs;
    rep.rows.push_back(row);
  }
  rep.passed = rep.tau_gate && rep.log_gate && rep.spanning_ok && rep.claim_mismatches == 0 &&
               std::all_of(rep.rows.begin(), rep.rows.end(),
                           [](const MmdimRow& r) { return r.residual_ok && r.chain_ok && r.measured_ok; });
  return rep;
}

// ---------------------------------------------------------------- two-channel encoder

std::vector<EncoderGate> encoder_gates(const EncoderSpec& sp, int k) {
  std::vector<EncoderGate> g;
  auto add = [&](std::string name, bool ok, std::string detail) { g.push_back({std::move(name), ok, std::move(detail)}); };
  const double H = default_height(sp.H, sp.L, k);
  const double c = 1.0 / std::pow(2.0, k + 1);
  add("N even", sp.N >= 2 && sp.N % 2 == 0, "N = " + std::to_string(sp.N));
  add("H gate", H >= height_gate(sp.L, k), "H >= (L + sqrt(k))^2");
  add("L >= M", sp.L >= sp.M, "L = " + std::to_string(sp.L) + ", M = " + std::to_string(sp.M));
  add("s > 1", sp.s > 1, "s = " + std::to_string(sp.s));
  add("0 < eps < delta", 0 < sp.eps && sp.eps < sp.delta, "");
  add("eta range", sp.eta > 0 && sp.eta < c, "0 < eta < 1/2^(k+1)");
  add("choice of s", c - sp.eta < 1.0 / (2.0 * (1.0 + std::pow(sp.s, k))), "1/2^(k+1) - eta < 1/(2(1 + s^k))");
  add("choice of M", sp.M / (2.0 * sp.s) + 3.0 * sqrt_k(k) * sp.N <= sp.M / 2.0,
      "M/(2s) + 3 sqrt(k) N <= M/2 (grid-marker sufficient condition)");
  add("noise below delta", sp.noise >= 0 && sp.noise < sp.delta, "");
  // The widim hypothesis is evaluated once the nerve is known (see EmbeddingEncoder::gates()).
  return g;
}

double PseudoTiling::at(const LatticePoint& n, const LatticePoint& t) const {
  if (!region.contains(t)) throw WindowError("pseudo-tiling: site outside the decoded region");
  const auto it = W.find(n);
  if (it == W.end()) return 0;
  return it->second[static_cast<std::size_t>(region.index(t))];
}

std::vector<LatticePoint> PseudoTiling::active(const LatticePoint& t) const {
  std::vector<LatticePoint> out;
  const auto i = static_cast<std::size_t>(region.index(t));
  for (const auto& [n, v] : W)
    if (v[i] > 0) out.push_back(n);
  return out;
}

const double* ImageWindow::at(const LatticePoint& n) const {
  if (!domain.contains(n)) throw WindowError("image window: site " + to_string(n) + " outside the window");
  return values.data() + static_cast<std::size_t>(domain.index(n)) * static_cast<std::size_t>(D);
}

std::vector<double> ImageWindow::block(const LatticePoint& a, int N) const {
  std::vector<double> out;
  for (const auto& o : cube_window(N, a.dim())) {
    const double* v = at(a + o);
    out.insert(out.end(), v, v + D);
  }
  return out;
}

ImageWindow ImageWindow::shifted(const LatticePoint& m) const {
  ImageWindow w{Box{domain.lo - m, domain.hi - m}, D, values};
  return w;
}

struct EmbeddingEncoder::CopyImages {
  struct Simplex {
    std::vector<std::vector<double>> pts;
    std::vector<double> center;
    double radius = 0;
  };
  std::vector<std::vector<Simplex>> facets;  // per copy
  std::vector<std::vector<double>> center;
  std::vector<double> radius;
};

namespace {

using Simplex = std::vector<std::vector<double>>;

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void bound_ball(const Simplex& pts, std::vector<double>& c, double& r) {
  c.assign(pts.front().size(), 0.0);
  for (const auto& p : pts)
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += p[i] / static_cast<double>(pts.size());
  r = 0;
  for (const auto& p : pts) r = std::max(r, euclid(p, c));
  r *= 1 + 1e-12;
}

}  // namespace

EmbeddingEncoder::EmbeddingEncoder(const GridRotation& X, PointMap f1, EncoderSpec spec)
    : X_(X), f1_(std::move(f1)), spec_(spec), k_(X.k()) {
  gates_ = encoder_gates(spec_, k_);
  for (const auto& g : gates_)
    if (!g.passed) throw Error(g.name + " failed: " + g.detail);
  H_ = default_height(spec_.H, spec_.L, k_);
  rho_ = spec_.L + sqrt_k(k_) * spec_.N;
  rho2_ = spec_.L + 3 * sqrt_k(k_) * spec_.N;
  Nprime_ = ceil_int(spec_.s * spec_.N);
  block_ = cube_window(spec_.N, k_).points();
  build_g1_channel();
  compute_tau();
}

void EmbeddingEncoder::build_g1_channel() {
  const int N = spec_.N;
  const int D = spec_.D;
  pi_ = window_embedding(X_, cube_window(N, k_), spec_.eps, spec_.net_per_axis);
  const int dimP = pi_.nerve.complex.dim();
  const double widim = spec_.widim_input >= 0 ? spec_.widim_input : dimP;
  const double c = 1.0 / std::pow(2.0, k_ + 1);
  gates_.push_back({"widim hypothesis", widim < D * (c - spec_.eta) * std::pow(N - 1, k_),
                    "widim_eps(X, d_[N]) < D (1/2^(k+1) - eta)(N-1)^k with widim = " + std::to_string(widim)});
  if (!gates_.back().passed) throw Error("widim hypothesis failed: " + gates_.back().detail);

  std::vector<std::vector<double>> values;
  for (const auto& y : pi_.net) values.push_back(orbit_values(X_, f1_, y, block_));
  const auto approx = approximate_by_linear(pi_.nerve, pi_.metric(X_), values, spec_.delta - spec_.noise);
  f1_error_ = approx.max_error;

  for (const auto& j : ball_points(rho_, k_))
    if (j.norm() < rho_) copies_.push_back(j);
  for (std::size_t c2 = 0; c2 < copies_.size(); ++c2) copy_of_[copies_[c2]] = c2;
  const SimplicialComplex& P = pi_.nerve.complex;
  const SimplicialComplex Pp = P.copies(static_cast<int>(copies_.size()));

  GenericOptions opt;
  opt.tag = GenericTag::Window;
  opt.window = WindowShape{k_, N, N / 2, D};
  opt.cap = spec_.cap;
  opt.eta = spec_.noise;
  for (int v = 0; v < Pp.vertex_count(); ++v) opt.base.push_back(approx.g.image(v % P.vertex_count()));
  auto gen = sample_generic_linear(Pp, opt, derive_seed(spec_.seed, 0xf1));
  F_ = std::move(gen.map);
  F_cert_ = gen.cert;

  auto imgs = std::make_shared<CopyImages>();
  const int nv = P.vertex_count();
  for (std::size_t c2 = 0; c2 < copies_.size(); ++c2) {
    std::vector<CopyImages::Simplex> fs;
    Simplex all;
    for (const auto& face : P.facets()) {
      CopyImages::Simplex s;
      for (int v : face) s.pts.push_back(F_.image(static_cast<int>(c2) * nv + v));
      bound_ball(s.pts, s.center, s.radius);
      all.insert(all.end(), s.pts.begin(), s.pts.end());
      fs.push_back(std::move(s));
    }
    std::vector<double> cc;
    double rr = 0;
    bound_ball(all, cc, rr);
    imgs->facets.push_back(std::move(fs));
    imgs->center.push_back(std::move(cc));
    imgs->radius.push_back(rr);
  }
  images_ = imgs;
}

void EmbeddingEncoder::compute_tau() {
  const int N = spec_.N;
  const WindowShape ws{k_, N, N / 2, spec_.D};
  const SimplicialComplex& P = pi_.nerve.complex;
  const int nv = P.vertex_count();
  struct Item {
    std::vector<Simplex> facets;
    std::vector<std::vector<double>> centers;
    std::vector<double> radii;
    Simplex vertices;
  };
  std::vector<Item> items;
  for (std::size_t c2 = 0; c2 < copies_.size(); ++c2)
    for (const auto& b : ws.offsets()) {
      const auto coords = ws.restriction(b);
      auto restrict = [&](int v) {
        std::vector<double> r;
        const auto& img = F_.image(static_cast<int>(c2) * nv + v);
        for (int cidx : coords) r.push_back(img[static_cast<std::size_t>(cidx)]);
        return r;
      };
      Item it;
      for (int v = 0; v < nv; ++v) it.vertices.push_back(restrict(v));
      for (const auto& face : P.facets()) {
        Simplex s;
        for (int v : face) s.push_back(it.vertices[static_cast<std::size_t>(v)]);
        std::vector<double> c;
        double r = 0;
        bound_ball(s, c, r);
        it.facets.push_back(std::move(s));
        it.centers.push_back(std::move(c));
        it.radii.push_back(r);
      }
      items.push_back(std::move(it));
    }
  // Vertex pairs give an upper bound; facet pairs are solved only when their balls could beat it.
  const std::size_t n = items.size();
  const auto vertex_best = parallel_map<double>(n, [&](std::size_t a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = a + 1; b < n; ++b)
      for (const auto& u : items[a].vertices)
        for (const auto& w : items[b].vertices) best = std::min(best, euclid(u, w));
    return best;
  });
  const double upper = *std::min_element(vertex_best.begin(), vertex_best.end());
  const auto facet_best = parallel_map<double>(n, [&](std::size_t a) {
    double best = upper;
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t fa = 0; fa < items[a].facets.size(); ++fa)
        for (std::size_t fb = 0; fb < items[b].facets.size(); ++fb) {
          const double lb = euclid(items[a].centers[fa], items[b].centers[fb]) - items[a].radii[fa] - items[b].radii[fb];
          if (lb >= best) continue;
          best = std::min(best, simplex_pair_distance(items[a].facets[fa], items[b].facets[fb]));
        }
    return best;
  });
  tau_min_ = *std::min_element(facet_best.begin(), facet_best.end());
  if (!(tau_min_ > 1e-9)) throw Error("tau: restricted copy images are not separated (min distance " +
                                      std::to_string(tau_min_) + ")");
  tau_ = spec_.tau_fraction * tau_min_;
  if (!(tau_ > 0 && tau_ < tau_min_)) throw Error("tau: fraction must lie in (0, 1)");
}

void EmbeddingEncoder::attach_g2(PointMap f2) {
  if (has_g2()) throw Error("construct_g2: second channel already attached");
  f2_ = std::move(f2);
  const int N = spec_.N;
  const int D = spec_.D;
  for (const auto& j : ball_points(rho2_, k_))
    if (j.norm() < rho2_) copies2_.push_back(j);
  std::vector<Face> generators;
  std::vector<std::vector<double>> base;
  int offset = 0;
  for (std::size_t c2 = 0; c2 < copies2_.size(); ++c2) {
    copy2_of_[copies2_[c2]] = c2;
    pis_.push_back(window_embedding(X_, omega_n(copies2_[c2]), spec_.eps, spec_.net_per_axis));
    const auto& pj = pis_.back();
    if (!(2 * pj.nerve.complex.dim() < D * static_cast<int>(block_.size())))
      throw Error("construct_g2: dim R_n is not below D N^k / 2");
    std::vector<std::vector<double>> values;
    for (const auto& y : pj.net) values.push_back(orbit_values(X_, f2_, y, block_));
    const auto approx = approximate_by_linear(pj.nerve, pj.metric(X_), values, spec_.delta - spec_.noise);
    f2_error_ = std::max(f2_error_, approx.max_error);
    vertex_offset_.push_back(offset);
    for (const auto& face : pj.nerve.complex.facets()) {
      Face shifted;
      for (int v : face) shifted.push_back(v + offset);
      generators.push_back(std::move(shifted));
    }
    for (int v = 0; v < pj.nerve.complex.vertex_count(); ++v) base.push_back(approx.g.image(v));
    offset += pj.nerve.complex.vertex_count();
  }
  const SimplicialComplex R(offset, std::move(generators));
  GenericOptions opt;
  opt.tag = GenericTag::Embedding;
  opt.target_dim = static_cast<int>(block_.size()) * D;
  opt.cap = spec_.cap;
  opt.base = std::move(base);
  opt.eta = spec_.noise;
  auto gen = sample_generic_linear(R, opt, derive_seed(spec_.seed, 0xf2));
  G_ = std::move(gen.map);
  G_cert_ = gen.cert;
  (void)N;
}

std::optional<std::size_t> EmbeddingEncoder::copy_index(const LatticePoint& j) const {
  const auto it = copy_of_.find(j);
  if (it == copy_of_.end()) return std::nullopt;
  return it->second;
}

LatticeSet EmbeddingEncoder::omega_n(const LatticePoint& j) const {
  LatticePoint c(k_);
  for (int i = 0; i < k_; ++i) c[i] = ceil_int((1 - spec_.s) * static_cast<double>(j[i]));
  return cube_window(spec_.N, k_).united(cube_window_at(c, Nprime_));
}

const WindowEmbedding& EmbeddingEncoder::pi_n(const LatticePoint& j) const {
  const auto it = copy2_of_.find(j);
  if (it == copy2_of_.end())
    throw Error("g2: |n - a_n| bound exceeded at " + to_string(j) + " (needs |n - a_n| < L + 3 sqrt(k) N)");
  return pis_[it->second];
}

std::vector<double> EmbeddingEncoder::F_at(const BaryPoint& p, const LatticePoint& j) const {
  const auto c = copy_index(j);
  if (!c) throw Error("g1: copy index " + to_string(j) + " outside |n| < L + sqrt(k) N");
  BaryPoint q = p;
  const int nv = pi_.nerve.complex.vertex_count();
  for (int& v : q.vertices) v += static_cast<int>(*c) * nv;
  return F_(q);
}

std::vector<double> EmbeddingEncoder::G_at(const LatticePoint& j, const RotationPoint& y) const {
  if (!has_g2()) throw Error("g2 channel not constructed");
  const WindowEmbedding& pj = pi_n(j);
  BaryPoint q = pj.map(X_, y);
  const int off = vertex_offset_[copy2_of_.at(j)];
  for (int& v : q.vertices) v += off;
  return G_(q);
}

LiftedTiling EmbeddingEncoder::tiling(const RotationPoint& x, const Box& region) const {
  return lifted_tiling(X_, x, region, spec_.M, spec_.L, H_, spec_.s);
}

std::vector<double> EmbeddingEncoder::g1_at(const LiftedTiling& t, const RotationPoint& x,
                                            const LatticePoint& m) const {
  const RotationPoint xm = X_.shift(x, m);
  const LatticePoint n = t.owner(m, -H_);
  const double a_t = alpha_cutoff(t.boundary_distance(n, to_real(m)));
  if (a_t == 0) return f1_(xm);
  const LatticePoint nm = n - m;
  const LatticePoint a = block_anchor(nm, spec_.N);
  const auto Fv = F_at(pi_.map(X_, X_.shift(xm, a)), nm - a);
  const std::size_t i = index_in(block_, -1 * a);
  const auto fx = f1_(xm);
  std::vector<double> out(static_cast<std::size_t>(spec_.D));
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = (1 - a_t) * fx[d] + a_t * Fv[i * out.size() + d];
  return out;
}

std::vector<double> EmbeddingEncoder::g1(const RotationPoint& x) const {
  const LatticePoint zero(k_);
  return g1_at(tiling(x, point_box(zero)), x, zero);
}

ImageWindow EmbeddingEncoder::I_g1(const RotationPoint& x, const Box& box) const {
  const LiftedTiling t = tiling(x, box);
  ImageWindow w{box, spec_.D, {}};
  w.values.reserve(static_cast<std::size_t>(box.volume() * spec_.D));
  box.for_each([&](const LatticePoint& m) {
    const auto v = g1_at(t, x, m);
    w.values.insert(w.values.end(), v.begin(), v.end());
  });
  return w;
}

double EmbeddingEncoder::distance_to_copy(const std::vector<double>& block, const LatticePoint& j) const {
  const auto c = copy_index(j);
  if (!c) throw Error("decode: copy index outside |n| < L + sqrt(k) N");
  const auto& im = *images_;
  // Values at or above tau only matter through beta = 0, so tau caps the search.
  double best = tau_;
  if (euclid(block, im.center[*c]) - im.radius[*c] >= best) return best;
  for (const auto& s : im.facets[*c]) {
    if (euclid(block, s.center) - s.radius >= best) continue;
    best = std::min(best, simplex_distance(s.pts, block));
  }
  // Blocks painted from the copy land on it up to rounding in the min-norm solve.
  return best < kMembershipTolerance ? 0.0 : best;
}

Box EmbeddingEncoder::decode_domain(const Box& region) const {
  Box b = region;
  for (int i = 0; i < k_; ++i) {
    b.lo[i] -= spec_.N - 1;
    b.hi[i] += spec_.N - 1;
  }
  return b;
}

PseudoTiling EmbeddingEncoder::decode(const ImageWindow& omega, const Box& region) const {
  const int N = spec_.N;
  const Box need = decode_domain(region);
  for (int i = 0; i < k_; ++i)
    if (need.lo[i] < omega.domain.lo[i] || need.hi[i] > omega.domain.hi[i])
      throw WindowError("decode: window does not cover the region inflated by N - 1");
  PseudoTiling pt;
  pt.region = region;
  Box anchors = region;
  for (int i = 0; i < k_; ++i) anchors.lo[i] -= N - 1;
  const auto vol = static_cast<std::size_t>(region.volume());
  std::map<LatticePoint, std::vector<double>> sums;
  anchors.for_each([&](const LatticePoint& a) {
    const auto blk = omega.block(a, N);
    for (const auto& j : copies_) {
      const double b = beta_cutoff(distance_to_copy(blk, j), tau_);
      if (b <= 0) continue;
      auto& W = sums[a + j];
      if (W.empty()) W.assign(vol, 0.0);
      for (const auto& o : block_) {
        const LatticePoint t = a + o;
        if (region.contains(t)) W[static_cast<std::size_t>(region.index(t))] += b;
      }
    }
  });
  for (auto& [n, W] : sums) {
    for (double& v : W) v = std::min(1.0, v);
    if (std::any_of(W.begin(), W.end(), [](double v) { return v > 0; })) pt.W.emplace(n, std::move(W));
  }
  return pt;
}

std::vector<double> EmbeddingEncoder::g2_from(const RotationPoint& x, const PseudoTiling& W,
                                              const LatticePoint& m) const {
  if (!has_g2()) throw Error("g2 channel not constructed");
  const RotationPoint xm = X_.shift(x, m);
  const auto fx = f2_(xm);
  const auto Dz = static_cast<std::size_t>(spec_.D);
  std::vector<double> num(Dz, 0.0);
  double total = 0;
  for (const auto& nn : W.active(m)) {
    const double w = W.at(nn, m);
    const LatticePoint n = nn - m;  // center in the frame of T^m x
    const LatticePoint a = block_anchor(n, spec_.N);
    const auto Gv = G_at(n - a, X_.shift(xm, a));
    const std::size_t i = index_in(block_, -1 * a);
    for (std::size_t d = 0; d < Dz; ++d) num[d] += w * (Gv[i * Dz + d] - fx[d]);
    total += w;
  }
  std::vector<double> out(Dz);
  const double den = std::max(1.0, total);
  for (std::size_t d = 0; d < Dz; ++d) out[d] = std::max(0.0, std::min(1.0, fx[d] + num[d] / den));
  return out;
}

std::vector<double> EmbeddingEncoder::g2(const RotationPoint& x) const {
  const LatticePoint zero(k_);
  const Box region = point_box(zero);
  const ImageWindow omega = I_g1(x, decode_domain(region));
  return g2_from(x, decode(omega, region), zero);
}

std::vector<double> EmbeddingEncoder::I_g2(const RotationPoint& x, const Box& box) const {
  const ImageWindow omega = I_g1(x, decode_domain(box));
  const PseudoTiling W = decode(omega, box);
  std::vector<double> out;
  box.for_each([&](const LatticePoint& m) {
    const auto v = g2_from(x, W, m);
    out.insert(out.end(), v.begin(), v.end());
  });
  return out;
}

std::shared_ptr<EmbeddingEncoder> encode_g1(const GridRotation& X, PointMap f1, const EncoderSpec& spec) {
  return std::make_shared<EmbeddingEncoder>(X, std::move(f1), spec);
}

std::shared_ptr<const EmbeddingEncoder> construct_g2(std::shared_ptr<EmbeddingEncoder> enc, PointMap f2) {
  if (!enc) throw Error("construct_g2: encoder missing");
  enc->attach_g2(std::move(f2));
  return enc;
}

PseudoTiling decode_pseudo_tiling(const EmbeddingEncoder& enc, const ImageWindow& omega, const Box& region) {
  return enc.decode(omega, region);
}

namespace {

// a/s + (1 - 1/s)n written as n + (a - n)/s, which is exact whenever s divides a - n.
RealPoint slice_center(const LatticePoint& a, const LatticePoint& n, double s) {
  RealPoint c(n.dim());
  for (int i = 0; i < n.dim(); ++i) c[i] = static_cast<double>(n[i]) + static_cast<double>(a[i] - n[i]) / s;
  return c;
}

}  // namespace

SeparationCheck check_s_condition(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region) {
  const int k = enc.system().k();
  const double s = enc.spec().s;
  const double need = 3 * sqrt_k(k) * enc.spec().N;
  const Box probe_box = region;
  const LiftedTiling t = enc.tiling(x, probe_box.inflated(enc.spec().L + 2));
  SeparationCheck out;
  out.min_margin = std::numeric_limits<double>::infinity();
  probe_box.for_each([&](const LatticePoint& a) {
    const LatticePoint n = t.owner(a, -s * enc.H());
    const RealPoint c = slice_center(a, n, s);
    ++out.probes;
    double margin = -need;
    if (t.owner(c, -enc.H()) == n) margin = t.boundary_distance(n, c) - need;
    out.min_margin = std::min(out.min_margin, margin);
    if (margin < -1e-9) ++out.violations;
  });
  return out;
}

PseudoTilingCheck check_pseudo_tiling(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region) {
  const int k = enc.system().k();
  const int N = enc.spec().N;
  const double sk = sqrt_k(k);
  const ImageWindow omega = enc.I_g1(x, enc.decode_domain(region));
  const PseudoTiling W = enc.decode(omega, region);
  const LiftedTiling t = enc.tiling(x, region);
  PseudoTilingCheck out;
  auto indicator_at = [&](const LatticePoint& n, const LatticePoint& m) {
    const auto act = W.active(m);
    return W.at(n, m) == 1.0 && act.size() == 1 && act.front() == n;
  };
  region.for_each([&](const LatticePoint& m) {
    const LatticePoint n = t.owner(m, -enc.H());
    if (t.boundary_distance(n, to_real(m)) < 2 * sk * N) return;
    ++out.sites1;
    if (!indicator_at(n, m)) ++out.violations1;
  });
  const LatticePoint zero(k);
  const LiftedTiling t0 = enc.tiling(x, point_box(zero));
  const LatticePoint n = t0.owner(to_real(zero), -enc.spec().s * enc.H());
  const RealPoint c = slice_center(zero, n, enc.spec().s);
  ++out.centers2;
  for (const auto& m : ball_points_around(c, sk * N)) {
    if (!region.contains(m)) throw WindowError("pseudo-tiling check: region misses B_{sqrt(k)N}((1-1/s)n)");
    if (!indicator_at(n, m)) {
      ++out.violations2;
      break;
    }
  }
  return out;
}

BlockIdentityCheck check_g1_claim(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region) {
  const GridRotation& X = enc.system();
  const LiftedTiling t = enc.tiling(x, region);
  BlockIdentityCheck out;
  for (const auto& [n, a] : aligned_blocks(t, region, enc.spec().N)) {
    std::vector<double> lhs;
    for (const auto& o : cube_window(enc.spec().N, X.k())) {
      const auto v = enc.g1(X.shift(x, a + o));
      lhs.insert(lhs.end(), v.begin(), v.end());
    }
    Accum acc;
    acc.add(lhs, enc.F_at(enc.pi().map(X, X.shift(x, a)), n - a));
    ++out.blocks;
    out.sites += static_cast<std::size_t>(std::pow(enc.spec().N, X.k()));
    if (!acc.exact) ++out.mismatches;
    out.max_deviation = std::max(out.max_deviation, acc.max_dev);
  }
  return out;
}

BlockIdentityCheck check_g2_claim(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region) {
  const GridRotation& X = enc.system();
  const int k = X.k();
  const int N = enc.spec().N;
  const Box dom = enc.decode_domain(region);
  const ImageWindow omega = enc.I_g1(x, dom);
  const PseudoTiling W = enc.decode(omega, region);
  const auto blk = cube_window(N, k).points();
  BlockIdentityCheck out;
  Box anchors = region;
  for (int i = 0; i < k; ++i) anchors.hi[i] -= N - 1;
  if (anchors.empty()) return out;
  anchors.for_each([&](const LatticePoint& a) {
    const auto act = W.active(a);
    if (act.size() != 1) return;
    const LatticePoint n = act.front();
    for (int i = 0; i < k; ++i)
      if (((a[i] - n[i]) % N + N) % N != 0) return;
    for (const auto& o : blk) {
      const auto act2 = W.active(a + o);
      if (W.at(n, a + o) != 1.0 || act2.size() != 1) return;
    }
    std::vector<double> lhs;
    for (const auto& o : blk) {
      const auto v = enc.g2_from(x, W, a + o);
      lhs.insert(lhs.end(), v.begin(), v.end());
    }
    const auto rhs = enc.G_at(n - a, X.shift(x, a));
    Accum acc;
    acc.add(lhs, rhs);
    ++out.blocks;
    out.sites += blk.size();
    if (acc.max_dev > kAgreeTolerance) ++out.mismatches;
    out.max_deviation = std::max(out.max_deviation, acc.max_dev);
  });
  return out;
}

// ---------------------------------------------------------------- delta-embedding verification

std::string EmbeddingReport::to_jsonl() const {
  std::string out;
  for (const auto& p : pairs) {
    json j;
    j["pair_id"] = p.pair_id;
    j["channel"] = p.channel;
    j["decode_trace"] = json::parse(p.decode_trace.empty() ? "{}" : p.decode_trace);
    j["image_gap"] = p.image_gap;
    if (p.verdict == "agree" || p.verdict == "FAILURE") j["distance"] = p.distance;
    j["verdict"] = p.verdict;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<std::pair<RotationPoint, RotationPoint>> sample_pairs(const GridRotation& X, std::size_t count,
                                                                  std::uint64_t seed) {
  std::vector<std::pair<RotationPoint, RotationPoint>> out;
  // About 1e-13 in angle units.
  constexpr std::uint64_t kNear = 1844674;
  for (std::size_t i = 0; i < count; ++i) {
    const RotationPoint x = X.sample(derive_seed(seed, 2 * i));
    RotationPoint y = X.sample(derive_seed(seed, 2 * i + 1));
    switch (i % 4) {
      case 0: y = x; break;
      case 1:
        y = x;
        for (auto& a : y.angle) a += kNear;
        break;
      case 2: y.phase = x.phase; break;
      default: break;
    }
    out.emplace_back(std::move(x), std::move(y));
  }
  return out;
}

namespace {

std::string classify(double gap) {
  if (gap <= kAgreeTolerance) return "agree";
  if (gap < kDifferTolerance) return "indeterminate";
  return "differ";
}

bool share_vertex(const BaryPoint& p, const BaryPoint& q) {
  for (int v : p.vertices)
    if (std::binary_search(q.vertices.begin(), q.vertices.end(), v)) return true;
  return false;
}

void tally(EmbeddingReport& rep) {
  for (const auto& p : rep.pairs) {
    if (p.verdict == "agree") ++rep.agree;
    else if (p.verdict == "differ") ++rep.differ;
    else if (p.verdict == "indeterminate") ++rep.indeterminate;
    else ++rep.failures;
  }
}

}  // namespace

EmbeddingReport verify_delta_embedding(const SymbolicPainter& g,
                                       const std::vector<std::pair<RotationPoint, RotationPoint>>& pairs) {
  const GridRotation& X = g.system();
  const int k = X.k();
  const double eps = g.spec().eps;
  const auto window = box_points(cube_box(k, g.spec().L + 2));
  EmbeddingReport rep;
  rep.eps = eps;
  rep.delta = g.spec().delta;
  rep.pairs = parallel_map<PairVerdict>(pairs.size(), [&](std::size_t pid) {
    const auto& [x, y] = pairs[pid];
    PairVerdict v;
    v.pair_id = pid;
    json tr;
    if (g.factor(x) != g.factor(y)) {
      v.channel = "factor";
      v.verdict = "differ";
      tr["factor_x"] = point_json(g.factor(x));
      tr["factor_y"] = point_json(g.factor(y));
      v.decode_trace = tr.dump();
      return v;
    }
    v.channel = "image";
    std::vector<double> ix, iy;
    for (const auto& m : window) {
      const auto a = g.g(X.shift(x, m)), b = g.g(X.shift(y, m));
      v.image_gap = std::max(v.image_gap, sup_distance(a, b));
      ix.insert(ix.end(), a.begin(), a.end());
      iy.insert(iy.end(), b.begin(), b.end());
      if (v.image_gap >= kDifferTolerance) break;
    }
    v.verdict = classify(v.image_gap);
    tr["image_gap"] = v.image_gap;
    if (v.verdict != "agree") {
      v.decode_trace = tr.dump();
      return v;
    }
    // Same factor point, so x and y see the same tiling.
    const TileLocation loc = g.locate(x);
    const auto& pc = g.palette().pieces.at(loc.piece.value());
    const LatticeSet sites = pc.interior.translated(loc.a);
    const auto Fx = g.palette().apply(*loc.piece, X, X.shift(x, loc.a));
    const auto Fy = g.palette().apply(*loc.piece, X, X.shift(y, loc.a));
    const bool claim_x = g.image(x, sites.points()) == Fx;
    const bool claim_y = g.image(y, sites.points()) == Fy;
    const auto px = pc.p.map(X, X.shift(x, loc.a)), py = pc.p.map(X, X.shift(y, loc.a));
    const bool fiber = share_vertex(px, py);
    const bool in_window = pc.omega.contains(-1 * loc.a);
    const double dw = X.window_distance_literal(X.shift(x, loc.a), X.shift(y, loc.a), pc.omega);
    v.distance = X.distance(x, y);
    tr["tile_center"] = point_json(loc.center);
    tr["a"] = point_json(loc.a);
    tr["piece"] = *loc.piece;
    tr["claim_x"] = claim_x;
    tr["claim_y"] = claim_y;
    tr["F_gap"] = sup_distance(Fx, Fy);
    tr["shared_vertex"] = fiber;
    tr["minus_a_in_omega"] = in_window;
    tr["window_distance"] = dw;
    tr["fiber_bound"] = pc.p.nerve.fiber_bound;
    tr["distance"] = v.distance;
    const bool ok = claim_x && claim_y && fiber && in_window && dw < eps && v.distance <= dw && v.distance < eps;
    if (!ok) v.verdict = "FAILURE";
    v.decode_trace = tr.dump();
    return v;
  });
  tally(rep);
  return rep;
}

EmbeddingReport verify_delta_embedding(const EmbeddingEncoder& enc,
                                       const std::vector<std::pair<RotationPoint, RotationPoint>>& pairs) {
  const GridRotation& X = enc.system();
  const int k = X.k();
  const int N = enc.spec().N;
  const double s = enc.spec().s;
  const double eps = enc.spec().eps;
  const double sk = sqrt_k(k);
  // (1 - 1/s)n with |n| <= L + sqrt(k), a block at that point and a ball of radius sqrt(k) N around it.
  const Box region = cube_box(k, ceil_int((1 - 1 / s) * (enc.spec().L + sk + 1) + sk * N) + N);
  const Box quick = cube_box(k, N);
  EmbeddingReport rep;
  rep.eps = eps;
  rep.delta = enc.spec().delta;
  rep.pairs = parallel_map<PairVerdict>(pairs.size(), [&](std::size_t pid) {
    const auto& [x, y] = pairs[pid];
    PairVerdict v;
    v.pair_id = pid;
    json tr;
    const double quick_gap = sup_distance(enc.I_g1(x, quick).values, enc.I_g1(y, quick).values);
    if (quick_gap >= kDifferTolerance) {
      v.channel = "g1";
      v.verdict = "differ";
      v.image_gap = quick_gap;
      tr["g1_gap_quick"] = quick_gap;
      v.decode_trace = tr.dump();
      return v;
    }
    const Box dom = enc.decode_domain(region);
    const ImageWindow wx = enc.I_g1(x, dom), wy = enc.I_g1(y, dom);
    const double gap1 = sup_distance(wx.values, wy.values);
    const PseudoTiling Wx = enc.decode(wx, region), Wy = enc.decode(wy, region);
    std::vector<double> i2x, i2y;
    region.for_each([&](const LatticePoint& m) {
      const auto a = enc.g2_from(x, Wx, m), b = enc.g2_from(y, Wy, m);
      i2x.insert(i2x.end(), a.begin(), a.end());
      i2y.insert(i2y.end(), b.begin(), b.end());
    });
    const double gap2 = sup_distance(i2x, i2y);
    tr["g1_gap"] = gap1;
    tr["g2_gap"] = gap2;
    v.image_gap = std::max(gap1, gap2);
    v.channel = classify(gap1) != "agree" ? "g1" : "g2";
    v.verdict = classify(v.image_gap);
    if (v.verdict != "agree") {
      v.decode_trace = tr.dump();
      return v;
    }
    bool ok = true;
    const bool same_tiling = [&] {
      if (Wx.W.size() != Wy.W.size()) return false;
      for (const auto& [n, w] : Wx.W) {
        const auto it = Wy.W.find(n);
        if (it == Wy.W.end() || sup_distance(w, it->second) > kAgreeTolerance) return false;
      }
      return true;
    }();
    tr["pseudo_tilings_equal"] = same_tiling;
    ok = ok && same_tiling;
    // Distinguished center from x's tiling at depth -sH.
    const LatticePoint zero(k);
    const LatticePoint n = enc.tiling(x, point_box(zero)).owner(to_real(zero), -s * enc.H());
    const RealPoint c = slice_center(zero, n, s);
    bool indicator = true;
    for (const auto& m : ball_points_around(c, sk * N)) {
      const auto act = Wx.active(m);
      if (!(Wx.at(n, m) == 1.0 && act.size() == 1)) indicator = false;
    }
    LatticePoint a(k);
    bool anchor_ok = true;
    for (int i = 0; i < k; ++i) {
      a[i] = n[i] + static_cast<std::int64_t>(N) * static_cast<std::int64_t>(std::floor(static_cast<double>(-n[i]) / s / N));
      anchor_ok = anchor_ok && c[i] >= a[i] && c[i] < a[i] + N;
    }
    const LatticePoint j = n - a;
    tr["n"] = point_json(n);
    tr["a"] = point_json(a);
    tr["indicator_on_ball"] = indicator;
    tr["anchor_ok"] = anchor_ok;
    ok = ok && indicator && anchor_ok;

    std::vector<double> bx, by;
    for (const auto& o : cube_window(N, k)) {
      const auto i = static_cast<std::size_t>(region.index(a + o)) * static_cast<std::size_t>(enc.spec().D);
      bx.insert(bx.end(), i2x.begin() + static_cast<std::ptrdiff_t>(i), i2x.begin() + static_cast<std::ptrdiff_t>(i) + enc.spec().D);
      by.insert(by.end(), i2y.begin() + static_cast<std::ptrdiff_t>(i), i2y.begin() + static_cast<std::ptrdiff_t>(i) + enc.spec().D);
    }
    const RotationPoint xa = X.shift(x, a), ya = X.shift(y, a);
    const auto Gx = enc.G_at(j, xa), Gy = enc.G_at(j, ya);
    const double claim_dev = std::max(sup_distance(bx, Gx), sup_distance(by, Gy));
    tr["claim_deviation"] = claim_dev;
    ok = ok && claim_dev <= kAgreeTolerance;
    const WindowEmbedding& pj = enc.pi_n(j);
    const bool fiber = share_vertex(pj.map(X, xa), pj.map(X, ya));
    tr["shared_vertex"] = fiber;
    LatticePoint book(k);
    bool book_ok = true;
    for (int i = 0; i < k; ++i) {
      book[i] = ceil_int((1 - s) * static_cast<double>(j[i])) + a[i];
      book_ok = book_ok && book[i] <= 0 && book[i] > -enc.N_prime();
    }
    tr["bookkeeping"] = point_json(book);
    tr["bookkeeping_in_minus_Nprime"] = book_ok;
    const LatticeSet om = enc.omega_n(j);
    const double dw = X.window_distance_literal(xa, ya, om);
    v.distance = X.distance(x, y);
    tr["window_distance"] = dw;
    tr["distance"] = v.distance;
    ok = ok && fiber && book_ok && om.contains(-1 * a) && dw < eps && v.distance <= dw && v.distance < eps;
    if (!ok) v.verdict = "FAILURE";
    v.decode_trace = tr.dump();
    return v;
  });
  tally(rep);
  return rep;
}

}  // namespace mdimkit
