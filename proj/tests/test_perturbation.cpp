#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include <json.hpp>

#include "mdimkit/perturbation.hpp"
#include "mdimkit/rng.hpp"

using namespace mdimkit;

namespace {

double tent(const RotationPoint& x, double height, double slope) {
  const double d = circle_distance(x.angle[0], 0);
  return std::max(0.0, height - slope * d);
}

PointMap tent_map(double height, double slope) {
  return [=](const RotationPoint& x) { return std::vector<double>{tent(x, height, slope)}; };
}

std::vector<RotationPoint> samples(const GridRotation& X, std::size_t n, std::uint64_t seed) {
  std::vector<RotationPoint> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(X.sample(derive_seed(seed, i)));
  return out;
}

std::vector<LatticePoint> box_points_of(const Box& b) {
  std::vector<LatticePoint> out;
  b.for_each([&](const LatticePoint& p) { out.push_back(p); });
  return out;
}

struct SymbolicFixture {
  GridRotation X = GridRotation::standard(1, 20, 1, 0.01);
  SymbolicSpec spec;
  PointMap f = tent_map(1.0, 2.0);
  std::shared_ptr<const TilePalette> palette;

  SymbolicFixture() {
    spec.net_per_axis = 64;
    palette = std::make_shared<const TilePalette>(build_palette(X, f, spec, samples(X, 24, 1)));
  }
  SymbolicPainter painter() const { return paint_symbolic(X, f, spec, palette); }
};

// F = G o pi on [N] for the tile painters, with G fitted to I_f on the net.
struct BlockFixture {
  GridRotation X;
  int N;
  PointMap f;
  WindowEmbedding pi;
  LinearMap G;
  GenericCertificate cert;

  BlockFixture(int period, int N_, double eps, double delta, PointMap f_, GenericTag tag, double noise)
      : X(GridRotation::standard(1, period, 1, 0.005)), N(N_), f(std::move(f_)) {
    pi = window_embedding(X, cube_window(N, 1), eps, 64);
    std::vector<std::vector<double>> values;
    const auto block = cube_window(N, 1).points();
    for (const auto& y : pi.net) values.push_back(orbit_values(X, f, y, block));
    const auto approx = approximate_by_linear(pi.nerve, pi.metric(X), values, delta - noise);
    if (noise == 0) {
      G = approx.g;
      return;
    }
    GenericOptions opt;
    opt.tag = tag;
    opt.target_dim = N;
    for (int v = 0; v < approx.g.complex().vertex_count(); ++v) opt.base.push_back(approx.g.image(v));
    opt.eta = noise;
    opt.signed_noise = true;
    auto gen = sample_generic_linear(pi.nerve.complex, opt, 5);
    G = gen.map;
    cert = gen.cert;
  }
  BlockMap F() const {
    return [this](const RotationPoint& y) { return G(pi.map(X, y)); };
  }
};

}  // namespace

TEST_CASE("cutoff functions") {
  CHECK(alpha_cutoff(0) == 0);
  CHECK(alpha_cutoff(0.25) == 0.25);
  CHECK(alpha_cutoff(3) == 1);
  CHECK(beta_cutoff(0, 0.5) == 1);
  CHECK(beta_cutoff(0.25, 0.5) == 0.5);
  CHECK(beta_cutoff(0.5, 0.5) == 0);
  CHECK(beta_cutoff(2, 0.5) == 0);
  CHECK_THROWS_AS(beta_cutoff(0, 0), Error);
}

TEST_CASE("window embedding covers the space with small fibers") {
  const auto X = GridRotation::standard(1, 7, 1, 0.005);
  const auto w = window_embedding(X, cube_window(3, 1), 0.2, 64);
  CHECK(w.net_radius < w.nerve.r_blend);
  CHECK(w.nerve.fiber_bound < 0.2);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto x = X.sample(derive_seed(9, s));
    const auto p = w.map(X, x);
    CHECK(w.nerve.complex.contains(p.vertices));
  }
  CHECK_THROWS_AS(window_embedding(X, cube_window(3, 1), 0.2, 8), Error);
  CHECK_THROWS_AS(window_embedding(GridRotation::standard(1, 7, 1, 0.1), cube_window(3, 1), 0.2, 64), Error);
}

TEST_CASE("block anchors") {
  for (std::int64_t n = -20; n <= 20; ++n) {
    const auto a = block_anchor(LatticePoint{n}, 6);
    CHECK(((a[0] - n) % 6 + 6) % 6 == 0);
    CHECK(a[0] <= 0);
    CHECK(a[0] > -6);
  }
}

TEST_CASE("symbolic palette holds the single grid tile") {
  const SymbolicFixture fx;
  REQUIRE(fx.palette->pieces.size() == 1);
  const auto& pc = fx.palette->pieces[0];
  CHECK(pc.omega.size() == 20);
  CHECK(pc.interior.size() == 18);
  CHECK(pc.omega.points().front() == LatticePoint{0});
  CHECK(pc.shell_ratio < 1.0 / fx.spec.R);
  CHECK(pc.cert.passed);
  CHECK(pc.approx_error < fx.spec.delta);
}

TEST_CASE("symbolic painter: block identity, boundary values and closeness to f") {
  const SymbolicFixture fx;
  const auto g = fx.painter();
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto x = fx.X.sample(derive_seed(2, s));
    const auto c = check_symbolic_claim(g, x, Box{LatticePoint{-40}, LatticePoint{40}});
    CHECK(c.blocks >= 4);
    CHECK(c.passed());
    CHECK(c.max_deviation == 0);
  }
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto x = fx.X.sample(derive_seed(3, s));
    const auto loc = g.locate(x);
    const auto gv = g.g(x);
    const auto fv = fx.f(x);
    if (!loc.in_interior) CHECK(gv == fv);
    CHECK(sup_distance(gv, fv) < fx.spec.delta);
  }
}

TEST_CASE("symbolic painter separates sampled pairs") {
  const SymbolicFixture fx;
  const auto g = fx.painter();
  const auto rep = verify_delta_embedding(g, sample_pairs(fx.X, 24, 4));
  CHECK(rep.pairs.size() == 24);
  CHECK(rep.passed());
  CHECK(rep.failures == 0);
  CHECK(rep.agree >= 12);  // identical and near pairs
  const std::string jl = rep.to_jsonl();
  CHECK(std::count(jl.begin(), jl.end(), '\n') == 24);
  const auto first = nlohmann::json::parse(jl.substr(0, jl.find('\n')));
  CHECK(first.contains("pair_id"));
  CHECK(first.contains("decode_trace"));
  CHECK(first["verdict"] == "agree");
}

TEST_CASE("tile painter: block identity and batch evaluation") {
  const BlockFixture bf(32, 4, 0.4, 0.9, tent_map(0.5, 2.0), GenericTag::ZeroCoordinate, 0.02);
  REQUIRE(bf.cert.passed);
  TilingSpec ts;
  ts.M = ts.L = 32;
  ts.N = 4;
  const auto g = paint_tiles(bf.X, bf.f, bf.F(), 1, ts);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto x = bf.X.sample(derive_seed(6, s));
    const Box box{LatticePoint{-40}, LatticePoint{40}};
    const auto c = check_tile_claim(g, x, box);
    CHECK(c.blocks > 0);
    CHECK(c.passed());
    const auto batch = g.image(x, box);
    std::vector<double> scratch;
    box.for_each([&](const LatticePoint& m) {
      const auto v = g.g(bf.X.shift(x, m));
      scratch.insert(scratch.end(), v.begin(), v.end());
    });
    CHECK(batch == scratch);
    CHECK(sup_distance(batch, orbit_values(bf.X, bf.f, x, box_points_of(box))) < 0.9);
  }
}

TEST_CASE("zero-set report on a zero-coordinate map") {
  const BlockFixture bf(32, 4, 0.4, 0.9, tent_map(0.5, 2.0), GenericTag::ZeroCoordinate, 0.02);
  TilingSpec ts;
  ts.M = ts.L = 32;
  ts.N = 4;
  const auto g = paint_tiles(bf.X, bf.f, bf.F(), 1, ts);
  const auto rep = zero_set_ocap_check(g, bf.cert, 0.4, 0.9, {60, 120}, samples(bf.X, 4, 7));
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.blocks > 0);
  CHECK(rep.block_violations == 0);
  CHECK(rep.claim_mismatches == 0);
  for (const auto& r : rep.rows) {
    CHECK(r.max_edge_zeros <= r.max_zeros);
    CHECK(r.decomposition_violations == 0);
  }
  CHECK(rep.estimate < 0.8);
  CHECK(rep.passed);
  CHECK(rep.to_csv().rfind("R,sites,max_zeros", 0) == 0);
  GenericCertificate wrong;
  CHECK_THROWS_AS(zero_set_ocap_check(g, wrong, 0.4, 0.9, {60}, samples(bf.X, 1, 7)), Error);
}

TEST_CASE("payload report for a finite-image block map") {
  const BlockFixture bf(64, 8, 0.25, 1.6, tent_map(0.5, 1.0), GenericTag::Embedding, 0);
  TilingSpec ts;
  ts.M = ts.L = 64;
  ts.N = 8;
  const auto g = paint_tiles(bf.X, bf.f, bf.F(), 1, ts);
  MmdimSpec ms;
  const auto rep = mmdim_payload_check(g, bf.G, ms, {200}, samples(bf.X, 3, 8));
  CHECK(rep.tau_gate);
  CHECK(rep.log_gate);
  CHECK(rep.log_A_K == doctest::Approx(std::log(5.0)));
  CHECK(rep.cover.lattice_count > 0);
  CHECK(rep.claim_mismatches == 0);
  REQUIRE(rep.rows.size() == 1);
  const auto& r = rep.rows[0];
  CHECK(r.min_blocks > 0);
  CHECK(r.images == 3);
  CHECK(r.measured_log_cover <= std::log(3.0) + 1e-12);
  CHECK(r.max_residual < r.sites);
}
