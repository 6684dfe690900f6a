#include <doctest.h>

#include <cmath>

#include "mdimkit/rng.hpp"
#include "mdimkit/voronoi.hpp"

using namespace mdimkit;

namespace {

Box box2(std::int64_t lo, std::int64_t hi) { return Box{LatticePoint{lo, lo}, LatticePoint{hi, hi}}; }

FlatCenters grid_centers(std::int64_t N, int L, const Box& window) {
  std::vector<LatticePoint> c;
  window.for_each([&](const LatticePoint& p) {
    bool on = true;
    for (int i = 0; i < p.dim(); ++i) on = on && (((p[i] % N) + N) % N == 0);
    if (on) c.push_back(p);
  });
  return FlatCenters{LatticeSet(window.dim(), c), L, window};
}

RealPoint rp(double a, double b) { return RealPoint{a, b}; }

LiftedTiling grid_lifted(int N, int L, const Box& win, double s = 1.2) {
  return LiftedTiling(grid_marker_field(win, N, LatticePoint{0, 0}, N, L, height_gate(L, 2), s));
}

RealPoint random_point(Rng& rng, double lo, double hi) { return rp(rng.uniform(lo, hi), rng.uniform(lo, hi)); }

// Brute-force nearest lifted center over the whole field.
LatticePoint brute_lifted_owner(const MarkerField& f, const RealPoint& u, double h) {
  LatticePoint best;
  double best_d = 1e300;
  for (const auto& n : f.support()) {
    const double t = 1.0 / f.at(n);
    const double d = (to_real(n) - u).norm2() + (t - h) * (t - h);
    if (d < best_d - 1e-9 || (std::abs(d - best_d) <= 1e-9 && n < best)) {
      best = n;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("flat owner on a square grid") {
  const FlatTiling t(grid_centers(4, 4, box2(-20, 20)));
  CHECK(t.owner(rp(1, 0)) == LatticePoint{0, 0});
  CHECK(t.owner(rp(2, 0)) == LatticePoint{0, 0});
  CHECK(t.owner(rp(2, 2)) == LatticePoint{0, 0});
  CHECK(t.owner(rp(2.01, 0)) == LatticePoint{4, 0});
  CHECK(t.owner(rp(-2, -2)) == LatticePoint{-4, -4});
  CHECK_THROWS_AS(t.owner(rp(19, 0)), WindowError);
}

TEST_CASE("flat cell enumeration and bound") {
  const FlatTiling t(grid_centers(12, 12, box2(-60, 60)));
  const auto rep = flat_cell_check(t, LatticePoint{0, 0}, 2, 1000, 3);
  const double bound = flat_cell_ratio_bound(2, 12, 2);
  const double a = 2 * (2 + std::sqrt(2.0)) / 12;
  CHECK(bound == doctest::Approx((std::pow(1 + a, 2) - std::pow(1 - a, 2)) / std::pow(1 - 2 * std::sqrt(2.0) / 12, 2)));
  CHECK(rep.bound == bound);
  // Lattice cell of the grid under the lex tie rule: {-6..5}^2 shifted by one on the tie side.
  CHECK(rep.lattice_points.size() == 144);
  CHECK(rep.ratio == static_cast<double>(rep.boundary_shell.size()) / static_cast<double>(rep.lattice_points.size()));
  CHECK(rep.ratio_within_bound);
  CHECK(rep.ratio <= bound);
  CHECK(rep.ball_probes == 1000);
  CHECK(rep.ball_violations == 0);

  const auto big_R = flat_cell_check(t, LatticePoint{0, 0}, 10, 100, 3);
  CHECK(!big_R.ratio_below_inverse_R);
  CHECK_THROWS_AS(flat_cell_check(t, LatticePoint{60, 60}, 2), WindowError);
}

TEST_CASE("flat cells shrink uniformly under dilation") {
  const int L = 8;
  const FlatTiling t(FlatCenters{random_separated_set(box2(-40, 40), L, 2), L, box2(-40, 40)});
  Rng rng(4);
  for (int i = 0; i < 400; ++i) {
    const RealPoint u = random_point(rng, -15, 15);
    const LatticePoint n = t.owner(u);
    const double c = rng.uniform();
    const RealPoint p = to_real(n) + (u - to_real(n)) * c;
    CHECK(t.owner(p) == n);
    CHECK(t.boundary_distance(n, p) >= (1 - c) * L / 2.0 - 1e-9);
  }
}

TEST_CASE("lifted tiling with equal heights reduces to the flat tiling") {
  const Box win = box2(-80, 80);
  const auto lifted = grid_lifted(16, 16, win);
  const FlatTiling flat(grid_centers(16, 16, win));
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const RealPoint u = random_point(rng, -20, 20);
    CHECK(lifted.owner(u, -lifted.H()) == flat.owner(u));
  }
  CHECK(lifted.owner(rp(8, 0), -lifted.H()) == LatticePoint{0, 0});
  CHECK(lifted.owner(rp(8, 8), -1.2 * lifted.H()) == LatticePoint{0, 0});
}

TEST_CASE("lower centers win past the midpoint") {
  const int M = 10, L = 11;
  const Box win = box2(-60, 60);
  MarkerField f = grid_marker_field(win, 10, LatticePoint{0, 0}, M, L, height_gate(L, 2), 1.5);
  f.set(LatticePoint{10, 0}, 0.99);
  validate_marker_field(f);
  const LiftedTiling t(f);
  const double h = -f.H;
  CHECK(t.owner(rp(5.0, 0.0), h) == LatticePoint{0, 0});
  CHECK(t.owner(rp(5.1, 0.0), h) == LatticePoint{0, 0});
  // Bisector: |u|^2 + (1-h)^2 = |u-(10,0)|^2 + (t-h)^2.
  const double th = 1 / 0.99;
  const double xb = (100 + (th - h) * (th - h) - (1 - h) * (1 - h)) / 20;
  CHECK(xb > 5.1);
  CHECK(xb < 6);
  CHECK(t.owner(rp(xb - 1e-6, 0.0), h) == LatticePoint{0, 0});
  CHECK(t.owner(rp(xb + 1e-6, 0.0), h) == LatticePoint{10, 0});
  CHECK(t.boundary_distance(LatticePoint{0, 0}, rp(xb - 0.25, 0.0), h) == doctest::Approx(0.25));
}

TEST_CASE("lifted owner agrees with brute force and respects the partition bounds") {
  const Box win = box2(-50, 50);
  const int M = 6, L = 8;
  const auto f = synthetic_marker_field(M, L, height_gate(L, 2), 1.3, win, 21);
  const LiftedTiling t(f);
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const RealPoint u = random_point(rng, -12, 12);
    for (double h : {-f.H, -f.s * f.H}) {
      const LatticePoint n = t.owner(u, h);
      CHECK(n == brute_lifted_owner(f, u, h));
      if (h == -f.H) {
        CHECK((to_real(n) - u).norm() < L + std::sqrt(2.0));
        const double ht = 1.0 / f.at(n);
        CHECK((ht >= 1.0 && ht <= 2.0));
      }
    }
  }
}

TEST_CASE("lifted tiling is translation equivariant") {
  const Box win = box2(-50, 50);
  const auto f = synthetic_marker_field(6, 8, height_gate(8, 2), 1.3, win, 5);
  const LatticePoint m{3, -2};
  const LiftedTiling t(f), ts(f.shifted(m));
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const RealPoint u = random_point(rng, -10, 10);
    CHECK(ts.owner(u - to_real(m), -f.H) == t.owner(u, -f.H) - m);
  }
}

TEST_CASE("boundary distance") {
  const Box win = box2(-80, 80);
  const auto t = grid_lifted(16, 16, win);
  CHECK(w_boundary_distance(t, LatticePoint{0, 0}, rp(0, 0)) == doctest::Approx(8.0));
  CHECK(w_boundary_distance(t, LatticePoint{0, 0}, rp(8, 3)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w_boundary_distance(t, LatticePoint{0, 0}, rp(2, -3)) == doctest::Approx(5.0));

  const auto f = synthetic_marker_field(6, 8, height_gate(8, 2), 1.3, box2(-50, 50), 11);
  const LiftedTiling r(f);
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const RealPoint u = random_point(rng, -10, 10);
    const LatticePoint n = r.owner(u, -f.H);
    const double du = r.boundary_distance(n, u);
    CHECK(du >= 0);
    // Moving less than du keeps the owner; 1-Lipschitz along a segment inside the cell.
    const RealPoint dir = [&] {
      const double a = rng.uniform(0, 2 * M_PI);
      return rp(std::cos(a), std::sin(a));
    }();
    const double step = rng.uniform(0, 1) * du;
    const RealPoint v = u + dir * step;
    CHECK(r.owner(v, -f.H) == n);
    CHECK(std::abs(r.boundary_distance(n, v) - du) <= step + 1e-9);
  }
}

TEST_CASE("lifted-cell checks on a grid field") {
  const auto t = grid_lifted(16, 16, box2(-120, 120), 1.2);
  Lemma41Params p;
  p.probes = 10000;
  p.seed = 9;
  const auto rep = lemma41_check(t, p);
  REQUIRE(rep.checks.size() == 4);
  for (const auto& c : rep.checks) {
    CHECK_MESSAGE(c.status == "pass", c.name << ": " << c.detail);
    CHECK(c.violations == 0);
  }
  CHECK(rep.passed());
  CHECK(rep.offset_bound == doctest::Approx(4 * (16 + std::sqrt(2.0)) / t.H()));
  CHECK(rep.max_offset_seen <= rep.offset_bound + 1e-12);
}

TEST_CASE("lifted-cell radius gate for tiny M") {
  const auto f = synthetic_marker_field(2, 6, height_gate(6, 2), 1.1, box2(-40, 40), 3);
  const LiftedTiling t(f);
  Lemma41Params p;
  p.probes = 500;
  p.r = 50;
  const auto rep = lemma41_check(t, p);
  REQUIRE(rep.checks.size() == 4);
  CHECK(rep.checks[3].status == "gate");
  CHECK(rep.checks[3].detail.find("M below threshold") != std::string::npos);
  for (int i = 0; i < 3; ++i) CHECK(rep.checks[i].status == "pass");
}

TEST_CASE("lifted-cell checks flag tall cells when the height gate is bypassed") {
  const Box win = box2(-40, 40);
  MarkerField f = grid_marker_field(win, 4, LatticePoint{0, 0}, 4, 4, height_gate(4, 2), 1.2);
  // Tiny H: low centers dominate even with tall neighbours.
  f.H = 0.5;
  f.set(LatticePoint{0, 0}, 0.1);
  CHECK(check_marker_field(f)->kind == "height");
  CHECK_THROWS_AS(LiftedTiling{f}, MarkerError);
}

TEST_CASE("boundary fraction of a grid tiling") {
  const int N = 16;
  const auto t = grid_lifted(N, N, box2(-140, 140));
  const double R = 64;
  for (double E : {1.0, 2.0, 3.0}) {
    BoundaryFractionOptions exact;
    exact.mode = BoundaryFractionOptions::Mode::Exact;
    const auto est = boundary_fraction(t, E, R, 20000, 5, exact);
    const double oracle = 1 - std::pow(1 - 2 * E / N, 2);
    CHECK(std::abs(est.estimate - oracle) <= 3 * est.std_error + 0.02);
    const auto net = boundary_fraction(t, E, R, 20000, 5);
    CHECK(net.estimate <= est.estimate + 1e-12);
    CHECK(net.estimate >= 0.7 * est.estimate);
  }
  CHECK(boundary_fraction(t, 1e-9, R, 5000, 5).estimate <= 0.001);
  const auto a = boundary_fraction(t, 2.0, R, 3000, 77);
  const auto b = boundary_fraction(t, 2.0, R, 3000, 77);
  CHECK(a.hits == b.hits);
}

TEST_CASE("boundary fraction is monotone in E for nested probe nets") {
  const auto f = synthetic_marker_field(8, 10, height_gate(10, 2), 1.3, box2(-120, 120), 6);
  const LiftedTiling t(f);
  BoundaryFractionOptions opt;
  opt.fixed_pitch = 0.25;
  double prev = -1;
  for (double E : {0.5, 1.0, 1.5, 2.0, 3.0, 4.0}) {
    const auto est = boundary_fraction(t, E, 50, 4000, 13, opt);
    CHECK(est.estimate >= prev);
    prev = est.estimate;
  }
  const double s = f.s;
  const double R = 50;
  const auto e = boundary_fraction(t, 1.0, R, 4000, 13);
  CHECK(e.estimate <= boundary_fraction_bound(2, f.L, s, R) + 3 * e.std_error);
}
