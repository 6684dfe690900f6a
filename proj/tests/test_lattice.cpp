#include <doctest.h>

#include <set>

#include "mdimkit/lattice.hpp"
#include "mdimkit/rng.hpp"

using namespace mdimkit;

namespace {

// Direct transcription of the shell definition over an explicitly large box.
std::set<LatticePoint> brute_boundary(const LatticeSet& omega, double R, std::int64_t margin) {
  const int k = omega.ambient_k();
  const Box box = omega.bounding_box().inflated(margin);
  std::set<LatticePoint> out;
  box.for_each([&](const LatticePoint& n) {
    bool in = false, out_ = false;
    box.inflated(margin).for_each([&](const LatticePoint& m) {
      if ((m - n).norm() > R) return;
      if (omega.contains(m)) in = true;
      else out_ = true;
    });
    if (in && out_) out.insert(n);
  });
  (void)k;
  return out;
}

LatticeSet random_set(Rng& rng, int k, int count, int extent) {
  std::vector<LatticePoint> pts;
  for (int i = 0; i < count; ++i) {
    LatticePoint p(k);
    for (int d = 0; d < k; ++d) p[d] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(extent)));
    pts.push_back(p);
  }
  return LatticeSet(k, pts);
}

}  // namespace

TEST_CASE("cube_window enumerates [N]^k") {
  CHECK(cube_window(1, 3).points() == std::vector<LatticePoint>{LatticePoint{0, 0, 0}});
  CHECK(cube_window(2, 2).points() ==
        std::vector<LatticePoint>{LatticePoint{0, 0}, LatticePoint{0, 1}, LatticePoint{1, 0}, LatticePoint{1, 1}});
  CHECK(cube_window(4, 1).size() == 4);
  CHECK_THROWS_AS(cube_window(0, 2), Error);
  CHECK_THROWS_AS(cube_window(3, 0), Error);
}

TEST_CASE("ball_points uses the closed Euclidean ball") {
  CHECK(ball_points(0, 2).size() == 1);
  const auto b1 = ball_points(1, 2);
  CHECK(b1.size() == 5);
  CHECK(b1.contains(LatticePoint{-1, 0}));
  CHECK(!b1.contains(LatticePoint{1, 1}));
  CHECK(ball_points(1.5, 2).size() == 9);
  CHECK(ball_points(std::sqrt(2.0), 2).size() == 9);
}

TEST_CASE("shell of small sets") {
  const auto sq = cube_window(3, 2);
  const auto s = shell(sq, 1);
  CHECK(s.interior.points() == std::vector<LatticePoint>{LatticePoint{1, 1}});
  CHECK(s.boundary.size() == 20);
  CHECK(folner_ratio(sq, 1).ratio == doctest::Approx(20.0 / 9.0));
  CHECK(folner_ratio(sq, 1).boundary_inside == 8);

  const auto single = LatticeSet(2, {LatticePoint{0, 0}});
  CHECK(shell(single, 1).interior.empty());
  CHECK(folner_ratio(single, 1).ratio >= 1.0);

  const auto line = cube_window(5, 1);
  CHECK(shell(line, 1).interior.points() == std::vector<LatticePoint>{LatticePoint{1}, LatticePoint{2}, LatticePoint{3}});
  CHECK_THROWS_AS(shell(line, 0), Error);
}

TEST_CASE("shell agrees with the brute-force definition") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + trial % 2;
    const auto omega = random_set(rng, k, 6 + trial, 7);
    for (double R : {1.0, 1.5, 2.3}) {
      const auto s = shell(omega, R);
      const auto brute = brute_boundary(omega, R, 4);
      CHECK(std::set<LatticePoint>(s.boundary.begin(), s.boundary.end()) == brute);
    }
  }
}

TEST_CASE("Folner ratio of cubes decays") {
  double prev = 1e9;
  for (std::int64_t N : {10, 25, 50, 100}) {
    const double r = folner_ratio(cube_window(N, 2), 1).ratio;
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev <= 4.0 * 102 * 3 / (100.0 * 100.0));
  CHECK(prev < 0.13);
}

TEST_CASE("shell properties: monotone in R, translation equivariant, subadditive") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + trial % 3;
    const auto a = random_set(rng, k, 10, 9);
    const auto b = random_set(rng, k, 10, 9).translated(LatticePoint(k));
    for (double R1 : {1.0, 1.7}) {
      const double R2 = R1 + 1.1;
      CHECK(shell(a, R2).interior.subset_of(shell(a, R1).interior));
    }
    LatticePoint t(k);
    for (int d = 0; d < k; ++d) t[d] = static_cast<std::int64_t>(rng.below(21)) - 10;
    const auto sa = shell(a, 1.5);
    const auto st = shell(a.translated(t), 1.5);
    CHECK(st.boundary == sa.boundary.translated(t));
    CHECK(st.interior == sa.interior.translated(t));
    CHECK(shell(a.united(b), 1.5).boundary.size() <= shell(a, 1.5).boundary.size() + shell(b, 1.5).boundary.size());
  }
}

TEST_CASE("ball volume") {
  CHECK(ball_volume(1, 2.0) == doctest::Approx(4.0));
  CHECK(ball_volume(2, 1.0) == doctest::Approx(3.14159265358979));
  CHECK(ball_volume(3, 1.0) == doctest::Approx(4.18879020478639));
}
