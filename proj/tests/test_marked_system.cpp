#include <doctest.h>

#include "mdimkit/marked_system.hpp"
#include "mdimkit/rng.hpp"

using namespace mdimkit;

TEST_CASE("circle distance on fixed-point angles") {
  CHECK(circle_distance(0, 0) == 0);
  CHECK(circle_distance(angle_from_double(0.1), angle_from_double(0.9)) == doctest::Approx(0.2));
  CHECK(circle_distance(angle_from_double(0.5), 0) == 0.5);
  CHECK(angle_from_double(1.25) == angle_from_double(0.25));
}

TEST_CASE("shifts compose exactly and act isometrically") {
  const auto X = GridRotation::standard(2, 5, 2, 0.01);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = X.sample(derive_seed(3, s));
    const auto y = X.sample(derive_seed(4, s));
    Rng rng(5, s);
    const LatticePoint a{static_cast<std::int64_t>(rng.below(41)) - 20, static_cast<std::int64_t>(rng.below(41)) - 20};
    const LatticePoint b{static_cast<std::int64_t>(rng.below(41)) - 20, static_cast<std::int64_t>(rng.below(41)) - 20};
    CHECK(X.shift(X.shift(x, a), b) == X.shift(x, a + b));
    CHECK(X.shift(X.shift(x, a), -1 * a) == x);
    CHECK(X.distance(X.shift(x, a), X.shift(y, a)) == X.distance(x, y));
    const auto omega = ball_points_around(to_real(a), 3.5);
    CHECK(X.window_distance(x, y, omega) == X.window_distance_literal(x, y, omega));
  }
}

TEST_CASE("metric values") {
  const auto X = GridRotation::standard(1, 4, 1, 0.01);
  const auto x = X.point(LatticePoint{0}, {0.25});
  CHECK(X.distance(x, x) == 0);
  CHECK(X.distance(x, X.point(LatticePoint{1}, {0.25})) == 0.01);
  CHECK(X.distance(x, X.point(LatticePoint{1}, {0.5})) == 0.25);
  CHECK(X.distance(x, X.point(LatticePoint{4}, {0.25})) == 0);
  const auto omega = cube_window(3, 1);
  CHECK(X.window_distance(x, X.point(LatticePoint{0}, {0.3}), omega) == doctest::Approx(0.05));
}

TEST_CASE("markers sit on the phase-zero coset and form a valid field") {
  const auto X = GridRotation::standard(1, 10, 1, 0.01);
  const auto x = X.point(LatticePoint{3}, {0.1});
  const Box box{LatticePoint{-30}, LatticePoint{30}};
  const auto C = X.markers(x, box);
  for (const auto& n : C) CHECK(((n[0] + 3) % 10 + 10) % 10 == 0);
  CHECK(C.size() == 6);
  const auto f = X.marker_field(x, box, 10, 10, 121, 2);
  CHECK(f.support() == C.points());
  CHECK_NOTHROW(validate_marker_field(f));
}
