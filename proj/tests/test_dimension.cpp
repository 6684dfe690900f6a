#include <doctest.h>

#include <cmath>

#include "mdimkit/dimension.hpp"
#include "mdimkit/rng.hpp"

using namespace mdimkit;

namespace {

FiniteMetric line_metric(const std::vector<double>& xs) {
  std::vector<std::vector<double>> pts;
  for (double x : xs) pts.push_back({x});
  return euclidean_metric(pts);
}

// Exhaustive minimum cover by diameter-<eps subsets.
std::size_t brute_cover(const FiniteMetric& m, double eps) {
  const std::size_t n = m.size;
  std::vector<char> ok(std::size_t{1} << n, 0);
  for (std::size_t mask = 1; mask < ok.size(); ++mask) {
    bool good = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if ((mask >> i & 1) && (mask >> j & 1) && m.dist(i, j) >= eps) good = false;
    ok[mask] = good;
  }
  std::vector<std::size_t> best(ok.size(), 1000);
  best[0] = 0;
  for (std::size_t mask = 1; mask < ok.size(); ++mask)
    for (std::size_t sub = mask; sub; sub = (sub - 1) & mask)
      if (ok[sub]) best[mask] = std::min(best[mask], best[mask & ~sub] + 1);
  return best.back();
}

SFT golden_mean() { return SFT(1, 2, {Pattern{{LatticePoint{0}, 1}, {LatticePoint{1}, 1}}}); }

}  // namespace

TEST_CASE("covering numbers on small samples") {
  CHECK(covering_number(line_metric({0, 0.5, 1}), 0.6).best() == 2);
  CHECK(covering_number(line_metric({0, 0.1, 5, 5.1}), 1).best() == 2);
  CHECK(covering_number(line_metric({0, 0.3, 0.7}), 2).best() == 1);
  CHECK(covering_number(line_metric({}), 1).best() == 0);
}

TEST_CASE("exact covering number matches exhaustion and bounds greedy") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(77, s);
    std::vector<std::vector<double>> pts;
    const std::size_t n = 3 + rng.below(9);
    for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(), rng.uniform()});
    const auto m = euclidean_metric(pts);
    const double eps = 0.2 + 0.6 * rng.uniform();
    const auto c = covering_number(m, eps);
    REQUIRE(c.exact.has_value());
    CHECK(*c.exact == brute_cover(m, eps));
    CHECK(c.greedy >= *c.exact);
  }
}

TEST_CASE("covering numbers are subadditive over disjoint samples") {
  std::vector<double> a{0, 0.2, 0.55, 0.9}, b{3, 3.4, 3.45, 4.1, 4.2};
  std::vector<double> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  for (double eps : {0.1, 0.3, 0.5, 1.0}) {
    const auto ca = covering_number(line_metric(a), eps).best();
    const auto cb = covering_number(line_metric(b), eps).best();
    CHECK(covering_number(line_metric(ab), eps).best() <= ca + cb);
  }
}

TEST_CASE("entropy of the binary full shift with full enumeration is log 2") {
  FullShift X(1, 2);
  EntropyOptions opt;
  opt.full_enumeration = true;
  const auto p = entropy_profile(X, 0.75, {1, 2, 4, 8}, 0, 5, opt);
  REQUIRE(p.rows.size() == 4);
  for (const auto& r : p.rows) CHECK(r.normalized == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("golden mean entropy from enumeration approaches log phi") {
  const SFT X = golden_mean();
  EntropyOptions opt;
  opt.full_enumeration = true;
  const auto p = entropy_profile(X, 0.75, {12}, 0, 9, opt);
  // Number of legal words of length 12 is the Fibonacci number F_14 = 377.
  CHECK(p.rows[0].raw == doctest::Approx(std::log(377.0)));
}

TEST_CASE("single-point system has zero entropy and zero mdim") {
  FullShift X(1, 1);
  const auto p = entropy_profile(X, 0.5, {2, 4}, 16, 1);
  for (const auto& r : p.rows) CHECK(r.normalized == 0);
  const auto m = mdim_profile(X, {0.5}, {3, 5}, 16, 1);
  for (const auto& r : m.cubes.rows) CHECK(r.normalized == 0);
  for (const auto& a : m.agreement) CHECK(a.agree);
}

TEST_CASE("entropy profile is non-increasing in eps on a fixed sample") {
  FullShift X(1, 2);
  double prev = 1e9;
  for (double eps : {0.05, 0.2, 0.6, 1.5}) {
    const auto p = entropy_profile(X, eps, {4}, 40, 3);
    CHECK(p.rows[0].raw <= prev + 1e-12);
    prev = p.rows[0].raw;
  }
}

TEST_CASE("running infimum and CSV layout") {
  FullShift X(1, 2);
  const auto p = entropy_profile(X, 0.3, {2, 3, 4}, 30, 2);
  double inf = 1e9;
  for (const auto& r : p.rows) {
    inf = std::min(inf, r.normalized);
    CHECK(r.running_inf == inf);
  }
  const std::string csv = p.to_csv();
  CHECK(csv.rfind("epsilon,N_or_R,raw,normalized,running_inf,stderr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("profiles are deterministic for a seed") {
  FullShift X(1, 2, 1);
  const auto a = mdim_profile(X, {0.5}, {2, 3}, 24, 11);
  const auto b = mdim_profile(X, {0.5}, {2, 3}, 24, 11);
  CHECK(a.cubes.rows == b.cubes.rows);
  CHECK(a.balls.rows == b.balls.rows);
}

TEST_CASE("widim bound is monotone in eps on a fixed sample") {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 200; ++i) {
    const double t = 2 * M_PI * i / 200;
    pts.push_back({std::cos(t), std::sin(t)});
  }
  const auto m = euclidean_metric(pts);
  int prev = 100;
  for (double eps : {0.3, 0.8, 5.0}) {
    const auto w = widim_upper(m, eps);
    CHECK(w.bound <= prev);
    CHECK(w.cert.fiber_bound < eps);
    prev = w.bound;
  }
  const int b = widim_upper(m, 0.3).bound;
  CHECK(b >= 1);
  CHECK(b <= 2);
  CHECK(widim_upper(m, 5.0).bound == 0);
}

TEST_CASE("widim of the cube shift grows with the window") {
  FullShift X(1, 1, 1);
  const auto p = mdim_profile(X, {0.9}, {1, 2}, 60, 4);
  REQUIRE(p.cubes.rows.size() == 2);
  CHECK(p.cubes.rows[0].raw >= 1);
  CHECK(p.cubes.rows[1].raw >= p.cubes.rows[0].raw);
}

TEST_CASE("ocap oracles") {
  FullShift X(1, 2);
  const std::vector<std::int64_t> Ns{4, 7, 10};
  const auto none = ocap_estimate(
      X, [](const PointWindow&, const LatticePoint&) { return false; }, "empty", Ns, {2}, 20, 1);
  CHECK(none.inf_over_windows == 0);
  const auto all = ocap_estimate(
      X, [](const PointWindow&, const LatticePoint&) { return true; }, "all", Ns, {2}, 20, 1);
  CHECK(all.inf_over_windows == 1);

  const SFT G = golden_mean();
  auto ones = [](const PointWindow& w, const LatticePoint& n) { return w.symbol(n) == 1; };
  for (std::int64_t N : Ns) {
    const auto e = ocap_estimate(G, ones, "x0=1", {N}, {}, 40, 2);
    const double expect = static_cast<double>((N + 1) / 2) / static_cast<double>(N);
    CHECK(e.rows[0].sup_count == static_cast<std::size_t>(G.max_marked_count_1d(N, {1})));
    CHECK(e.inf_over_windows == doctest::Approx(expect));
  }
  CHECK(all.to_csv().rfind("predicate,sequence,window,sites,sup_count,normalized\n", 0) == 0);
}

TEST_CASE("kappa constant") {
  const auto k1 = kappa_constant(1);
  // sum over Z of 2^{-|n|} = 3.
  CHECK(k1.c == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(k1.c >= 3.0);
  CHECK(k1.kappa == doctest::Approx(1.0 / 6).epsilon(1e-8));
  const auto k2 = kappa_constant(2, 40);
  CHECK(k2.c > 9.0);
}

TEST_CASE("kappa route inequality holds on sampled pairs") {
  FullShift X(1, 2);
  const auto r = kappa_route_check(X, 3, 0.2, 40, 6);
  CHECK(r.pairs == 40);
  CHECK(r.violations == 0);
  CHECK(r.max_slack > 0);
  FullShift C(1, 1, 2);
  CHECK(kappa_route_check(C, 2, 0.5, 20, 6).violations == 0);
}
