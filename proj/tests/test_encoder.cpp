#include <doctest.h>

#include <cmath>
#include <memory>

#include "mdimkit/perturbation.hpp"
#include "mdimkit/rng.hpp"

using namespace mdimkit;

namespace {

std::vector<double> circle2(const RotationPoint& x, double r, int w1, int w2) {
  const double t = 2 * M_PI * GridRotation::angle(x, 0);
  return {0.5 + r * std::sin(w1 * t), 0.5 + r * std::cos(w2 * t)};
}

EncoderSpec small_spec() {
  EncoderSpec sp;
  sp.net_per_axis = 32;
  sp.cap = 200000;
  sp.seed = 3;
  return sp;
}

struct EncoderFixture {
  GridRotation X = GridRotation::standard(1, 54, 1, 0.001);
  PointMap f1 = [](const RotationPoint& x) { return circle2(x, 0.25, 1, 1); };
  PointMap f2 = [](const RotationPoint& x) { return circle2(x, 0.2, 2, 1); };
  std::shared_ptr<const EmbeddingEncoder> enc;

  EncoderFixture() { enc = construct_g2(encode_g1(X, f1, small_spec()), f2); }
};

const EncoderFixture& fixture() {
  static const EncoderFixture fx;
  return fx;
}

const Box kRegion{LatticePoint{-60}, LatticePoint{60}};

}  // namespace

TEST_CASE("parameter gates") {
  for (const auto& g : encoder_gates(small_spec(), 1)) CHECK_MESSAGE(g.passed, g.name);
  EncoderSpec sp = small_spec();
  sp.M = sp.L = 48;
  bool found = false;
  for (const auto& g : encoder_gates(sp, 1))
    if (g.name == "choice of M") {
      found = true;
      CHECK_FALSE(g.passed);
    }
  CHECK(found);
  const auto X = GridRotation::standard(1, 48, 1, 0.001);
  CHECK_THROWS_AS(encode_g1(X, fixture().f1, sp), Error);
  sp = small_spec();
  sp.s = 2;
  CHECK_THROWS_AS(encode_g1(X, fixture().f1, sp), Error);
  sp = small_spec();
  sp.H = 100;
  CHECK_THROWS_WITH_AS(encode_g1(X, fixture().f1, sp), doctest::Contains("H gate"), Error);
}

TEST_CASE("encoder sizes and certificates") {
  const auto& e = *fixture().enc;
  CHECK(e.N_prime() == 18);
  CHECK(e.copies().size() == 119);
  CHECK(e.copies2().size() == 143);
  CHECK(e.F_certificate().passed);
  CHECK(e.G_certificate().passed);
  CHECK(e.tau() > 0);
  CHECK(e.tau() < e.tau_min());
  CHECK(e.omega_n(LatticePoint{0}).size() == 18);
  CHECK(e.omega_n(LatticePoint{-5}).size() == 24);
  CHECK(2 * e.R_dim() < e.spec().D * e.spec().N);
}

TEST_CASE("window map stays delta-close to the orbit of f1") {
  const auto& fx = fixture();
  const auto& e = *fx.enc;
  const auto block = cube_window(e.spec().N, 1).points();
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto x = fx.X.sample(derive_seed(11, s));
    const auto orbit = orbit_values(fx.X, fx.f1, x, block);
    const auto p = e.pi().map(fx.X, x);
    for (std::size_t c = 0; c < e.copies().size(); c += 13)
      CHECK(sup_distance(e.F_at(p, e.copies()[c]), orbit) < e.spec().delta);
  }
}

TEST_CASE("decoded weights behave as indicators") {
  const auto& fx = fixture();
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto x = fx.X.sample(derive_seed(12, s));
    const auto sc = check_s_condition(*fx.enc, x, kRegion);
    CHECK(sc.violations == 0);
    const auto pt = check_pseudo_tiling(*fx.enc, x, kRegion);
    CHECK(pt.sites1 > 0);
    CHECK(pt.centers2 == 1);
    CHECK(pt.passed());
  }
}

TEST_CASE("both channels reproduce their block maps") {
  const auto& fx = fixture();
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto x = fx.X.sample(derive_seed(13, s));
    const auto c1 = check_g1_claim(*fx.enc, x, kRegion);
    const auto c2 = check_g2_claim(*fx.enc, x, kRegion);
    CHECK(c1.blocks > 0);
    CHECK(c1.passed());
    CHECK(c1.max_deviation == 0);
    CHECK(c2.blocks > 0);
    CHECK(c2.passed());
  }
}

TEST_CASE("images and decoding are shift equivariant") {
  const auto& fx = fixture();
  const auto& e = *fx.enc;
  const auto x = fx.X.sample(14);
  const LatticePoint m{17};
  const Box box{LatticePoint{-20}, LatticePoint{20}};
  const Box moved{box.lo + m, box.hi + m};
  CHECK(e.I_g1(fx.X.shift(x, m), box).values == e.I_g1(x, moved).values);

  const auto w = e.I_g1(x, e.decode_domain(moved));
  const auto W = e.decode(w, moved);
  const auto Ws = e.decode(w.shifted(m), box);
  REQUIRE(W.W.size() == Ws.W.size());
  for (const auto& [n, v] : W.W) {
    const auto it = Ws.W.find(n - m);
    REQUIRE(it != Ws.W.end());
    CHECK(it->second == v);
  }

  const auto batch = e.I_g2(x, box);
  std::vector<double> scratch;
  box.for_each([&](const LatticePoint& t) {
    const auto v = e.g2(fx.X.shift(x, t));
    scratch.insert(scratch.end(), v.begin(), v.end());
  });
  CHECK(batch == scratch);
}

TEST_CASE("second channel stays delta-close to f2") {
  const auto& fx = fixture();
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto x = fx.X.sample(derive_seed(15, s));
    CHECK(sup_distance(fx.enc->g2(x), fx.f2(x)) < fx.enc->spec().delta);
    CHECK(sup_distance(fx.enc->g1(x), fx.f1(x)) < fx.enc->spec().delta);
  }
}

TEST_CASE("pair verification of the encoder") {
  const auto& fx = fixture();
  const auto rep = verify_delta_embedding(*fx.enc, sample_pairs(fx.X, 12, 16));
  CHECK(rep.pairs.size() == 12);
  CHECK(rep.failures == 0);
  CHECK(rep.agree >= 6);
  CHECK(rep.passed());
}

TEST_CASE("second channel needs construct_g2 exactly once") {
  const auto& fx = fixture();
  auto e = encode_g1(fx.X, fx.f1, small_spec());
  CHECK_FALSE(e->has_g2());
  CHECK_THROWS_AS(e->g2(fx.X.sample(1)), Error);
  auto full = construct_g2(e, fx.f2);
  CHECK(full->has_g2());
  CHECK_THROWS_AS(construct_g2(e, fx.f2), Error);
}
