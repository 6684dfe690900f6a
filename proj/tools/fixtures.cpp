#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "mdimkit/rng.hpp"

namespace mdimkit::fixtures {

PointMap tent(double height, double slope) {
  return [=](const RotationPoint& x) {
    return std::vector<double>{std::max(0.0, height - slope * circle_distance(x.angle[0], 0))};
  };
}

PointMap circle(double radius, int w1, int w2) {
  return [=](const RotationPoint& x) {
    const double t = 2 * M_PI * GridRotation::angle(x, 0);
    return std::vector<double>{0.5 + radius * std::sin(w1 * t), 0.5 + radius * std::cos(w2 * t)};
  };
}

std::vector<RotationPoint> sample_points(const GridRotation& X, std::size_t n, std::uint64_t seed) {
  std::vector<RotationPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(X.sample(derive_seed(seed, i)));
  return out;
}

BlockMap BlockFixture::F() const {
  const auto* self = this;
  return [self](const RotationPoint& y) { return self->G(self->pi.map(*self->X, y)); };
}

std::shared_ptr<const BlockFixture> block_fixture(const BlockFixtureSpec& spec, PointMap f) {
  auto b = std::make_shared<BlockFixture>();
  b->X = std::make_shared<const GridRotation>(GridRotation::standard(1, spec.period, 1, spec.lambda));
  b->N = spec.N;
  b->f = std::move(f);
  b->pi = window_embedding(*b->X, cube_window(spec.N, 1), spec.eps, spec.net_per_axis);
  const auto block = cube_window(spec.N, 1).points();
  std::vector<std::vector<double>> values;
  for (const auto& y : b->pi.net) values.push_back(orbit_values(*b->X, b->f, y, block));
  const auto approx = approximate_by_linear(b->pi.nerve, b->pi.metric(*b->X), values, spec.delta - spec.noise);
  b->approx_error = approx.max_error;
  if (spec.noise == 0) {
    b->G = approx.g;
    return b;
  }
  GenericOptions opt;
  opt.tag = spec.tag;
  opt.target_dim = spec.N;
  for (int v = 0; v < approx.g.complex().vertex_count(); ++v) opt.base.push_back(approx.g.image(v));
  opt.eta = spec.noise;
  opt.signed_noise = true;
  auto gen = sample_generic_linear(b->pi.nerve.complex, opt, spec.seed);
  b->G = std::move(gen.map);
  b->cert = gen.cert;
  return b;
}

EncoderFixture encoder_fixture(const EncoderSpec& spec, double lambda) {
  EncoderFixture e;
  e.X = std::make_shared<const GridRotation>(GridRotation::standard(1, spec.M, 1, lambda));
  e.f1 = circle(0.25, 1, 1);
  e.f2 = circle(0.2, 2, 1);
  e.enc = construct_g2(encode_g1(*e.X, e.f1, spec), e.f2);
  return e;
}

SymbolicFixture symbolic_fixture(const SymbolicSpec& spec, double lambda, std::size_t palette_sample) {
  SymbolicFixture s;
  s.X = std::make_shared<const GridRotation>(GridRotation::standard(1, spec.L, 1, lambda));
  s.f = tent(1.0, 2.0);
  s.palette = std::make_shared<const TilePalette>(
      build_palette(*s.X, s.f, spec, sample_points(*s.X, palette_sample, derive_seed(spec.seed, 0x7a1))));
  s.painter = std::make_shared<const SymbolicPainter>(paint_symbolic(*s.X, s.f, spec, s.palette));
  return s;
}

}  // namespace mdimkit::fixtures
