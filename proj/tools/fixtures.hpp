#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mdimkit/perturbation.hpp"

namespace mdimkit::fixtures {

/// max(0, height - slope * d_T(theta_0, 0)) as a one-dimensional observable.
PointMap tent(double height, double slope);
/// (0.5 + r sin(2 pi w1 theta_0), 0.5 + r cos(2 pi w2 theta_0)).
PointMap circle(double radius, int w1, int w2);

std::vector<RotationPoint> sample_points(const GridRotation& X, std::size_t n, std::uint64_t seed);

/// F = G o pi on [N]^1 with G fitted to I_f on the nerve net of (X, d_[N]).
/// A positive `noise` perturbs G by signed noise and certifies it with `tag`.
struct BlockFixture {
  std::shared_ptr<const GridRotation> X;
  int N = 1;
  PointMap f;
  WindowEmbedding pi;
  LinearMap G;
  GenericCertificate cert;
  double approx_error = 0;

  BlockMap F() const;
};

struct BlockFixtureSpec {
  int period = 32;
  double lambda = 0.005;
  int N = 4;
  double eps = 0.4;
  double delta = 0.9;
  std::size_t net_per_axis = 64;
  double noise = 0;
  GenericTag tag = GenericTag::ZeroCoordinate;
  std::uint64_t seed = 0;
};

std::shared_ptr<const BlockFixture> block_fixture(const BlockFixtureSpec& spec, PointMap f);

struct EncoderFixture {
  std::shared_ptr<const GridRotation> X;
  PointMap f1, f2;
  std::shared_ptr<const EmbeddingEncoder> enc;
};

/// Two-channel encoder on the grid rotation with period M.
EncoderFixture encoder_fixture(const EncoderSpec& spec, double lambda);

struct SymbolicFixture {
  std::shared_ptr<const GridRotation> X;
  PointMap f;
  std::shared_ptr<const TilePalette> palette;
  std::shared_ptr<const SymbolicPainter> painter;
};

/// Symbolic painter on the grid rotation with period L.
SymbolicFixture symbolic_fixture(const SymbolicSpec& spec, double lambda, std::size_t palette_sample);

}  // namespace mdimkit::fixtures
