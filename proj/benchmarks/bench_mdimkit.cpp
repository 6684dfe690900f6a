#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "mdimkit/dimension.hpp"
#include "mdimkit/markers.hpp"
#include "mdimkit/perturbation.hpp"
#include "mdimkit/rng.hpp"
#include "mdimkit/simplicial.hpp"
#include "mdimkit/systems.hpp"
#include "mdimkit/voronoi.hpp"

using namespace mdimkit;

namespace {

Box square(std::int64_t r) { return Box{LatticePoint{-r, -r}, LatticePoint{r, r}}; }

const LiftedTiling& lifted() {
  static const LiftedTiling t(synthetic_marker_field(16, 16, height_gate(16, 2), 1.2, square(200), 1));
  return t;
}

}  // namespace

static void BM_LiftedOwner(benchmark::State& state) {
  const auto& t = lifted();
  const double H = t.field().H;
  Rng rng(3);
  for (auto _ : state) {
    const RealPoint u{rng.uniform() * 200 - 100, rng.uniform() * 200 - 100};
    benchmark::DoNotOptimize(t.owner(u, -H));
  }
}
BENCHMARK(BM_LiftedOwner);

static void BM_BoundaryFraction(benchmark::State& state) {
  const auto& t = lifted();
  for (auto _ : state)
    benchmark::DoNotOptimize(boundary_fraction(t, 1.0, 100, static_cast<std::size_t>(state.range(0)), 5));
}
BENCHMARK(BM_BoundaryFraction)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_FlatCellCheck(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const Box win = square(6 * L);
  const FlatTiling t(FlatCenters{random_separated_set(win, L, 2), L, win});
  LatticePoint c = t.centers().C.points().front();
  for (const auto& p : t.centers().C)
    if (p.norm2() < c.norm2()) c = p;
  for (auto _ : state) benchmark::DoNotOptimize(flat_cell_check(t, c, 2, 100, 1));
}
BENCHMARK(BM_FlatCellCheck)->Arg(12)->Arg(24)->Unit(benchmark::kMicrosecond);

static void BM_FullShiftEntropy(benchmark::State& state) {
  const FullShift X(1, 2);
  EntropyOptions opt;
  opt.full_enumeration = true;
  for (auto _ : state) benchmark::DoNotOptimize(entropy_profile(X, 0.5, {state.range(0)}, 0, 1, opt));
}
BENCHMARK(BM_FullShiftEntropy)->Arg(6)->Arg(9)->Unit(benchmark::kMillisecond);

static void BM_GenericCertificate(benchmark::State& state) {
  const SimplicialComplex P(6, {{0, 1, 2}, {2, 3, 4}, {1, 4, 5}});
  GenericOptions opt;
  opt.tag = GenericTag::Embedding;
  opt.target_dim = 5;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_generic_linear(P, opt, ++seed));
}
BENCHMARK(BM_GenericCertificate)->Unit(benchmark::kMicrosecond);

static void BM_EncoderImage(benchmark::State& state) {
  static const auto X = GridRotation::standard(1, 54, 1, 0.001);
  static const PointMap f1 = [](const RotationPoint& x) {
    const double t = 2 * M_PI * GridRotation::angle(x, 0);
    return std::vector<double>{0.5 + 0.25 * std::sin(t), 0.5 + 0.25 * std::cos(t)};
  };
  EncoderSpec sp;
  sp.net_per_axis = 32;
  sp.cap = 200000;
  static const auto enc = encode_g1(X, f1, sp);
  const Box box{LatticePoint{-state.range(0)}, LatticePoint{state.range(0)}};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(enc->I_g1(X.sample(++seed), box));
}
BENCHMARK(BM_EncoderImage)->Arg(30)->Arg(120)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
