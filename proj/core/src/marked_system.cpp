#include "mdimkit/marked_system.hpp"

#include <algorithm>
#include <cmath>

#include "mdimkit/rng.hpp"

namespace mdimkit {

double circle_distance(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t d = a - b;
  const std::uint64_t m = std::min(d, static_cast<std::uint64_t>(0) - d);
  return static_cast<double>(m) * 0x1.0p-64;
}

std::uint64_t angle_from_double(double t) {
  t -= std::floor(t);
  const long double scaled = static_cast<long double>(t) * 0x1.0p64L;
  if (scaled >= 0x1.0p64L) return 0;
  return static_cast<std::uint64_t>(scaled);
}

GridRotation::GridRotation(int k, int period, std::vector<std::vector<std::uint64_t>> alpha, double phase_weight)
    : k_(k), P_(period), alpha_(std::move(alpha)), lambda_(phase_weight) {
  if (k < 1 || k > kMaxDim) throw Error("GridRotation: k out of range");
  if (period < 1) throw Error("GridRotation: period must be >= 1");
  if (static_cast<int>(alpha_.size()) != k) throw Error("GridRotation: one rotation vector per generator");
  for (const auto& a : alpha_)
    if (a.size() != alpha_[0].size()) throw Error("GridRotation: rotation vectors differ in length");
  if (!(phase_weight > 0)) throw Error("GridRotation: phase weight must be positive");
}

GridRotation GridRotation::standard(int k, int period, int torus_dim, double phase_weight) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  std::vector<std::vector<std::uint64_t>> alpha(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < torus_dim; ++j) {
      const long double r = std::sqrt(static_cast<long double>(primes[(i * torus_dim + j) % 16]));
      const long double frac = r - std::floor(r);
      alpha[static_cast<std::size_t>(i)].push_back(static_cast<std::uint64_t>(frac * 0x1.0p64L));
    }
  return GridRotation(k, period, std::move(alpha), phase_weight);
}

RotationPoint GridRotation::shift(const RotationPoint& x, const LatticePoint& n) const {
  RotationPoint y = x;
  for (int i = 0; i < k_; ++i) {
    y.phase[i] = ((x.phase[i] + n[i]) % P_ + P_) % P_;
    const auto step = static_cast<std::uint64_t>(n[i]);  // two's complement wrap is the torus action
    for (std::size_t j = 0; j < y.angle.size(); ++j) y.angle[j] += step * alpha_[static_cast<std::size_t>(i)][j];
  }
  return y;
}

double GridRotation::torus_distance(const RotationPoint& x, const RotationPoint& y) const {
  double d = 0;
  for (std::size_t j = 0; j < x.angle.size(); ++j) d = std::max(d, circle_distance(x.angle[j], y.angle[j]));
  return d;
}

double GridRotation::distance(const RotationPoint& x, const RotationPoint& y) const {
  const double dp = x.phase == y.phase ? 0.0 : lambda_;
  return std::max(dp, torus_distance(x, y));
}

double GridRotation::window_distance(const RotationPoint& x, const RotationPoint& y, const LatticeSet& omega) const {
  return omega.empty() ? 0.0 : distance(x, y);
}

double GridRotation::window_distance_literal(const RotationPoint& x, const RotationPoint& y,
                                             const LatticeSet& omega) const {
  double d = 0;
  for (const auto& n : omega) d = std::max(d, distance(shift(x, n), shift(y, n)));
  return d;
}

RotationPoint GridRotation::point(const LatticePoint& phase, const std::vector<double>& angles) const {
  if (phase.dim() != k_ || static_cast<int>(angles.size()) != torus_dim()) throw Error("GridRotation: bad point shape");
  RotationPoint x{phase, {}};
  for (int i = 0; i < k_; ++i) x.phase[i] = ((phase[i] % P_) + P_) % P_;
  for (double t : angles) x.angle.push_back(angle_from_double(t));
  return x;
}

RotationPoint GridRotation::sample(std::uint64_t seed) const {
  Rng rng(seed);
  RotationPoint x{LatticePoint(k_), {}};
  for (int i = 0; i < k_; ++i) x.phase[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(P_)));
  for (int j = 0; j < torus_dim(); ++j) x.angle.push_back(rng());
  return x;
}

double GridRotation::angle(const RotationPoint& x, int j) {
  return static_cast<double>(x.angle[static_cast<std::size_t>(j)]) * 0x1.0p-64;
}

std::vector<double> GridRotation::angles(const RotationPoint& x) {
  std::vector<double> out;
  for (std::size_t j = 0; j < x.angle.size(); ++j) out.push_back(angle(x, static_cast<int>(j)));
  return out;
}

double GridRotation::phi(const RotationPoint& x) const {
  for (int i = 0; i < k_; ++i)
    if (x.phase[i] != 0) return 0.0;
  return 1.0;
}

MarkerField GridRotation::marker_field(const RotationPoint& x, const Box& window, int M, int L, double H,
                                       double s) const {
  MarkerField f{window, std::vector<double>(static_cast<std::size_t>(window.volume()), 0.0), M, L, H, s};
  window.for_each([&](const LatticePoint& n) {
    bool on = true;
    for (int i = 0; i < k_; ++i) on = on && ((x.phase[i] + n[i]) % P_ + P_) % P_ == 0;
    if (on) f.set(n, phi(shift(x, n)));
  });
  return f;
}

LatticeSet GridRotation::markers(const RotationPoint& x, const Box& window) const {
  std::vector<LatticePoint> pts;
  window.for_each([&](const LatticePoint& n) {
    if (phi(shift(x, n)) > 0) pts.push_back(n);
  });
  return LatticeSet(k_, std::move(pts));
}

}  // namespace mdimkit
