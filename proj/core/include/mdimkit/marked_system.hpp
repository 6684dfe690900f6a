#pragma once

#include <cstdint>
#include <vector>

#include "mdimkit/lattice.hpp"
#include "mdimkit/markers.hpp"
#include "mdimkit/voronoi.hpp"

namespace mdimkit {

/// Point of (Z/P)^k x T^m: a phase and torus angles in units of 2^-64.
struct RotationPoint {
  LatticePoint phase;
  std::vector<std::uint64_t> angle;

  bool operator==(const RotationPoint&) const = default;
};

/// Z^k acting on (Z/P)^k x T^m by T^n(p, θ) = (p + n mod P, θ + Σ n_i α_i).
/// Angles are fixed point, so shifts compose exactly.
///
/// Metric: d = max(λ [p ≠ q], d_T(θ, θ')) with d_T the sup over coordinates of
/// the circle distance. The action is isometric. The marker function is
/// φ = 1 at phase 0 and 0 elsewhere, so C(x) = -p + P Z^k.
class GridRotation {
 public:
  GridRotation(int k, int period, std::vector<std::vector<std::uint64_t>> alpha, double phase_weight);
  /// Generator i rotates torus coordinate j by frac(sqrt(prime_{i*m+j})).
  static GridRotation standard(int k, int period, int torus_dim, double phase_weight);

  int k() const { return k_; }
  int period() const { return P_; }
  int torus_dim() const { return static_cast<int>(alpha_.empty() ? 0 : alpha_[0].size()); }
  double phase_weight() const { return lambda_; }

  RotationPoint shift(const RotationPoint& x, const LatticePoint& n) const;
  double torus_distance(const RotationPoint& x, const RotationPoint& y) const;
  double distance(const RotationPoint& x, const RotationPoint& y) const;
  /// d_Omega(x, y). The action is isometric, so this is d(x, y) for nonempty Omega.
  double window_distance(const RotationPoint& x, const RotationPoint& y, const LatticeSet& omega) const;
  /// max over n in Omega of d(T^n x, T^n y), evaluated site by site.
  double window_distance_literal(const RotationPoint& x, const RotationPoint& y, const LatticeSet& omega) const;

  RotationPoint point(const LatticePoint& phase, const std::vector<double>& angles) const;
  RotationPoint sample(std::uint64_t seed) const;
  static std::vector<double> angles(const RotationPoint& x);
  static double angle(const RotationPoint& x, int j);

  double phi(const RotationPoint& x) const;
  /// Field phi(T^n x) on the box with the given parameters (not validated).
  MarkerField marker_field(const RotationPoint& x, const Box& window, int M, int L, double H, double s) const;
  /// C(x) on the box: sites n with T^n x at phase 0.
  LatticeSet markers(const RotationPoint& x, const Box& window) const;

 private:
  int k_;
  int P_;
  std::vector<std::vector<std::uint64_t>> alpha_;  // alpha_[i][j]
  double lambda_;
};

/// Circle distance of two fixed-point angles.
double circle_distance(std::uint64_t a, std::uint64_t b);
std::uint64_t angle_from_double(double t);

}  // namespace mdimkit
