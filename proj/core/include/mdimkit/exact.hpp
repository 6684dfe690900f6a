#pragma once

#include <cstdint>
#include <gmpxx.h>
#include <vector>

namespace mdimkit {

using Rational = mpq_class;
using Integer = mpz_class;

/// Exact coordinates are dyadic: numerator / 2^kGridBits.
inline constexpr int kGridBits = 53;
inline constexpr double kGridScale = 0x1.0p53;

/// Integer point in grid units (value = coords / 2^53).
using GridVec = std::vector<std::int64_t>;

std::int64_t snap_to_grid(double v);
double grid_to_double(std::int64_t num);
Rational grid_rational(std::int64_t num);

/// Rank of an integer matrix given by rows. A rank computed modulo a 61-bit
/// prime is a lower bound on the rational rank; GMP elimination runs only when
/// that filter is not conclusive.
int exact_rank(const std::vector<GridVec>& rows);
int rational_rank(std::vector<std::vector<Rational>> rows);

/// True iff the points are affinely independent over Q.
bool affinely_independent(const std::vector<GridVec>& pts);

enum class HullOrigin {
  Outside,     // certified: 0 is not in the convex hull
  Inside,      // 0 is in the convex hull
  Degenerate,  // points are affinely dependent; no decision attempted
};

/// Decides 0 ∈ conv(pts) for at most dim+1 points by solving
/// [pts; 1^T] lambda = [0; 1] exactly.
HullOrigin origin_in_hull(const std::vector<GridVec>& pts);

}  // namespace mdimkit
