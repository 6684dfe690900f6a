#include "mdimkit/exact.hpp"

#include <cmath>
#include <utility>

#include "mdimkit/lattice.hpp"

__extension__ typedef unsigned __int128 u128;
__extension__ typedef __int128 i128;

namespace mdimkit {
namespace {

constexpr std::uint64_t kPrime = 2305843009213693951ULL;  // 2^61 - 1

std::uint64_t mod_p(std::int64_t v) {
  const std::int64_t r = v % static_cast<std::int64_t>(kPrime);
  return static_cast<std::uint64_t>(r < 0 ? r + static_cast<std::int64_t>(kPrime) : r);
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>((static_cast<u128>(a) * b) % kPrime);
}

std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e) {
    if (e & 1) r = mul_mod(r, a);
    a = mul_mod(a, a);
    e >>= 1;
  }
  return r;
}

int rank_mod_p(std::vector<std::vector<std::uint64_t>> m) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && static_cast<std::size_t>(rank) < rows; ++c) {
    std::size_t piv = static_cast<std::size_t>(rank);
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[static_cast<std::size_t>(rank)]);
    auto& pr = m[static_cast<std::size_t>(rank)];
    const std::uint64_t inv = pow_mod(pr[c], kPrime - 2);
    for (std::size_t r = static_cast<std::size_t>(rank) + 1; r < rows; ++r) {
      if (m[r][c] == 0) continue;
      const std::uint64_t f = mul_mod(m[r][c], inv);
      for (std::size_t j = c; j < cols; ++j) {
        m[r][j] = (m[r][j] + kPrime - mul_mod(f, pr[j])) % kPrime;
      }
    }
    ++rank;
  }
  return rank;
}

std::vector<std::vector<std::uint64_t>> to_mod(const std::vector<GridVec>& rows) {
  std::vector<std::vector<std::uint64_t>> m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m[i].reserve(rows[i].size());
    for (auto v : rows[i]) m[i].push_back(mod_p(v));
  }
  return m;
}

std::vector<std::vector<Rational>> to_rational(const std::vector<GridVec>& rows) {
  std::vector<std::vector<Rational>> m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto v : rows[i]) m[i].emplace_back(static_cast<long>(v));
  return m;
}

// Differences p_i - p_0, computed in 128 bits and checked to fit.
std::vector<GridVec> differences(const std::vector<GridVec>& pts) {
  std::vector<GridVec> d;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    GridVec row(pts[i].size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const i128 v = static_cast<i128>(pts[i][j]) - pts[0][j];
      if (v > INT64_MAX || v < INT64_MIN) throw Error("grid coordinates out of range");
      row[j] = static_cast<std::int64_t>(v);
    }
    d.push_back(std::move(row));
  }
  return d;
}

}  // namespace

std::int64_t snap_to_grid(double v) {
  if (!(std::fabs(v) < 1024.0)) throw Error("snap_to_grid: value out of range");
  return static_cast<std::int64_t>(std::nearbyint(v * kGridScale));
}

double grid_to_double(std::int64_t num) { return static_cast<double>(num) / kGridScale; }

Rational grid_rational(std::int64_t num) {
  Rational q{Integer(static_cast<long>(num)), Integer(1) << kGridBits};
  q.canonicalize();
  return q;
}

int rational_rank(std::vector<std::vector<Rational>> m) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && static_cast<std::size_t>(rank) < rows; ++c) {
    std::size_t piv = static_cast<std::size_t>(rank);
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[static_cast<std::size_t>(rank)]);
    const auto& pr = m[static_cast<std::size_t>(rank)];
    for (std::size_t r = static_cast<std::size_t>(rank) + 1; r < rows; ++r) {
      if (m[r][c] == 0) continue;
      const Rational f = m[r][c] / pr[c];
      for (std::size_t j = c; j < cols; ++j) m[r][j] -= f * pr[j];
    }
    ++rank;
  }
  return rank;
}

int exact_rank(const std::vector<GridVec>& rows) {
  if (rows.empty()) return 0;
  const int full = static_cast<int>(std::min(rows.size(), rows[0].size()));
  const int r = rank_mod_p(to_mod(rows));
  if (r == full) return r;
  return rational_rank(to_rational(rows));
}

bool affinely_independent(const std::vector<GridVec>& pts) {
  if (pts.size() <= 1) return true;
  if (pts.size() - 1 > pts[0].size()) return false;
  return exact_rank(differences(pts)) == static_cast<int>(pts.size() - 1);
}

HullOrigin origin_in_hull(const std::vector<GridVec>& pts) {
  if (pts.empty()) return HullOrigin::Outside;
  const std::size_t m = pts.size(), d = pts[0].size();
  // Augmented system [Q; 1^T | (0; 1)] with one row per coordinate plus the affine row.
  std::vector<GridVec> aug(d + 1, GridVec(m + 1, 0));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < d; ++i) aug[i][j] = pts[j][i];
    aug[d][j] = 1;
  }
  aug[d][m] = 1;
  // Full column rank of the augmented matrix means the system is inconsistent.
  if (m + 1 <= d + 1 && rank_mod_p(to_mod(aug)) == static_cast<int>(m + 1)) return HullOrigin::Outside;

  auto q = to_rational(aug);
  std::vector<std::vector<Rational>> a(d + 1);
  for (std::size_t i = 0; i <= d; ++i) a[i].assign(q[i].begin(), q[i].begin() + static_cast<long>(m));
  const int rank_a = rational_rank(a);
  const int rank_aug = rational_rank(q);
  if (rank_aug > rank_a) return HullOrigin::Outside;
  if (rank_a < static_cast<int>(m)) return HullOrigin::Degenerate;

  // Unique solution: reduce to row echelon form and back-substitute.
  const std::size_t rows = d + 1;
  std::size_t r = 0;
  std::vector<std::size_t> pivot_col;
  for (std::size_t c = 0; c < m && r < rows; ++c) {
    std::size_t piv = r;
    while (piv < rows && q[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(q[piv], q[r]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || q[i][c] == 0) continue;
      const Rational f = q[i][c] / q[r][c];
      for (std::size_t j = c; j <= m; ++j) q[i][j] -= f * q[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (std::size_t i = 0; i < pivot_col.size(); ++i) {
    const Rational lambda = q[i][m] / q[i][pivot_col[i]];
    if (lambda < 0) return HullOrigin::Outside;
  }
  return HullOrigin::Inside;
}

}  // namespace mdimkit
