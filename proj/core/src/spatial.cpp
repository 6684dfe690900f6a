#include "mdimkit/spatial.hpp"

#include <algorithm>
#include <cmath>

namespace mdimkit {

SpatialIndex::SpatialIndex(std::vector<LatticePoint> points, double cell) : points_(std::move(points)), cell_(cell) {
  if (!(cell_ > 0)) throw Error("SpatialIndex: cell size must be positive");
  if (points_.empty()) return;
  k_ = points_.front().dim();
  auto cell_of = [&](const LatticePoint& p) {
    LatticePoint c(k_);
    for (int i = 0; i < k_; ++i) c[i] = static_cast<std::int64_t>(std::floor(static_cast<double>(p[i]) / cell_));
    return c;
  };
  cell_box_ = {cell_of(points_.front()), cell_of(points_.front())};
  for (const auto& p : points_) {
    const auto c = cell_of(p);
    for (int i = 0; i < k_; ++i) {
      cell_box_.lo[i] = std::min(cell_box_.lo[i], c[i]);
      cell_box_.hi[i] = std::max(cell_box_.hi[i], c[i]);
    }
  }
  const auto nb = static_cast<std::size_t>(cell_box_.volume());
  std::vector<std::size_t> counts(nb + 1, 0);
  std::vector<std::size_t> bucket(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    bucket[i] = static_cast<std::size_t>(cell_box_.index(cell_of(points_[i])));
    ++counts[bucket[i] + 1];
  }
  for (std::size_t b = 0; b < nb; ++b) counts[b + 1] += counts[b];
  offsets_ = counts;
  entries_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) entries_[counts[bucket[i]]++] = i;
}

void SpatialIndex::query(const RealPoint& u, double r, std::vector<std::size_t>& out) const {
  out.clear();
  if (points_.empty()) return;
  Box range{LatticePoint(k_), LatticePoint(k_)};
  for (int i = 0; i < k_; ++i) {
    range.lo[i] = std::max(cell_box_.lo[i], static_cast<std::int64_t>(std::floor((u[i] - r) / cell_)));
    range.hi[i] = std::min(cell_box_.hi[i], static_cast<std::int64_t>(std::floor((u[i] + r) / cell_)));
    if (range.lo[i] > range.hi[i]) return;
  }
  const double r2 = r * r;
  const std::int64_t vol = range.volume();
  for (std::int64_t t = 0; t < vol; ++t) {
    const auto b = static_cast<std::size_t>(cell_box_.index(range.point(t)));
    for (std::size_t e = offsets_[b]; e < offsets_[b + 1]; ++e) {
      const auto& p = points_[entries_[e]];
      double d2 = 0;
      for (int i = 0; i < k_; ++i) {
        const double d = static_cast<double>(p[i]) - u[i];
        d2 += d * d;
      }
      if (d2 <= r2) out.push_back(entries_[e]);
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace mdimkit
