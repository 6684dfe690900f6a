#pragma once

#include <cstdint>
#include <vector>

#include "mdimkit/lattice.hpp"

namespace mdimkit {

/// Bucket grid over a set of lattice points for radius queries.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  SpatialIndex(std::vector<LatticePoint> points, double cell);

  const std::vector<LatticePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  /// Indices of points p with |p - u| <= r, in increasing index order.
  void query(const RealPoint& u, double r, std::vector<std::size_t>& out) const;
  std::vector<std::size_t> query(const RealPoint& u, double r) const {
    std::vector<std::size_t> out;
    query(u, r, out);
    return out;
  }

 private:
  std::vector<LatticePoint> points_;
  double cell_ = 1;
  int k_ = 0;
  LatticePoint cell_lo_, cell_hi_;
  Box cell_box_;
  std::vector<std::size_t> offsets_;  // CSR: bucket b holds entries_[offsets_[b] .. offsets_[b+1])
  std::vector<std::size_t> entries_;
};

}  // namespace mdimkit
