#include "mdimkit/lattice.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace mdimkit {

RealPoint to_real(const LatticePoint& p) {
  RealPoint r(p.dim());
  for (int i = 0; i < p.dim(); ++i) r[i] = static_cast<double>(p[i]);
  return r;
}

LatticePoint floor_point(const RealPoint& u) {
  LatticePoint p(u.dim());
  for (int i = 0; i < u.dim(); ++i) p[i] = static_cast<std::int64_t>(std::floor(u[i]));
  return p;
}

double distance(const RealPoint& a, const RealPoint& b) { return (a - b).norm(); }

std::string to_string(const LatticePoint& p) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < p.dim(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

std::size_t LatticePointHash::operator()(const LatticePoint& p) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    h ^= static_cast<std::uint64_t>(p[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

bool Box::empty() const {
  for (int i = 0; i < dim(); ++i)
    if (hi[i] < lo[i]) return true;
  return dim() == 0;
}

bool Box::contains(const LatticePoint& p) const {
  for (int i = 0; i < dim(); ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

std::int64_t Box::volume() const {
  if (empty()) return 0;
  std::int64_t v = 1;
  for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i] + 1;
  return v;
}

Box Box::inflated(std::int64_t r) const {
  Box b = *this;
  for (int i = 0; i < dim(); ++i) {
    b.lo[i] -= r;
    b.hi[i] += r;
  }
  return b;
}

std::int64_t Box::index(const LatticePoint& p) const {
  std::int64_t idx = 0;
  for (int i = 0; i < dim(); ++i) idx = idx * (hi[i] - lo[i] + 1) + (p[i] - lo[i]);
  return idx;
}

LatticePoint Box::point(std::int64_t idx) const {
  LatticePoint p(dim());
  for (int i = dim() - 1; i >= 0; --i) {
    const std::int64_t w = hi[i] - lo[i] + 1;
    p[i] = lo[i] + idx % w;
    idx /= w;
  }
  return p;
}

void Box::for_each(const std::function<void(const LatticePoint&)>& fn) const {
  const std::int64_t v = volume();
  for (std::int64_t i = 0; i < v; ++i) fn(point(i));
}

LatticeSet::LatticeSet(int k, std::vector<LatticePoint> pts) : k_(k), pts_(std::move(pts)) {
  for (const auto& p : pts_)
    if (p.dim() != k_) throw Error("LatticeSet: point " + to_string(p) + " has wrong dimension");
  std::sort(pts_.begin(), pts_.end());
  pts_.erase(std::unique(pts_.begin(), pts_.end()), pts_.end());
}

bool LatticeSet::contains(const LatticePoint& p) const {
  return std::binary_search(pts_.begin(), pts_.end(), p);
}

Box LatticeSet::bounding_box() const {
  if (pts_.empty()) throw Error("bounding_box of empty set");
  Box b{pts_.front(), pts_.front()};
  for (const auto& p : pts_) {
    for (int i = 0; i < k_; ++i) {
      b.lo[i] = std::min(b.lo[i], p[i]);
      b.hi[i] = std::max(b.hi[i], p[i]);
    }
  }
  return b;
}

LatticeSet LatticeSet::translated(const LatticePoint& a) const {
  LatticeSet out(k_);
  out.pts_.reserve(pts_.size());
  for (const auto& p : pts_) out.pts_.push_back(p + a);
  return out;  // translation preserves lexicographic order
}

LatticeSet LatticeSet::united(const LatticeSet& o) const {
  LatticeSet out(k_);
  std::set_union(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(), std::back_inserter(out.pts_));
  return out;
}

LatticeSet LatticeSet::minus(const LatticeSet& o) const {
  LatticeSet out(k_);
  std::set_difference(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(),
                      std::back_inserter(out.pts_));
  return out;
}

LatticeSet LatticeSet::intersected(const LatticeSet& o) const {
  LatticeSet out(k_);
  std::set_intersection(pts_.begin(), pts_.end(), o.pts_.begin(), o.pts_.end(),
                        std::back_inserter(out.pts_));
  return out;
}

bool LatticeSet::subset_of(const LatticeSet& o) const {
  return std::includes(o.pts_.begin(), o.pts_.end(), pts_.begin(), pts_.end());
}

DenseMask::DenseMask(const LatticeSet& s, const Box& box)
    : box_(box), bits_(static_cast<std::size_t>(box.volume()), 0) {
  for (const auto& p : s)
    if (box_.contains(p)) bits_[static_cast<std::size_t>(box_.index(p))] = 1;
}

LatticeSet cube_window(std::int64_t N, int k) {
  if (N < 1) throw Error("cube_window: N must be >= 1");
  if (k < 1) throw Error("cube_window: k must be >= 1");
  return cube_window_at(LatticePoint(k), N);
}

LatticeSet cube_window_at(const LatticePoint& a, std::int64_t N) {
  if (N < 1) throw Error("cube_window: N must be >= 1");
  Box b{a, a};
  for (int i = 0; i < a.dim(); ++i) b.hi[i] = a[i] + N - 1;
  std::vector<LatticePoint> pts;
  pts.reserve(static_cast<std::size_t>(b.volume()));
  b.for_each([&](const LatticePoint& p) { pts.push_back(p); });
  return LatticeSet(a.dim(), std::move(pts));
}

std::vector<LatticePoint> ball_offsets(double R, int k) {
  if (R < 0) throw Error("ball radius must be nonnegative");
  const auto r = static_cast<std::int64_t>(std::floor(R));
  Box b{LatticePoint(k), LatticePoint(k)};
  b = b.inflated(r);
  std::vector<LatticePoint> out;
  const double R2 = R * R;
  b.for_each([&](const LatticePoint& p) {
    if (static_cast<double>(p.norm2()) <= R2) out.push_back(p);
  });
  std::stable_sort(out.begin(), out.end(),
                   [](const LatticePoint& a, const LatticePoint& b) { return a.norm2() < b.norm2(); });
  return out;
}

LatticeSet ball_points(double R, int k) {
  if (k < 1) throw Error("ball_points: k must be >= 1");
  return LatticeSet(k, ball_offsets(R, k));
}

LatticeSet ball_points_around(const RealPoint& c, double R) {
  const int k = c.dim();
  Box b{LatticePoint(k), LatticePoint(k)};
  for (int i = 0; i < k; ++i) {
    b.lo[i] = static_cast<std::int64_t>(std::floor(c[i] - R));
    b.hi[i] = static_cast<std::int64_t>(std::ceil(c[i] + R));
  }
  std::vector<LatticePoint> pts;
  b.for_each([&](const LatticePoint& p) {
    double d2 = 0;
    for (int i = 0; i < k; ++i) d2 += (static_cast<double>(p[i]) - c[i]) * (static_cast<double>(p[i]) - c[i]);
    if (d2 <= R * R) pts.push_back(p);
  });
  return LatticeSet(k, std::move(pts));
}

Shell shell(const LatticeSet& omega, double R) {
  if (!(R > 0)) throw Error("shell: R must be positive");
  if (omega.empty()) throw Error("shell: empty set");
  const int k = omega.ambient_k();
  const auto r = static_cast<std::int64_t>(std::ceil(R));
  const Box candidates = omega.bounding_box().inflated(r);
  const DenseMask mask(omega, candidates.inflated(r));
  const auto offsets = ball_offsets(R, k);

  std::vector<LatticePoint> boundary;
  candidates.for_each([&](const LatticePoint& n) {
    bool in = false, out = false;
    for (const auto& o : offsets) {
      if (mask.contains(n + o)) in = true;
      else out = true;
      if (in && out) {
        boundary.push_back(n);
        return;
      }
    }
  });
  Shell s;
  s.boundary = LatticeSet(k, std::move(boundary));
  s.interior = omega.minus(s.boundary);
  return s;
}

FolnerRatio folner_ratio(const LatticeSet& omega, double R) {
  const Shell s = shell(omega, R);
  FolnerRatio f;
  f.boundary = s.boundary.size();
  f.size = omega.size();
  f.boundary_inside = f.size - s.interior.size();
  f.ratio = static_cast<double>(f.boundary) / static_cast<double>(f.size);
  f.ratio_inside = static_cast<double>(f.boundary_inside) / static_cast<double>(f.size);
  return f;
}

double ball_volume(int k, double R) {
  return std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0) * std::pow(R, k);
}

}  // namespace mdimkit
