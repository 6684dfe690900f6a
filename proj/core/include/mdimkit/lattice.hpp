#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdimkit {

/// Largest ambient dimension k supported by the fixed-capacity point types.
inline constexpr int kMaxDim = 4;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A window is too small for the requested computation.
class WindowError : public Error {
 public:
  using Error::Error;
};

/// Coordinate vector of fixed capacity; the active length is dim().
template <class T>
class SmallVec {
 public:
  SmallVec() = default;
  explicit SmallVec(int k) : k_(k) { check_dim(k); }
  SmallVec(std::initializer_list<T> init) : k_(static_cast<int>(init.size())) {
    check_dim(k_);
    int i = 0;
    for (T v : init) c_[i++] = v;
  }

  int dim() const { return k_; }
  T operator[](int i) const { return c_[i]; }
  T& operator[](int i) { return c_[i]; }
  const T* begin() const { return c_.data(); }
  const T* end() const { return c_.data() + k_; }

  auto operator<=>(const SmallVec&) const = default;
  bool operator==(const SmallVec&) const = default;

  SmallVec& operator+=(const SmallVec& o) {
    for (int i = 0; i < k_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  SmallVec& operator-=(const SmallVec& o) {
    for (int i = 0; i < k_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend SmallVec operator+(SmallVec a, const SmallVec& b) { return a += b; }
  friend SmallVec operator-(SmallVec a, const SmallVec& b) { return a -= b; }
  friend SmallVec operator-(SmallVec a) {
    for (int i = 0; i < a.k_; ++i) a.c_[i] = -a.c_[i];
    return a;
  }
  friend SmallVec operator*(T s, SmallVec a) {
    for (int i = 0; i < a.k_; ++i) a.c_[i] *= s;
    return a;
  }
  friend SmallVec operator*(SmallVec a, T s) { return s * a; }

  T norm2() const {
    T s{};
    for (int i = 0; i < k_; ++i) s += c_[i] * c_[i];
    return s;
  }
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }

 private:
  static void check_dim(int k) {
    if (k < 0 || k > kMaxDim) throw Error("dimension out of range: " + std::to_string(k));
  }
  // c_ precedes k_ so the defaulted ordering is lexicographic on coordinates.
  std::array<T, kMaxDim> c_{};
  int k_ = 0;
};

using LatticePoint = SmallVec<std::int64_t>;
using RealPoint = SmallVec<double>;

RealPoint to_real(const LatticePoint& p);
/// Componentwise floor of a real point.
LatticePoint floor_point(const RealPoint& u);
double distance(const RealPoint& a, const RealPoint& b);
std::string to_string(const LatticePoint& p);

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept;
};

/// Axis-aligned integer box [lo, hi] (inclusive).
struct Box {
  LatticePoint lo, hi;

  int dim() const { return lo.dim(); }
  bool operator==(const Box&) const = default;
  bool empty() const;
  bool contains(const LatticePoint& p) const;
  std::int64_t volume() const;
  Box inflated(std::int64_t r) const;
  /// Row-major index of p inside the box (last coordinate fastest).
  std::int64_t index(const LatticePoint& p) const;
  LatticePoint point(std::int64_t idx) const;
  void for_each(const std::function<void(const LatticePoint&)>& fn) const;
};

/// Finite subset of Z^k, stored sorted and duplicate free.
class LatticeSet {
 public:
  LatticeSet() = default;
  explicit LatticeSet(int k) : k_(k) {}
  LatticeSet(int k, std::vector<LatticePoint> pts);

  int ambient_k() const { return k_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  bool contains(const LatticePoint& p) const;
  const std::vector<LatticePoint>& points() const { return pts_; }
  auto begin() const { return pts_.begin(); }
  auto end() const { return pts_.end(); }

  Box bounding_box() const;
  LatticeSet translated(const LatticePoint& a) const;
  LatticeSet united(const LatticeSet& o) const;
  LatticeSet minus(const LatticeSet& o) const;
  LatticeSet intersected(const LatticeSet& o) const;
  bool subset_of(const LatticeSet& o) const;

  bool operator==(const LatticeSet& o) const = default;

 private:
  int k_ = 0;
  std::vector<LatticePoint> pts_;
};

/// Membership bitmap of a LatticeSet restricted to a box; points outside the box are non-members.
class DenseMask {
 public:
  DenseMask(const LatticeSet& s, const Box& box);
  bool contains(const LatticePoint& p) const {
    return box_.contains(p) && bits_[static_cast<std::size_t>(box_.index(p))];
  }
  const Box& box() const { return box_; }

 private:
  Box box_;
  std::vector<char> bits_;
};

/// {0, ..., N-1}^k.
LatticeSet cube_window(std::int64_t N, int k);
/// a + [N].
LatticeSet cube_window_at(const LatticePoint& a, std::int64_t N);
/// All n in Z^k with |n| <= R.
LatticeSet ball_points(double R, int k);
/// All n in Z^k with |n - c| <= R for a real center c.
LatticeSet ball_points_around(const RealPoint& c, double R);
/// Integer offsets o with |o| <= R, sorted by norm then lexicographically.
std::vector<LatticePoint> ball_offsets(double R, int k);

struct Shell {
  LatticeSet boundary;  // may contain points outside Omega
  LatticeSet interior;  // Omega minus boundary
};

Shell shell(const LatticeSet& omega, double R);

struct FolnerRatio {
  std::size_t boundary = 0;         // |boundary shell|
  std::size_t boundary_inside = 0;  // |boundary shell ∩ Omega|
  std::size_t size = 0;             // |Omega|
  double ratio = 0;                 // boundary / size
  double ratio_inside = 0;          // boundary_inside / size
};

FolnerRatio folner_ratio(const LatticeSet& omega, double R);

/// Volume of the Euclidean ball of radius R in R^k.
double ball_volume(int k, double R);

}  // namespace mdimkit

template <>
struct std::hash<mdimkit::LatticePoint> : mdimkit::LatticePointHash {};
