#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdimkit/lattice.hpp"
#include "mdimkit/systems.hpp"

namespace mdimkit {

/// Values phi(T^n x) on a box together with the separation/syndeticity
/// parameters (M, L) and the lift parameters (H, s).
struct MarkerField {
  Box window;
  std::vector<double> phi;  // Box::index order
  int M = 1;
  int L = 1;
  double H = 0;
  double s = 1;

  int k() const { return window.dim(); }
  double at(const LatticePoint& n) const;
  void set(const LatticePoint& n, double v);
  /// Sites with phi > 0, in lexicographic order.
  std::vector<LatticePoint> support() const;
  /// The same field seen from T^m x: phi'(n) = phi(n + m).
  MarkerField shifted(const LatticePoint& m) const;
};

/// Smallest admissible lift height (L + sqrt(k))^2.
double height_gate(int L, int k);

struct MarkerViolation {
  std::string kind;  // "separation", "syndeticity", "height", "range"
  std::vector<LatticePoint> witnesses;
  std::string message;
};

class MarkerError : public Error {
 public:
  explicit MarkerError(MarkerViolation v) : Error(v.message), violation(std::move(v)) {}
  MarkerViolation violation;
};

/// Checks separation, syndeticity on the window eroded by L, and the H bound.
std::optional<MarkerViolation> check_marker_field(const MarkerField& f);
void validate_marker_field(const MarkerField& f);

/// phi = indicator of {n : n ≡ offset mod spacing}.
MarkerField grid_marker_field(const Box& window, int spacing, const LatticePoint& offset, int M, int L, double H,
                              double s);

struct HeightSpec {
  /// phi on support sites outside the designated ones is uniform on [lo, hi].
  double lo = 0.3;
  double hi = 1.0;
};

/// Greedy random M-separated support with phi = 1 on an (L-M)-separated
/// subfamily, so that every site lies within L of a phi = 1 site.
MarkerField synthetic_marker_field(int M, int L, double H, double s, const Box& window, std::uint64_t seed,
                                   const HeightSpec& heights = {});

/// Greedy random maximal L-separated subset of the box (hence L-syndetic).
LatticeSet random_separated_set(const Box& window, double L, std::uint64_t seed);

/// Cylinder marker produced by the greedy accumulation over a cylinder partition.
class ClopenMarker {
 public:
  int L() const { return L_; }
  /// Cylinder shape radius; -1 means the empty shape (a single cylinder).
  int radius() const { return r_; }
  std::size_t class_count() const { return classes_.size(); }
  const std::vector<std::vector<int>>& classes() const { return classes_; }

  struct Evaluation {
    std::vector<LatticePoint> hits;       // certified positions of U
    std::vector<LatticePoint> certified;  // positions whose membership is decided
    Box pattern_domain;
  };
  /// Positions n with T^n x ∈ U. Membership near the window edge depends on
  /// unseen sites and is left undecided.
  Evaluation evaluate(const PointWindow& x) const;

 private:
  friend ClopenMarker build_clopen_marker(const std::vector<PointWindow>&, int, int);
  std::vector<int> pattern_at(const PointWindow& x, const LatticePoint& p) const;

  int L_ = 1;
  int r_ = -1;
  std::vector<LatticePoint> shape_;
  std::vector<std::vector<int>> classes_;  // ordered cylinder list V_1, V_2, ...
  std::map<std::vector<int>, std::size_t> class_of_;
};

/// The sample contains a configuration whose patterns repeat at L-close positions.
class PeriodicObstruction : public Error {
 public:
  PeriodicObstruction(std::size_t sample_index, LatticePoint position, LatticePoint period, const std::string& msg)
      : Error(msg), sample_index(sample_index), position(position), period(period) {}
  std::size_t sample_index;
  LatticePoint position;
  LatticePoint period;
};

/// Builds the marker from an explicit sample; the cylinder radius is the
/// smallest one (from -1 up to max_radius) separating L-close shifts.
ClopenMarker build_clopen_marker(const std::vector<PointWindow>& sample, int L, int max_radius);

/// Samples n_samples windows of Z on `window` and builds the marker; the radius is capped at window/4.
ClopenMarker clopen_marker(const ShiftSystem& Z, int L, const Box& window, int n_samples, std::uint64_t seed);

struct ClopenCheck {
  bool separated = true;  // no two hits at distance in (0, L)
  bool syndetic = true;   // every certified site has a hit within distance < L
  std::size_t hits = 0;
  std::size_t certified = 0;
  std::vector<LatticePoint> witnesses;
};

ClopenCheck check_clopen_marker(const ClopenMarker& U, const PointWindow& x);

/// phi(n) = 1 if T^n x ∈ U else 0, on the largest centered sub-box where U is decided.
MarkerField marker_field_from_system(const PointWindow& x, const ClopenMarker& U, int M, int L, double H, double s);

}  // namespace mdimkit
