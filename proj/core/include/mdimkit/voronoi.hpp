#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdimkit/lattice.hpp"
#include "mdimkit/markers.hpp"
#include "mdimkit/spatial.hpp"

namespace mdimkit {

/// Marker positions C(x) known on `window`, L-separated and L-syndetic.
struct FlatCenters {
  LatticeSet C;
  int L = 1;
  Box window;
};

/// Nearest-center partition of R^k with lexicographic tie-breaking.
class FlatTiling {
 public:
  explicit FlatTiling(FlatCenters centers);

  const FlatCenters& centers() const { return c_; }
  /// Candidate radius: a center lies within L + sqrt(k)/2 <= L + 1 of any point.
  double candidate_radius() const { return c_.L + 1.0; }

  LatticePoint owner(const RealPoint& u) const;
  LatticePoint owner(const LatticePoint& u) const { return owner(to_real(u)); }
  /// V^Z(n): lattice points owned by n (all lie in B_L(n)).
  LatticeSet lattice_cell(const LatticePoint& n) const;
  /// Distance from u (owned by n) to the boundary of V(n).
  double boundary_distance(const LatticePoint& n, const RealPoint& u) const;

 private:
  void check_query(const RealPoint& u, double radius) const;
  FlatCenters c_;
  SpatialIndex index_;
};

/// Flat-cell shell bound:
/// ((1+2(R+√k)/L)^k - (1-2(R+√k)/L)^k) / (1-2√k/L)^k.
double flat_cell_ratio_bound(int k, double L, double R);

struct CellReport {
  LatticePoint center;
  LatticeSet lattice_points;
  LatticeSet boundary_shell;
  double ratio = 0;
  double bound = 0;
  bool ratio_within_bound = false;
  bool ratio_below_inverse_R = false;
  std::size_t ball_probes = 0;
  std::size_t ball_violations = 0;
  std::optional<RealPoint> ball_witness;
};

/// Exact enumeration of V^Z(n) and its R-shell, plus a seeded check that
/// B_{L/2}(n) lies in V(n).
CellReport flat_cell_check(const FlatTiling& tiling, const LatticePoint& n, double R, std::size_t ball_probes = 1000,
                           std::uint64_t seed = 0);

/// Cells of the lifted centers (n, 1/phi(n)) in R^{k+1}, sliced at height h.
class LiftedTiling {
 public:
  explicit LiftedTiling(MarkerField field);

  const MarkerField& field() const { return f_; }
  int k() const { return f_.k(); }
  double H() const { return f_.H; }
  const std::vector<LatticePoint>& centers() const { return index_.points(); }
  double height_of(std::size_t idx) const { return heights_[idx]; }

  /// Radius beyond which no center can be nearest to (u, h).
  double candidate_radius(double h) const;
  /// Sub-box of the window where owners at heights h <= 1 are decided by known centers.
  Box valid_box() const;

  LatticePoint owner(const RealPoint& u, double h) const;
  LatticePoint owner(const LatticePoint& u, double h) const { return owner(to_real(u), h); }
  /// dist(u, ∂W) for the slice at height h of the cell of n; u must be owned by n.
  double boundary_distance(const LatticePoint& n, const RealPoint& u, double h) const;
  double boundary_distance(const LatticePoint& n, const RealPoint& u) const { return boundary_distance(n, u, -H()); }
  /// W(n) ∩ Z^k at height h.
  LatticeSet lattice_cell(const LatticePoint& n, double h) const;

 private:
  std::size_t center_index(const LatticePoint& n) const;
  void check_query(const RealPoint& u, double radius) const;

  MarkerField f_;
  SpatialIndex index_;
  std::vector<double> heights_;
};

/// Free-function forms of the tiling predicates.
LatticePoint flat_owner(const FlatTiling& t, const RealPoint& u);
LatticePoint lifted_owner(const LiftedTiling& t, const RealPoint& u, double h);
double w_boundary_distance(const LiftedTiling& t, const LatticePoint& n, const RealPoint& u);

struct Lemma41Params {
  double r = -1;  // requested ball radius for check (4); negative means "use the explicit formula"
  std::size_t probes = 10000;
  std::size_t ball_samples = 8;  // points per ball in checks (1) and (4)
  double scan_pitch = 0.5;       // grid pitch for check (2)
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string name;
  std::string status;  // "pass", "fail", "gate"
  std::size_t probes = 0;
  std::size_t violations = 0;
  std::string detail;
};

struct Lemma41Report {
  std::vector<CheckResult> checks;  // (1), (2), (3), (4)
  double radius_formula = 0;        // (s-1)HM / (2(sH+2)), worst case t = 2
  double offset_bound = 0;          // 4(L + sqrt(k)) / H
  double r_used = 0;
  double max_offset_seen = 0;
  bool passed() const;
};

Lemma41Report lemma41_check(const LiftedTiling& t, const Lemma41Params& p);

struct BoundaryFractionOptions {
  enum class Mode { ProbeNet, Exact };
  Mode mode = Mode::ProbeNet;
  double pitch_ratio = 0.25;  // probe pitch as a fraction of E
  double fixed_pitch = 0;     // if > 0, overrides pitch_ratio (nested nets across E)
  RealPoint center;           // ball center; default origin
};

struct FractionEstimate {
  double estimate = 0;
  double std_error = 0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of vol(∂(x,E) ∩ B_R) / vol(B_R) at height -H.
FractionEstimate boundary_fraction(const LiftedTiling& t, double E, double R, std::size_t n_samples,
                                   std::uint64_t seed, const BoundaryFractionOptions& opt = {});

/// Upper bound 1 - s^{-k}((R - 2L - 2√k)/R)^k of the boundary fraction.
double boundary_fraction_bound(int k, double L, double s, double R);

}  // namespace mdimkit
