#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdimkit/simplicial.hpp"
#include "mdimkit/systems.hpp"

namespace mdimkit {

struct CoveringCount {
  std::size_t greedy = 0;
  std::optional<std::size_t> exact;  // samples of at most kExactCoverLimit points

  std::size_t best() const { return exact ? *exact : greedy; }
};

inline constexpr std::size_t kExactCoverLimit = 14;

/// Number of diameter-<eps sets needed to cover the sample.
CoveringCount covering_number(const FiniteMetric& m, double eps);

/// d_Omega on a list of windows.
FiniteMetric window_sample_metric(std::shared_ptr<const std::vector<PointWindow>> points, WindowMetric metric);

/// Seeded windows on `box`; special samples (constant and short-period points) are appended when requested.
std::vector<PointWindow> sample_windows(const ShiftSystem& X, const Box& box, std::size_t count, std::uint64_t seed,
                                        int special_period = 0);

struct ProfileRow {
  double epsilon = 0;
  std::int64_t window = 0;  // N for cubes, R for balls
  double raw = 0;           // log A or widim bound
  double normalized = 0;    // raw / |window|
  double running_inf = 0;
  double std_error = 0;     // |value(S) - value(S/2)|, the doubling sensitivity
  bool operator==(const ProfileRow&) const = default;
};

struct ScaleProfile {
  std::string sequence = "cube";
  std::vector<ProfileRow> rows;
  /// Columns: epsilon, N_or_R, raw, normalized, running_inf, stderr.
  std::string to_csv(bool header = true) const;
};

struct EntropyOptions {
  BaseMetric metric{BaseMetric::Kind::Max, 16};
  /// Replace random sampling by every admissible block on [N] (finite alphabets only),
  /// with sites outside [N] taken from a random sample.
  bool full_enumeration = false;
  std::size_t enumeration_cap = std::size_t{1} << 16;
};

/// Per N: (1/N^k) log A(sample, eps, d_[N]) with the running infimum over N.
ScaleProfile entropy_profile(const ShiftSystem& X, double eps, const std::vector<std::int64_t>& N_grid,
                             std::size_t sample_size, std::uint64_t seed, const EntropyOptions& opt = {});

struct WidimBound {
  int bound = 0;
  NerveEmbedding cert;
};

/// Dimension of the nerve of a greedy cover: an explicit eps-embedding of the sample.
WidimBound widim_upper(const FiniteMetric& m, double eps);

struct FolnerAgreement {
  double epsilon = 0;
  double cube_value = 0;
  double ball_value = 0;
  double tolerance = 0;
  bool agree = false;
};

struct MdimProfile {
  ScaleProfile cubes;
  ScaleProfile balls;
  std::vector<FolnerAgreement> agreement;
};

struct MdimOptions {
  BaseMetric metric{BaseMetric::Kind::Max, 16};
  std::vector<double> R_grid;  // defaults to (N-1)/2 for each N
};

/// widim upper bounds per (eps, window) normalized by the window size, along cubes [N]^k and balls B_R.
MdimProfile mdim_profile(const ShiftSystem& X, const std::vector<double>& eps_grid,
                         const std::vector<std::int64_t>& N_grid, std::size_t sample_size, std::uint64_t seed,
                         const MdimOptions& opt = {});

/// Cell predicate: does T^n x lie in A (x given by a window)?
using CellPredicate = std::function<bool(const PointWindow&, const LatticePoint&)>;

struct OcapRow {
  std::string sequence;  // "cube" or "ball"
  double window = 0;     // N or R
  std::size_t sites = 0;
  std::size_t sup_count = 0;
  double normalized = 0;
};

struct OcapEstimate {
  std::string predicate_id;
  std::vector<OcapRow> rows;
  /// Inf over the cube windows of the normalized sup counts. The sup is taken over
  /// the sample, so each row is a lower bound of the true sup at that window.
  double inf_over_windows = 0;
  std::string to_csv() const;
};

OcapEstimate ocap_estimate(const ShiftSystem& X, const CellPredicate& A, const std::string& predicate_id,
                           const std::vector<std::int64_t>& N_grid, const std::vector<double>& R_grid,
                           std::size_t sample_size, std::uint64_t seed);

/// c = sum_{n in Z^k} 2^{-|n|} (truncated at |n| <= truncation, plus a tail bound) and kappa = 1/(2c).
struct KappaConstant {
  double c = 0;
  double tail = 0;
  double kappa = 0;
};
KappaConstant kappa_constant(int k, int truncation = 32);

struct KappaCheck {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double L = 0;              // tail radius with sum_{|n|>L} 2^{-|n|} diam < eps/2
  double max_slack = 0;      // min over pairs of c||pi x - pi y|| + eps/2 - D
};

/// Checks D_{B_R}(x, y) < c ||pi(x) - pi(y)||_inf + eps/2 on sampled pairs,
/// where pi projects to B_{R+L} and D uses the sum metric.
KappaCheck kappa_route_check(const ShiftSystem& X, double R, double eps, std::size_t pairs, std::uint64_t seed);

}  // namespace mdimkit
