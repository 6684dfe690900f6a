#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdimkit/lattice.hpp"

namespace mdimkit {

/// Value of a configuration at one lattice site.
struct CellValue {
  std::optional<int> symbol;
  std::vector<double> vec;  // empty when the system has no vector channel

  bool operator==(const CellValue&) const = default;
};

/// A configuration restricted to a box. Values are stored densely
/// (symbols and vector channel separately) in Box::index order.
class PointWindow {
 public:
  PointWindow() = default;
  PointWindow(Box domain, bool has_symbol, int vector_dim);

  const Box& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  bool has_symbol() const { return has_symbol_; }
  int vector_dim() const { return D_; }

  int symbol(const LatticePoint& n) const { return symbols_[at(n)]; }
  void set_symbol(const LatticePoint& n, int s) { symbols_[at(n)] = s; }
  const double* vec(const LatticePoint& n) const { return vectors_.data() + at(n) * static_cast<std::size_t>(D_); }
  double* vec(const LatticePoint& n) { return vectors_.data() + at(n) * static_cast<std::size_t>(D_); }
  CellValue cell(const LatticePoint& n) const;
  void set_cell(const LatticePoint& n, const CellValue& v);

  /// The window of T^a x: (T^a x)_n = x_{n+a}.
  PointWindow shifted(const LatticePoint& a) const;
  PointWindow restricted(const Box& b) const;

  bool operator==(const PointWindow&) const = default;

 private:
  std::size_t at(const LatticePoint& n) const;

  Box domain_;
  bool has_symbol_ = false;
  int D_ = 0;
  std::vector<int> symbols_;
  std::vector<double> vectors_;
};

/// Per-cell distance: max of the discrete symbol metric and the Euclidean
/// distance of the vector channel.
double cell_distance(const PointWindow& x, const LatticePoint& n, const PointWindow& y, const LatticePoint& m);

/// Diameter of a single cell under cell_distance.
double cell_diameter(bool has_symbol, int vector_dim);

/// Base metric d(x, y) on configurations: weights 2^{-|m|} over |m| <= truncation,
/// combined by a sum or a maximum.
struct BaseMetric {
  enum class Kind { Sum, Max };
  Kind kind = Kind::Sum;
  int truncation = 16;
};

struct WindowDistance {
  double value = 0;
  double truncation_error = 0;
};

/// Bound on the contribution of |m| > truncation to the base metric.
double truncation_tail(const BaseMetric& metric, int k, double cell_diam);

/// d_Omega(x, y) = sup_{n in Omega} d(T^n x, T^n y).
WindowDistance window_distance(const PointWindow& x, const PointWindow& y, const LatticeSet& omega,
                               const BaseMetric& metric = {});

/// Precomputed d_Omega for repeated evaluation on many pairs.
class WindowMetric {
 public:
  WindowMetric(LatticeSet omega, BaseMetric metric, bool has_symbol, int vector_dim);

  /// Box that windows must contain.
  const Box& required_box() const { return required_; }
  const LatticeSet& omega() const { return omega_; }
  const BaseMetric& metric() const { return metric_; }
  double truncation_error() const { return tail_; }
  double operator()(const PointWindow& x, const PointWindow& y) const;

 private:
  LatticeSet omega_;
  BaseMetric metric_;
  Box required_;
  double tail_ = 0;
  std::vector<LatticePoint> offsets_;  // |m| <= truncation
  std::vector<double> offset_weights_;
  // Max metric: every site j gets weight 2^{-dist(j, Omega)}.
  std::vector<LatticePoint> sites_;
  std::vector<double> site_weights_;
};

/// Forbidden pattern: offset -> symbol.
using Pattern = std::map<LatticePoint, int>;

/// Sliding block code: output symbol = table[symbols on n + window].
struct BlockCode {
  std::vector<LatticePoint> window;
  std::map<std::vector<int>, int> table;
  int output_alphabet = 0;
};

struct SystemSpec;

/// A Z^k-shift system represented through its finite windows.
class ShiftSystem {
 public:
  virtual ~ShiftSystem() = default;

  int k() const { return k_; }
  virtual std::string kind() const = 0;
  /// Number of symbols (0 if no symbol channel).
  virtual int alphabet() const = 0;
  /// Dimension of the vector channel (0 if none).
  virtual int vector_dim() const = 0;
  bool has_symbol() const { return alphabet() > 0; }

  /// Random legal configuration on the box; a pure function of (box, seed).
  virtual PointWindow sample(const Box& box, std::uint64_t seed) const = 0;
  /// Checks local constraints; returns a description of the first violation.
  virtual std::optional<std::string> violation(const PointWindow& w) const;
  /// Deterministic special configurations (constant and short-period points)
  /// used to reach extremal values that random sampling misses.
  virtual std::vector<PointWindow> special_samples(const Box& box, int max_period) const;

 protected:
  explicit ShiftSystem(int k) : k_(k) {}

 private:
  int k_;
};

using SystemPtr = std::shared_ptr<const ShiftSystem>;

/// Full shift over {0..alphabet-1}, or the cube shift ([0,1]^D)^{Z^k} when cube_dim > 0.
class FullShift : public ShiftSystem {
 public:
  FullShift(int k, int alphabet, int cube_dim = 0);
  std::string kind() const override { return "full"; }
  int alphabet() const override { return alphabet_; }
  int vector_dim() const override { return D_; }
  PointWindow sample(const Box& box, std::uint64_t seed) const override;
  std::vector<PointWindow> special_samples(const Box& box, int max_period) const override;

 private:
  int alphabet_, D_;
};

/// Subshift of finite type given by forbidden patterns.
class SFT : public ShiftSystem {
 public:
  SFT(int k, int alphabet, std::vector<Pattern> forbidden);
  std::string kind() const override { return "sft"; }
  int alphabet() const override { return alphabet_; }
  int vector_dim() const override { return 0; }
  const std::vector<Pattern>& forbidden() const { return forbidden_; }
  PointWindow sample(const Box& box, std::uint64_t seed) const override;
  std::optional<std::string> violation(const PointWindow& w) const override;
  std::vector<PointWindow> special_samples(const Box& box, int max_period) const override;

  /// k = 1 only: maximal total weight over legal words of length N, where
  /// weight(word) = number of positions whose symbol lies in `marked`.
  std::int64_t max_marked_count_1d(std::int64_t N, const std::vector<int>& marked) const;

 private:
  struct Graph;  // k = 1 transfer graph on words of length span-1
  const Graph& graph() const;
  PointWindow sample_1d(const Box& box, std::uint64_t seed) const;
  PointWindow sample_raster(const Box& box, std::uint64_t seed) const;
  bool placement_ok(const PointWindow& w, const LatticePoint& n, const std::vector<char>& filled) const;

  int alphabet_;
  std::vector<Pattern> forbidden_;
  std::shared_ptr<Graph> graph_;
};

/// Direct product; symbols combine in mixed radix, vector channels concatenate.
class ProductSystem : public ShiftSystem {
 public:
  explicit ProductSystem(std::vector<SystemPtr> components);
  std::string kind() const override { return "product"; }
  int alphabet() const override;
  int vector_dim() const override;
  const std::vector<SystemPtr>& components() const { return parts_; }
  PointWindow sample(const Box& box, std::uint64_t seed) const override;
  std::optional<std::string> violation(const PointWindow& w) const override;
  /// Projection onto component i.
  PointWindow project(const PointWindow& w, std::size_t i) const;

 private:
  std::vector<SystemPtr> parts_;
};

/// Image of a symbolic system under a sliding block code.
class FactorSystem : public ShiftSystem {
 public:
  FactorSystem(SystemPtr base, BlockCode code);
  std::string kind() const override { return "factor"; }
  int alphabet() const override { return code_.output_alphabet; }
  int vector_dim() const override { return 0; }
  const ShiftSystem& base() const { return *base_; }
  /// Applies the code to a base window; the result lives on the eroded box.
  PointWindow apply(const PointWindow& base_window) const;
  /// Box of the base window needed to produce `box`.
  Box base_box(const Box& box) const;
  PointWindow sample(const Box& box, std::uint64_t seed) const override;

 private:
  SystemPtr base_;
  BlockCode code_;
  std::int64_t radius_ = 0;
};

/// Rotation coding on Z: x_n = 1 iff frac(theta + n*alpha) lies in [1 - alpha, 1).
/// Aperiodic for irrational alpha; the default is the golden mean rotation.
class RotationCoding : public ShiftSystem {
 public:
  explicit RotationCoding(double alpha);
  std::string kind() const override { return "rotation"; }
  int alphabet() const override { return 2; }
  int vector_dim() const override { return 0; }
  double alpha() const { return alpha_; }
  PointWindow sample(const Box& box, std::uint64_t seed) const override;
  PointWindow at_phase(const Box& box, double theta) const;

 private:
  double alpha_;
};

/// Serialisable description of a system (see system_from_spec).
struct SystemSpec {
  int k = 1;
  std::string kind = "full";
  int alphabet = 0;
  int cube_D = 0;
  std::vector<Pattern> forbidden;
  std::vector<SystemSpec> components;        // product
  std::shared_ptr<SystemSpec> base;          // factor
  std::optional<BlockCode> block_code;       // factor
  double alpha = 0;                          // rotation
  std::uint64_t seed = 0;

  bool operator==(const SystemSpec& o) const;
};

SystemSpec parse_system_spec(const std::string& json_text);
/// Canonical JSON text (two-space indent, fixed key order, trailing newline).
std::string serialize_system_spec(const SystemSpec& spec);
SystemPtr system_from_spec(const SystemSpec& spec);

/// Pattern offset keys: "3" for k = 1, "0,1" for k = 2.
std::string offset_key(const LatticePoint& p);
LatticePoint parse_offset_key(const std::string& s, int k);

}  // namespace mdimkit
