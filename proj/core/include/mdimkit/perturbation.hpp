#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdimkit/lattice.hpp"
#include "mdimkit/marked_system.hpp"
#include "mdimkit/simplicial.hpp"
#include "mdimkit/voronoi.hpp"

namespace mdimkit {

/// Continuous observable X -> R^D.
using PointMap = std::function<std::vector<double>(const RotationPoint&)>;

/// alpha(t) = min(1, t) on t >= 0.
double alpha_cutoff(double t);
/// beta(t) = max(0, 1 - t/tau).
double beta_cutoff(double t, double tau);

/// I_f(x) restricted to `sites`, site-major with D values per site.
std::vector<double> orbit_values(const GridRotation& X, const PointMap& f, const RotationPoint& x,
                                 const std::vector<LatticePoint>& sites);

/// Nerve map of (X, d_Omega) built from a phase-0 angle grid.
///
/// Every point of X lies within `net_radius` of the grid in d_Omega, and the
/// constructor requires net_radius < r_blend, so the closure-mode nerve map is
/// defined on all of X with fibers of diameter < fiber_bound < eps.
struct WindowEmbedding {
  LatticeSet omega;
  std::vector<RotationPoint> net;
  NerveEmbedding nerve;
  double net_radius = 0;

  BaryPoint map(const GridRotation& X, const RotationPoint& x) const;
  FiniteMetric metric(const GridRotation& X) const;
};

/// `per_axis` grid points per torus coordinate.
WindowEmbedding window_embedding(const GridRotation& X, const LatticeSet& omega, double eps, std::size_t per_axis);

/// Sup norm of a - b.
double sup_distance(const std::vector<double>& a, const std::vector<double>& b);

// --------------------------------------------------------------------------
// Zero-dimensional factor case: the factor is the phase, tiles come from the
// flat Voronoi diagram of the phase-0 markers.

struct SymbolicSpec {
  int L = 20;            // marker spacing = separation = syndeticity
  double R = 2;          // shell radius defining the admissible shapes
  double delta = 0.5;
  double eps = 0.2;
  int D = 1;
  std::size_t net_per_axis = 256;
  double noise = 0.02;   // signed perturbation of the approximating images
  std::size_t cap = 100000;
  std::uint64_t seed = 0;
};

struct TilePiece {
  LatticeSet omega;     // canonical shape, lexicographic minimum at 0
  LatticeSet interior;  // int_1 of the shape
  double shell_ratio = 0;
  WindowEmbedding p;
  LinearMap G;          // F_i = G o p_i
  GenericCertificate cert;
  double approx_error = 0;
};

class PaletteMiss : public Error {
 public:
  explicit PaletteMiss(const LatticeSet& shape);
  LatticeSet shape;
};

struct TilePalette {
  std::vector<TilePiece> pieces;

  std::optional<std::size_t> find(const LatticeSet& shape) const;
  /// F_i(y) on int_1 Omega_i, site-major.
  std::vector<double> apply(std::size_t i, const GridRotation& X, const RotationPoint& y) const;
};

struct TileLocation {
  LatticePoint center;  // marker owning site 0
  LatticeSet cell;      // V^Z(x, center)
  LatticePoint a;       // cell = a + Omega_i
  std::optional<std::size_t> piece;
  bool in_interior = false;  // 0 in int_1 of the cell
};

/// Shapes observed on `sample` whose R-shell ratio is below 1/R, each with its
/// certified eps-embedding into K^{int_1 Omega}.
TilePalette build_palette(const GridRotation& X, const PointMap& f, const SymbolicSpec& spec,
                          const std::vector<RotationPoint>& sample);

class SymbolicPainter {
 public:
  SymbolicPainter(const GridRotation& X, PointMap f, SymbolicSpec spec, std::shared_ptr<const TilePalette> palette);

  const GridRotation& system() const { return X_; }
  const SymbolicSpec& spec() const { return spec_; }
  const TilePalette& palette() const { return *palette_; }

  FlatTiling tiling(const RotationPoint& x, const Box& region) const;
  TileLocation locate(const RotationPoint& x) const;
  std::vector<double> g(const RotationPoint& x) const;
  /// I_g(x) on `sites`, each site evaluated from scratch.
  std::vector<double> image(const RotationPoint& x, const std::vector<LatticePoint>& sites) const;
  /// The zero-dimensional factor.
  LatticePoint factor(const RotationPoint& x) const { return x.phase; }

 private:
  const GridRotation& X_;
  PointMap f_;
  SymbolicSpec spec_;
  std::shared_ptr<const TilePalette> palette_;
};

SymbolicPainter paint_symbolic(const GridRotation& X, PointMap f, const SymbolicSpec& spec,
                               std::shared_ptr<const TilePalette> palette);

struct BlockIdentityCheck {
  std::size_t blocks = 0;
  std::size_t sites = 0;
  std::size_t mismatches = 0;
  double max_deviation = 0;
  bool passed() const { return mismatches == 0; }
};

/// I_g(x)|int_1 V = F_i(T^a x) for every cell whose center lies in `centers_box`.
BlockIdentityCheck check_symbolic_claim(const SymbolicPainter& g, const RotationPoint& x, const Box& centers_box);

// --------------------------------------------------------------------------
// Lifted tilings with a window map F on [N]^k.

struct TilingSpec {
  int M = 32;
  int L = 32;
  double H = 0;  // 0 selects (L + sqrt(k))^2
  double s = 2;
  int N = 4;
};

/// x -> F(x) in (R^D)^{[N]^k}, site-major in row-major order of [N]^k.
using BlockMap = std::function<std::vector<double>(const RotationPoint&)>;

class TilePainter {
 public:
  TilePainter(const GridRotation& X, PointMap f, BlockMap F, int D, TilingSpec spec);

  const GridRotation& system() const { return X_; }
  const TilingSpec& spec() const { return spec_; }
  int D() const { return D_; }
  /// Point of [N]^k of index `i` in row-major order.
  const std::vector<LatticePoint>& block() const { return block_; }

  /// Lifted tiling of x with queries valid on `region`.
  LiftedTiling tiling(const RotationPoint& x, const Box& region) const;
  /// g(x), building the tiling around 0 from scratch.
  std::vector<double> g(const RotationPoint& x) const;
  /// I_g(x) on a box, using one tiling of x (equal to site-by-site evaluation).
  std::vector<double> image(const RotationPoint& x, const Box& box) const;
  std::vector<double> block_map(const RotationPoint& x) const { return F_(x); }

  /// g at site m given a tiling of x valid around m.
  std::vector<double> g_at(const LiftedTiling& t, const RotationPoint& x, const LatticePoint& m) const;

 private:
  const GridRotation& X_;
  PointMap f_;
  BlockMap F_;
  int D_;
  TilingSpec spec_;
  std::vector<LatticePoint> block_;
};

TilePainter paint_tiles(const GridRotation& X, PointMap f, BlockMap F, int D, const TilingSpec& spec);

/// a ≡ n (mod N) with 0 in a + [N]^k.
LatticePoint block_anchor(const LatticePoint& n, int N);

/// Blocks a + [N] with a ≡ n (mod N) inside int_1 W(x, n), for centers n owning a site of `region`.
std::vector<std::pair<LatticePoint, LatticePoint>> aligned_blocks(const LiftedTiling& t, const Box& region, int N);

/// I_g(x)|a+[N] = F(T^a x) on aligned blocks inside `region`.
BlockIdentityCheck check_tile_claim(const TilePainter& g, const RotationPoint& x, const Box& region);

struct ZeroSetRow {
  double R = 0;
  std::size_t sites = 0;
  std::size_t max_zeros = 0;        // sup over the sample
  double normalized = 0;            // max_zeros / |B_R ∩ Z^k|
  std::size_t max_edge_zeros = 0;   // sup of |Z ∩ B_R ∩ ∂(x, sqrt(k) N)|
  double interior_term = 0;         // eps vol(B_{R+2L+2 sqrt k})
  std::size_t decomposition_violations = 0;
};

struct ZeroSetReport {
  double eps = 0;
  double delta = 0;
  GenericCertificate certificate;
  std::vector<ZeroSetRow> rows;
  std::size_t blocks = 0;
  std::size_t block_violations = 0;  // aligned blocks with >= eps N^k zeros
  std::size_t claim_mismatches = 0;
  double estimate = 0;               // normalized count at the largest R
  bool below_two_eps = false;
  bool passed = false;
  std::string to_csv() const;
};

/// Exact zero counts of I_g(x) on B_R against the boundary/interior decomposition.
ZeroSetReport zero_set_ocap_check(const TilePainter& g, const GenericCertificate& F_cert, double eps, double delta,
                                  const std::vector<double>& R_grid, const std::vector<RotationPoint>& sample);

struct MmdimSpec {
  double eps = 0.25;
  double tau = 0.55;
  double mdim_input = 0;  // recorded upper-bound input for mdim(X)
};

struct MmdimRow {
  double R = 0;
  std::size_t sites = 0;
  std::size_t max_residual = 0;  // sup over x of |B_R ∩ Z^k \ union of C-blocks|
  double residual_bound = 0;     // tau vol(B_R) / log A(K, eps)
  std::size_t min_blocks = 0;
  double qc_bound = 0;           // |C| log A(F(X)) + residual log A(K), worst x
  double chain_rhs = 0;          // |B_R ∩ Z^k| (mdim + 2 tau) |log eps| + tau vol(B_R)
  double measured_log_cover = 0; // log of the greedy cover of the sampled images, sup norm
  std::size_t images = 0;
  bool residual_ok = false;
  bool chain_ok = false;
  bool measured_ok = false;
};

struct MmdimReport {
  MmdimSpec spec;
  double log_A_K = 0;
  PolytopeCover cover;
  double log_A_F = 0;
  double spanning_target = 0;  // N^k (mdim + tau) |log eps|
  bool tau_gate = false;
  bool log_gate = false;
  bool spanning_ok = false;
  std::size_t claim_mismatches = 0;
  std::vector<MmdimRow> rows;
  bool passed = false;
  std::string to_csv() const;
};

/// Block set C, residual bound, covering-count chain and measured covering numbers of I_g(X)|B_R.
/// `F_linear` is the linear part of F = F_linear o pi; K = [0,1]^D.
MmdimReport mmdim_payload_check(const TilePainter& g, const LinearMap& F_linear, const MmdimSpec& spec,
                                const std::vector<double>& R_grid, const std::vector<RotationPoint>& sample);

// --------------------------------------------------------------------------
// Two-channel embedding: g1 paints the tiling, g2 the point.

struct EncoderSpec {
  int N = 6;
  int M = 54;
  int L = 54;
  double H = 0;  // 0 selects (L + sqrt(k))^2
  double s = 3;
  int D = 2;
  double delta = 0.8;
  double eps = 0.3;
  double eta = 0.13;
  /// tau = tau_fraction * (min separation of the restricted copy images).
  double tau_fraction = 0.5;
  std::size_t net_per_axis = 128;
  double noise = 0.1;
  std::size_t cap = 20000000;
  std::uint64_t seed = 0;
  /// Upper-bound input for widim_eps(X, d_[N]); negative means "use the nerve dimension".
  double widim_input = -1;
};

struct EncoderGate {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Parameter inequalities of the construction, checked before building.
std::vector<EncoderGate> encoder_gates(const EncoderSpec& spec, int k);

struct PseudoTiling {
  Box region;
  std::map<LatticePoint, std::vector<double>> W;  // W_n on region, Box index order

  double at(const LatticePoint& n, const LatticePoint& t) const;
  /// Centers with W_n(t) > 0.
  std::vector<LatticePoint> active(const LatticePoint& t) const;
};

/// Window of I_{g1}: `values[i*D + d]` for site `domain.point(i)`.
struct ImageWindow {
  Box domain;
  int D = 1;
  std::vector<double> values;

  const double* at(const LatticePoint& n) const;
  std::vector<double> block(const LatticePoint& a, int N) const;
  ImageWindow shifted(const LatticePoint& m) const;  // omega'(n) = omega(n + m)
};

class EmbeddingEncoder {
 public:
  /// Builds the first channel and tau; the second channel comes from attach_g2.
  EmbeddingEncoder(const GridRotation& X, PointMap f1, EncoderSpec spec);
  void attach_g2(PointMap f2);
  bool has_g2() const { return static_cast<bool>(f2_); }

  const GridRotation& system() const { return X_; }
  const EncoderSpec& spec() const { return spec_; }
  double H() const { return H_; }
  double rho() const { return rho_; }        // L + sqrt(k) N
  double rho2() const { return rho2_; }      // L + 3 sqrt(k) N
  std::int64_t N_prime() const { return Nprime_; }
  const std::vector<EncoderGate>& gates() const { return gates_; }

  const WindowEmbedding& pi() const { return pi_; }
  const LinearMap& F() const { return F_; }
  const GenericCertificate& F_certificate() const { return F_cert_; }
  double f1_approx_error() const { return f1_error_; }
  const std::vector<LatticePoint>& copies() const { return copies_; }
  std::optional<std::size_t> copy_index(const LatticePoint& j) const;
  double tau_min() const { return tau_min_; }
  double tau() const { return tau_; }

  const WindowEmbedding& pi_n(const LatticePoint& j) const;
  const std::vector<LatticePoint>& copies2() const { return copies2_; }
  LatticeSet omega_n(const LatticePoint& j) const;
  const LinearMap& G() const { return G_; }
  const GenericCertificate& G_certificate() const { return G_cert_; }
  double f2_approx_error() const { return f2_error_; }
  int R_dim() const { return G_.complex().dim(); }

  /// F(p, j) in K^{[N]^k}, site-major.
  std::vector<double> F_at(const BaryPoint& p, const LatticePoint& j) const;
  /// G(pi_j(y)).
  std::vector<double> G_at(const LatticePoint& j, const RotationPoint& y) const;

  LiftedTiling tiling(const RotationPoint& x, const Box& region) const;
  std::vector<double> g1(const RotationPoint& x) const;
  std::vector<double> g1_at(const LiftedTiling& t, const RotationPoint& x, const LatticePoint& m) const;
  ImageWindow I_g1(const RotationPoint& x, const Box& box) const;

  /// dist(omega|a+[N], Q_j).
  double distance_to_copy(const std::vector<double>& block, const LatticePoint& j) const;
  PseudoTiling decode(const ImageWindow& omega, const Box& region) const;

  std::vector<double> g2(const RotationPoint& x) const;
  /// I_g2(x) on a box from one window of I_g1(x).
  std::vector<double> I_g2(const RotationPoint& x, const Box& box) const;
  std::vector<double> g2_from(const RotationPoint& x, const PseudoTiling& W, const LatticePoint& m) const;

  /// Box of I_g1 needed to decode on `region`.
  Box decode_domain(const Box& region) const;

 private:
  struct CopyImages;
  void build_g1_channel();
  void compute_tau();

  const GridRotation& X_;
  PointMap f1_, f2_;
  EncoderSpec spec_;
  int k_;
  double H_, rho_, rho2_;
  std::int64_t Nprime_;
  std::vector<EncoderGate> gates_;
  std::vector<LatticePoint> block_;

  WindowEmbedding pi_;
  std::vector<LatticePoint> copies_;
  std::map<LatticePoint, std::size_t> copy_of_;
  LinearMap F_;
  GenericCertificate F_cert_;
  double f1_error_ = 0;
  std::shared_ptr<const CopyImages> images_;
  double tau_min_ = 0, tau_ = 0;

  std::vector<LatticePoint> copies2_;
  std::map<LatticePoint, std::size_t> copy2_of_;
  std::vector<WindowEmbedding> pis_;
  std::vector<int> vertex_offset_;
  LinearMap G_;
  GenericCertificate G_cert_;
  double f2_error_ = 0;
};

/// Encoder with the first channel g1 built.
std::shared_ptr<EmbeddingEncoder> encode_g1(const GridRotation& X, PointMap f1, const EncoderSpec& spec);
/// Adds the second channel g2 to an encoder from encode_g1.
std::shared_ptr<const EmbeddingEncoder> construct_g2(std::shared_ptr<EmbeddingEncoder> enc, PointMap f2);
PseudoTiling decode_pseudo_tiling(const EmbeddingEncoder& enc, const ImageWindow& omega, const Box& region);

struct SeparationCheck {
  std::size_t probes = 0;
  std::size_t violations = 0;
  double min_margin = 0;  // min of dist((a/s + (1-1/s)n), ∂W(x,n)) - 3 sqrt(k) N
};

/// For a with (a, -sH) in V(x, n): the point a/s + (1 - 1/s)n stays 3 sqrt(k) N inside W(x, n).
SeparationCheck check_s_condition(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region);

struct PseudoTilingCheck {
  std::size_t sites1 = 0, violations1 = 0;
  std::size_t centers2 = 0, violations2 = 0;
  bool passed() const { return violations1 == 0 && violations2 == 0; }
};

/// Indicator behavior: (1) deep sites of W(x, n) have W_n = 1 and all other W_n' = 0;
/// (2) for n with (0, -sH) in V(x, n), the same holds on B_{sqrt(k)N}((1-1/s)n).
PseudoTilingCheck check_pseudo_tiling(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region);

/// I_g1 blocks equal F(pi(T^a x), n - a); I_g2 blocks with W_n = 1 (others 0) equal G(pi_{n-a}(T^a x)).
BlockIdentityCheck check_g1_claim(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region);
BlockIdentityCheck check_g2_claim(const EmbeddingEncoder& enc, const RotationPoint& x, const Box& region);

struct PairVerdict {
  std::size_t pair_id = 0;
  std::string channel;
  std::string verdict;  // "differ", "agree", "indeterminate", "FAILURE"
  double image_gap = 0;
  double distance = 0;
  std::string decode_trace;  // JSON object
};

struct EmbeddingReport {
  double eps = 0;
  double delta = 0;
  std::vector<PairVerdict> pairs;
  std::size_t agree = 0, differ = 0, indeterminate = 0, failures = 0;
  bool passed() const { return failures == 0; }
  std::string to_jsonl() const;
};

inline constexpr double kAgreeTolerance = 1e-10;
/// Distances to a copy image below this count as membership.
inline constexpr double kMembershipTolerance = 1e-12;
inline constexpr double kDifferTolerance = 1e-6;

/// Identical pairs, near pairs, same-phase pairs and independent pairs.
std::vector<std::pair<RotationPoint, RotationPoint>> sample_pairs(const GridRotation& X, std::size_t count,
                                                                  std::uint64_t seed);

EmbeddingReport verify_delta_embedding(const SymbolicPainter& g,
                                       const std::vector<std::pair<RotationPoint, RotationPoint>>& pairs);
EmbeddingReport verify_delta_embedding(const EmbeddingEncoder& enc,
                                       const std::vector<std::pair<RotationPoint, RotationPoint>>& pairs);

}  // namespace mdimkit
