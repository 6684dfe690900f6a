#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdimkit/exact.hpp"
#include "mdimkit/lattice.hpp"

namespace mdimkit {

/// Sorted list of vertex ids.
using Face = std::vector<int>;

/// Finite abstract simplicial complex stored by its maximal faces.
class SimplicialComplex {
 public:
  SimplicialComplex() = default;
  /// Complex generated by `generators` (all their subsets are faces).
  SimplicialComplex(int n_vertices, std::vector<Face> generators);

  int vertex_count() const { return n_; }
  /// -1 for the empty complex.
  int dim() const { return dim_; }
  const std::vector<Face>& facets() const { return facets_; }
  bool contains(const Face& f) const;
  /// All nonempty faces, sorted by size then lexicographically.
  std::vector<Face> faces() const;
  /// Disjoint union of `count` copies; copy c uses vertices c*n .. c*n+n-1.
  SimplicialComplex copies(int count) const;

  bool operator==(const SimplicialComplex&) const = default;

 private:
  int n_ = 0;
  int dim_ = -1;
  std::vector<Face> facets_;
};

/// Point of |P| in barycentric coordinates: positive weights summing to 1.
struct BaryPoint {
  Face vertices;
  std::vector<double> weights;

  bool operator==(const BaryPoint&) const = default;
};

/// Finite metric sample given by a distance oracle on indices.
struct FiniteMetric {
  std::size_t size = 0;
  std::function<double(std::size_t, std::size_t)> dist;
};

FiniteMetric euclidean_metric(std::vector<std::vector<double>> points);
FiniteMetric linf_metric(std::vector<std::vector<double>> points);

struct Cover {
  std::vector<std::vector<std::size_t>> sets;  // sample indices, sorted
  int multiplicity = 0;
  double mesh = 0;  // max set diameter
};

/// Farthest-first seeds with balls of radius eps/2*(1-tol), followed by a
/// merge pass joining sets whose union still has diameter < eps.
Cover greedy_cover(const FiniteMetric& m, double eps, double tol = 1e-9);

enum class NerveMode {
  /// Faces are the supports realized by sample points (the nerve seen by the sample).
  Sample,
  /// Faces are the cliques of the graph d(S_i, S_j) < 2 r_blend, which contains the
  /// support of every point of the space; use when mapping points outside the sample.
  Closure,
};

/// A map x -> sum_j w_j(x) v_j with w_j proportional to max(0, 1 - d(x, S_j)/r_blend).
struct NerveEmbedding {
  SimplicialComplex complex;
  std::vector<std::vector<std::size_t>> sets;
  NerveMode mode = NerveMode::Sample;
  double epsilon = 0;
  double r_blend = 0;
  double mesh = 0;
  /// Any two points sharing a support vertex are closer than this (2 r_blend + mesh).
  double fiber_bound = 0;
  /// Largest sample distance among pairs with images within 1e-12.
  double max_fiber_diam = 0;
  std::vector<BaryPoint> sample_images;

  /// dist_to_sample(i) = d(x, sample point i). Throws if no set is within
  /// r_blend or the support is not a face.
  BaryPoint map(const std::function<double(std::size_t)>& dist_to_sample) const;
  const BaryPoint& map_sample(std::size_t i) const { return sample_images[i]; }
};

/// r_blend <= 0 selects (eps - mesh) / 4.
NerveEmbedding nerve_embedding(const FiniteMetric& m, const Cover& cover, double eps, double r_blend = 0,
                               NerveMode mode = NerveMode::Sample);

/// Linear map on |P| given by dyadic vertex images with coordinates in [-1, 1].
class LinearMap {
 public:
  LinearMap() = default;
  LinearMap(SimplicialComplex P, std::vector<GridVec> images);
  /// Snaps each coordinate to the 2^-53 grid.
  static LinearMap from_doubles(SimplicialComplex P, const std::vector<std::vector<double>>& images);

  const SimplicialComplex& complex() const { return P_; }
  int target_dim() const { return dim_; }
  const GridVec& grid_image(int v) const { return grid_[static_cast<std::size_t>(v)]; }
  const std::vector<GridVec>& grid_images() const { return grid_; }
  /// Exact double value of the grid image.
  const std::vector<double>& image(int v) const { return img_[static_cast<std::size_t>(v)]; }

  std::vector<double> operator()(const BaryPoint& x) const;
  void evaluate(const BaryPoint& x, double* out) const;
  std::vector<Rational> evaluate_exact(const Face& vertices, const std::vector<Rational>& weights) const;

  /// {"vertices": n, "faces": [...], "images": [["num/den", ...], ...]}
  std::string to_json() const;
  static LinearMap from_json(const std::string& text);

 private:
  SimplicialComplex P_;
  int dim_ = 0;
  std::vector<GridVec> grid_;
  std::vector<std::vector<double>> img_;
};

class ModulusError : public Error {
 public:
  ModulusError(std::size_t i, std::size_t j, double d, double diff);
  std::size_t i, j;
  double distance, difference;
};

struct LinearApprox {
  LinearMap g;
  double max_error = 0;  // sup-norm of f - g∘π over the sample
  std::vector<std::size_t> witnesses;
};

/// values[i] = f(sample point i). Checks the (eps, delta) modulus on all sample
/// pairs, then sets g(v) = f(x_v) for a member x_v of S_v.
LinearApprox approximate_by_linear(const NerveEmbedding& pi, const FiniteMetric& m,
                                   const std::vector<std::vector<double>>& values, double delta);

enum class GenericTag { Embedding, ZeroCoordinate, Window };

/// Target (R^D)^{[N]^k}, tested through restrictions to b + [n]^k, b in [N-n+1]^k.
struct WindowShape {
  int k = 1;
  int N = 1;
  int n = 1;
  int D = 1;
  int target_dim() const;
  /// Coordinate indices of the restriction to b + [n]^k.
  std::vector<int> restriction(const LatticePoint& b) const;
  std::vector<LatticePoint> offsets() const;
};

struct GenericOptions {
  GenericTag tag = GenericTag::Embedding;
  int target_dim = 1;  // ignored for GenericTag::Window
  WindowShape window;
  std::size_t cap = 100000;
  int max_resamples = 16;
  /// Optional base images b_v: images become (1-eta) b_v + eta u_v, or
  /// b_v + eta (2u_v - 1) when signed_noise is set, with u_v uniform in [0,1).
  std::vector<std::vector<double>> base;
  double eta = 1;
  bool signed_noise = false;
};

struct GenericCertificate {
  GenericTag tag = GenericTag::Embedding;
  bool passed = false;
  /// True when every condition of the family was checked (no sub-sampling).
  bool exhaustive = false;
  std::size_t checked = 0;
  std::size_t total = 0;  // number of conditions in the full family
  std::size_t cap = 0;
  int resamples = 0;
  std::uint64_t seed_used = 0;
  std::string method;
};

struct GenericLinear {
  LinearMap map;
  GenericCertificate cert;
};

/// Draws dyadic vertex images and certifies the requested property exactly.
/// A failed certificate triggers a resample with the next derived seed.
GenericLinear sample_generic_linear(const SimplicialComplex& P, const GenericOptions& opt, std::uint64_t seed);

/// Certificate for a given map (no resampling).
GenericCertificate certify_linear(const LinearMap& F, const GenericOptions& opt, std::uint64_t seed = 0);

/// Columns (u_{M_ij})_i of an (n, n*D+1) matrix of labels; true iff affinely independent.
bool matrix_columns_independent(const std::vector<std::vector<int>>& M, const std::vector<GridVec>& u);

/// Minimum-norm point of conv(points) (Wolfe's method).
struct MinNorm {
  std::vector<double> point;
  std::vector<double> weights;  // one per input point
  double norm = 0;
};
MinNorm min_norm_point(const std::vector<std::vector<double>>& points, double tol = 1e-12);

/// Euclidean distance from p to conv(simplex).
double simplex_distance(const std::vector<std::vector<double>>& simplex, const std::vector<double>& p);
/// Euclidean distance between conv(a) and conv(b).
double simplex_pair_distance(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

/// min over facets of the distance from p to the image simplex.
double image_distance(const LinearMap& F, const std::vector<double>& p);

struct PolytopeCover {
  std::size_t lattice_count = 0;    // sum over facets of (1 + floor(2n/eps))^n
  std::size_t in_simplex_count = 0; // grid points with sum x_i <= 1
  double bound = 0;                 // sum over facets of (2n+1)^n / eps^n
  double scale = 1;                 // images were divided by this to get diameter <= 1
  double max_gap = 0;               // max over probes of the distance to the nearest grid point (scaled)
  std::size_t probes = 0;
};

/// Barycentric grid of pitch eps/(2n) on every facet (sup norm), with a probe
/// check that every sampled image point is within eps/2 of the grid.
PolytopeCover polytope_cover_count(const LinearMap& F, double eps, std::size_t probes = 2000,
                                   std::uint64_t seed = 0);

}  // namespace mdimkit
