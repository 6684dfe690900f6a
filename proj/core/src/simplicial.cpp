#include "mdimkit/simplicial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mdimkit/parallel.hpp"
#include "mdimkit/rng.hpp"

namespace mdimkit {
namespace {

bool is_subset(const Face& a, const Face& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

Face merged(const Face& a, const Face& b) {
  Face u;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  return u;
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Calls fn on every k-subset of {0..n-1} in lexicographic order until fn returns false.
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k > n || k < 0) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (!fn(idx)) return;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

std::vector<std::vector<int>> all_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for_each_subset(n, k, [&](const std::vector<int>& s) {
    out.push_back(s);
    return true;
  });
  return out;
}

// Bron-Kerbosch with pivoting over a dense adjacency matrix.
void bron_kerbosch(const std::vector<std::vector<char>>& adj, std::vector<int>& R, std::vector<int> P,
                   std::vector<int> X, std::vector<Face>& out) {
  if (P.empty() && X.empty()) {
    Face f = R;
    std::sort(f.begin(), f.end());
    out.push_back(std::move(f));
    return;
  }
  int pivot = P.empty() ? X.front() : P.front();
  std::size_t best = 0;
  for (const auto* group : {&P, &X}) {
    for (int u : *group) {
      std::size_t c = 0;
      for (int v : P) c += adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] ? 1 : 0;
      if (c > best) best = c, pivot = u;
    }
  }
  const std::vector<int> candidates = [&] {
    std::vector<int> c;
    for (int v : P)
      if (!adj[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(v)]) c.push_back(v);
    return c;
  }();
  for (int v : candidates) {
    std::vector<int> P2, X2;
    for (int w : P)
      if (adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(w)]) P2.push_back(w);
    for (int w : X)
      if (adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(w)]) X2.push_back(w);
    R.push_back(v);
    bron_kerbosch(adj, R, std::move(P2), std::move(X2), out);
    R.pop_back();
    P.erase(std::find(P.begin(), P.end(), v));
    X.push_back(v);
  }
}

BaryPoint weights_from_distances(const std::vector<double>& d, double r) {
  BaryPoint b;
  double total = 0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double w = 1.0 - d[j] / r;
    if (w > 0) {
      b.vertices.push_back(static_cast<int>(j));
      b.weights.push_back(w);
      total += w;
    }
  }
  for (auto& w : b.weights) w /= total;
  return b;
}

bool bary_close(const BaryPoint& a, const BaryPoint& b, double tol) {
  // Compare as full weight vectors over the union of supports.
  std::size_t i = 0, j = 0;
  while (i < a.vertices.size() || j < b.vertices.size()) {
    if (j == b.vertices.size() || (i < a.vertices.size() && a.vertices[i] < b.vertices[j])) {
      if (a.weights[i++] > tol) return false;
    } else if (i == a.vertices.size() || b.vertices[j] < a.vertices[i]) {
      if (b.weights[j++] > tol) return false;
    } else {
      if (std::fabs(a.weights[i++] - b.weights[j++]) > tol) return false;
    }
  }
  return true;
}

constexpr std::int64_t kGridOne = std::int64_t{1} << kGridBits;

}  // namespace

// ---------------------------------------------------------------- complexes

SimplicialComplex::SimplicialComplex(int n_vertices, std::vector<Face> generators) : n_(n_vertices) {
  if (n_vertices < 0) throw Error("SimplicialComplex: negative vertex count");
  for (auto& g : generators) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    for (int v : g)
      if (v < 0 || v >= n_) throw Error("SimplicialComplex: vertex id out of range");
  }
  std::sort(generators.begin(), generators.end(),
            [](const Face& a, const Face& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
  generators.erase(std::unique(generators.begin(), generators.end()), generators.end());
  for (auto& g : generators) {
    if (g.empty()) continue;
    bool covered = false;
    for (const auto& f : facets_)
      if (is_subset(g, f)) {
        covered = true;
        break;
      }
    if (!covered) facets_.push_back(std::move(g));
  }
  std::sort(facets_.begin(), facets_.end());
  for (const auto& f : facets_) dim_ = std::max(dim_, static_cast<int>(f.size()) - 1);
}

bool SimplicialComplex::contains(const Face& f) const {
  if (f.empty()) return true;
  for (const auto& g : facets_)
    if (is_subset(f, g)) return true;
  return false;
}

std::vector<Face> SimplicialComplex::faces() const {
  std::set<Face> all;
  for (const auto& g : facets_) {
    if (g.size() > 24) throw Error("SimplicialComplex::faces: facet too large to enumerate");
    const std::uint32_t full = (1u << g.size()) - 1;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
      Face f;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (mask & (1u << i)) f.push_back(g[i]);
      all.insert(std::move(f));
    }
  }
  std::vector<Face> out(all.begin(), all.end());
  std::stable_sort(out.begin(), out.end(), [](const Face& a, const Face& b) { return a.size() < b.size(); });
  return out;
}

SimplicialComplex SimplicialComplex::copies(int count) const {
  std::vector<Face> gens;
  gens.reserve(facets_.size() * static_cast<std::size_t>(std::max(count, 0)));
  for (int c = 0; c < count; ++c)
    for (const auto& f : facets_) {
      Face g = f;
      for (auto& v : g) v += c * n_;
      gens.push_back(std::move(g));
    }
  return SimplicialComplex(n_ * std::max(count, 0), std::move(gens));
}

// ---------------------------------------------------------------- metrics

FiniteMetric euclidean_metric(std::vector<std::vector<double>> points) {
  auto pts = std::make_shared<std::vector<std::vector<double>>>(std::move(points));
  return {pts->size(), [pts](std::size_t i, std::size_t j) {
            double s = 0;
            for (std::size_t c = 0; c < (*pts)[i].size(); ++c) {
              const double d = (*pts)[i][c] - (*pts)[j][c];
              s += d * d;
            }
            return std::sqrt(s);
          }};
}

FiniteMetric linf_metric(std::vector<std::vector<double>> points) {
  auto pts = std::make_shared<std::vector<std::vector<double>>>(std::move(points));
  return {pts->size(), [pts](std::size_t i, std::size_t j) {
            double s = 0;
            for (std::size_t c = 0; c < (*pts)[i].size(); ++c) s = std::max(s, std::fabs((*pts)[i][c] - (*pts)[j][c]));
            return s;
          }};
}

// ---------------------------------------------------------------- covers

Cover greedy_cover(const FiniteMetric& m, double eps, double tol) {
  if (!(eps > 0)) throw Error("greedy_cover: eps must be positive");
  Cover cover;
  const std::size_t S = m.size;
  if (S == 0) return cover;
  const double r = eps / 2 * (1 - tol);

  std::vector<std::size_t> seeds;
  std::vector<std::vector<std::size_t>> balls;
  std::vector<double> nearest(S, std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  while (true) {
    seeds.push_back(next);
    std::vector<std::size_t> ball;
    for (std::size_t i = 0; i < S; ++i) {
      const double d = i == next ? 0.0 : m.dist(i, next);
      if (d < r) ball.push_back(i);
      nearest[i] = std::min(nearest[i], d);
    }
    balls.push_back(std::move(ball));
    std::size_t far = 0;
    for (std::size_t i = 1; i < S; ++i)
      if (nearest[i] > nearest[far]) far = i;
    if (nearest[far] < r) break;
    next = far;
  }

  // Merge pass: absorb later sets whose union with the current one keeps diameter < eps.
  const std::size_t C = balls.size();
  std::vector<char> alive(C, 1);
  for (std::size_t a = 0; a < C; ++a) {
    if (!alive[a]) continue;
    for (std::size_t b = a + 1; b < C; ++b) {
      if (!alive[b] || m.dist(seeds[a], seeds[b]) >= eps) continue;
      bool ok = true;
      for (std::size_t i : balls[b]) {
        for (std::size_t j : balls[a])
          if (i != j && m.dist(i, j) >= eps) {
            ok = false;
            break;
          }
        if (!ok) break;
      }
      if (!ok) continue;
      std::vector<std::size_t> u;
      std::set_union(balls[a].begin(), balls[a].end(), balls[b].begin(), balls[b].end(), std::back_inserter(u));
      balls[a] = std::move(u);
      alive[b] = 0;
    }
  }
  std::vector<int> count(S, 0);
  for (std::size_t a = 0; a < C; ++a) {
    if (!alive[a]) continue;
    for (std::size_t i : balls[a]) ++count[i];
    double diam = 0;
    for (std::size_t x = 0; x < balls[a].size(); ++x)
      for (std::size_t y = x + 1; y < balls[a].size(); ++y) diam = std::max(diam, m.dist(balls[a][x], balls[a][y]));
    cover.mesh = std::max(cover.mesh, diam);
    cover.sets.push_back(std::move(balls[a]));
  }
  cover.multiplicity = *std::max_element(count.begin(), count.end());
  return cover;
}

// ---------------------------------------------------------------- nerves

NerveEmbedding nerve_embedding(const FiniteMetric& m, const Cover& cover, double eps, double r_blend,
                               NerveMode mode) {
  NerveEmbedding ne;
  ne.sets = cover.sets;
  ne.mode = mode;
  ne.epsilon = eps;
  const std::size_t S = m.size, C = cover.sets.size();
  double mesh = 0;
  for (const auto& s : cover.sets)
    for (std::size_t x = 0; x < s.size(); ++x)
      for (std::size_t y = x + 1; y < s.size(); ++y) mesh = std::max(mesh, m.dist(s[x], s[y]));
  ne.mesh = mesh;
  if (mesh >= eps) throw Error("nerve_embedding: cover mesh " + std::to_string(mesh) + " is not below eps");
  ne.r_blend = r_blend > 0 ? r_blend : (eps - mesh) / 4;
  ne.fiber_bound = 2 * ne.r_blend + mesh;
  if (ne.fiber_bound >= eps) throw Error("nerve_embedding: 2 r_blend + mesh must be below eps");

  // d(i, S_j) for every sample point.
  std::vector<std::vector<double>> dset(S, std::vector<double>(C, std::numeric_limits<double>::infinity()));
  parallel_for(S, [&](std::size_t i) {
    for (std::size_t j = 0; j < C; ++j)
      for (std::size_t p : cover.sets[j]) dset[i][j] = std::min(dset[i][j], p == i ? 0.0 : m.dist(i, p));
  });
  ne.sample_images.resize(S);
  for (std::size_t i = 0; i < S; ++i) {
    ne.sample_images[i] = weights_from_distances(dset[i], ne.r_blend);
    if (ne.sample_images[i].vertices.empty()) throw Error("nerve_embedding: sample point not covered");
  }

  std::vector<Face> gens;
  if (mode == NerveMode::Sample) {
    for (const auto& b : ne.sample_images) gens.push_back(b.vertices);
  } else {
    std::vector<std::vector<char>> adj(C, std::vector<char>(C, 0));
    for (std::size_t a = 0; a < C; ++a)
      for (std::size_t b = a + 1; b < C; ++b) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t p : cover.sets[a]) d = std::min(d, dset[p][b]);
        adj[a][b] = adj[b][a] = d < 2 * ne.r_blend;
      }
    std::vector<int> R, P(C), X;
    std::iota(P.begin(), P.end(), 0);
    bron_kerbosch(adj, R, P, X, gens);
  }
  ne.complex = SimplicialComplex(static_cast<int>(C), std::move(gens));

  // Fiber diameter over pairs with coincident images.
  double fiber = 0;
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = i + 1; j < S; ++j)
      if (bary_close(ne.sample_images[i], ne.sample_images[j], 1e-12))
        fiber = std::max(fiber, m.dist(i, j));
  ne.max_fiber_diam = fiber;
  if (fiber >= eps) throw Error("nerve_embedding: fiber diameter certificate failed");
  return ne;
}

BaryPoint NerveEmbedding::map(const std::function<double(std::size_t)>& dist_to_sample) const {
  std::size_t S = 0;
  for (const auto& s : sets)
    for (std::size_t p : s) S = std::max(S, p + 1);
  std::vector<double> cache(S, -1);
  std::vector<double> d(sets.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < sets.size(); ++j)
    for (std::size_t p : sets[j]) {
      if (cache[p] < 0) cache[p] = dist_to_sample(p);
      d[j] = std::min(d[j], cache[p]);
    }
  BaryPoint b = weights_from_distances(d, r_blend);
  if (b.vertices.empty()) throw Error("NerveEmbedding::map: point is not within r_blend of any cover set");
  if (!complex.contains(b.vertices)) throw Error("NerveEmbedding::map: support is not a face of the nerve");
  return b;
}

// ---------------------------------------------------------------- linear maps

LinearMap::LinearMap(SimplicialComplex P, std::vector<GridVec> images) : P_(std::move(P)), grid_(std::move(images)) {
  if (static_cast<int>(grid_.size()) != P_.vertex_count()) throw Error("LinearMap: one image per vertex required");
  dim_ = grid_.empty() ? 0 : static_cast<int>(grid_[0].size());
  img_.reserve(grid_.size());
  for (const auto& g : grid_) {
    if (static_cast<int>(g.size()) != dim_) throw Error("LinearMap: inconsistent image dimension");
    std::vector<double> v;
    v.reserve(g.size());
    for (auto num : g) {
      if (num > kGridOne || num < -kGridOne) throw Error("LinearMap: image coordinates must lie in [-1, 1]");
      v.push_back(grid_to_double(num));
    }
    img_.push_back(std::move(v));
  }
}

LinearMap LinearMap::from_doubles(SimplicialComplex P, const std::vector<std::vector<double>>& images) {
  std::vector<GridVec> g;
  g.reserve(images.size());
  for (const auto& v : images) {
    GridVec row;
    row.reserve(v.size());
    for (double c : v) row.push_back(snap_to_grid(c));
    g.push_back(std::move(row));
  }
  return LinearMap(std::move(P), std::move(g));
}

void LinearMap::evaluate(const BaryPoint& x, double* out) const {
  std::fill(out, out + dim_, 0.0);
  for (std::size_t i = 0; i < x.vertices.size(); ++i) {
    const auto& u = img_[static_cast<std::size_t>(x.vertices[i])];
    const double w = x.weights[i];
    for (int c = 0; c < dim_; ++c) out[c] += w * u[static_cast<std::size_t>(c)];
  }
}

std::vector<double> LinearMap::operator()(const BaryPoint& x) const {
  std::vector<double> out(static_cast<std::size_t>(dim_));
  evaluate(x, out.data());
  return out;
}

std::vector<Rational> LinearMap::evaluate_exact(const Face& vertices, const std::vector<Rational>& weights) const {
  std::vector<Rational> out(static_cast<std::size_t>(dim_), Rational(0));
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const auto& g = grid_[static_cast<std::size_t>(vertices[i])];
    for (int c = 0; c < dim_; ++c) out[static_cast<std::size_t>(c)] += weights[i] * grid_rational(g[static_cast<std::size_t>(c)]);
  }
  return out;
}

std::string LinearMap::to_json() const {
  nlohmann::ordered_json j;
  j["vertices"] = P_.vertex_count();
  j["faces"] = P_.facets();
  auto imgs = nlohmann::ordered_json::array();
  for (const auto& g : grid_) {
    auto row = nlohmann::ordered_json::array();
    for (auto num : g) row.push_back(grid_rational(num).get_str());
    imgs.push_back(std::move(row));
  }
  j["images"] = std::move(imgs);
  return j.dump(2) + "\n";
}

LinearMap LinearMap::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int n = j.at("vertices").get<int>();
  std::vector<Face> faces = j.at("faces").get<std::vector<Face>>();
  std::vector<GridVec> images;
  for (const auto& row : j.at("images")) {
    GridVec g;
    for (const auto& s : row) {
      Rational q(s.get<std::string>());
      q.canonicalize();
      const Rational scaled = q * Rational(Integer(1) << kGridBits);
      if (scaled.get_den() != 1 || !scaled.get_num().fits_slong_p()) throw Error("LinearMap::from_json: image not on the grid");
      g.push_back(scaled.get_num().get_si());
    }
    images.push_back(std::move(g));
  }
  return LinearMap(SimplicialComplex(n, std::move(faces)), std::move(images));
}

// ---------------------------------------------------------------- approximation

ModulusError::ModulusError(std::size_t i_, std::size_t j_, double d, double diff)
    : Error("modulus violated by sample pair (" + std::to_string(i_) + ", " + std::to_string(j_) +
            "): d = " + std::to_string(d) + ", |f(x) - f(y)| = " + std::to_string(diff)),
      i(i_), j(j_), distance(d), difference(diff) {}

LinearApprox approximate_by_linear(const NerveEmbedding& pi, const FiniteMetric& m,
                                   const std::vector<std::vector<double>>& values, double delta) {
  const std::size_t S = m.size;
  if (values.size() != S) throw Error("approximate_by_linear: one value per sample point required");
  const std::size_t dim = S ? values[0].size() : 0;
  auto sup = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t c = 0; c < dim; ++c) s = std::max(s, std::fabs(a[c] - b[c]));
    return s;
  };
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = i + 1; j < S; ++j) {
      const double d = m.dist(i, j);
      if (d < pi.epsilon) {
        const double diff = sup(values[i], values[j]);
        if (!(diff < delta)) throw ModulusError(i, j, d, diff);
      }
    }

  std::vector<double> bary(dim, 0.0);
  for (const auto& v : values)
    for (std::size_t c = 0; c < dim; ++c) bary[c] += v[c] / static_cast<double>(S);

  LinearApprox out;
  std::vector<std::vector<double>> images;
  for (const auto& set : pi.sets) {
    if (set.empty()) {
      out.witnesses.push_back(static_cast<std::size_t>(-1));
      images.push_back(bary);
    } else {
      out.witnesses.push_back(set.front());
      images.push_back(values[set.front()]);
    }
  }
  out.g = LinearMap::from_doubles(pi.complex, images);
  for (std::size_t i = 0; i < S; ++i) out.max_error = std::max(out.max_error, sup(values[i], out.g(pi.map_sample(i))));
  if (!(out.max_error < delta)) throw Error("approximate_by_linear: error bound failed");
  return out;
}

// ---------------------------------------------------------------- generic position

int WindowShape::target_dim() const {
  int sites = 1;
  for (int i = 0; i < k; ++i) sites *= N;
  return sites * D;
}

std::vector<LatticePoint> WindowShape::offsets() const {
  std::vector<LatticePoint> out;
  Box b{LatticePoint(k), LatticePoint(k)};
  for (int i = 0; i < k; ++i) b.hi[i] = N - n;
  b.for_each([&](const LatticePoint& p) { out.push_back(p); });
  return out;
}

std::vector<int> WindowShape::restriction(const LatticePoint& b) const {
  const Box full{LatticePoint(k), LatticePoint(k)};
  Box whole = full;
  for (int i = 0; i < k; ++i) whole.hi[i] = N - 1;
  Box sub{b, b};
  for (int i = 0; i < k; ++i) sub.hi[i] = b[i] + n - 1;
  std::vector<int> coords;
  sub.for_each([&](const LatticePoint& p) {
    const auto site = static_cast<int>(whole.index(p));
    for (int d = 0; d < D; ++d) coords.push_back(site * D + d);
  });
  return coords;
}

namespace {

GridVec restrict_grid(const GridVec& u, const std::vector<int>& coords) {
  GridVec r;
  r.reserve(coords.size());
  for (int c : coords) r.push_back(u[static_cast<std::size_t>(c)]);
  return r;
}

// Runs `count` checks (by index) and reports whether all passed.
bool run_checks(std::size_t count, const std::function<bool(std::size_t)>& check) {
  const auto ok = parallel_map<char>(count, [&](std::size_t i) { return static_cast<char>(check(i)); });
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

GenericCertificate certify_embedding(const LinearMap& F, const GenericOptions& opt, std::uint64_t seed) {
  GenericCertificate cert;
  cert.tag = GenericTag::Embedding;
  cert.cap = opt.cap;
  const auto& P = F.complex();
  const int n = F.target_dim();
  if (!(2 * P.dim() < n)) throw Error("embedding certificate needs dim P < n/2");
  const int s = P.vertex_count();
  const int t = std::min(s, n + 1);
  const double tuples = binomial(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
  if (tuples <= static_cast<double>(opt.cap)) {
    const auto subsets = all_subsets(s, t);
    cert.total = cert.checked = subsets.size();
    cert.exhaustive = true;
    cert.method = "all (n+1)-tuples of vertex images";
    cert.passed = run_checks(subsets.size(), [&](std::size_t i) {
      std::vector<GridVec> pts;
      for (int v : subsets[i]) pts.push_back(F.grid_image(v));
      return affinely_independent(pts);
    });
    return cert;
  }
  // The injectivity argument only uses unions of two faces.
  const auto& fac = P.facets();
  const std::size_t nf = fac.size();
  const std::size_t pairs = nf * (nf + 1) / 2;
  cert.total = pairs;
  cert.method = "unions of facet pairs";
  auto check_pair = [&](std::size_t a, std::size_t b) {
    std::vector<GridVec> pts;
    for (int v : merged(fac[a], fac[b])) pts.push_back(F.grid_image(v));
    return affinely_independent(pts);
  };
  if (pairs <= opt.cap) {
    std::vector<std::pair<std::size_t, std::size_t>> list;
    for (std::size_t a = 0; a < nf; ++a)
      for (std::size_t b = a; b < nf; ++b) list.emplace_back(a, b);
    cert.exhaustive = true;
    cert.checked = list.size();
    cert.passed = run_checks(list.size(), [&](std::size_t i) { return check_pair(list[i].first, list[i].second); });
  } else {
    cert.checked = opt.cap;
    cert.method += " (random sub-family)";
    cert.passed = run_checks(opt.cap, [&](std::size_t i) {
      Rng rng(derive_seed(seed, 0x7a11), i);
      return check_pair(rng.below(nf), rng.below(nf));
    });
  }
  return cert;
}

GenericCertificate certify_zero(const LinearMap& F, const GenericOptions& opt, std::uint64_t seed) {
  GenericCertificate cert;
  cert.tag = GenericTag::ZeroCoordinate;
  cert.cap = opt.cap;
  const auto& P = F.complex();
  const int n = F.target_dim();
  const int a = P.dim() + 1;
  cert.method = "origin outside conv of facet images on every (dim P + 1)-set of coordinates";
  if (a > n || P.dim() < 0) {
    cert.passed = cert.exhaustive = true;
    return cert;
  }
  const auto& fac = P.facets();
  const auto coordsets = all_subsets(n, a);
  const std::size_t total = fac.size() * coordsets.size();
  cert.total = total;
  auto check = [&](std::size_t fi, std::size_t ci) {
    std::vector<GridVec> pts;
    for (int v : fac[fi]) pts.push_back(restrict_grid(F.grid_image(v), coordsets[ci]));
    return origin_in_hull(pts) == HullOrigin::Outside;
  };
  if (total <= opt.cap) {
    cert.exhaustive = true;
    cert.checked = total;
    cert.passed = run_checks(total, [&](std::size_t i) { return check(i / coordsets.size(), i % coordsets.size()); });
  } else {
    cert.checked = opt.cap;
    cert.method += " (random sub-family)";
    cert.passed = run_checks(opt.cap, [&](std::size_t i) {
      Rng rng(derive_seed(seed, 0x2e40), i);
      return check(rng.below(fac.size()), rng.below(coordsets.size()));
    });
  }
  return cert;
}

GenericCertificate certify_window(const LinearMap& F, const GenericOptions& opt, std::uint64_t seed) {
  GenericCertificate cert;
  cert.tag = GenericTag::Window;
  cert.cap = opt.cap;
  const auto& w = opt.window;
  if (F.target_dim() != w.target_dim()) throw Error("window certificate: map target does not match window shape");
  const auto& P = F.complex();
  int nk = 1;
  for (int i = 0; i < w.k; ++i) nk *= w.n;
  if (!(2 * P.dim() < nk * w.D)) throw Error("window certificate needs dim P < n^k dim V / 2");
  const auto offs = w.offsets();
  std::vector<std::vector<int>> restr;
  for (const auto& b : offs) restr.push_back(w.restriction(b));
  const int B = static_cast<int>(offs.size());
  const int s = P.vertex_count();
  const int labels = s * B;
  auto vec = [&](int label) { return restrict_grid(F.grid_image(label / B), restr[static_cast<std::size_t>(label % B)]); };
  const int m = std::min(labels, nk * w.D + 1);
  const double tuples = binomial(static_cast<std::size_t>(labels), static_cast<std::size_t>(m));
  if (tuples <= static_cast<double>(opt.cap)) {
    const auto subsets = all_subsets(labels, m);
    cert.total = cert.checked = subsets.size();
    cert.exhaustive = true;
    cert.method = "all selections of n^k dim V + 1 restricted vectors";
    cert.passed = run_checks(subsets.size(), [&](std::size_t i) {
      std::vector<GridVec> pts;
      for (int l : subsets[i]) pts.push_back(vec(l));
      return affinely_independent(pts);
    });
    return cert;
  }
  // Selections used by the injectivity argument: restrictions of two (facet, offset) items.
  const auto& fac = P.facets();
  const std::size_t items = fac.size() * static_cast<std::size_t>(B);
  const std::size_t pairs = items * (items + 1) / 2;
  cert.total = pairs;
  cert.method = "unions of (facet, offset) pairs";
  auto check_pair = [&](std::size_t a, std::size_t b) {
    std::vector<int> ls;
    for (int v : fac[a / static_cast<std::size_t>(B)]) ls.push_back(v * B + static_cast<int>(a % static_cast<std::size_t>(B)));
    for (int v : fac[b / static_cast<std::size_t>(B)]) ls.push_back(v * B + static_cast<int>(b % static_cast<std::size_t>(B)));
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    std::vector<GridVec> pts;
    for (int l : ls) pts.push_back(vec(l));
    return affinely_independent(pts);
  };
  if (pairs <= opt.cap) {
    cert.exhaustive = true;
    cert.checked = pairs;
    cert.passed = run_checks(items, [&](std::size_t a) {
      for (std::size_t b = a; b < items; ++b)
        if (!check_pair(a, b)) return false;
      return true;
    });
  } else {
    cert.checked = opt.cap;
    cert.method += " (random sub-family)";
    cert.passed = run_checks(opt.cap, [&](std::size_t i) {
      Rng rng(derive_seed(seed, 0x51d0), i);
      return check_pair(rng.below(items), rng.below(items));
    });
  }
  return cert;
}

}  // namespace

GenericCertificate certify_linear(const LinearMap& F, const GenericOptions& opt, std::uint64_t seed) {
  switch (opt.tag) {
    case GenericTag::Embedding: return certify_embedding(F, opt, seed);
    case GenericTag::ZeroCoordinate: return certify_zero(F, opt, seed);
    case GenericTag::Window: return certify_window(F, opt, seed);
  }
  throw Error("certify_linear: unknown tag");
}

GenericLinear sample_generic_linear(const SimplicialComplex& P, const GenericOptions& opt, std::uint64_t seed) {
  const int n = opt.tag == GenericTag::Window ? opt.window.target_dim() : opt.target_dim;
  if (n <= 0) throw Error("sample_generic_linear: target dimension must be positive");
  const auto s = static_cast<std::size_t>(P.vertex_count());
  if (!opt.base.empty() && opt.base.size() != s) throw Error("sample_generic_linear: one base image per vertex required");
  for (int attempt = 0; attempt <= opt.max_resamples; ++attempt) {
    const std::uint64_t sd = attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt));
    std::vector<GridVec> images(s, GridVec(static_cast<std::size_t>(n)));
    for (std::size_t v = 0; v < s; ++v) {
      Rng rng(sd, v);
      for (int c = 0; c < n; ++c) {
        const auto num = static_cast<std::int64_t>(rng() >> 11);  // uniform in [0, 2^53)
        if (opt.base.empty()) {
          images[v][static_cast<std::size_t>(c)] = num;
          continue;
        }
        const double u = grid_to_double(num);
        const double b = opt.base[v].at(static_cast<std::size_t>(c));
        const double val = opt.signed_noise ? b + opt.eta * (2 * u - 1) : (1 - opt.eta) * b + opt.eta * u;
        images[v][static_cast<std::size_t>(c)] = snap_to_grid(val);
      }
    }
    LinearMap F(P, std::move(images));
    GenericCertificate cert = certify_linear(F, opt, sd);
    cert.resamples = attempt;
    cert.seed_used = sd;
    if (cert.passed) return {std::move(F), cert};
  }
  throw Error("sample_generic_linear: certification failed after " + std::to_string(opt.max_resamples) + " resamples");
}

bool matrix_columns_independent(const std::vector<std::vector<int>>& M, const std::vector<GridVec>& u) {
  if (M.empty()) return true;
  const std::size_t cols = M[0].size();
  std::vector<GridVec> pts(cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (const auto& row : M) {
      const auto& v = u.at(static_cast<std::size_t>(row.at(j)));
      pts[j].insert(pts[j].end(), v.begin(), v.end());
    }
  return affinely_independent(pts);
}

// ---------------------------------------------------------------- distances

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Affine minimizer of |sum a_i p_i| subject to sum a_i = 1 over the index set.
// Solves [G 1; 1^T 0] [a; mu] = [0; 1] by Gaussian elimination with pivoting.
bool affine_minimizer(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& S,
                      std::vector<double>& alpha) {
  const std::size_t m = S.size();
  std::vector<std::vector<double>> A(m + 1, std::vector<double>(m + 2, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) A[i][j] = dot(pts[S[i]], pts[S[j]]);
    A[i][m] = 1;
    A[m][i] = 1;
  }
  A[m][m + 1] = 1;
  for (std::size_t c = 0; c <= m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r <= m; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    if (std::fabs(A[piv][c]) < 1e-300) return false;
    std::swap(A[piv], A[c]);
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == c || A[r][c] == 0) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t j = c; j <= m + 1; ++j) A[r][j] -= f * A[c][j];
    }
  }
  alpha.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) alpha[i] = A[i][m + 1] / A[i][i];
  return true;
}

}  // namespace

MinNorm min_norm_point(const std::vector<std::vector<double>>& pts, double tol) {
  MinNorm out;
  if (pts.empty()) throw Error("min_norm_point: empty point set");
  const std::size_t n = pts.size(), d = pts[0].size();
  double scale = 0;
  for (const auto& p : pts) scale = std::max(scale, dot(p, p));
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (dot(pts[i], pts[i]) < dot(pts[first], pts[first])) first = i;
  std::vector<std::size_t> S{first};
  std::vector<double> lambda{1.0};
  std::vector<double> x = pts[first];
  for (int iter = 0; iter < 1000; ++iter) {
    std::size_t j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = dot(x, pts[i]);
      if (v < best) best = v, j = i;
    }
    if (best >= dot(x, x) - tol * scale) break;
    if (std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    lambda.push_back(0.0);
    while (true) {
      std::vector<double> alpha;
      if (!affine_minimizer(pts, S, alpha)) {
        S.pop_back();  // degenerate: the new point is affinely dependent on S
        lambda.pop_back();
        iter = 1000;
        break;
      }
      if (std::all_of(alpha.begin(), alpha.end(), [](double a) { return a > 1e-15; })) {
        lambda = alpha;
        break;
      }
      double theta = 1;
      for (std::size_t i = 0; i < S.size(); ++i)
        if (alpha[i] <= 1e-15) theta = std::min(theta, lambda[i] / (lambda[i] - alpha[i]));
      for (std::size_t i = 0; i < S.size(); ++i) lambda[i] = theta * alpha[i] + (1 - theta) * lambda[i];
      std::vector<std::size_t> S2;
      std::vector<double> l2;
      for (std::size_t i = 0; i < S.size(); ++i)
        if (lambda[i] > 1e-15) S2.push_back(S[i]), l2.push_back(lambda[i]);
      S = std::move(S2);
      lambda = std::move(l2);
      if (S.size() == 1) {
        lambda = {1.0};
        break;
      }
    }
    const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    x.assign(d, 0.0);
    for (std::size_t i = 0; i < S.size(); ++i) {
      lambda[i] /= total;
      for (std::size_t c = 0; c < d; ++c) x[c] += lambda[i] * pts[S[i]][c];
    }
  }
  out.point = x;
  out.weights.assign(n, 0.0);
  for (std::size_t i = 0; i < S.size(); ++i) out.weights[S[i]] = lambda[i];
  out.norm = std::sqrt(dot(x, x));
  return out;
}

double simplex_distance(const std::vector<std::vector<double>>& simplex, const std::vector<double>& p) {
  if (simplex.size() == 1) {
    double s = 0;
    for (std::size_t c = 0; c < p.size(); ++c) s += (simplex[0][c] - p[c]) * (simplex[0][c] - p[c]);
    return std::sqrt(s);
  }
  if (simplex.size() == 2) {
    // Projection onto a segment in closed form.
    const auto& a = simplex[0];
    const auto& b = simplex[1];
    double ab2 = 0, t = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      ab2 += (b[c] - a[c]) * (b[c] - a[c]);
      t += (p[c] - a[c]) * (b[c] - a[c]);
    }
    t = ab2 > 0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
    double s = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      const double q = a[c] + t * (b[c] - a[c]) - p[c];
      s += q * q;
    }
    return std::sqrt(s);
  }
  std::vector<std::vector<double>> shifted;
  for (const auto& v : simplex) {
    std::vector<double> w(v.size());
    for (std::size_t c = 0; c < v.size(); ++c) w[c] = v[c] - p[c];
    shifted.push_back(std::move(w));
  }
  return min_norm_point(shifted).norm;
}

double simplex_pair_distance(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (b.size() == 1) return simplex_distance(a, b[0]);
  if (a.size() == 1) return simplex_distance(b, a[0]);
  std::vector<std::vector<double>> diff;
  for (const auto& u : a)
    for (const auto& v : b) {
      std::vector<double> w(u.size());
      for (std::size_t c = 0; c < u.size(); ++c) w[c] = u[c] - v[c];
      diff.push_back(std::move(w));
    }
  return min_norm_point(diff).norm;
}

double image_distance(const LinearMap& F, const std::vector<double>& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : F.complex().facets()) {
    std::vector<std::vector<double>> simplex;
    for (int v : f) simplex.push_back(F.image(v));
    best = std::min(best, simplex_distance(simplex, p));
  }
  return best;
}

// ---------------------------------------------------------------- polytope covers

PolytopeCover polytope_cover_count(const LinearMap& F, double eps, std::size_t probes, std::uint64_t seed) {
  if (!(eps > 0 && eps <= 1)) throw Error("polytope_cover_count: eps must lie in (0, 1]");
  PolytopeCover out;
  const int s = F.complex().vertex_count();
  const auto dim = static_cast<std::size_t>(F.target_dim());
  double diam = 0;
  for (int a = 0; a < s; ++a)
    for (int b = a + 1; b < s; ++b)
      for (std::size_t c = 0; c < dim; ++c) diam = std::max(diam, std::fabs(F.image(a)[c] - F.image(b)[c]));
  out.scale = std::max(1.0, diam);

  const auto& fac = F.complex().facets();
  for (const auto& f : fac) {
    const int n = static_cast<int>(f.size()) - 1;
    if (n == 0) {
      ++out.lattice_count;
      ++out.in_simplex_count;
      out.bound += 1;
      continue;
    }
    const auto q = static_cast<std::size_t>(std::floor(2.0 * n / eps + 1e-9));
    out.lattice_count += static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(q + 1), n)));
    out.in_simplex_count += static_cast<std::size_t>(std::llround(binomial(q + static_cast<std::size_t>(n), static_cast<std::size_t>(n))));
    out.bound += std::pow(2.0 * n + 1, n) / std::pow(eps, n);
  }

  // Probe: a random point of a random facet against the grid point obtained by rounding each x_i down.
  out.probes = probes;
  for (std::size_t t = 0; t < probes && !fac.empty(); ++t) {
    Rng rng(derive_seed(seed, 0xc0e7), t);
    const auto& f = fac[rng.below(fac.size())];
    const int n = static_cast<int>(f.size()) - 1;
    if (n == 0) continue;
    const double pitch = eps / (2.0 * n);
    std::vector<double> x(static_cast<std::size_t>(n));
    double total = 0;
    for (auto& xi : x) total += (xi = -std::log(1 - rng.uniform()));
    total += -std::log(1 - rng.uniform());
    for (auto& xi : x) xi /= total;
    double gap = 0;
    for (std::size_t c = 0; c < dim; ++c) {
      double p = 0, g = 0;
      for (int i = 0; i < n; ++i) {
        const double ui = (F.image(f[static_cast<std::size_t>(i) + 1])[c] - F.image(f[0])[c]) / out.scale;
        p += x[static_cast<std::size_t>(i)] * ui;
        g += std::floor(x[static_cast<std::size_t>(i)] / pitch) * pitch * ui;
      }
      gap = std::max(gap, std::fabs(p - g));
    }
    out.max_gap = std::max(out.max_gap, gap);
  }
  return out;
}

}  // namespace mdimkit
