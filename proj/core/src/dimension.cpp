#include "mdimkit/dimension.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "mdimkit/parallel.hpp"
#include "mdimkit/rng.hpp"

namespace mdimkit {
namespace {

std::size_t exact_cover(const FiniteMetric& m, double eps) {
  const std::size_t n = m.size;
  if (n == 0) return 0;
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (m.dist(i, j) < eps) adj[i] |= 1u << j, adj[j] |= 1u << i;
  const std::uint32_t full = (1u << n) - 1;
  std::vector<char> clique(std::size_t{full} + 1, 0);
  clique[0] = 1;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int low = __builtin_ctz(mask);
    const std::uint32_t rest = mask & (mask - 1);
    clique[mask] = clique[rest] && (rest & ~adj[static_cast<std::size_t>(low)]) == 0;
  }
  std::vector<std::uint8_t> best(std::size_t{full} + 1, 255);
  best[0] = 0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    const std::uint32_t others = mask & ~low;
    // Sets containing the lowest point: low plus a subset of the others.
    for (std::uint32_t sub = others;; sub = (sub - 1) & others) {
      if (clique[sub | low]) best[mask] = std::min<std::uint8_t>(best[mask], static_cast<std::uint8_t>(best[mask & ~(sub | low)] + 1));
      if (sub == 0) break;
    }
  }
  return best[full];
}

constexpr std::size_t kEnumerationFills = 16;

std::size_t window_sites(const LatticeSet& s) { return s.size(); }

// Shortest round-trip text.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Every word over the alphabet on `box` in Box::index order of the last coordinate fastest.
std::vector<std::vector<int>> all_blocks(int alphabet, std::size_t sites, std::size_t cap) {
  const double count = std::pow(static_cast<double>(alphabet), static_cast<double>(sites));
  if (count > static_cast<double>(cap)) throw Error("entropy_profile: full enumeration exceeds the cap");
  std::vector<std::vector<int>> out;
  std::vector<int> w(sites, 0);
  while (true) {
    out.push_back(w);
    std::size_t i = 0;
    while (i < sites && ++w[i] == alphabet) w[i++] = 0;
    if (i == sites) break;
  }
  return out;
}

double log_cover(const std::vector<PointWindow>& pts, const WindowMetric& wm, double eps) {
  auto shared = std::make_shared<const std::vector<PointWindow>>(pts);
  return std::log(static_cast<double>(covering_number(window_sample_metric(shared, wm), eps).best()));
}

void fill_running_inf(ScaleProfile& p) {
  double inf = std::numeric_limits<double>::infinity();
  double last_eps = std::numeric_limits<double>::quiet_NaN();
  for (auto& r : p.rows) {
    if (r.epsilon != last_eps) inf = std::numeric_limits<double>::infinity(), last_eps = r.epsilon;
    inf = std::min(inf, r.normalized);
    r.running_inf = inf;
  }
}

}  // namespace

CoveringCount covering_number(const FiniteMetric& m, double eps) {
  CoveringCount c;
  c.greedy = greedy_cover(m, eps).sets.size();
  if (m.size <= kExactCoverLimit) c.exact = exact_cover(m, eps);
  return c;
}

FiniteMetric window_sample_metric(std::shared_ptr<const std::vector<PointWindow>> points, WindowMetric metric) {
  auto wm = std::make_shared<const WindowMetric>(std::move(metric));
  const std::size_t n = points->size();
  return {n, [points, wm](std::size_t i, std::size_t j) { return (*wm)((*points)[i], (*points)[j]); }};
}

std::vector<PointWindow> sample_windows(const ShiftSystem& X, const Box& box, std::size_t count, std::uint64_t seed,
                                        int special_period) {
  auto out = parallel_map<PointWindow>(count, [&](std::size_t i) { return X.sample(box, derive_seed(seed, i)); });
  if (special_period > 0)
    for (auto& w : X.special_samples(box, special_period)) out.push_back(std::move(w));
  return out;
}

std::string ScaleProfile::to_csv(bool header) const {
  std::ostringstream os;
  if (header) os << "epsilon,N_or_R,raw,normalized,running_inf,stderr\n";
  for (const auto& r : rows)
    os << fmt(r.epsilon) << ',' << r.window << ',' << fmt(r.raw) << ',' << fmt(r.normalized) << ','
       << fmt(r.running_inf) << ',' << fmt(r.std_error) << '\n';
  return os.str();
}

ScaleProfile entropy_profile(const ShiftSystem& X, double eps, const std::vector<std::int64_t>& N_grid,
                             std::size_t sample_size, std::uint64_t seed, const EntropyOptions& opt) {
  if (!(eps > 0)) throw Error("entropy_profile: eps must be positive");
  ScaleProfile p;
  p.sequence = "cube";
  for (std::int64_t N : N_grid) {
    const LatticeSet omega = cube_window(N, X.k());
    const WindowMetric wm(omega, opt.metric, X.has_symbol(), X.vector_dim());
    const Box box = wm.required_box();
    std::vector<PointWindow> pts;
    if (opt.full_enumeration) {
      if (!X.has_symbol() || X.vector_dim() > 0) throw Error("entropy_profile: enumeration needs a symbolic system");
      const auto blocks = all_blocks(X.alphabet(), omega.size(), opt.enumeration_cap);
      // A block is kept if some fill (special points first, then random ones) extends it legally.
      const auto special = X.special_samples(box, 2);
      const std::uint64_t fseed = derive_seed(seed, static_cast<std::uint64_t>(N));
      auto found = parallel_map<std::optional<PointWindow>>(blocks.size(), [&](std::size_t b) {
        for (std::size_t a = 0; a < special.size() + kEnumerationFills; ++a) {
          PointWindow w = a < special.size() ? special[a] : X.sample(box, derive_seed(fseed, b * kEnumerationFills + a));
          for (std::size_t i = 0; i < omega.size(); ++i) w.set_symbol(omega.points()[i], blocks[b][i]);
          if (!X.violation(w)) return std::optional<PointWindow>(std::move(w));
        }
        return std::optional<PointWindow>();
      });
      for (auto& w : found)
        if (w) pts.push_back(std::move(*w));
    } else {
      pts = sample_windows(X, box, sample_size, derive_seed(seed, static_cast<std::uint64_t>(N)));
    }
    const double sites = static_cast<double>(window_sites(omega));
    const double raw = log_cover(pts, wm, eps);
    std::vector<PointWindow> half(pts.begin(), pts.begin() + static_cast<long>((pts.size() + 1) / 2));
    const double raw_half = log_cover(half, wm, eps);
    ProfileRow r;
    r.epsilon = eps;
    r.window = N;
    r.raw = raw;
    r.normalized = raw / sites;
    r.std_error = std::fabs(raw - raw_half) / sites;
    p.rows.push_back(r);
  }
  fill_running_inf(p);
  return p;
}

WidimBound widim_upper(const FiniteMetric& m, double eps) {
  // Sets of diameter < eps/2 leave a blending radius of at least eps/8.
  const Cover c = greedy_cover(m, eps / 2);
  WidimBound w{0, nerve_embedding(m, c, eps)};
  w.bound = std::max(0, w.cert.complex.dim());
  return w;
}

MdimProfile mdim_profile(const ShiftSystem& X, const std::vector<double>& eps_grid,
                         const std::vector<std::int64_t>& N_grid, std::size_t sample_size, std::uint64_t seed,
                         const MdimOptions& opt) {
  MdimProfile out;
  out.cubes.sequence = "cube";
  out.balls.sequence = "ball";
  std::vector<double> R_grid = opt.R_grid;
  if (R_grid.empty())
    for (auto N : N_grid) R_grid.push_back(static_cast<double>(N - 1) / 2);

  auto run = [&](const LatticeSet& omega, std::uint64_t tag, double eps, std::int64_t label) {
    const WindowMetric wm(omega, opt.metric, X.has_symbol(), X.vector_dim());
    auto pts = sample_windows(X, wm.required_box(), sample_size, derive_seed(seed, tag));
    auto full = std::make_shared<const std::vector<PointWindow>>(pts);
    auto half = std::make_shared<const std::vector<PointWindow>>(pts.begin(), pts.begin() + static_cast<long>((pts.size() + 1) / 2));
    const double sites = static_cast<double>(omega.size());
    const int b = widim_upper(window_sample_metric(full, wm), eps).bound;
    const int bh = widim_upper(window_sample_metric(half, wm), eps).bound;
    ProfileRow r;
    r.epsilon = eps;
    r.window = label;
    r.raw = b;
    r.normalized = b / sites;
    r.std_error = std::fabs(b - bh) / sites;
    return r;
  };
  for (double eps : eps_grid) {
    for (auto N : N_grid)
      out.cubes.rows.push_back(run(cube_window(N, X.k()), static_cast<std::uint64_t>(N), eps, N));
    for (double R : R_grid)
      out.balls.rows.push_back(
          run(ball_points(R, X.k()), 0x8a11 + static_cast<std::uint64_t>(R * 16), eps, static_cast<std::int64_t>(std::llround(R))));
  }
  fill_running_inf(out.cubes);
  fill_running_inf(out.balls);

  // Compare the values at the largest window of each sequence.
  const std::size_t nc = N_grid.size(), nb = R_grid.size();
  for (std::size_t e = 0; e < eps_grid.size() && nc && nb; ++e) {
    const auto& c = out.cubes.rows[e * nc + nc - 1];
    const auto& b = out.balls.rows[e * nb + nb - 1];
    FolnerAgreement a;
    a.epsilon = eps_grid[e];
    a.cube_value = c.normalized;
    a.ball_value = b.normalized;
    // Sampling sensitivity of both plus one unit of granularity of the larger window.
    const double grain = std::max(c.normalized > 0 ? c.normalized / std::max(c.raw, 1.0) : 0.0,
                                  b.normalized > 0 ? b.normalized / std::max(b.raw, 1.0) : 0.0);
    a.tolerance = c.std_error + b.std_error + grain;
    a.agree = std::fabs(a.cube_value - a.ball_value) <= a.tolerance + 1e-12;
    out.agreement.push_back(a);
  }
  return out;
}

std::string OcapEstimate::to_csv() const {
  std::ostringstream os;
  os << "predicate,sequence,window,sites,sup_count,normalized\n";
  for (const auto& r : rows)
    os << predicate_id << ',' << r.sequence << ',' << fmt(r.window) << ',' << r.sites << ',' << r.sup_count << ','
       << fmt(r.normalized) << '\n';
  return os.str();
}

OcapEstimate ocap_estimate(const ShiftSystem& X, const CellPredicate& A, const std::string& predicate_id,
                           const std::vector<std::int64_t>& N_grid, const std::vector<double>& R_grid,
                           std::size_t sample_size, std::uint64_t seed) {
  OcapEstimate est;
  est.predicate_id = predicate_id;
  est.inf_over_windows = std::numeric_limits<double>::infinity();
  auto sup_count = [&](const LatticeSet& omega, std::uint64_t tag) {
    const Box box = omega.bounding_box().inflated(2);
    const auto pts = sample_windows(X, box, sample_size, derive_seed(seed, tag), 4);
    const auto counts = parallel_map<std::size_t>(pts.size(), [&](std::size_t i) {
      std::size_t c = 0;
      for (const auto& n : omega) c += A(pts[i], n) ? 1 : 0;
      return c;
    });
    return counts.empty() ? std::size_t{0} : *std::max_element(counts.begin(), counts.end());
  };
  for (auto N : N_grid) {
    const auto omega = cube_window(N, X.k());
    OcapRow r{"cube", static_cast<double>(N), omega.size(), sup_count(omega, static_cast<std::uint64_t>(N)), 0};
    r.normalized = static_cast<double>(r.sup_count) / static_cast<double>(r.sites);
    est.inf_over_windows = std::min(est.inf_over_windows, r.normalized);
    est.rows.push_back(r);
  }
  for (double R : R_grid) {
    const auto omega = ball_points(R, X.k());
    OcapRow r{"ball", R, omega.size(), sup_count(omega, 0x0ba1 + static_cast<std::uint64_t>(R * 16)), 0};
    r.normalized = static_cast<double>(r.sup_count) / static_cast<double>(r.sites);
    est.rows.push_back(r);
  }
  if (N_grid.empty()) est.inf_over_windows = 0;
  return est;
}

KappaConstant kappa_constant(int k, int truncation) {
  KappaConstant kc;
  for (const auto& o : ball_offsets(truncation, k)) kc.c += std::exp2(-o.norm());
  kc.tail = truncation_tail(BaseMetric{BaseMetric::Kind::Sum, truncation}, k, 1.0);
  kc.c += kc.tail;  // upper bound for c
  kc.kappa = 1 / (2 * kc.c);
  return kc;
}

KappaCheck kappa_route_check(const ShiftSystem& X, double R, double eps, std::size_t pairs, std::uint64_t seed) {
  const int k = X.k();
  const double diam = cell_diameter(X.has_symbol(), X.vector_dim());
  KappaCheck out;
  int L = 0;
  while (truncation_tail(BaseMetric{BaseMetric::Kind::Sum, L}, k, diam) >= eps / 2) ++L;
  out.L = L;
  const int T = std::max(32, L);
  const KappaConstant kc = kappa_constant(k, T);
  const BaseMetric sum{BaseMetric::Kind::Sum, T};
  const LatticeSet omega = ball_points(R, k);
  const WindowMetric wm(omega, sum, X.has_symbol(), X.vector_dim());
  const LatticeSet proj = ball_points(R + L, k);
  const Box box = wm.required_box();
  out.pairs = pairs;
  out.max_slack = std::numeric_limits<double>::infinity();
  const auto slack = parallel_map<double>(pairs, [&](std::size_t i) {
    PointWindow x = X.sample(box, derive_seed(seed, 2 * i));
    PointWindow y = X.sample(box, derive_seed(seed, 2 * i + 1));
    if (i % 2 == 1) {
      // y agrees with x on B_{R+L}: the tail term alone must stay below eps/2.
      for (const auto& n : proj) y.set_cell(n, x.cell(n));
    }
    double sup = 0;
    for (const auto& n : proj) sup = std::max(sup, cell_distance(x, n, y, n));
    return kc.c * sup + eps / 2 - (wm(x, y) + wm.truncation_error());
  });
  for (double s : slack) {
    out.max_slack = std::min(out.max_slack, s);
    if (!(s > 0)) ++out.violations;
  }
  return out;
}

}  // namespace mdimkit
