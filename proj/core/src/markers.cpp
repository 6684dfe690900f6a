#include "mdimkit/markers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "mdimkit/rng.hpp"
#include "mdimkit/spatial.hpp"

namespace mdimkit {

double MarkerField::at(const LatticePoint& n) const {
  if (!window.contains(n)) throw WindowError("marker field queried outside its window at " + to_string(n));
  return phi[static_cast<std::size_t>(window.index(n))];
}

void MarkerField::set(const LatticePoint& n, double v) {
  if (!window.contains(n)) throw WindowError("marker field set outside its window at " + to_string(n));
  phi[static_cast<std::size_t>(window.index(n))] = v;
}

std::vector<LatticePoint> MarkerField::support() const {
  std::vector<LatticePoint> out;
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (phi[i] > 0) out.push_back(window.point(static_cast<std::int64_t>(i)));
  return out;  // Box::index order is lexicographic
}

MarkerField MarkerField::shifted(const LatticePoint& m) const {
  MarkerField f = *this;
  f.window.lo -= m;
  f.window.hi -= m;
  return f;
}

double height_gate(int L, int k) {
  const double v = L + std::sqrt(static_cast<double>(k));
  return v * v;
}

namespace {

Box eroded(const Box& b, std::int64_t t) { return b.inflated(-t); }

}  // namespace

std::optional<MarkerViolation> check_marker_field(const MarkerField& f) {
  const int k = f.k();
  if (f.M < 1 || f.L < f.M) return MarkerViolation{"parameters", {}, "marker parameters need L >= M >= 1"};
  if (!(f.s > 1)) return MarkerViolation{"parameters", {}, "overshoot factor s must exceed 1"};
  if (f.H < height_gate(f.L, k))
    return MarkerViolation{"height", {}, "H gate: H must be at least (L + sqrt(k))^2"};
  for (std::size_t i = 0; i < f.phi.size(); ++i)
    if (!(f.phi[i] >= 0 && f.phi[i] <= 1))
      return MarkerViolation{"range", {f.window.point(static_cast<std::int64_t>(i))}, "phi outside [0,1]"};

  const auto supp = f.support();
  const SpatialIndex sidx(supp, std::max(1, f.M));
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < supp.size(); ++i) {
    sidx.query(to_real(supp[i]), f.M, near);
    for (std::size_t j : near)
      if (j != i && static_cast<double>((supp[i] - supp[j]).norm2()) < static_cast<double>(f.M) * f.M)
        return MarkerViolation{"separation", {supp[i], supp[j]},
                               "support not M-separated: " + to_string(supp[i]) + " and " + to_string(supp[j])};
  }

  std::vector<LatticePoint> ones;
  for (const auto& p : supp)
    if (f.at(p) == 1.0) ones.push_back(p);
  const SpatialIndex oidx(ones, std::max(1, f.L));
  const Box inner = eroded(f.window, f.L);
  if (inner.empty()) return std::nullopt;
  std::optional<MarkerViolation> bad;
  const double L2 = static_cast<double>(f.L) * f.L;
  inner.for_each([&](const LatticePoint& u) {
    if (bad) return;
    oidx.query(to_real(u), f.L, near);
    for (std::size_t j : near)
      if (static_cast<double>((ones[j] - u).norm2()) < L2) return;
    bad = MarkerViolation{"syndeticity", {u}, "no phi = 1 site within L of " + to_string(u)};
  });
  return bad;
}

void validate_marker_field(const MarkerField& f) {
  if (auto v = check_marker_field(f)) throw MarkerError(*v);
}

MarkerField grid_marker_field(const Box& window, int spacing, const LatticePoint& offset, int M, int L, double H,
                              double s) {
  if (spacing < 1) throw Error("grid_marker_field: spacing must be >= 1");
  MarkerField f{window, std::vector<double>(static_cast<std::size_t>(window.volume()), 0.0), M, L, H, s};
  window.for_each([&](const LatticePoint& n) {
    bool on = true;
    for (int i = 0; i < n.dim(); ++i) on = on && ((n[i] - offset[i]) % spacing + spacing) % spacing == 0;
    if (on) f.set(n, 1.0);
  });
  return f;
}

namespace {

// Greedy insertion in random order with a dense bucket grid for conflict tests.
class SeparatedBuilder {
 public:
  SeparatedBuilder(const Box& window, double sep) : window_(window), sep_(sep) {
    cell_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(sep)));
    cells_ = Box{cell_of(window.lo), cell_of(window.hi)};
    buckets_.resize(static_cast<std::size_t>(cells_.volume()));
  }
  bool try_add(const LatticePoint& p) {
    const LatticePoint c = cell_of(p);
    const Box range{c - ones(1), c + ones(1)};
    const double sep2 = sep_ * sep_;
    bool ok = true;
    range.for_each([&](const LatticePoint& q) {
      if (!ok || !cells_.contains(q)) return;
      for (const auto& o : buckets_[static_cast<std::size_t>(cells_.index(q))])
        if (static_cast<double>((o - p).norm2()) < sep2) {
          ok = false;
          return;
        }
    });
    if (ok) buckets_[static_cast<std::size_t>(cells_.index(c))].push_back(p);
    return ok;
  }

 private:
  LatticePoint ones(std::int64_t v) const {
    LatticePoint p(window_.dim());
    for (int i = 0; i < p.dim(); ++i) p[i] = v;
    return p;
  }
  LatticePoint cell_of(const LatticePoint& p) const {
    LatticePoint c(p.dim());
    for (int i = 0; i < p.dim(); ++i) {
      const std::int64_t d = p[i] - window_.lo[i];
      c[i] = d / cell_;
    }
    return c;
  }
  Box window_;
  double sep_;
  std::int64_t cell_;
  Box cells_;
  std::vector<std::vector<LatticePoint>> buckets_;
};

std::vector<std::int64_t> shuffled_indices(std::int64_t n, std::uint64_t seed) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace

LatticeSet random_separated_set(const Box& window, double L, std::uint64_t seed) {
  SeparatedBuilder b(window, L);
  std::vector<LatticePoint> pts;
  for (auto idx : shuffled_indices(window.volume(), seed)) {
    const LatticePoint p = window.point(idx);
    if (b.try_add(p)) pts.push_back(p);
  }
  return LatticeSet(window.dim(), std::move(pts));
}

MarkerField synthetic_marker_field(int M, int L, double H, double s, const Box& window, std::uint64_t seed,
                                   const HeightSpec& heights) {
  if (M < 2 || L < M) throw Error("synthetic_marker_field: need L >= M >= 2");
  if (M > 2 * L) throw Error("synthetic_marker_field: infeasible (M, L) with M > 2L");
  if (H < height_gate(L, window.dim())) throw Error("synthetic_marker_field: H gate: H < (L + sqrt(k))^2");
  if (!(heights.lo > 0 && heights.lo <= heights.hi && heights.hi <= 1))
    throw Error("synthetic_marker_field: heights must satisfy 0 < lo <= hi <= 1");

  MarkerField f{window, std::vector<double>(static_cast<std::size_t>(window.volume()), 0.0), M, L, H, s};
  SeparatedBuilder support(window, M);
  SeparatedBuilder designated(window, L - M);
  Rng hrng(derive_seed(seed, 1));
  for (auto idx : shuffled_indices(window.volume(), seed)) {
    const LatticePoint p = window.point(idx);
    if (!support.try_add(p)) continue;
    const double h = hrng.uniform(heights.lo, heights.hi);
    f.set(p, (L == M || designated.try_add(p)) ? 1.0 : h);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Clopen markers

std::vector<int> ClopenMarker::pattern_at(const PointWindow& x, const LatticePoint& p) const {
  std::vector<int> pat;
  pat.reserve(shape_.size());
  for (const auto& o : shape_) pat.push_back(x.symbol(p + o));
  return pat;
}

namespace {

std::vector<LatticePoint> cube_shape(int r, int k) {
  std::vector<LatticePoint> shape;
  if (r < 0) return shape;
  Box b{LatticePoint(k), LatticePoint(k)};
  b.inflated(r).for_each([&](const LatticePoint& o) { shape.push_back(o); });
  return shape;
}

// Offsets d with 0 < |d| < L that are lexicographically positive.
std::vector<LatticePoint> half_offsets(int L, int k) {
  std::vector<LatticePoint> out;
  for (const auto& d : ball_offsets(L, k))
    if (d > LatticePoint(k) && static_cast<double>(d.norm2()) < static_cast<double>(L) * L) out.push_back(d);
  return out;
}

std::vector<LatticePoint> near_offsets(int L, int k) {
  std::vector<LatticePoint> out;
  for (const auto& d : ball_offsets(L, k))
    if (d != LatticePoint(k) && static_cast<double>(d.norm2()) < static_cast<double>(L) * L) out.push_back(d);
  return out;
}

}  // namespace

ClopenMarker build_clopen_marker(const std::vector<PointWindow>& sample, int L, int max_radius) {
  if (L < 1) throw Error("clopen_marker: L must be >= 1");
  if (sample.empty()) throw Error("clopen_marker: empty sample");
  const int k = sample.front().dim();
  for (const auto& x : sample)
    if (!x.has_symbol()) throw Error("clopen_marker: needs a symbolic system");
  const auto offsets = half_offsets(L, k);

  std::optional<PeriodicObstruction> last;
  for (int r = -1; r <= max_radius; ++r) {
    ClopenMarker U;
    U.L_ = L;
    U.r_ = r;
    U.shape_ = cube_shape(r, k);
    bool ok = true;
    std::set<std::vector<int>> seen;
    for (std::size_t si = 0; si < sample.size() && ok; ++si) {
      const auto& x = sample[si];
      const Box dom = eroded(x.domain(), std::max(r, 0));
      if (dom.empty()) throw WindowError("clopen_marker: sample window smaller than cylinder shape");
      std::map<std::vector<int>, int> ids;
      std::vector<int> id(static_cast<std::size_t>(dom.volume()));
      for (std::int64_t i = 0; i < dom.volume(); ++i) {
        auto pat = U.pattern_at(x, dom.point(i));
        auto [it, inserted] = ids.emplace(pat, static_cast<int>(ids.size()));
        id[static_cast<std::size_t>(i)] = it->second;
        seen.insert(std::move(pat));
      }
      for (std::int64_t i = 0; i < dom.volume() && ok; ++i) {
        const LatticePoint p = dom.point(i);
        for (const auto& d : offsets) {
          const LatticePoint q = p + d;
          if (dom.contains(q) && id[static_cast<std::size_t>(dom.index(q))] == id[static_cast<std::size_t>(i)]) {
            last.emplace(si, p, d,
                         "clopen_marker: sample " + std::to_string(si) + " repeats its cylinder at " + to_string(p) +
                             " and " + to_string(q) + " (period " + to_string(d) + " < L)");
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) continue;
    for (const auto& pat : seen) {
      U.class_of_[pat] = U.classes_.size();
      U.classes_.push_back(pat);
    }
    return U;
  }
  if (last) throw *last;
  throw Error("clopen_marker: no admissible cylinder radius");
}

ClopenMarker clopen_marker(const ShiftSystem& Z, int L, const Box& window, int n_samples, std::uint64_t seed) {
  std::vector<PointWindow> sample;
  for (int i = 0; i < n_samples; ++i) sample.push_back(Z.sample(window, derive_seed(seed, static_cast<std::uint64_t>(i))));
  std::int64_t width = window.hi[0] - window.lo[0] + 1;
  for (int i = 1; i < window.dim(); ++i) width = std::min(width, window.hi[i] - window.lo[i] + 1);
  return build_clopen_marker(sample, L, static_cast<int>(width / 4));
}

ClopenMarker::Evaluation ClopenMarker::evaluate(const PointWindow& x) const {
  const int k = x.dim();
  Evaluation ev;
  ev.pattern_domain = eroded(x.domain(), std::max(r_, 0));
  const Box& dom = ev.pattern_domain;
  if (dom.empty()) return ev;
  std::vector<std::vector<std::int64_t>> by_class(classes_.size());
  for (std::int64_t i = 0; i < dom.volume(); ++i) {
    const auto it = class_of_.find(pattern_at(x, dom.point(i)));
    if (it == class_of_.end()) throw Error("clopen_marker: cylinder unseen in the construction sample at " +
                                           to_string(dom.point(i)));
    by_class[it->second].push_back(i);
  }
  // 0 = not in U, 1 = in U, 2 = undecided.
  std::vector<char> state(static_cast<std::size_t>(dom.volume()), 0);
  const auto nbrs = near_offsets(L_, k);
  for (const auto& members : by_class)
    for (std::int64_t i : members) {
      const LatticePoint p = dom.point(i);
      bool excluded = false, unsure = false;
      for (const auto& d : nbrs) {
        const LatticePoint q = p + d;
        if (!dom.contains(q)) {
          unsure = true;
          continue;
        }
        const char sq = state[static_cast<std::size_t>(dom.index(q))];
        if (sq == 1) {
          excluded = true;
          break;
        }
        if (sq == 2) unsure = true;
      }
      state[static_cast<std::size_t>(i)] = excluded ? 0 : (unsure ? 2 : 1);
    }
  for (std::int64_t i = 0; i < dom.volume(); ++i) {
    const char st = state[static_cast<std::size_t>(i)];
    if (st == 2) continue;
    ev.certified.push_back(dom.point(i));
    if (st == 1) ev.hits.push_back(dom.point(i));
  }
  return ev;
}

ClopenCheck check_clopen_marker(const ClopenMarker& U, const PointWindow& x) {
  const auto ev = U.evaluate(x);
  ClopenCheck c;
  c.hits = ev.hits.size();
  c.certified = ev.certified.size();
  const std::unordered_set<LatticePoint> hits(ev.hits.begin(), ev.hits.end());
  const auto nbrs = near_offsets(U.L(), x.dim());
  for (const auto& h : ev.hits)
    for (const auto& d : nbrs)
      if (hits.count(h + d)) {
        c.separated = false;
        c.witnesses = {h, h + d};
      }
  for (const auto& p : ev.certified) {
    if (hits.count(p)) continue;
    bool found = false;
    for (const auto& d : nbrs)
      if (hits.count(p + d)) {
        found = true;
        break;
      }
    if (!found) {
      c.syndetic = false;
      c.witnesses = {p};
    }
  }
  return c;
}

MarkerField marker_field_from_system(const PointWindow& x, const ClopenMarker& U, int M, int L, double H, double s) {
  const auto ev = U.evaluate(x);
  const std::unordered_set<LatticePoint> decided(ev.certified.begin(), ev.certified.end());
  const std::unordered_set<LatticePoint> hits(ev.hits.begin(), ev.hits.end());
  for (std::int64_t t = 0;; ++t) {
    const Box b = eroded(ev.pattern_domain, t);
    if (b.empty()) throw WindowError("marker_field_from_system: no decided sub-box");
    bool all = true;
    b.for_each([&](const LatticePoint& p) { all = all && decided.count(p); });
    if (!all) continue;
    MarkerField f{b, std::vector<double>(static_cast<std::size_t>(b.volume()), 0.0), M, L, H, s};
    b.for_each([&](const LatticePoint& p) {
      if (hits.count(p)) f.set(p, 1.0);
    });
    validate_marker_field(f);
    return f;
  }
}

}  // namespace mdimkit
