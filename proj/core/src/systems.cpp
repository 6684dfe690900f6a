#include "mdimkit/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mdimkit/rng.hpp"

namespace mdimkit {

// ---------------------------------------------------------------------------
// PointWindow

PointWindow::PointWindow(Box domain, bool has_symbol, int vector_dim)
    : domain_(std::move(domain)), has_symbol_(has_symbol), D_(vector_dim) {
  const auto v = static_cast<std::size_t>(domain_.volume());
  if (has_symbol_) symbols_.assign(v, 0);
  if (D_ > 0) vectors_.assign(v * static_cast<std::size_t>(D_), 0.0);
}

std::size_t PointWindow::at(const LatticePoint& n) const {
  if (!domain_.contains(n)) throw WindowError("site " + to_string(n) + " outside point window");
  return static_cast<std::size_t>(domain_.index(n));
}

CellValue PointWindow::cell(const LatticePoint& n) const {
  CellValue c;
  if (has_symbol_) c.symbol = symbol(n);
  if (D_ > 0) c.vec.assign(vec(n), vec(n) + D_);
  return c;
}

void PointWindow::set_cell(const LatticePoint& n, const CellValue& v) {
  if (has_symbol_) set_symbol(n, v.symbol.value_or(0));
  if (D_ > 0) std::copy(v.vec.begin(), v.vec.end(), vec(n));
}

PointWindow PointWindow::shifted(const LatticePoint& a) const {
  PointWindow w = *this;
  w.domain_.lo -= a;
  w.domain_.hi -= a;
  return w;
}

PointWindow PointWindow::restricted(const Box& b) const {
  if (!domain_.contains(b.lo) || !domain_.contains(b.hi))
    throw WindowError("restriction box not inside point window");
  PointWindow w(b, has_symbol_, D_);
  b.for_each([&](const LatticePoint& n) {
    if (has_symbol_) w.set_symbol(n, symbol(n));
    if (D_ > 0) std::copy(vec(n), vec(n) + D_, w.vec(n));
  });
  return w;
}

double cell_distance(const PointWindow& x, const LatticePoint& n, const PointWindow& y, const LatticePoint& m) {
  double d = 0;
  if (x.has_symbol() && x.symbol(n) != y.symbol(m)) d = 1;
  if (x.vector_dim() > 0) {
    const double* a = x.vec(n);
    const double* b = y.vec(m);
    double s = 0;
    for (int i = 0; i < x.vector_dim(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    d = std::max(d, std::sqrt(s));
  }
  return d;
}

double cell_diameter(bool has_symbol, int vector_dim) {
  return std::max(has_symbol ? 1.0 : 0.0, vector_dim > 0 ? std::sqrt(static_cast<double>(vector_dim)) : 0.0);
}

// ---------------------------------------------------------------------------
// Metrics

double truncation_tail(const BaseMetric& metric, int k, double cell_diam) {
  const int W = metric.truncation;
  if (metric.kind == BaseMetric::Kind::Max) return std::ldexp(cell_diam, -W);
  if (k == 1) return std::ldexp(2.0 * cell_diam, -W);
  // Sites with r-1 < |m| <= r number at most (2r+1)^k and weigh less than 2^{-(r-1)}.
  double s = 0;
  for (int r = W + 1;; ++r) {
    const double term = std::pow(2.0 * r + 1.0, k) * std::ldexp(1.0, -(r - 1));
    s += term;
    if (term < 1e-18 * s && r > W + 64) break;
  }
  return s * cell_diam;
}

WindowMetric::WindowMetric(LatticeSet omega, BaseMetric metric, bool has_symbol, int vector_dim)
    : omega_(std::move(omega)), metric_(metric) {
  if (omega_.empty()) throw Error("WindowMetric: empty window set");
  const int k = omega_.ambient_k();
  required_ = omega_.bounding_box().inflated(metric_.truncation);
  tail_ = truncation_tail(metric_, k, cell_diameter(has_symbol, vector_dim));
  offsets_ = ball_offsets(metric_.truncation, k);
  for (const auto& o : offsets_) offset_weights_.push_back(std::exp2(-o.norm()));
  if (metric_.kind == BaseMetric::Kind::Max) {
    std::vector<double> w(static_cast<std::size_t>(required_.volume()), 0.0);
    for (const auto& n : omega_)
      for (std::size_t i = 0; i < offsets_.size(); ++i) {
        auto& slot = w[static_cast<std::size_t>(required_.index(n + offsets_[i]))];
        slot = std::max(slot, offset_weights_[i]);
      }
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] > 0) {
        sites_.push_back(required_.point(static_cast<std::int64_t>(i)));
        site_weights_.push_back(w[i]);
      }
  }
}

double WindowMetric::operator()(const PointWindow& x, const PointWindow& y) const {
  for (const PointWindow* p : {&x, &y})
    if (!p->domain().contains(required_.lo) || !p->domain().contains(required_.hi))
      throw WindowError("window_distance: windows must contain the window set inflated by " +
                        std::to_string(metric_.truncation));
  double best = 0;
  if (metric_.kind == BaseMetric::Kind::Max) {
    for (std::size_t i = 0; i < sites_.size(); ++i)
      best = std::max(best, site_weights_[i] * cell_distance(x, sites_[i], y, sites_[i]));
    return best;
  }
  for (const auto& n : omega_) {
    double s = 0;
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      const LatticePoint m = n + offsets_[i];
      s += offset_weights_[i] * cell_distance(x, m, y, m);
    }
    best = std::max(best, s);
  }
  return best;
}

WindowDistance window_distance(const PointWindow& x, const PointWindow& y, const LatticeSet& omega,
                               const BaseMetric& metric) {
  const WindowMetric wm(omega, metric, x.has_symbol(), x.vector_dim());
  return {wm(x, y), wm.truncation_error()};
}

// ---------------------------------------------------------------------------
// ShiftSystem defaults

std::optional<std::string> ShiftSystem::violation(const PointWindow& w) const {
  if (w.dim() != k()) return "dimension mismatch";
  if (w.has_symbol() != has_symbol() || w.vector_dim() != vector_dim()) return "channel mismatch";
  std::optional<std::string> bad;
  w.domain().for_each([&](const LatticePoint& n) {
    if (bad) return;
    if (has_symbol() && (w.symbol(n) < 0 || w.symbol(n) >= alphabet()))
      bad = "symbol out of range at " + to_string(n);
    for (int i = 0; i < vector_dim(); ++i)
      if (!(w.vec(n)[i] >= 0.0 && w.vec(n)[i] <= 1.0)) bad = "vector out of [0,1] at " + to_string(n);
  });
  return bad;
}

std::vector<PointWindow> ShiftSystem::special_samples(const Box&, int) const { return {}; }

// ---------------------------------------------------------------------------
// FullShift

FullShift::FullShift(int k, int alphabet, int cube_dim) : ShiftSystem(k), alphabet_(alphabet), D_(cube_dim) {
  if (alphabet_ < 0 || D_ < 0 || (alphabet_ == 0 && D_ == 0)) throw Error("FullShift: need alphabet or cube_D");
}

PointWindow FullShift::sample(const Box& box, std::uint64_t seed) const {
  PointWindow w(box, alphabet_ > 0, D_);
  Rng rng(seed);
  box.for_each([&](const LatticePoint& n) {
    if (alphabet_ > 0) w.set_symbol(n, static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet_))));
    for (int i = 0; i < D_; ++i) w.vec(n)[i] = rng.uniform();
  });
  return w;
}

std::vector<PointWindow> FullShift::special_samples(const Box& box, int max_period) const {
  std::vector<PointWindow> out;
  if (alphabet_ == 0) {
    for (double c : {0.0, 1.0}) {
      PointWindow w(box, false, D_);
      box.for_each([&](const LatticePoint& n) { std::fill(w.vec(n), w.vec(n) + D_, c); });
      out.push_back(std::move(w));
    }
    return out;
  }
  const int maxp = (k() == 1) ? max_period : 1;
  for (int p = 1; p <= maxp; ++p) {
    const double count = std::pow(alphabet_, p);
    if (count > 4096) break;
    for (std::int64_t code = 0; code < static_cast<std::int64_t>(count); ++code) {
      std::vector<int> word(static_cast<std::size_t>(p));
      std::int64_t c = code;
      for (int i = 0; i < p; ++i) {
        word[static_cast<std::size_t>(i)] = static_cast<int>(c % alphabet_);
        c /= alphabet_;
      }
      PointWindow w(box, true, D_);
      box.for_each([&](const LatticePoint& n) {
        const std::int64_t r = ((n[0] % p) + p) % p;
        w.set_symbol(n, word[static_cast<std::size_t>(r)]);
      });
      out.push_back(std::move(w));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SFT

namespace {

std::int64_t pattern_span_1d(const std::vector<Pattern>& pats) {
  std::int64_t span = 1;
  for (const auto& p : pats) {
    if (p.empty()) continue;
    std::int64_t lo = p.begin()->first[0], hi = lo;
    for (const auto& [o, s] : p) {
      lo = std::min(lo, o[0]);
      hi = std::max(hi, o[0]);
    }
    span = std::max(span, hi - lo + 1);
  }
  return span;
}

// True iff the finite word (positions 0..len-1) avoids every forbidden pattern
// placed entirely inside it.
bool word_legal(const std::vector<int>& word, const std::vector<Pattern>& pats) {
  const auto len = static_cast<std::int64_t>(word.size());
  for (const auto& p : pats) {
    if (p.empty()) return false;
    std::int64_t lo = p.begin()->first[0], hi = lo;
    for (const auto& [o, s] : p) {
      lo = std::min(lo, o[0]);
      hi = std::max(hi, o[0]);
    }
    for (std::int64_t base = -lo; base + hi < len; ++base) {
      bool match = true;
      for (const auto& [o, s] : p)
        if (word[static_cast<std::size_t>(base + o[0])] != s) {
          match = false;
          break;
        }
      if (match) return false;
    }
  }
  return true;
}

}  // namespace

struct SFT::Graph {
  int state_len = 0;
  std::vector<std::vector<int>> states;        // essential states only
  std::vector<std::vector<std::size_t>> succ;  // successor indices
  std::vector<std::vector<int>> succ_symbol;   // appended symbol per successor
};

SFT::SFT(int k, int alphabet, std::vector<Pattern> forbidden)
    : ShiftSystem(k), alphabet_(alphabet), forbidden_(std::move(forbidden)) {
  if (alphabet_ < 1) throw Error("SFT: alphabet must be >= 1");
  for (const auto& p : forbidden_)
    for (const auto& [o, s] : p) {
      if (o.dim() != k) throw Error("SFT: pattern offset dimension mismatch");
      if (s < 0 || s >= alphabet_) throw Error("SFT: pattern symbol out of range");
    }
  if (k == 1) {
    auto g = std::make_shared<Graph>();
    g->state_len = static_cast<int>(pattern_span_1d(forbidden_) - 1);
    const double nstates = std::pow(alphabet_, g->state_len);
    if (nstates > 1 << 20) throw Error("SFT: transfer graph too large");
    std::vector<std::vector<int>> all;
    for (std::int64_t code = 0; code < static_cast<std::int64_t>(nstates); ++code) {
      std::vector<int> w(static_cast<std::size_t>(g->state_len));
      std::int64_t c = code;
      for (int i = g->state_len - 1; i >= 0; --i) {
        w[static_cast<std::size_t>(i)] = static_cast<int>(c % alphabet_);
        c /= alphabet_;
      }
      if (word_legal(w, forbidden_)) all.push_back(std::move(w));
    }
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t i = 0; i < all.size(); ++i) index[all[i]] = i;
    std::vector<std::vector<std::pair<std::size_t, int>>> edges(all.size());
    for (std::size_t i = 0; i < all.size(); ++i)
      for (int a = 0; a < alphabet_; ++a) {
        std::vector<int> w = all[i];
        w.push_back(a);
        if (!word_legal(w, forbidden_)) continue;
        std::vector<int> next(w.begin() + 1, w.end());
        edges[i].emplace_back(index.at(next), a);
      }
    // Keep states lying on bi-infinite paths.
    std::vector<char> alive(all.size(), 1);
    for (bool changed = true; changed;) {
      changed = false;
      std::vector<int> indeg(all.size(), 0), outdeg(all.size(), 0);
      for (std::size_t i = 0; i < all.size(); ++i)
        if (alive[i])
          for (auto [j, a] : edges[i])
            if (alive[j]) {
              ++outdeg[i];
              ++indeg[j];
            }
      for (std::size_t i = 0; i < all.size(); ++i)
        if (alive[i] && (indeg[i] == 0 || outdeg[i] == 0)) {
          alive[i] = 0;
          changed = true;
        }
    }
    std::vector<std::size_t> remap(all.size(), SIZE_MAX);
    for (std::size_t i = 0; i < all.size(); ++i)
      if (alive[i]) {
        remap[i] = g->states.size();
        g->states.push_back(all[i]);
      }
    g->succ.resize(g->states.size());
    g->succ_symbol.resize(g->states.size());
    for (std::size_t i = 0; i < all.size(); ++i)
      if (alive[i])
        for (auto [j, a] : edges[i])
          if (alive[j]) {
            g->succ[remap[i]].push_back(remap[j]);
            g->succ_symbol[remap[i]].push_back(a);
          }
    if (g->states.empty()) throw Error("SFT: the shift space is empty");
    graph_ = std::move(g);
  }
}

const SFT::Graph& SFT::graph() const {
  if (!graph_) throw Error("SFT: transfer graph only available for k = 1");
  return *graph_;
}

PointWindow SFT::sample(const Box& box, std::uint64_t seed) const {
  if (box.dim() != k()) throw Error("SFT::sample: dimension mismatch");
  return k() == 1 ? sample_1d(box, seed) : sample_raster(box, seed);
}

PointWindow SFT::sample_1d(const Box& box, std::uint64_t seed) const {
  const Graph& g = graph();
  Rng rng(seed);
  PointWindow w(box, true, 0);
  const std::int64_t len = box.hi[0] - box.lo[0] + 1;
  std::size_t state = static_cast<std::size_t>(rng.below(g.states.size()));
  std::vector<int> word = g.states[state];
  while (static_cast<std::int64_t>(word.size()) < len) {
    const auto& nexts = g.succ[state];
    const std::size_t pick = static_cast<std::size_t>(rng.below(nexts.size()));
    word.push_back(g.succ_symbol[state][pick]);
    state = nexts[pick];
  }
  for (std::int64_t i = 0; i < len; ++i) w.set_symbol(LatticePoint{box.lo[0] + i}, word[static_cast<std::size_t>(i)]);
  return w;
}

bool SFT::placement_ok(const PointWindow& w, const LatticePoint& n, const std::vector<char>& filled) const {
  const Box& box = w.domain();
  for (const auto& p : forbidden_)
    for (const auto& [anchor, s0] : p) {
      if (w.symbol(n) != s0) continue;
      const LatticePoint base = n - anchor;
      bool match = true;
      for (const auto& [o, s] : p) {
        const LatticePoint m = base + o;
        if (!box.contains(m) || !filled[static_cast<std::size_t>(box.index(m))] || w.symbol(m) != s) {
          match = false;
          break;
        }
      }
      if (match) return false;
    }
  return true;
}

PointWindow SFT::sample_raster(const Box& box, std::uint64_t seed) const {
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed, attempt);
    PointWindow w(box, true, 0);
    std::vector<char> filled(static_cast<std::size_t>(box.volume()), 0);
    bool stuck = false;
    for (std::int64_t i = 0; i < box.volume() && !stuck; ++i) {
      const LatticePoint n = box.point(i);
      std::vector<int> order(static_cast<std::size_t>(alphabet_));
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t j = order.size(); j > 1; --j) std::swap(order[j - 1], order[rng.below(j)]);
      filled[static_cast<std::size_t>(i)] = 1;
      bool placed = false;
      for (int s : order) {
        w.set_symbol(n, s);
        if (placement_ok(w, n, filled)) {
          placed = true;
          break;
        }
      }
      stuck = !placed;
    }
    if (!stuck) return w;
  }
  throw Error("SFT::sample: raster fill failed after 64 attempts");
}

std::optional<std::string> SFT::violation(const PointWindow& w) const {
  if (auto base = ShiftSystem::violation(w)) return base;
  const Box& box = w.domain();
  std::optional<std::string> bad;
  box.for_each([&](const LatticePoint& n) {
    if (bad) return;
    for (std::size_t pi = 0; pi < forbidden_.size(); ++pi) {
      bool match = true;
      for (const auto& [o, s] : forbidden_[pi]) {
        const LatticePoint m = n + o;
        if (!box.contains(m) || w.symbol(m) != s) {
          match = false;
          break;
        }
      }
      if (match) {
        bad = "forbidden pattern " + std::to_string(pi) + " at " + to_string(n);
        return;
      }
    }
  });
  return bad;
}

std::vector<PointWindow> SFT::special_samples(const Box& box, int max_period) const {
  std::vector<PointWindow> out;
  if (k() != 1) {
    for (int a = 0; a < alphabet_; ++a) {
      PointWindow w(box, true, 0);
      box.for_each([&](const LatticePoint& n) { w.set_symbol(n, a); });
      if (!violation(w)) out.push_back(std::move(w));
    }
    return out;
  }
  const std::int64_t span = pattern_span_1d(forbidden_);
  for (int p = 1; p <= max_period; ++p) {
    const double count = std::pow(alphabet_, p);
    if (count > 4096) break;
    for (std::int64_t code = 0; code < static_cast<std::int64_t>(count); ++code) {
      std::vector<int> word(static_cast<std::size_t>(p));
      std::int64_t c = code;
      for (int i = 0; i < p; ++i) {
        word[static_cast<std::size_t>(i)] = static_cast<int>(c % alphabet_);
        c /= alphabet_;
      }
      std::vector<int> probe;
      for (std::int64_t i = 0; i < p + 2 * span; ++i) probe.push_back(word[static_cast<std::size_t>(i % p)]);
      if (!word_legal(probe, forbidden_)) continue;
      PointWindow w(box, true, 0);
      box.for_each([&](const LatticePoint& n) {
        w.set_symbol(n, word[static_cast<std::size_t>(((n[0] % p) + p) % p)]);
      });
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::int64_t SFT::max_marked_count_1d(std::int64_t N, const std::vector<int>& marked) const {
  const Graph& g = graph();
  auto weight = [&](int s) { return std::find(marked.begin(), marked.end(), s) != marked.end() ? 1 : 0; };
  if (N <= g.state_len) {
    std::int64_t best = 0;
    for (const auto& st : g.states) {
      std::int64_t c = 0;
      for (std::int64_t i = 0; i < N; ++i) c += weight(st[static_cast<std::size_t>(i)]);
      best = std::max(best, c);
    }
    return best;
  }
  std::vector<std::int64_t> dp(g.states.size());
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    std::int64_t c = 0;
    for (int s : g.states[i]) c += weight(s);
    dp[i] = c;
  }
  for (std::int64_t step = g.state_len; step < N; ++step) {
    std::vector<std::int64_t> next(g.states.size(), INT64_MIN);
    for (std::size_t i = 0; i < g.states.size(); ++i) {
      if (dp[i] == INT64_MIN) continue;
      for (std::size_t e = 0; e < g.succ[i].size(); ++e) {
        auto& slot = next[g.succ[i][e]];
        slot = std::max(slot, dp[i] + weight(g.succ_symbol[i][e]));
      }
    }
    dp = std::move(next);
  }
  return *std::max_element(dp.begin(), dp.end());
}

// ---------------------------------------------------------------------------
// ProductSystem

ProductSystem::ProductSystem(std::vector<SystemPtr> components)
    : ShiftSystem(components.empty() ? 1 : components.front()->k()), parts_(std::move(components)) {
  if (parts_.empty()) throw Error("ProductSystem: no components");
  for (const auto& p : parts_)
    if (p->k() != k()) throw Error("ProductSystem: components must share k");
}

int ProductSystem::alphabet() const {
  int a = 1;
  bool any = false;
  for (const auto& p : parts_)
    if (p->alphabet() > 0) {
      a *= p->alphabet();
      any = true;
    }
  return any ? a : 0;
}

int ProductSystem::vector_dim() const {
  int d = 0;
  for (const auto& p : parts_) d += p->vector_dim();
  return d;
}

PointWindow ProductSystem::sample(const Box& box, std::uint64_t seed) const {
  PointWindow w(box, alphabet() > 0, vector_dim());
  std::vector<PointWindow> comp;
  for (std::size_t i = 0; i < parts_.size(); ++i) comp.push_back(parts_[i]->sample(box, derive_seed(seed, i)));
  box.for_each([&](const LatticePoint& n) {
    int sym = 0, off = 0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i]->alphabet() > 0) sym = sym * parts_[i]->alphabet() + comp[i].symbol(n);
      const int d = parts_[i]->vector_dim();
      if (d > 0) std::copy(comp[i].vec(n), comp[i].vec(n) + d, w.vec(n) + off);
      off += d;
    }
    if (w.has_symbol()) w.set_symbol(n, sym);
  });
  return w;
}

PointWindow ProductSystem::project(const PointWindow& w, std::size_t i) const {
  const auto& part = *parts_.at(i);
  int stride = 1, off = 0;
  for (std::size_t j = parts_.size(); j-- > i + 1;)
    if (parts_[j]->alphabet() > 0) stride *= parts_[j]->alphabet();
  for (std::size_t j = 0; j < i; ++j) off += parts_[j]->vector_dim();
  PointWindow out(w.domain(), part.alphabet() > 0, part.vector_dim());
  w.domain().for_each([&](const LatticePoint& n) {
    if (part.alphabet() > 0) out.set_symbol(n, (w.symbol(n) / stride) % part.alphabet());
    if (part.vector_dim() > 0) std::copy(w.vec(n) + off, w.vec(n) + off + part.vector_dim(), out.vec(n));
  });
  return out;
}

std::optional<std::string> ProductSystem::violation(const PointWindow& w) const {
  if (auto base = ShiftSystem::violation(w)) return base;
  for (std::size_t i = 0; i < parts_.size(); ++i)
    if (auto v = parts_[i]->violation(project(w, i))) return "component " + std::to_string(i) + ": " + *v;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// FactorSystem

FactorSystem::FactorSystem(SystemPtr base, BlockCode code)
    : ShiftSystem(base->k()), base_(std::move(base)), code_(std::move(code)) {
  if (!base_->has_symbol() || base_->vector_dim() > 0) throw Error("FactorSystem: base must be symbolic");
  if (code_.window.empty()) throw Error("FactorSystem: empty code window");
  if (code_.output_alphabet < 1) throw Error("FactorSystem: output alphabet must be >= 1");
  for (const auto& o : code_.window) {
    if (o.dim() != k()) throw Error("FactorSystem: code window dimension mismatch");
    for (int i = 0; i < k(); ++i) radius_ = std::max<std::int64_t>(radius_, std::abs(o[i]));
  }
  for (const auto& [in, out] : code_.table)
    if (in.size() != code_.window.size() || out < 0 || out >= code_.output_alphabet)
      throw Error("FactorSystem: malformed code table");
}

Box FactorSystem::base_box(const Box& box) const { return box.inflated(radius_); }

PointWindow FactorSystem::apply(const PointWindow& bw) const {
  Box out_box = bw.domain();
  for (int i = 0; i < k(); ++i) {
    std::int64_t lo = 0, hi = 0;
    for (const auto& o : code_.window) {
      lo = std::min(lo, o[i]);
      hi = std::max(hi, o[i]);
    }
    out_box.lo[i] -= lo;
    out_box.hi[i] -= hi;
  }
  if (out_box.empty()) throw WindowError("FactorSystem::apply: base window smaller than code window");
  PointWindow w(out_box, true, 0);
  std::vector<int> key(code_.window.size());
  out_box.for_each([&](const LatticePoint& n) {
    for (std::size_t j = 0; j < key.size(); ++j) key[j] = bw.symbol(n + code_.window[j]);
    const auto it = code_.table.find(key);
    if (it == code_.table.end()) throw Error("FactorSystem: block missing from code table at " + to_string(n));
    w.set_symbol(n, it->second);
  });
  return w;
}

PointWindow FactorSystem::sample(const Box& box, std::uint64_t seed) const {
  return apply(base_->sample(base_box(box), seed)).restricted(box);
}

// ---------------------------------------------------------------------------
// RotationCoding

RotationCoding::RotationCoding(double alpha) : ShiftSystem(1), alpha_(alpha) {
  if (!(alpha_ > 0 && alpha_ < 1)) throw Error("RotationCoding: alpha must lie in (0,1)");
}

PointWindow RotationCoding::at_phase(const Box& box, double theta) const {
  PointWindow w(box, true, 0);
  for (std::int64_t n = box.lo[0]; n <= box.hi[0]; ++n) {
    long double t = static_cast<long double>(theta) + static_cast<long double>(n) * alpha_;
    t -= std::floor(t);
    w.set_symbol(LatticePoint{n}, t >= 1.0L - alpha_ ? 1 : 0);
  }
  return w;
}

PointWindow RotationCoding::sample(const Box& box, std::uint64_t seed) const {
  Rng rng(seed);
  return at_phase(box, rng.uniform());
}

}  // namespace mdimkit
