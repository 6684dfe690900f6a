#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "fixtures.hpp"
#include "mdimkit/dimension.hpp"
#include "mdimkit/markers.hpp"
#include "mdimkit/parallel.hpp"
#include "mdimkit/rng.hpp"
#include "mdimkit/simplicial.hpp"
#include "mdimkit/systems.hpp"
#include "mdimkit/voronoi.hpp"

namespace mdimkit::cli {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kSchemaVersion = 1;
constexpr std::size_t kMaxSweepCells = 10000;

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

json point_json(const LatticePoint& p) { return json(std::vector<std::int64_t>(p.begin(), p.end())); }

void gate(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

double sqrtk(int k) { return std::sqrt(static_cast<double>(k)); }

// The parameter inequalities shared by the tiling-based subcommands.
void tiling_gates(int k, int M, int L, double H, double s) {
  gate(M >= 1, "M gate: M >= 1 required");
  gate(L >= M, "L gate: L >= M required (L = " + std::to_string(L) + ", M = " + std::to_string(M) + ")");
  gate(H >= height_gate(L, k), "H gate: H = " + fmt(H) + " < (L + sqrt(k))^2 = " + fmt(height_gate(L, k)));
  gate(s > 1, "s gate: s > 1 required (s = " + fmt(s) + ")");
}

void eps_delta_gate(double eps, double delta) {
  gate(0 < eps && eps < delta, "eps gate: 0 < eps < delta required (eps = " + fmt(eps) + ", delta = " + fmt(delta) + ")");
}

Box centered_box(int k, std::int64_t r) {
  Box b{LatticePoint(k), LatticePoint(k)};
  for (int i = 0; i < k; ++i) {
    b.lo[i] = -r;
    b.hi[i] = r;
  }
  return b;
}

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

// ---------------------------------------------------------------- tile-check

RunResult tile_check(Params& p, std::uint64_t seed) {
  const int k = p.integer("k", 2);
  const int L = p.integer("L", 12);
  const double R = p.num("R", 2);
  const int half = p.integer("half_width", 6 * L);
  const auto probes = static_cast<std::size_t>(p.integer("ball_probes", 200));
  p.finish();
  gate(k >= 1 && k <= 4, "k gate: 1 <= k <= 4");
  gate(L > 2 * sqrtk(k), "L gate: L > 2 sqrt(k) required for the flat-cell bound");
  gate(R > 0, "R gate: R > 0 required");
  const std::int64_t margin = 3 * static_cast<std::int64_t>(L) + 4 + static_cast<std::int64_t>(std::ceil(R));
  gate(half > margin, "half_width gate: half_width > 3L + 4 + R required");

  const Box win = centered_box(k, half);
  const FlatTiling t(FlatCenters{random_separated_set(win, L, seed), L, win});
  const Box inner = centered_box(k, half - margin);
  std::vector<LatticePoint> centers;
  for (const auto& c : t.centers().C)
    if (inner.contains(c)) centers.push_back(c);
  const auto reps = parallel_map<CellReport>(centers.size(), [&](std::size_t i) {
    return flat_cell_check(t, centers[i], R, probes, derive_seed(seed, i));
  });
  RunResult res;
  std::string csv = csv_line({"center", "cell_size", "shell_size", "ratio", "bound", "within_bound", "ball_violations"});
  double max_ratio = 0;
  std::size_t bad = 0;
  for (const auto& r : reps) {
    csv += csv_line({"\"" + to_string(r.center) + "\"", std::to_string(r.lattice_points.size()),
                     std::to_string(r.boundary_shell.size()), fmt(r.ratio), fmt(r.bound),
                     r.ratio_within_bound ? "1" : "0", std::to_string(r.ball_violations)});
    max_ratio = std::max(max_ratio, r.ratio);
    if (!r.ratio_within_bound || r.ball_violations > 0) ++bad;
  }
  const double bound = flat_cell_ratio_bound(k, L, R);
  res.passed = bad == 0 && !reps.empty();
  res.artifacts.push_back({"cells.csv", csv});
  res.summary["cells"] = reps.size();
  res.summary["violations"] = bad;
  res.summary["max_ratio"] = max_ratio;
  res.summary["bound"] = bound;
  res.summary["bound_below_inverse_R"] = bound < 1 / R;
  return res;
}

// ---------------------------------------------------------------- lemma41

MarkerField make_field(const std::string& fixture, int k, int M, int L, double H, double s, const Box& win,
                       std::uint64_t seed) {
  if (fixture == "grid") return grid_marker_field(win, M, LatticePoint(k), M, L, H, s);
  if (fixture == "synthetic") return synthetic_marker_field(M, L, H, s, win, seed);
  throw UsageError("fixture must be \"grid\" or \"synthetic\"");
}

RunResult lemma41(Params& p, std::uint64_t seed) {
  const int k = p.integer("k", 2);
  const std::string fixture = p.str("fixture", "grid");
  const int M = p.integer("M", 16);
  const int L = p.integer("L", M);
  const double H = p.num("H", height_gate(L, k));
  const double s = p.num("s", 1.2);
  const int fields = p.integer("fields", 1);
  Lemma41Params lp;
  lp.probes = static_cast<std::size_t>(p.integer("probes", 10000));
  lp.r = p.num("r", -1);
  const int half = p.integer("half_width", 6 * L + 8);
  p.finish();
  tiling_gates(k, M, L, H, s);
  gate(fields >= 1, "fields gate: fields >= 1");
  gate(fixture != "grid" || M == L, "fixture gate: the grid fixture uses spacing M = L");

  RunResult res;
  std::vector<json> rows;
  for (int i = 0; i < fields; ++i) {
    const auto fseed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const LiftedTiling t(make_field(fixture, k, M, L, H, s, centered_box(k, half), fseed));
    lp.seed = derive_seed(fseed, 0x41);
    const auto rep = lemma41_check(t, lp);
    for (const auto& c : rep.checks) {
      rows.push_back({{"field", i}, {"check", c.name}, {"status", c.status}, {"probes", c.probes},
                      {"violations", c.violations}, {"detail", c.detail}});
      if (c.status == "fail") res.passed = false;
    }
    if (i == 0) {
      res.summary["radius_formula"] = rep.radius_formula;
      res.summary["offset_bound"] = rep.offset_bound;
      res.summary["r_used"] = rep.r_used;
    }
  }
  std::size_t pass_rows = 0;
  for (const auto& r : rows) pass_rows += r["status"] == "pass";
  res.artifacts.push_back({"lemma41.jsonl", jsonl(rows)});
  res.summary["fields"] = fields;
  res.summary["pass_rows"] = pass_rows;
  res.summary["rows"] = rows.size();
  return res;
}

// ---------------------------------------------------------------- boundary-fraction

RunResult boundary_fraction_cmd(Params& p, std::uint64_t seed) {
  const int k = p.integer("k", 2);
  const std::string fixture = p.str("fixture", "synthetic");
  const int M = p.integer("M", 16);
  const int L = p.integer("L", M);
  const double H = p.num("H", height_gate(L, k));
  const double s = p.num("s", 1.2);
  const auto R_grid = p.nums("R_grid", {60, 120, 240});
  const auto samples = static_cast<std::size_t>(p.integer("sample_size", 4000));
  const std::string mode = p.str("mode", "net");
  const bool assert_limit = p.flag("assert_limit", true);
  const double pitch_ratio = p.num("pitch_ratio", 0.25);
  // default E from the lifted-cell radius formula
  const double E = p.num("E", (s - 1) * H * M / (2 * (s * H + 2)) - 4 * (L + sqrtk(k)) / H);
  p.finish();
  tiling_gates(k, M, L, H, s);
  gate(!R_grid.empty(), "R_grid gate: at least one radius");
  gate(E > 0, "E gate: E > 0 required");
  gate(mode == "net" || mode == "exact", "mode must be \"net\" or \"exact\"");
  gate(pitch_ratio > 0 && pitch_ratio <= 1, "pitch gate: 0 < pitch_ratio <= 1");

  const double Rmax = *std::max_element(R_grid.begin(), R_grid.end());
  const auto half = static_cast<std::int64_t>(std::ceil(Rmax + E + 5 * L + 3 * sqrtk(k) + 4));
  const LiftedTiling t(make_field(fixture, k, M, L, H, s, centered_box(k, half), seed));
  BoundaryFractionOptions opt;
  opt.mode = mode == "net" ? BoundaryFractionOptions::Mode::ProbeNet : BoundaryFractionOptions::Mode::Exact;
  opt.pitch_ratio = pitch_ratio;

  RunResult res;
  std::string csv = csv_line({"R", "estimate", "std_error", "bound", "within_bound"});
  double last = 1;
  for (std::size_t i = 0; i < R_grid.size(); ++i) {
    const double R = R_grid[i];
    const auto est = boundary_fraction(t, E, R, samples, derive_seed(seed, i + 1), opt);
    const double bound = boundary_fraction_bound(k, L, s, R);
    const bool ok = est.estimate <= bound + 3 * est.std_error;
    res.passed = res.passed && ok;
    if (R == Rmax) last = est.estimate;
    csv += csv_line({fmt(R), fmt(est.estimate), fmt(est.std_error), fmt(bound), ok ? "1" : "0"});
  }
  const double target = 1 - std::pow(s, -k) + 0.05;
  const bool below = last < target;
  if (assert_limit) res.passed = res.passed && below;
  res.artifacts.push_back({"boundary_fraction.csv", csv});
  res.summary["E"] = E;
  res.summary["estimate_at_largest_R"] = last;
  res.summary["limit_target"] = target;
  res.summary["below_target"] = below;
  return res;
}

// ---------------------------------------------------------------- dims / ocap

SystemPtr system_of(const json& config) {
  if (!config.contains("system")) throw UsageError("config needs a \"system\" object");
  try {
    return system_from_spec(parse_system_spec(config["system"].dump()));
  } catch (const Error& e) {
    throw UsageError(std::string("system: ") + e.what());
  }
}

RunResult dims(Params& p, const json& config, std::uint64_t seed) {
  const SystemPtr X = system_of(config);
  std::vector<double> eps_grid = p.nums("eps_grid", {});
  if (p.has("eps")) eps_grid.push_back(p.num("eps", 0.5));
  if (eps_grid.empty()) eps_grid = {0.5, 0.25};
  const auto N_grid = p.ints("N_grid", {2, 4, 6});
  const auto samples = static_cast<std::size_t>(p.integer("sample_size", 64));
  const bool enumerate = p.flag("full_enumeration", false);
  const bool with_mdim = p.flag("mdim", true);
  p.finish();
  for (double e : eps_grid) gate(e > 0, "eps gate: eps > 0 required");
  gate(!N_grid.empty(), "N_grid gate: at least one window");

  RunResult res;
  EntropyOptions eo;
  eo.full_enumeration = enumerate;
  std::string ent = csv_line({"epsilon", "N", "raw", "normalized", "running_inf", "stderr", "log_inv_eps", "ratio"});
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    const double e = eps_grid[i];
    const auto prof = entropy_profile(*X, e, N_grid, samples, seed, eo);
    const double le = std::fabs(std::log(e));
    for (const auto& r : prof.rows)
      ent += csv_line({fmt(r.epsilon), std::to_string(r.window), fmt(r.raw), fmt(r.normalized), fmt(r.running_inf),
                       fmt(r.std_error), fmt(le), fmt(le > 0 ? r.running_inf / le : 0.0)});
    if (!prof.rows.empty()) res.summary["entropy_eps_" + fmt(e)] = prof.rows.back().running_inf;
  }
  res.artifacts.push_back({"entropy.csv", ent});
  if (with_mdim) {
    const auto md = mdim_profile(*X, eps_grid, N_grid, samples, seed);
    res.artifacts.push_back({"mdim_cubes.csv", md.cubes.to_csv()});
    res.artifacts.push_back({"mdim_balls.csv", md.balls.to_csv()});
    std::vector<json> rows;
    for (const auto& a : md.agreement) {
      rows.push_back({{"epsilon", a.epsilon}, {"cube", a.cube_value}, {"ball", a.ball_value},
                      {"tolerance", a.tolerance}, {"agree", a.agree}});
      res.passed = res.passed && a.agree;
    }
    res.artifacts.push_back({"folner_agreement.jsonl", jsonl(rows)});
  }
  return res;
}

CellPredicate predicate_of(const json& spec, std::string& id) {
  const std::string kind = spec.value("kind", "");
  if (kind == "empty") {
    id = "empty";
    return [](const PointWindow&, const LatticePoint&) { return false; };
  }
  if (kind == "all") {
    id = "all";
    return [](const PointWindow&, const LatticePoint&) { return true; };
  }
  if (kind == "symbol") {
    if (!spec.contains("values") || !spec["values"].is_array()) throw UsageError("predicate.values must be an array");
    const auto values = spec["values"].get<std::vector<int>>();
    id = "x0 in " + spec["values"].dump();
    return [values](const PointWindow& w, const LatticePoint& n) {
      return std::find(values.begin(), values.end(), w.symbol(n)) != values.end();
    };
  }
  throw UsageError("predicate.kind must be one of empty, all, symbol");
}

RunResult ocap(Params& p, const json& config, std::uint64_t seed) {
  const SystemPtr X = system_of(config);
  const json pred = p.raw("predicate", json{{"kind", "all"}});
  const auto N_grid = p.ints("N_grid", {4, 8, 16});
  const auto R_grid = p.nums("R_grid", {});
  const auto samples = static_cast<std::size_t>(p.integer("sample_size", 64));
  p.finish();
  std::string id;
  const auto A = predicate_of(pred, id);
  gate(pred.value("kind", "") != "symbol" || X->has_symbol(), "predicate gate: symbol predicate needs a symbolic system");
  const auto est = ocap_estimate(*X, A, id, N_grid, R_grid, samples, seed);
  RunResult res;
  for (const auto& r : est.rows) res.passed = res.passed && r.normalized >= 0 && r.normalized <= 1;
  res.artifacts.push_back({"ocap.csv", est.to_csv()});
  res.summary["predicate"] = id;
  res.summary["inf_over_windows"] = est.inf_over_windows;
  return res;
}

// ---------------------------------------------------------------- paint

RunResult paint(Params& p, std::uint64_t seed) {
  const std::string stage = p.str("stage", "zero-set");
  gate(stage == "zero-set" || stage == "payload", "stage must be \"zero-set\" or \"payload\"");
  const bool zero = stage == "zero-set";
  fixtures::BlockFixtureSpec bs;
  bs.N = p.integer("N", zero ? 4 : 8);
  const int M = p.integer("M", zero ? 32 : 64);
  const int L = p.integer("L", M);
  const double H = p.num("H", height_gate(L, 1));
  const double s = p.num("s", 2);
  bs.eps = p.num("eps", zero ? 0.4 : 0.25);
  bs.delta = p.num("delta", zero ? 0.9 : 1.6);
  bs.period = p.integer("period", L);
  bs.lambda = p.num("lambda", 0.005);
  bs.net_per_axis = static_cast<std::size_t>(p.integer("net_per_axis", zero ? 64 : 16));
  bs.noise = p.num("noise", zero ? 0.02 : 0.0);
  bs.tag = zero ? GenericTag::ZeroCoordinate : GenericTag::Embedding;
  bs.seed = seed;
  const auto R_grid = p.nums("R_grid", zero ? std::vector<double>{60, 120, 240} : std::vector<double>{400});
  const auto samples = static_cast<std::size_t>(p.integer("sample_size", 16));
  MmdimSpec ms;
  ms.eps = bs.eps;
  ms.tau = p.num("tau", 0.55);
  ms.mdim_input = p.num("mdim_input", 0);
  p.finish();
  tiling_gates(1, M, L, H, s);
  eps_delta_gate(bs.eps, bs.delta);
  gate(bs.noise >= 0 && bs.noise < bs.delta - bs.eps, "noise gate: 0 <= noise < delta - eps");
  gate(!R_grid.empty(), "R_grid gate: at least one radius");

  const auto bf = fixtures::block_fixture(bs, zero ? fixtures::tent(0.5, 2.0) : fixtures::tent(0.5, 1.0));
  TilingSpec ts{M, L, H, s, bs.N};
  const auto g = paint_tiles(*bf->X, bf->f, bf->F(), 1, ts);
  const auto xs = fixtures::sample_points(*bf->X, samples, derive_seed(seed, 0x5a));
  RunResult res;
  if (zero) {
    const auto rep = zero_set_ocap_check(g, bf->cert, bs.eps, bs.delta, R_grid, xs);
    res.passed = rep.passed;
    res.artifacts.push_back({"zero_set.csv", rep.to_csv()});
    res.summary["estimate"] = rep.estimate;
    res.summary["below_two_eps"] = rep.below_two_eps;
    res.summary["blocks"] = rep.blocks;
    res.summary["block_violations"] = rep.block_violations;
    res.summary["claim_mismatches"] = rep.claim_mismatches;
    res.summary["certificate_passed"] = rep.certificate.passed;
    res.summary["certificate_exhaustive"] = rep.certificate.exhaustive;
  } else {
    const auto rep = mmdim_payload_check(g, bf->G, ms, R_grid, xs);
    res.passed = rep.passed;
    res.artifacts.push_back({"payload.csv", rep.to_csv()});
    res.summary["log_A_K"] = rep.log_A_K;
    res.summary["log_A_F"] = rep.log_A_F;
    res.summary["spanning_target"] = rep.spanning_target;
    res.summary["spanning_ok"] = rep.spanning_ok;
    res.summary["tau_gate"] = rep.tau_gate;
    res.summary["log_gate"] = rep.log_gate;
    res.summary["claim_mismatches"] = rep.claim_mismatches;
  }
  res.summary["approx_error"] = bf->approx_error;
  return res;
}

// ---------------------------------------------------------------- encoder stages

EncoderSpec encoder_spec(Params& p, std::uint64_t seed, double& lambda) {
  EncoderSpec sp;
  sp.N = p.integer("N", sp.N);
  sp.M = p.integer("M", sp.M);
  sp.L = p.integer("L", sp.M);
  sp.H = p.num("H", height_gate(sp.L, 1));
  sp.s = p.num("s", sp.s);
  sp.delta = p.num("delta", sp.delta);
  sp.eps = p.num("eps", sp.eps);
  sp.eta = p.num("eta", sp.eta);
  sp.tau_fraction = p.num("tau_fraction", sp.tau_fraction);
  sp.net_per_axis = static_cast<std::size_t>(p.integer("net_per_axis", static_cast<int>(sp.net_per_axis)));
  sp.noise = p.num("noise", sp.noise);
  sp.cap = p.u64("cap", sp.cap);
  sp.widim_input = p.num("widim_input", sp.widim_input);
  sp.seed = seed;
  lambda = p.num("lambda", 0.001);
  return sp;
}

void encoder_gates_or_throw(const EncoderSpec& sp) {
  tiling_gates(1, sp.M, sp.L, sp.H, sp.s);
  eps_delta_gate(sp.eps, sp.delta);
  for (const auto& g : encoder_gates(sp, 1)) gate(g.passed, g.name + " gate failed: " + g.detail);
}

json encoder_json(const EmbeddingEncoder& e) {
  json gates = json::array();
  for (const auto& g : e.gates()) gates.push_back({{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
  auto cert = [](const GenericCertificate& c) {
    return json{{"passed", c.passed}, {"exhaustive", c.exhaustive}, {"checked", c.checked}, {"total", c.total},
                {"resamples", c.resamples}, {"method", c.method}};
  };
  return {{"gates", gates},
          {"H", e.H()},
          {"N_prime", e.N_prime()},
          {"copies", e.copies().size()},
          {"copies2", e.copies2().size()},
          {"nerve_dim", e.pi().nerve.complex.dim()},
          {"R_dim", e.R_dim()},
          {"tau_min", e.tau_min()},
          {"tau", e.tau()},
          {"f1_approx_error", e.f1_approx_error()},
          {"f2_approx_error", e.f2_approx_error()},
          {"F_certificate", cert(e.F_certificate())},
          {"G_certificate", cert(e.G_certificate())}};
}

RunResult encode_decode(Params& p, std::uint64_t seed) {
  double lambda = 0;
  const EncoderSpec sp = encoder_spec(p, seed, lambda);
  const auto samples = static_cast<std::size_t>(p.integer("sample_size", 8));
  const int half = p.integer("half_width", 60);
  p.finish();
  encoder_gates_or_throw(sp);
  const auto fx = fixtures::encoder_fixture(sp, lambda);
  const auto& e = *fx.enc;
  const Box region = centered_box(1, half);
  const auto xs = fixtures::sample_points(*fx.X, samples, derive_seed(seed, 0xe7));
  const auto rows = parallel_map<json>(xs.size(), [&](std::size_t i) {
    const auto sc = check_s_condition(e, xs[i], region);
    const auto pt = check_pseudo_tiling(e, xs[i], region);
    const auto c1 = check_g1_claim(e, xs[i], region);
    const auto c2 = check_g2_claim(e, xs[i], region);
    const bool ok = sc.violations == 0 && pt.passed() && c1.passed() && c2.passed();
    return json{{"sample", i},
                {"s_condition", {{"probes", sc.probes}, {"violations", sc.violations}, {"min_margin", sc.min_margin}}},
                {"pseudo_tiling",
                 {{"sites1", pt.sites1}, {"violations1", pt.violations1}, {"centers2", pt.centers2},
                  {"violations2", pt.violations2}}},
                {"g1_claim", {{"blocks", c1.blocks}, {"mismatches", c1.mismatches}, {"max_deviation", c1.max_deviation}}},
                {"g2_claim", {{"blocks", c2.blocks}, {"mismatches", c2.mismatches}, {"max_deviation", c2.max_deviation}}},
                {"passed", ok}};
  });
  RunResult res;
  res.passed = e.F_certificate().passed && e.G_certificate().passed;
  for (const auto& r : rows) res.passed = res.passed && r["passed"].get<bool>();
  res.artifacts.push_back({"encode_decode.jsonl", jsonl(rows)});
  res.artifacts.push_back({"encoder.json", encoder_json(e).dump(2) + "\n"});
  res.summary["samples"] = rows.size();
  res.summary["tau"] = e.tau();
  res.summary["F_exhaustive"] = e.F_certificate().exhaustive;
  res.summary["G_exhaustive"] = e.G_certificate().exhaustive;
  return res;
}

RunResult verify_embed(Params& p, std::uint64_t seed) {
  const std::string stage = p.str("stage", "encoder");
  gate(stage == "symbolic" || stage == "encoder", "stage must be \"symbolic\" or \"encoder\"");
  const auto pairs_n = static_cast<std::size_t>(p.integer("pairs", 1000));
  EmbeddingReport rep;
  RunResult res;
  if (stage == "symbolic") {
    SymbolicSpec sp;
    sp.L = p.integer("L", sp.L);
    sp.R = p.num("R", sp.R);
    sp.delta = p.num("delta", sp.delta);
    sp.eps = p.num("eps", sp.eps);
    sp.net_per_axis = static_cast<std::size_t>(p.integer("net_per_axis", 128));
    sp.noise = p.num("noise", sp.noise);
    sp.cap = p.u64("cap", sp.cap);
    sp.seed = seed;
    const double lambda = p.num("lambda", 0.01);
    const auto palette_sample = static_cast<std::size_t>(p.integer("palette_sample", 32));
    const auto claim_samples = static_cast<std::size_t>(p.integer("claim_samples", 16));
    p.finish();
    eps_delta_gate(sp.eps, sp.delta);
    gate(sp.R >= 1, "R gate: R >= 1 required");
    const auto fx = fixtures::symbolic_fixture(sp, lambda, palette_sample);
    rep = verify_delta_embedding(*fx.painter, sample_pairs(*fx.X, pairs_n, derive_seed(seed, 0x9a)));
    const auto xs = fixtures::sample_points(*fx.X, claim_samples, derive_seed(seed, 0xc1));
    const Box centers = centered_box(1, 3 * sp.L);
    const auto claims = parallel_map<BlockIdentityCheck>(
        xs.size(), [&](std::size_t i) { return check_symbolic_claim(*fx.painter, xs[i], centers); });
    std::size_t blocks = 0, mismatches = 0;
    for (const auto& c : claims) {
      blocks += c.blocks;
      mismatches += c.mismatches;
    }
    res.passed = mismatches == 0 && blocks > 0;
    res.summary["palette_pieces"] = fx.palette->pieces.size();
    res.summary["claim_blocks"] = blocks;
    res.summary["claim_mismatches"] = mismatches;
  } else {
    double lambda = 0;
    const EncoderSpec sp = encoder_spec(p, seed, lambda);
    p.finish();
    encoder_gates_or_throw(sp);
    const auto fx = fixtures::encoder_fixture(sp, lambda);
    rep = verify_delta_embedding(*fx.enc, sample_pairs(*fx.X, pairs_n, derive_seed(seed, 0x9a)));
    res.artifacts.push_back({"encoder.json", encoder_json(*fx.enc).dump(2) + "\n"});
  }
  res.passed = res.passed && rep.passed();
  res.artifacts.push_back({"verify.jsonl", rep.to_jsonl()});
  res.summary["stage"] = stage;
  res.summary["pairs"] = rep.pairs.size();
  res.summary["agree"] = rep.agree;
  res.summary["differ"] = rep.differ;
  res.summary["indeterminate"] = rep.indeterminate;
  res.summary["failures"] = rep.failures;
  return res;
}

// ---------------------------------------------------------------- lemmas-simplicial

SimplicialComplex random_complex(Rng& rng, int vertices, int dim) {
  std::vector<Face> gens;
  const int count = 1 + static_cast<int>(rng.below(3));
  for (int c = 0; c < count; ++c) {
    std::vector<int> all(static_cast<std::size_t>(vertices));
    for (int v = 0; v < vertices; ++v) all[static_cast<std::size_t>(v)] = v;
    for (int i = vertices - 1; i > 0; --i)
      std::swap(all[static_cast<std::size_t>(i)], all[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    Face f(all.begin(), all.begin() + dim + 1);
    std::sort(f.begin(), f.end());
    gens.push_back(f);
  }
  return SimplicialComplex(vertices, gens);
}

RunResult lemmas_simplicial(Params& p, std::uint64_t seed) {
  const auto samples = static_cast<std::size_t>(p.integer("sample_size", 1000));
  const int n_max = p.integer("n_max", 3);
  const int dim_max = p.integer("dim_max", 2);
  const int N_max = p.integer("N_max", 6);
  const auto eps_grid = p.nums("eps_grid", {1, 0.5, 0.25, 0.1});
  const auto probes = static_cast<std::size_t>(p.integer("cover_probes", 400));
  p.finish();
  gate(n_max >= 1 && dim_max >= 0 && N_max >= 1, "size gate: n_max >= 1, dim_max >= 0, N_max >= 1");
  for (double e : eps_grid) gate(e > 0 && e <= 1, "eps gate: 0 < eps <= 1");

  // Sample i: tag i % 3, sizes drawn from the sample's own stream.
  const auto rows = parallel_map<json>(samples, [&](std::size_t i) {
    Rng rng(seed, i);
    GenericOptions opt;
    const int dim = static_cast<int>(rng.below(static_cast<std::uint64_t>(dim_max) + 1));
    const int vertices = dim + 1 + static_cast<int>(rng.below(3));
    const SimplicialComplex P = random_complex(rng, vertices, dim);
    json row{{"sample", i}, {"dim", P.dim()}, {"vertices", vertices}};
    switch (i % 3) {
      case 0:
        opt.tag = GenericTag::Embedding;
        opt.target_dim = 2 * P.dim() + 1 + static_cast<int>(rng.below(2));
        row["tag"] = "embedding";
        row["target_dim"] = opt.target_dim;
        break;
      case 1:
        opt.tag = GenericTag::ZeroCoordinate;
        // Targets of dimension <= dim P leave no face to check.
        opt.target_dim = P.dim() + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, n_max - P.dim()))));
        row["tag"] = "zero-coordinate";
        row["target_dim"] = opt.target_dim;
        break;
      default: {
        opt.tag = GenericTag::Window;
        const int N = 2 * (1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, N_max / 2)))));
        const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n_max, N))));
        const int D = 2 * P.dim() / n + 1;
        opt.window = WindowShape{1, N, n, D};
        row["tag"] = "window";
        row["window"] = {{"N", N}, {"n", n}, {"D", D}};
        break;
      }
    }
    opt.cap = 1000000;
    opt.max_resamples = 0;
    try {
      const auto gen = sample_generic_linear(P, opt, derive_seed(seed, 0x5e00 + i));
      row["passed"] = gen.cert.passed;
      row["exhaustive"] = gen.cert.exhaustive;
      row["resamples"] = gen.cert.resamples;
      row["checked"] = gen.cert.checked;
    } catch (const Error& e) {
      row["passed"] = false;
      row["error"] = e.what();
    }
    return row;
  });
  RunResult res;
  std::size_t failed = 0;
  for (const auto& r : rows)
    if (!r["passed"].get<bool>() || r.value("resamples", 1) != 0 || !r.value("exhaustive", false)) ++failed;

  std::string csv = csv_line({"n", "eps", "lattice_count", "bound", "greedy", "max_gap", "ok"});
  std::size_t cover_bad = 0;
  for (int n = 1; n <= n_max; ++n) {
    Face f(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) f[static_cast<std::size_t>(i)] = i;
    const SimplicialComplex S(n + 1, {f});
    GenericOptions opt;
    opt.tag = GenericTag::ZeroCoordinate;
    opt.target_dim = n;
    const auto F = sample_generic_linear(S, opt, derive_seed(seed, 0xc0 + static_cast<std::uint64_t>(n))).map;
    for (double eps : eps_grid) {
      const auto pc = polytope_cover_count(F, eps, probes, seed);
      // Greedy cover of sampled (scaled) image points in the sup norm.
      std::vector<std::vector<double>> pts;
      Rng rng(derive_seed(seed, 0x9c), static_cast<std::uint64_t>(n));
      for (std::size_t t = 0; t < probes; ++t) {
        std::vector<double> w(static_cast<std::size_t>(n + 1));
        double tot = 0;
        for (auto& x : w) tot += (x = -std::log(1 - rng.uniform()));
        BaryPoint b{f, {}};
        for (auto& x : w) b.weights.push_back(x / tot);
        auto y = F(b);
        for (auto& c : y) c /= pc.scale;
        pts.push_back(std::move(y));
      }
      const auto greedy = greedy_cover(linf_metric(pts), eps).sets.size();
      const bool ok = static_cast<double>(pc.lattice_count) <= pc.bound + 1e-9 && greedy <= pc.lattice_count &&
                      pc.max_gap < eps / 2;
      if (!ok) ++cover_bad;
      csv += csv_line({std::to_string(n), fmt(eps), std::to_string(pc.lattice_count), fmt(pc.bound),
                       std::to_string(greedy), fmt(pc.max_gap), ok ? "1" : "0"});
    }
  }
  res.passed = failed == 0 && cover_bad == 0;
  res.artifacts.push_back({"certificates.jsonl", jsonl(rows)});
  res.artifacts.push_back({"covers.csv", csv});
  res.summary["samples"] = rows.size();
  res.summary["certificate_failures"] = failed;
  res.summary["cover_failures"] = cover_bad;
  return res;
}

const std::map<std::string, std::function<RunResult(Params&, const json&, std::uint64_t)>>& registry() {
  static const std::map<std::string, std::function<RunResult(Params&, const json&, std::uint64_t)>> r{
      {"tile-check", [](Params& p, const json&, std::uint64_t s) { return tile_check(p, s); }},
      {"lemma41", [](Params& p, const json&, std::uint64_t s) { return lemma41(p, s); }},
      {"boundary-fraction", [](Params& p, const json&, std::uint64_t s) { return boundary_fraction_cmd(p, s); }},
      {"dims", [](Params& p, const json& c, std::uint64_t s) { return dims(p, c, s); }},
      {"ocap", [](Params& p, const json& c, std::uint64_t s) { return ocap(p, c, s); }},
      {"paint", [](Params& p, const json&, std::uint64_t s) { return paint(p, s); }},
      {"encode-decode", [](Params& p, const json&, std::uint64_t s) { return encode_decode(p, s); }},
      {"verify-embed", [](Params& p, const json&, std::uint64_t s) { return verify_embed(p, s); }},
      {"lemmas-simplicial", [](Params& p, const json&, std::uint64_t s) { return lemmas_simplicial(p, s); }},
  };
  return r;
}

void check_top_level(const json& config, const std::set<std::string>& allowed) {
  if (!config.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : config.items())
    if (!allowed.count(key)) throw UsageError("unknown config key \"" + key + "\"");
}

std::uint64_t seed_of(const json& config, std::optional<std::uint64_t> override) {
  if (override) return *override;
  if (config.contains("seed")) {
    const auto& s = config["seed"];
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw UsageError("seed must be a non-negative integer");
    return config["seed"].get<std::uint64_t>();
  }
  return 0;
}

}  // namespace

Params::Params(json j) : j_(std::move(j)) {
  if (j_.is_null()) j_ = json::object();
  if (!j_.is_object()) throw UsageError("params must be a JSON object");
}

const json& Params::get(const std::string& key) {
  used_.insert(key);
  return j_.at(key);
}

double Params::num(const std::string& key, double def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_number()) throw UsageError("params." + key + ": expected a number");
  return v.get<double>();
}

int Params::integer(const std::string& key, int def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_number_integer()) throw UsageError("params." + key + ": expected an integer");
  return v.get<int>();
}

std::uint64_t Params::u64(const std::string& key, std::uint64_t def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw UsageError("params." + key + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool Params::flag(const std::string& key, bool def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_boolean()) throw UsageError("params." + key + ": expected true or false");
  return v.get<bool>();
}

std::string Params::str(const std::string& key, const std::string& def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_string()) throw UsageError("params." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> Params::nums(const std::string& key, const std::vector<double>& def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_array()) throw UsageError("params." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw UsageError("params." + key + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::int64_t> Params::ints(const std::string& key, const std::vector<std::int64_t>& def) {
  used_.insert(key);
  if (!has(key)) return def;
  const auto& v = get(key);
  if (!v.is_array()) throw UsageError("params." + key + ": expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw UsageError("params." + key + ": expected an array of integers");
    out.push_back(x.get<std::int64_t>());
  }
  return out;
}

json Params::raw(const std::string& key, const json& def) {
  used_.insert(key);
  return has(key) ? get(key) : def;
}

void Params::finish() const {
  for (const auto& [key, value] : j_.items())
    if (!used_.count(key)) throw UsageError("unknown parameter \"" + key + "\"");
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : registry()) v.push_back(name);
    v.push_back("sweep");
    return v;
  }();
  return names;
}

RunResult run_subcommand(const std::string& name, const json& config, std::uint64_t seed) {
  if (name == "sweep") return run_sweep(config, seed);
  const auto it = registry().find(name);
  if (it == registry().end()) throw UsageError("unknown subcommand \"" + name + "\"");
  check_top_level(config, {"subcommand", "system", "params", "seed"});
  if (config.contains("subcommand") && config["subcommand"] != name)
    throw UsageError("config is for subcommand " + config["subcommand"].dump() + ", not \"" + name + "\"");
  Params p(config.value("params", json::object()));
  return it->second(p, config, seed);
}

RunResult run_sweep(const json& config, std::uint64_t seed) {
  check_top_level(config, {"subcommand", "base", "grid", "seed"});
  if (!config.contains("base") || !config["base"].is_object()) throw UsageError("sweep needs a \"base\" config object");
  const json& base = config["base"];
  const std::string name = base.value("subcommand", "");
  if (name.empty() || name == "sweep" || !registry().count(name))
    throw UsageError("sweep base needs a runnable \"subcommand\"");
  const json grid = config.value("grid", json::object());
  if (!grid.is_object()) throw UsageError("grid must be an object of parameter -> value list");
  if (grid.size() > 3) throw UsageError("grid gate: at most 3 swept parameters");
  std::vector<std::string> keys;
  std::vector<std::vector<json>> values;
  std::size_t cells = grid.empty() ? 0 : 1;
  for (const auto& [key, list] : grid.items()) {
    if (!list.is_array()) throw UsageError("grid." + key + " must be an array");
    keys.push_back(key);
    values.emplace_back(list.begin(), list.end());
    cells *= list.size();
    if (cells > kMaxSweepCells) throw UsageError("grid gate: more than 10^4 cells");
  }

  std::vector<std::string> header = keys;
  std::vector<std::string> summary_keys;
  std::string body;
  RunResult res;
  for (std::size_t c = 0; c < cells; ++c) {
    json cfg = base;
    if (!cfg.contains("params")) cfg["params"] = json::object();
    std::size_t rem = c;
    std::vector<std::string> row;
    for (std::size_t i = keys.size(); i-- > 0;) {
      const json& v = values[i][rem % values[i].size()];
      rem /= values[i].size();
      cfg["params"][keys[i]] = v;
    }
    for (const auto& k : keys) row.push_back(cfg["params"][k].is_string() ? cfg["params"][k].get<std::string>()
                                                                           : cfg["params"][k].dump());
    for (auto& cell : row)
      if (cell.find(',') != std::string::npos) cell = "\"" + cell + "\"";
    // Every cell shares the sweep seed so cells differ only in the swept parameters.
    const RunResult r = run_subcommand(name, cfg, seed);
    if (c == 0)
      for (const auto& [k, v] : r.summary.items())
        if (v.is_number() || v.is_boolean()) summary_keys.push_back(k);
    for (const auto& k : summary_keys) {
      const auto& v = r.summary.contains(k) ? r.summary[k] : ordered_json();
      row.push_back(v.is_boolean() ? (v.get<bool>() ? "1" : "0") : v.is_number() ? fmt(v.get<double>()) : "");
    }
    row.push_back(r.passed ? "1" : "0");
    res.passed = res.passed && r.passed;
    body += csv_line(row);
  }
  header.insert(header.end(), summary_keys.begin(), summary_keys.end());
  header.push_back("passed");
  res.artifacts.push_back({"sweep.csv", csv_line(header) + body});
  res.summary["subcommand"] = name;
  res.summary["cells"] = cells;
  return res;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int run(const std::string& name, const json& config, const std::filesystem::path& out,
        std::optional<std::uint64_t> seed_override, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::time_t started = std::time(nullptr);
  RunResult res;
  std::uint64_t seed = 0;
  int code = 0;
  std::string error;
  try {
    seed = seed_of(config, seed_override);
    res = run_subcommand(name, config, seed);
    code = res.passed ? 0 : 2;
  } catch (const UsageError& e) {
    log << "mdimkit " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    // A construction or certificate that could not be completed counts as a failed assertion.
    error = e.what();
    code = 2;
    res.passed = false;
    res.artifacts.push_back({"error.json", json{{"error", error}}.dump(2) + "\n"});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) {
    log << "mdimkit " << name << ": cannot create " << out << ": " << ec.message() << "\n";
    return 1;
  }
  auto write = [&](const std::string& file, const std::string& content) {
    std::ofstream os(out / file, std::ios::binary);
    os << content;
  };
  ordered_json files = ordered_json::array();
  for (const auto& a : res.artifacts) {
    write(a.name, a.content);
    files.push_back(a.name);
  }
  ordered_json summary = ordered_json::object();
  summary["subcommand"] = name;
  summary["passed"] = res.passed;
  summary["exit_code"] = code;
  summary["results"] = res.summary;
  write("summary.json", summary.dump(2) + "\n");
  files.push_back("summary.json");

  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
  ordered_json manifest = ordered_json::object();
  manifest["subcommand"] = name;
  manifest["schema_version"] = kSchemaVersion;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = seed;
  manifest["versions"] = {{"mdimkit", kVersion},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  manifest["files"] = files;
  manifest["passed"] = res.passed;
  manifest["exit_code"] = code;
  manifest["timestamp"] = stamp;
  manifest["wall_time_s"] = wall;
  write("manifest.json", manifest.dump(2) + "\n");

  if (!error.empty()) log << "mdimkit " << name << ": " << error << "\n";
  log << "mdimkit " << name << ": " << (res.passed ? "PASS" : "FAIL") << " (" << out.string() << ")\n";
  return code;
}

}  // namespace mdimkit::cli
