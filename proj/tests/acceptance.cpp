// Acceptance suite: one PASS/FAIL line per criterion.
//
// Every run goes through the same in-process entry point as the CLI. The
// checks below re-derive each bound from the artifacts instead of trusting the
// run's own verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "mdimkit/parallel.hpp"

using mdimkit::cli::json;
using mdimkit::cli::RunResult;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// All runs of one pass, in order, for the cross-thread comparison.
std::vector<std::string> g_digests;

RunResult run(const std::string& name, const json& config, std::uint64_t seed) {
  RunResult r = mdimkit::cli::run_subcommand(name, config, seed);
  std::string d = name + "\n" + r.summary.dump() + "\n";
  for (const auto& a : r.artifacts) d += a.name + "\n" + a.content;
  g_digests.push_back(std::move(d));
  return r;
}

const std::string& artifact(const RunResult& r, const std::string& name) {
  for (const auto& a : r.artifacts)
    if (a.name == name) return a.content;
  throw std::runtime_error("missing artifact " + name);
}

using Row = std::map<std::string, std::string>;

std::vector<Row> csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<Row> rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : l) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) {
        out.push_back(cur);
        cur.clear();
      } else cur += c;
    }
    out.push_back(cur);
    return out;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    Row r;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) r[header[i]] = cells[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<json> jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<json> out;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

double num(const Row& r, const std::string& key) { return std::stod(r.at(key)); }

std::string str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Flat-cell shell formula, written out again from the lemma.
double flat_formula(int k, double L, double R) {
  const double a = 2 * (R + std::sqrt(k)) / L;
  return (std::pow(1 + a, k) - std::pow(1 - a, k)) / std::pow(1 - 2 * std::sqrt(k) / L, k);
}

Outcome criterion1() {
  Outcome o;
  std::size_t cells = 0;
  for (int L : {12, 16, 24})
    for (double R : {2.0, 3.0}) {
      const json cfg = {{"params", {{"k", 2}, {"L", L}, {"R", R}, {"half_width", 150}, {"ball_probes", 200}}}};
      const auto r = run("tile-check", cfg, 1);
      for (const auto& row : csv(artifact(r, "cells.csv"))) {
        ++cells;
        const double shell = num(row, "shell_size"), cell = num(row, "cell_size");
        if (!(shell / cell <= flat_formula(2, L, R)) || row.at("ball_violations") != "0") {
          o.pass = false;
          o.detail += " cell " + row.at("center") + " at L=" + std::to_string(L) + " exceeds the formula;";
        }
      }
    }
  if (cells == 0) o.pass = false;
  std::string inv;
  for (double R : {2.0, 3.0}) {
    const double v = flat_formula(2, 24, R);
    int Lmin = 24;
    while (flat_formula(2, Lmin, R) >= 1 / R) ++Lmin;
    inv += " R=" + str(R) + ": formula(L=24)=" + str(v) + (v < 1 / R ? " < " : " >= ") + "1/R=" + str(1 / R) +
           " (first L with formula < 1/R: " + std::to_string(Lmin) + ");";
    if (!(v < 1 / R)) o.pass = false;
  }
  o.detail = std::to_string(cells) + " interior cells within the formula;" + o.detail + inv;
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::size_t fields = 0, rows = 0;
  for (int M : {8, 16}) {
    const double s = 1.2, L = M, H = std::pow(L + std::sqrt(2.0), 2);
    const json cfg = {{"params",
                       {{"k", 2}, {"fixture", "synthetic"}, {"M", M}, {"L", M}, {"H", H}, {"s", s}, {"fields", 50},
                        {"probes", 10000}}}};
    const auto r = run("lemma41", cfg, 100 + static_cast<std::uint64_t>(M));
    const double r_feed = (s - 1) * H * M / (2 * (s * H + 2)) - 4 * (L + std::sqrt(2.0)) / H;
    if (std::fabs(r.summary["r_used"].get<double>() - r_feed) > 1e-12) {
      o.pass = false;
      o.detail += " M=" + std::to_string(M) + " r differs from the radius/offset formulas;";
    }
    fields += r.summary["fields"].get<std::size_t>();
    for (const auto& j : jsonl(artifact(r, "lemma41.jsonl"))) {
      ++rows;
      if (j["status"] != "pass" || j["violations"] != 0 || j["probes"].get<std::size_t>() < 10000) {
        o.pass = false;
        o.detail += " M=" + std::to_string(M) + " field " + j["field"].dump() + " " + j["check"].get<std::string>() +
                    " " + j["status"].get<std::string>() + ";";
      }
    }
  }
  if (fields != 100 || rows != 400) o.pass = false;
  o.detail = std::to_string(fields) + " fields, " + std::to_string(rows) + " check rows;" + o.detail;
  return o;
}

Outcome criterion3() {
  Outcome o;
  const double s = 1.2, L = 16;
  const double target = 1 - std::pow(s, -2) + 0.05;
  for (double pitch : {0.25, 0.125}) {
    const json cfg = {{"params",
                       {{"k", 2}, {"M", 16}, {"L", 16}, {"s", s}, {"R_grid", {60, 120, 240, 480}},
                        {"sample_size", 4000}, {"pitch_ratio", pitch}}}};
    const auto r = run("boundary-fraction", cfg, 7);
    const auto rows = csv(artifact(r, "boundary_fraction.csv"));
    for (const auto& row : rows) {
      const double R = num(row, "R");
      const double bound = 1 - std::pow(s, -2) * std::pow((R - 2 * L - 2 * std::sqrt(2.0)) / R, 2);
      if (!(num(row, "estimate") <= bound + 3 * num(row, "std_error"))) {
        o.pass = false;
        o.detail += " R=" + str(R) + " above the bound;";
      }
    }
    const double last = num(rows.back(), "estimate");
    if (!(last < target)) o.pass = false;
    o.detail += " pitch E*" + str(pitch) + ": estimate at R=480 is " + str(last) + " (target " + str(target) + ");";
  }
  return o;
}

// Criteria 4 and 5 read the same run; cleared at the start of each pass.
std::optional<RunResult> g_simplicial;

const RunResult& simplicial_run() {
  if (!g_simplicial) g_simplicial = run("lemmas-simplicial", {{"params", {{"sample_size", 1000}}}}, 11);
  return *g_simplicial;
}

Outcome criterion4() {
  Outcome o;
  const auto& r = simplicial_run();
  std::map<std::string, std::size_t> tags;
  std::size_t n = 0;
  for (const auto& j : jsonl(artifact(r, "certificates.jsonl"))) {
    ++n;
    ++tags[j["tag"].get<std::string>()];
    if (!j["passed"].get<bool>() || j.value("resamples", 1) != 0 || !j.value("exhaustive", false) ||
        j["dim"].get<int>() > 2) {
      o.pass = false;
      o.detail += " sample " + j["sample"].dump() + " failed;";
    }
  }
  if (n != 1000 || tags.size() != 3) o.pass = false;
  std::string mix;
  for (const auto& [t, c] : tags) mix += " " + t + "=" + std::to_string(c);
  o.detail = std::to_string(n) + " exhaustive certificates with zero resamples (" + mix.substr(1) + ");" + o.detail;
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto& r = simplicial_run();
  std::size_t rows = 0;
  for (const auto& row : csv(artifact(r, "covers.csv"))) {
    ++rows;
    const double n = num(row, "n"), eps = num(row, "eps");
    const double bound = std::pow(2 * n + 1, n) / std::pow(eps, n);
    const double count = num(row, "lattice_count"), greedy = num(row, "greedy");
    if (!(count <= bound * (1 + 1e-12)) || !(greedy <= count)) {
      o.pass = false;
      o.detail += " n=" + row.at("n") + " eps=" + row.at("eps") + ";";
    }
  }
  if (rows != 12) o.pass = false;
  o.detail = std::to_string(rows) + " (n, eps) cells with count <= (2n+1)^n/eps^n and greedy <= count;" + o.detail;
  return o;
}

Outcome criterion6() {
  Outcome o;
  const double eps = 0.4, delta = 0.9;
  const json cfg = {{"params", {{"stage", "zero-set"}, {"eps", eps}, {"delta", delta}, {"sample_size", 16}}}};
  const auto r = run("paint", cfg, 21);
  if (!r.summary["certificate_passed"].get<bool>() || !r.summary["certificate_exhaustive"].get<bool>()) {
    o.pass = false;
    o.detail += " zero-avoiding certificate missing;";
  }
  const auto rows = csv(artifact(r, "zero_set.csv"));
  for (const auto& row : rows) {
    // sup_x |Z(x)| <= sup_x |edge zeros(x)| + interior term follows from the per-x decomposition.
    if (row.at("decomposition_violations") != "0" ||
        !(num(row, "max_zeros") <= num(row, "max_edge_zeros") + num(row, "interior_term"))) {
      o.pass = false;
      o.detail += " R=" + row.at("R") + " decomposition fails;";
    }
  }
  const double est = num(rows.back(), "normalized");
  if (!(est < 2 * eps && 2 * eps < delta)) o.pass = false;
  o.detail = "normalized zero count " + str(est) + " < 2 eps = " + str(2 * eps) + " < delta = " + str(delta) + ";" +
             o.detail;
  return o;
}

Outcome criterion7() {
  Outcome o;
  const json cfg = {{"params", {{"stage", "payload"}, {"N", 8}, {"eps", 0.25}, {"sample_size", 32}}}};
  const auto r = run("paint", cfg, 31);
  const auto& s = r.summary;
  if (!s["tau_gate"].get<bool>() || !s["log_gate"].get<bool>() || !s["spanning_ok"].get<bool>() ||
      s["claim_mismatches"] != 0) {
    o.pass = false;
    o.detail += " gates or block identity fail;";
  }
  for (const auto& row : csv(artifact(r, "payload.csv"))) {
    if (!(num(row, "max_residual") <= num(row, "residual_bound")) ||
        !(num(row, "measured_log_cover") <= num(row, "chain_rhs")) || !(num(row, "qc_bound") <= num(row, "chain_rhs"))) {
      o.pass = false;
      o.detail += " R=" + row.at("R") + " chain fails;";
    }
    o.detail = "R=" + row.at("R") + ": residual " + row.at("max_residual") + " <= " + str(num(row, "residual_bound")) +
               ", measured log cover " + str(num(row, "measured_log_cover")) + " <= " + str(num(row, "chain_rhs")) +
               " over " + row.at("images") + " images;" + o.detail;
  }
  return o;
}

bool agree_pairs_close(const RunResult& r, double eps, std::size_t& agree) {
  bool ok = true;
  for (const auto& j : jsonl(artifact(r, "verify.jsonl"))) {
    if (j["verdict"] == "FAILURE") ok = false;
    if (j["verdict"] == "agree") {
      ++agree;
      if (!(j["distance"].get<double>() < eps)) ok = false;
    }
  }
  return ok;
}

Outcome criterion8() {
  Outcome o;
  // (a) block identity of the zero-dimensional map, (c) for the same map.
  const auto sym = run("verify-embed", {{"params", {{"stage", "symbolic"}, {"pairs", 1000}}}}, 41);
  std::size_t agree_sym = 0, agree_enc = 0;
  if (sym.summary["claim_mismatches"] != 0 || sym.summary["claim_blocks"].get<std::size_t>() == 0) {
    o.pass = false;
    o.detail += " symbolic block identity fails;";
  }
  if (!agree_pairs_close(sym, 0.2, agree_sym) || sym.summary["pairs"].get<std::size_t>() < 1000) {
    o.pass = false;
    o.detail += " symbolic pair check fails;";
  }
  // (b) decoding of the two-channel encoder at full scale.
  const auto ed = run("encode-decode", {{"params", {{"sample_size", 8}}}}, 42);
  for (const auto& j : jsonl(artifact(ed, "encode_decode.jsonl")))
    if (j["pseudo_tiling"]["violations1"] != 0 || j["pseudo_tiling"]["violations2"] != 0 ||
        j["g1_claim"]["mismatches"] != 0 || j["s_condition"]["violations"] != 0) {
      o.pass = false;
      o.detail += " decode sample " + j["sample"].dump() + " fails;";
    }
  if (!ed.passed) o.pass = false;
  // (c) for the two-channel map.
  const auto enc = run("verify-embed", {{"params", {{"stage", "encoder"}, {"pairs", 1000}}}}, 43);
  if (!agree_pairs_close(enc, 0.3, agree_enc) || enc.summary["pairs"].get<std::size_t>() < 1000) {
    o.pass = false;
    o.detail += " encoder pair check fails;";
  }
  o.detail = "block identity on " + sym.summary["claim_blocks"].dump() + " cells; decode indicators on " +
             ed.summary["samples"].dump() + " points; 0 counterexamples in 1000 + 1000 pairs (" +
             std::to_string(agree_sym) + " + " + std::to_string(agree_enc) + " agreeing, all with d < eps);" +
             o.detail;
  return o;
}

Outcome criterion9() {
  Outcome o;
  const json full = {{"k", 1}, {"kind", "full"}, {"alphabet", 2}};
  const json golden = {{"k", 1}, {"kind", "sft"}, {"alphabet", 2}, {"forbidden", {{{"0", 1}, {"1", 1}}}}};
  const std::vector<std::int64_t> N_grid{4, 8, 16};
  auto ocap = [&](const json& sys, const json& pred) {
    return run("ocap", {{"system", sys}, {"params", {{"predicate", pred}, {"N_grid", N_grid}}}}, 51);
  };
  const auto empty = ocap(full, {{"kind", "empty"}});
  const auto cyl = ocap(full, {{"kind", "symbol"}, {"values", {1}}});
  const auto gm = ocap(golden, {{"kind", "symbol"}, {"values", {1}}});
  if (empty.summary["inf_over_windows"] != 0.0) o.pass = false;
  if (cyl.summary["inf_over_windows"] != 1.0) o.pass = false;
  for (const auto& row : csv(artifact(gm, "ocap.csv")))
    if (!(std::fabs(num(row, "normalized") - 0.5) <= 1 / num(row, "window"))) {
      o.pass = false;
      o.detail += " golden mean window " + row.at("window") + ";";
    }
  const auto ent = run("dims",
                       {{"system", full},
                        {"params", {{"eps", 0.5}, {"N_grid", {12}}, {"full_enumeration", true}, {"mdim", false}}}},
                       52);
  const double h = num(csv(artifact(ent, "entropy.csv")).back(), "running_inf");
  const double rel = std::fabs(h - std::log(2.0)) / std::log(2.0);
  if (!(rel <= 0.02)) o.pass = false;
  const auto md = run("dims",
                      {{"system", {{"k", 1}, {"kind", "full"}, {"cube_D", 1}}},
                       {"params", {{"eps_grid", {0.9, 0.7}}, {"N_grid", {1, 2, 3}}, {"sample_size", 400}}}},
                      53);
  std::string agree;
  for (const auto& j : jsonl(artifact(md, "folner_agreement.jsonl"))) {
    const double gap = std::fabs(j["cube"].get<double>() - j["ball"].get<double>());
    if (!(gap <= j["tolerance"].get<double>() + 1e-12)) o.pass = false;
    agree += " |" + str(j["cube"].get<double>()) + " - " + str(j["ball"].get<double>()) + "| <= " +
             str(j["tolerance"].get<double>()) + ";";
  }
  o.detail = "ocap empty " + empty.summary["inf_over_windows"].dump() + ", cylinder " +
             cyl.summary["inf_over_windows"].dump() + ", golden mean " + gm.summary["inf_over_windows"].dump() +
             "; entropy at N=12 " + str(h) + " (rel. error " + str(rel) + "); Folner" + agree + o.detail;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"flat-cell ratio", criterion1},          {"lifted-cell suite", criterion2},
      {"boundary fraction", criterion3},        {"generic-position certificates", criterion4},
      {"polytope covering bound", criterion5},  {"zero-set pipeline", criterion6},
      {"metric mean dimension pipeline", criterion7}, {"round trips and pair verification", criterion8},
      {"estimator sanity", criterion9},
  };
  bool all = true;
  auto pass_over = [&](bool print) {
    g_digests.clear();
    g_simplicial.reset();
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      Outcome o;
      try {
        o = criteria[i].second();
      } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!print) continue;
      all = all && o.pass;
      std::cout << "criterion " << i + 1 << " [" << criteria[i].first << "]: " << (o.pass ? "PASS" : "FAIL") << " ("
                << str(secs) << " s) " << o.detail << std::endl;
    }
    return g_digests;
  };

  mdimkit::set_thread_count(1);
  const auto one = pass_over(true);
  mdimkit::set_thread_count(4);
  const auto four = pass_over(false);
  std::size_t same = 0;
  for (std::size_t i = 0; i < one.size() && i < four.size(); ++i) same += one[i] == four[i];
  const bool det = one.size() == four.size() && same == one.size() && !one.empty();
  all = all && det;
  std::cout << "criterion 10 [determinism]: " << (det ? "PASS" : "FAIL") << " " << same << "/" << one.size()
            << " runs byte-identical across thread counts {1, 4}" << std::endl;
  return all ? 0 : 1;
}
