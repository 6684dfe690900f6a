#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "mdimkit/parallel.hpp"

using namespace mdimkit::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mdimkit_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_quiet(const std::string& name, const json& config, const fs::path& out, std::string* log = nullptr) {
  std::ostringstream os;
  const int rc = run(name, config, out, std::nullopt, os);
  if (log) *log = os.str();
  return rc;
}

const json kLemma41 = {{"seed", 5}, {"params", {{"k", 1}, {"fixture", "grid"}, {"M", 16}, {"L", 16}, {"probes", 2000}}}};

}  // namespace

TEST_CASE("lemma41 on the grid fixture passes all four checks") {
  const auto out = scratch("lemma41");
  REQUIRE(run_quiet("lemma41", kLemma41, out) == 0);
  std::istringstream rows(slurp(out / "lemma41.jsonl"));
  std::string line;
  int pass = 0, total = 0;
  while (std::getline(rows, line)) {
    ++total;
    pass += json::parse(line)["status"] == "pass";
  }
  CHECK(total == 4);
  CHECK(pass == 4);
  const auto manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["subcommand"] == "lemma41");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["passed"] == true);
  CHECK(manifest["config_hash"] == config_hash(kLemma41));
  CHECK(manifest["files"].size() == 2);
  CHECK(fs::exists(out / "summary.json"));
}

TEST_CASE("gate violations are usage errors") {
  std::string log;
  json cfg = kLemma41;
  cfg["params"]["H"] = 100;
  CHECK(run_quiet("lemma41", cfg, scratch("gate"), &log) == 1);
  CHECK(log.find("H gate") != std::string::npos);
  CHECK_FALSE(fs::exists(scratch("gate") / "manifest.json"));

  cfg = kLemma41;
  cfg["params"]["s"] = 1.0;
  CHECK(run_quiet("lemma41", cfg, scratch("gate"), &log) == 1);
  CHECK(log.find("s gate") != std::string::npos);

  CHECK(run_quiet("encode-decode", {{"params", {{"N", 5}}}}, scratch("gate"), &log) == 1);
  CHECK(log.find("N even") != std::string::npos);
  CHECK(run_quiet("encode-decode", {{"params", {{"eps", 0.9}}}}, scratch("gate"), &log) == 1);
  CHECK(log.find("eps gate") != std::string::npos);
  CHECK(run_quiet("lemma41", {{"params", {{"M", 16}, {"L", 8}}}}, scratch("gate"), &log) == 1);
  CHECK(log.find("L gate") != std::string::npos);
}

TEST_CASE("schema errors are usage errors") {
  CHECK(run_quiet("tile-check", {{"params", {{"bogus", 1}}}}, scratch("schema")) == 1);
  CHECK(run_quiet("tile-check", {{"extra", 1}}, scratch("schema")) == 1);
  CHECK(run_quiet("tile-check", {{"params", {{"L", "twelve"}}}}, scratch("schema")) == 1);
  CHECK(run_quiet("tile-check", {{"subcommand", "ocap"}}, scratch("schema")) == 1);
  CHECK(run_quiet("dims", json::object(), scratch("schema")) == 1);
  CHECK(run_quiet("no-such-command", json::object(), scratch("schema")) == 1);
}

TEST_CASE("construction errors exit 2 with error.json") {
  // A net too coarse for the blending radius is only detected while building.
  const json cfg = {{"params", {{"stage", "payload"}, {"net_per_axis", 8}}}};
  const auto out = scratch("error");
  CHECK(run_quiet("paint", cfg, out) == 2);
  const auto err = json::parse(slurp(out / "error.json"));
  CHECK(err["error"].get<std::string>().find("r_blend") != std::string::npos);
  CHECK(json::parse(slurp(out / "manifest.json"))["exit_code"] == 2);
}

TEST_CASE("reruns are byte-identical across thread counts") {
  const json cfg = {{"seed", 9}, {"params", {{"k", 2}, {"L", 12}, {"half_width", 90}}}};
  mdimkit::set_thread_count(1);
  const auto a = scratch("det1");
  REQUIRE(run_quiet("tile-check", cfg, a) == 0);
  mdimkit::set_thread_count(4);
  const auto b = scratch("det4");
  REQUIRE(run_quiet("tile-check", cfg, b) == 0);
  mdimkit::set_thread_count(1);
  for (const char* f : {"cells.csv", "summary.json"}) CHECK(slurp(a / f) == slurp(b / f));
  const auto ma = json::parse(slurp(a / "manifest.json")), mb = json::parse(slurp(b / "manifest.json"));
  CHECK(ma["config_hash"] == mb["config_hash"]);
  CHECK(ma["files"] == mb["files"]);
}

TEST_CASE("seed override replaces the config seed") {
  const json cfg = {{"seed", 9}, {"params", {{"k", 2}, {"L", 12}, {"half_width", 90}}}};
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  std::ostringstream log;
  REQUIRE(run("tile-check", cfg, a, std::uint64_t{9}, log) == 0);
  REQUIRE(run("tile-check", cfg, b, std::uint64_t{10}, log) == 0);
  CHECK(json::parse(slurp(b / "manifest.json"))["seed"] == 10);
  CHECK(slurp(a / "cells.csv") != slurp(b / "cells.csv"));
}

TEST_CASE("sweep writes one row per cell") {
  const json base = {{"subcommand", "tile-check"}, {"params", {{"k", 2}, {"half_width", 90}}}};
  const auto out = scratch("sweep");
  REQUIRE(run_quiet("sweep", {{"seed", 2}, {"base", base}, {"grid", {{"L", {12, 16}}, {"R", {2, 3}}}}}, out) == 0);
  std::istringstream in(slurp(out / "sweep.csv"));
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("L,R,", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);

  const auto empty = scratch("sweep_empty");
  REQUIRE(run_quiet("sweep", {{"base", base}, {"grid", json::object()}}, empty) == 0);
  const auto text = slurp(empty / "sweep.csv");
  CHECK(text == "passed\n");

  CHECK(run_quiet("sweep", {{"base", base}, {"grid", {{"a", {1}}, {"b", {1}}, {"c", {1}}, {"d", {1}}}}},
                  scratch("sweep_bad")) == 1);
  CHECK(run_quiet("sweep", {{"base", base}, {"grid", {{"L", json::array()}, {"R", std::vector<int>(200, 2)}}}},
                  scratch("sweep_bad")) == 0);
  CHECK(run_quiet("sweep",
                  {{"base", base},
                   {"grid", {{"L", std::vector<int>(101, 12)}, {"R", std::vector<int>(100, 2)}}}},
                  scratch("sweep_bad")) == 1);
}

TEST_CASE("config hash is stable and key-order independent") {
  const json a = json::parse(R"({"params": {"L": 12, "k": 2}, "seed": 1})");
  const json b = json::parse(R"({"seed": 1, "params": {"k": 2, "L": 12}})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(json::parse(R"({"seed": 2})")));
}
