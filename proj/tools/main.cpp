#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mdimkit/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean dimension and embedding toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  for (const auto& name : mdimkit::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--threads", threads, "Worker threads (default MDIMKIT_THREADS or 1)")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("MDIMKIT_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        threads = 0;
      }
      if (threads < 1) {
        std::cerr << "mdimkit: MDIMKIT_THREADS must be a positive integer\n";
        return 1;
      }
    }
  }
  if (threads > 0) mdimkit::set_thread_count(threads);

  const std::string name = app.get_subcommands().front()->get_name();
  mdimkit::cli::json config;
  try {
    std::ifstream in(config_path);
    config = mdimkit::cli::json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "mdimkit " << name << ": cannot parse " << config_path << ": " << e.what() << "\n";
    return 1;
  }
  return mdimkit::cli::run(name, config, out_dir, seed, std::cerr);
}
