#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "fractalp/acceptance.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  fractalp::AcceptanceOptions opt;
  if (const char* bin = std::getenv("FRACTALP_CLI_BIN")) opt.cli_path = bin;
  if (const char* seed = std::getenv("FRACTALP_SEED"))
    opt.seed = std::strtoull(seed, nullptr, 10);

  const fs::path scratch =
      fs::temp_directory_path() /
      ("fractalp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  opt.scratch_dir = scratch.string();

  std::vector<fractalp::CriterionResult> results;
  if (argc > 1) {
    // run a single criterion by number (debug aid)
    results.push_back(fractalp::run_criterion(std::atoi(argv[1]), opt));
  } else {
    results = fractalp::run_acceptance(opt);
  }

  fractalp::print_results(results);
  fs::remove_all(scratch);

  for (const fractalp::CriterionResult& r : results)
    if (!r.pass) return 1;
  return 0;
}
