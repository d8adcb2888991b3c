#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fractalp {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // the measured numbers behind the verdict
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  std::filesystem::path scratch_dir;  // for the determinism round trip
  std::filesystem::path cli_path;     // binary re-invoked by the determinism check
  bool skip_slow = false;             // drops nothing; reserved for tooling
};

// the full 13-criterion gate; results in index order
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

CriterionResult run_criterion(int index, const AcceptanceOptions& opt);

// one line per criterion: "[PASS|FAIL] <idx> <name> — <detail> (<t> s)"
void print_results(const std::vector<CriterionResult>& results);

}  // namespace fractalp
