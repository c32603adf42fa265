#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "distress/harness.hpp"

namespace distress {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  int workers = 1;
  std::vector<int> only;  ///< criterion ids to run; empty runs all
  LogFn log;
};

/// One line: "AC<n> PASS|FAIL <title> | <detail>".
std::string format_result(const CriterionResult& r);

/// Runs the acceptance criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace distress
