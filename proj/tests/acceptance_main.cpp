#include <cstdlib>
#include <iostream>
#include <string>

#include "distress/acceptance.hpp"

int main(int argc, char** argv) {
  distress::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--verbose") {
      options.log = [](const std::string& msg) { std::cerr << "  " << msg << '\n'; };
    } else {
      options.only.push_back(std::atoi(arg.c_str()));
    }
  }
  int failed = 0;
  distress::run_acceptance(options, [&](const distress::CriterionResult& r) {
    std::cout << distress::format_result(r) << std::endl;
    if (!r.passed) ++failed;
  });
  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " acceptance criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
