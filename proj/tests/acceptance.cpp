// Acceptance run: one pass/fail line per criterion, exit 0 iff all pass.
//   acceptance <path to tonelli binary> <scenario dir>

#include <cstdio>
#include <exception>

#include "verify.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: acceptance <tonelli binary> <scenario dir>\n");
    return 2;
  }
  const tonelli::cli::VerifyContext ctx{argv[1], argv[2]};
  const auto& names = tonelli::cli::suite_names();
  int failed = 0;
  for (size_t i = 0; i < names.size(); ++i) {
    tonelli::cli::SuiteResult r;
    try {
      r = tonelli::cli::run_suite(names[i], ctx);
    } catch (const std::exception& e) {
      r.suite = names[i];
      r.checks.push_back({"suite raised", false, 0.0, 0.0, e.what()});
    }
    for (const auto& c : r.checks) std::printf("%s\n", tonelli::cli::format_check(c).c_str());
    std::printf("criterion %zu [%s]: %s (%.2f s)\n", i + 1, names[i].c_str(), r.pass() ? "PASS" : "FAIL", r.seconds);
    std::fflush(stdout);
    failed += r.pass() ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, names.size());
  return failed == 0 ? 0 : 1;
}
