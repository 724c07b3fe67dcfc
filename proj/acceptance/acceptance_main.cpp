// Runs every acceptance suite and prints one verdict line per criterion.
// Exit status is 0 only if all criteria pass.

#include "mcflow/acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

const char* const kTitles[] = {
    "",
    "envelope algebra of F",
    "disc solve vs 1 - |x|^2 (d=2, h=1/64)",
    "ball solve u(0) (d=3, h=1/32)",
    "exact rotation invariant and disc exit 0.64",
    "square arrival time vs 4/pi under refinement",
    "hierarchical regular 3-simplex",
    "segment-plus-discs cascade minimum in [1, 1 + 5 dt]",
    "disc union u(0,0) >= 0.9",
    "quasi-concavity on disc and square",
    "global bound 0 <= u <= r^2 and mean exit <= r^2",
    "disc PDE residual median <= 0.15",
    "kernel-field optimal drift <= 0.05 u(x0)",
    "non-convex body |y| <= 0.01 + x^2",
};

}  // namespace

int main(int argc, char** argv) {
  mcflow::acceptance::Context ctx;
  ctx.log = &std::cout;
  if (const char* s = std::getenv("MCFLOW_SEED")) ctx.seed = std::strtoull(s, nullptr, 10);

  std::vector<std::string> suites = mcflow::acceptance::suite_names();
  if (argc > 1) suites.assign(argv + 1, argv + argc);
  try {
    for (const auto& s : suites) mcflow::acceptance::run_suite(s, ctx);
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << std::endl;
    return 2;
  }

  std::cout << "\nacceptance criteria\n";
  bool all = true;
  for (const auto& [id, ok] : mcflow::acceptance::verdicts(ctx)) {
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << (id < 10 ? " " : "") << id << "  " << kTitles[id] << "\n";
    all = all && ok;
  }
  std::cout << std::flush;
  return all ? 0 : 1;
}
