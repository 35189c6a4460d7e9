// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. POLYURN_BUDGET=ci selects the reduced budget.

#include <cstdlib>
#include <iostream>

#include "polyurn/acceptance.hpp"
#include "polyurn/ensemble.hpp"

int main() {
  using namespace polyurn::acceptance;
  Options opt;
  const char* budget = std::getenv("POLYURN_BUDGET");
  try {
    opt.budget = Budget::parse(budget ? budget : "desk");
  } catch (const polyurn::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  opt.threads = polyurn::default_thread_budget();
  std::cout << "acceptance budget " << opt.budget.name << ", reps " << opt.budget.reps << ", threads " << opt.threads
            << std::endl;
  Suite suite(opt);
  bool all = true;
  suite.run([&](const CriterionResult& r) {
    all = all && r.pass;
    std::cout << Suite::format(r) << std::endl;
  });
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << std::endl;
  return all ? 0 : 1;
}
