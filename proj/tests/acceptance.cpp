// Acceptance gate runner: executes one numbered criterion at full sample
// counts and prints a single PASS/FAIL line. Criteria with a stated runtime
// budget also fail when they exceed it. Exit status: 0 pass, 1 fail,
// 2 usage error.

#include <ixcurv/criteria.hpp>

#include <cstdlib>
#include <iostream>

namespace {

// Wall-clock budgets in seconds; 0 means no budget for that criterion.
constexpr double kBudget[9] = {0, 60, 180, 0, 60, 120, 300, 600, 0};

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <criterion 1..8>\n";
        return 2;
    }
    int id = std::atoi(argv[1]);
    if (id < 1 || id > 8) {
        std::cerr << "criterion must be in 1..8\n";
        return 2;
    }

    ixcurv::CriterionOutcome out;
    try {
        out = ixcurv::run_criterion(id, ixcurv::acceptance_scale());
    } catch (const std::exception& e) {
        std::cout << "FAIL criterion " << id << ": exception: " << e.what()
                  << std::endl;
        return 1;
    }

    bool in_budget = kBudget[id] == 0 || out.seconds < kBudget[id];
    if (!in_budget) {
        out.pass = false;
        out.detail += " — exceeded " + std::to_string(static_cast<int>(kBudget[id])) +
                      "s budget";
    }
    std::cout << ixcurv::criterion_line(out) << std::endl;
    return out.pass ? 0 : 1;
}
