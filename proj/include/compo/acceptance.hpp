#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace compo {

/// Outcome of one verification criterion.
struct CriterionResult {
    int index = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

/// Runs the full verification suite. Artifacts produced along the way go
/// under `scratch_dir`; one line per criterion is streamed to `progress`.
std::vector<CriterionResult> run_acceptance(const std::string& scratch_dir,
                                            std::ostream& progress);

bool all_passed(const std::vector<CriterionResult>& results);

} // namespace compo
