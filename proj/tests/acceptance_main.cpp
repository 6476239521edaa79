#include <cstdio>
#include <filesystem>
#include <iostream>

#include "compo/acceptance.hpp"

int main() {
    auto scratch = std::filesystem::temp_directory_path() / "compo-approx-lab-acceptance";
    std::cout << "compo-approx-lab acceptance suite\n";
    std::cout << "scratch dir: " << scratch.string() << "\n\n";
    auto results = compo::run_acceptance(scratch.string(), std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << "\n" << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 3;
}
