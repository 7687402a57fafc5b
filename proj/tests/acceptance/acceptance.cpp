// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Acceptance suite: one PASS/FAIL line per criterion at the shipped tolerances.

#include <iostream>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "psdalign/simkit.hpp"
#include "psdalign/validation.hpp"

int main(int argc, char** argv) {
    CLI::App app{"psdalign acceptance suite"};
    std::vector<int> criteria;
    app.add_option("--criterion", criteria, "criteria to run (default: all)")
        ->check(CLI::Range(1, psdalign::validation::check_count));
    CLI11_PARSE(app, argc, argv);
    if (criteria.empty()) {
        for (int id = 1; id <= psdalign::validation::check_count; ++id) {
            criteria.push_back(id);
        }
    }
    spdlog::set_level(spdlog::level::warn);

    const auto config = psdalign::default_config();
    bool all = true;
    for (int id : criteria) {
        const auto result = psdalign::validation::run_check(id, config);
        std::cout << psdalign::validation::summary_line(result) << std::endl;
        for (const auto& m : result.measurements) {
            std::cout << "    " << (m.passed ? "ok   " : "FAIL ") << m.label << ": " << m.measured
                      << " (target " << m.target << ")\n";
        }
        all = all && result.passed();
    }
    return all ? 0 : 1;
}
