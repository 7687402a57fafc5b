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

#pragma once

#include <string>
#include <vector>

#include "psdalign/kernels.hpp"
#include "psdalign/simkit.hpp"

namespace psdalign::validation {

inline constexpr int check_count = 10;

struct Measurement {
    std::string label;
    double measured = 0.0;
    std::string target;
    bool passed = false;
};

struct CheckResult {
    int id = 0;
    std::string name;
    std::vector<Measurement> measurements;
    std::string error; ///< set when the check threw

    bool passed() const;
};

struct Report {
    std::vector<CheckResult> checks;

    bool passed() const;
    std::vector<int> failed() const;
    std::string text() const;
};

std::string check_name(int id);

/// Runs one acceptance check. Tolerances are multiplied by validation.tolerance_scale.
CheckResult run_check(int id, const ExperimentConfig& config,
                      kernels::Execution execution = kernels::Execution::parallel);

Report run_validation(const ExperimentConfig& config,
                      kernels::Execution execution = kernels::Execution::parallel);

/// One-line summary: "PASS [n] name: ..." or "FAIL [n] name: ...".
std::string summary_line(const CheckResult& check);

} // namespace psdalign::validation
