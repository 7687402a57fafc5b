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

#include <filesystem>
#include <span>
#include <string>

#include "psdalign/simkit.hpp"

namespace psdalign::output {

inline constexpr int csv_version = 1;

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// One row per scheme, sweep point and user:
// scheme,P,snr_db,user,empirical,analytic,ci_halfwidth
std::string mse_csv(std::span<const RunResult> runs);
std::string gain_csv(std::span<const RunResult> runs);
std::string dlse_csv(std::span<const RunResult> runs);

enum class Quantity { nmse, gain, sum_se };

/// User-averaged values per scheme, one gnuplot data block per scheme.
std::string aggregate_dat(std::span<const RunResult> runs, Quantity quantity, SweepAxis axis);

/// Config echo plus every per-trial seed.
std::string manifest(const ExperimentConfig& config, std::span<const RunResult> runs);

} // namespace psdalign::output
