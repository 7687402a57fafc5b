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
#include <string>

#include "psdalign/pilots.hpp"
#include "psdalign/simkit.hpp"

namespace psdalign {

/// Parses YAML text. Errors carry the offending field and line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

AlignmentPlan parse_plan(const std::string& text);
AlignmentPlan load_plan(const std::filesystem::path& path);
std::string serialize_plan(const AlignmentPlan& plan);

/// Copies the plan's shifts into the users as tau / P.
void apply_plan(ExperimentConfig& config, const AlignmentPlan& plan);

} // namespace psdalign
