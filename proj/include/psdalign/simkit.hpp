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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "psdalign/estimation.hpp"
#include "psdalign/kernels.hpp"
#include "psdalign/pilots.hpp"
#include "psdalign/types.hpp"

namespace psdalign {

enum class PilotScheme { psd_align, hadamard };
enum class CsiMode { estimated, perfect, random };
enum class SweepAxis { length, snr };

std::string to_string(PilotScheme scheme);
std::string to_string(CsiMode mode);
std::string to_string(SweepAxis axis);

// Invalid or malformed experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& message, std::optional<int> line = std::nullopt);
    const std::string& field() const { return field_; }
    std::optional<int> line() const { return line_; }

  private:
    std::string field_;
    std::optional<int> line_;
};

struct UserConfig {
    double doppler_hz = 10.0;
    double power = 1.0;
    std::optional<double> shift_fraction; ///< tau / P; taken from the plan when absent

    bool operator==(const UserConfig&) const = default;
};

struct ContaminationConfig {
    bool enabled = true;
    Band band{-0.375, 0.375};
    double inr_db = 0.0; ///< relative to the mean user power

    bool operator==(const ContaminationConfig&) const = default;
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::length;
    std::vector<std::size_t> lengths{512, 1024, 2048, 4096};
    std::vector<double> snr_db;

    bool operator==(const SweepConfig&) const = default;
};

struct ValidationConfig {
    double tolerance_scale = 1.0;
    std::vector<int> checks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::size_t trials = 200;
    std::size_t antennas = 16;
    std::size_t length = 4096;
    std::vector<std::size_t> lengths{512, 1024, 2048, 4096};

    bool operator==(const ValidationConfig&) const = default;
};

struct ExperimentConfig {
    double sampling_hz = 5000.0;
    double symbol_s = 66.67e-6;
    std::vector<UserConfig> users;
    std::size_t length = 4096; ///< P for single runs
    std::size_t antennas = 16;
    std::vector<PilotScheme> schemes{PilotScheme::psd_align, PilotScheme::hadamard};
    ContaminationConfig contamination;
    double snr_db = 0.0;
    std::optional<double> dl_snr_db; ///< defaults to snr_db
    std::size_t dl_lag = 1;
    CsiMode csi = CsiMode::estimated;
    std::size_t trials = 200;
    std::uint64_t seed = 20170611;
    SweepConfig sweep;
    ValidationConfig validation;

    /// Throws ConfigError on invariant violations.
    void validate() const;
    double normalized_doppler(std::size_t user) const;
    double noise_variance() const { return noise_variance_for(snr_db); }
    static double noise_variance_for(double snr_db);

    bool operator==(const ExperimentConfig&) const = default;
};

/// Eight 10 Hz users with shifts 3/8 + k/36 and contamination on [-3/8, 3/8].
ExperimentConfig default_config();

/// Shifts per user in slots for PSD-aligned pilots of length P.
std::vector<std::size_t> resolve_shifts(const ExperimentConfig& config, std::size_t length);

struct UserResult {
    std::size_t user = 0;
    double max_doppler = 0.0;
    std::size_t shift = 0;
    double nmse = 0.0;
    double nmse_half_width = 0.0;
    double nmse_analytic = 0.0; ///< 2F / snr
    std::optional<double> gain_db;
    double gain_half_width = 0.0;
    std::optional<double> gain_analytic_db;
    double spectral_efficiency = 0.0;
    double spectral_efficiency_half_width = 0.0;
    double mean_sinr = 0.0; ///< linear, averaged over trials
    std::size_t skipped_beams = 0;
};

struct RunResult {
    PilotScheme scheme = PilotScheme::psd_align;
    std::size_t length = 0;
    double snr_db = 0.0;
    bool downlink = false;
    std::vector<UserResult> users;
    double mean_nmse = 0.0;
    double mean_nmse_half_width = 0.0;
    double sum_se = 0.0;
    double sum_se_half_width = 0.0;
    double received_power = 0.0; ///< mean |y|^2 per slot and antenna
    std::vector<std::uint64_t> trial_seeds;
};

struct RunOptions {
    std::optional<std::size_t> length; ///< overrides config.length
    std::optional<double> snr_db;      ///< overrides config.snr_db
    kernels::Execution execution = kernels::Execution::parallel;
};

RunResult run_uplink(const ExperimentConfig& config, PilotScheme scheme, const RunOptions& options = {});
RunResult run_downlink(const ExperimentConfig& config, PilotScheme scheme,
                       const RunOptions& options = {});

/// Analytic MSE figures for every user of the scenario at length P, next to the
/// Monte-Carlo values of `empirical` when given.
EstimationReport estimation_report(const ExperimentConfig& config, PilotScheme scheme,
                                   std::size_t length, const RunResult* empirical = nullptr);

/// Per-trial seed used by both schemes (common random numbers).
std::uint64_t trial_seed(std::uint64_t master, std::size_t length, std::size_t trial);

} // namespace psdalign
