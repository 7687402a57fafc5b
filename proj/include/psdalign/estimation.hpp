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

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "psdalign/fading.hpp"
#include "psdalign/kernels.hpp"
#include "psdalign/pilots.hpp"
#include "psdalign/toeplitz.hpp"
#include "psdalign/types.hpp"

namespace psdalign {

/// One transmitter in the uplink: sqrt(power) X R^(1/2) contribution.
struct SceneMember {
    double power = 1.0;
    PilotSequence pilot;
    ChannelCovariance covariance;
};

// Users are estimated; interferers only enter the received covariance.
struct UplinkScene {
    std::vector<SceneMember> users;
    std::vector<SceneMember> interferers;
    double noise_variance = 1.0;

    std::size_t length() const;
    void validate() const;
};

class SingularSystem : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ErrorCovariance {
    CMatrix matrix;
    double mse = 0.0; ///< trace / P
};

// Factorizes Q = noise I + sum_g rho_g X_g R_g X_g^H once and serves channel
// estimates and error covariances for every user of the scene.
class MmseEstimator {
  public:
    explicit MmseEstimator(UplinkScene scene,
                           kernels::Execution execution = kernels::Execution::parallel);

    const UplinkScene& scene() const { return scene_; }

    /// Q^{-1} Y.
    CMatrix solve(const CMatrix& received) const;

    /// sqrt(rho_k) R_k X_k^H Z for Z = Q^{-1} Y.
    CMatrix estimate_from_solved(std::size_t user, const CMatrix& solved) const;

    CMatrix estimate(std::size_t user, const CMatrix& received) const;

    ErrorCovariance error_covariance(std::size_t user) const;

  private:
    UplinkScene scene_;
    kernels::Execution execution_;
    Eigen::LLT<CMatrix> factor_;
    std::vector<ToeplitzOperator> operators_;
};

CVector mmse_estimate(const CVector& received, const UplinkScene& scene, std::size_t user);

ErrorCovariance error_covariance(const UplinkScene& scene, std::size_t user);

/// R - rho R (noise I + rho R)^{-1} R.
CMatrix interference_free_covariance(const ChannelCovariance& covariance, double power, double noise);

/// trace / P of interference_free_covariance without forming it.
double interference_free_mse(const ChannelCovariance& covariance, double power, double noise);

/// Interfering spectrum seen after de-rotation: S(xi - shift).
struct ShiftedSpectrum {
    DopplerSpectrum spectrum;
    double shift = 0.0; ///< normalized frequency offset, (tau_g - tau_k) / P
    double power = 1.0;
};

/// Large-P MSE  r(0) - integral S^2 rho / (S rho + sum rho_g S_g~ + noise).
double asymptotic_mse(const DopplerSpectrum& user, std::span<const ShiftedSpectrum> interferers,
                      double power, double noise);

/// Clarke-spectrum MSE as a function of alpha = pi F noise / power.
double clarke_closed_form(double alpha);

/// 2F / snr.
double small_alpha_mse(double max_doppler, double snr);

/// 10 log10(1/(2F) - 1/snr); empty when the argument is not positive.
std::optional<double> processing_gain_db(double max_doppler, double snr);

/// SNR of the estimate, (1 - nmse) / nmse, over the observation SNR, in dB.
std::optional<double> empirical_processing_gain_db(double nmse, double snr);

struct TaylorCheck {
    double exact = 0.0;
    double series = 0.0;
};

struct EstimationReportEntry {
    std::size_t user = 0;
    double finite_mse = 0.0;            ///< trace / P of the exact error covariance
    double interference_free_mse = 0.0; ///< same user alone
    double asymptotic_mse = 0.0;        ///< PSD integral; NaN when pilots are not cyclic shifts
    double closed_form_mse = 0.0;       ///< Clarke closed form without interference
    double small_alpha_mse = 0.0;
    std::optional<double> gain_db;
    std::optional<double> empirical_nmse;
    double empirical_half_width = 0.0;
};

struct EstimationReport {
    std::size_t length = 0;
    std::vector<EstimationReportEntry> users;
};

/// clarke_closed_form(alpha) next to 2a/pi - a^2/2 + 4a^3/(3 pi).
TaylorCheck taylor_check(double alpha);

} // namespace psdalign
