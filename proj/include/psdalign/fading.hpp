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

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "psdalign/types.hpp"

namespace psdalign {

/// Zeroth-order Bessel function of the first kind.
double bessel_j0(double x);

/// r(v) = J0(2 pi F v) for the Clarke/Jakes model; requires 0 < F <= 1/2.
double clarke_autocorrelation(double max_doppler, long lag);

/// Clarke PSD (1/pi) / sqrt(F^2 - xi^2) inside (-F, F), 0 outside and
/// +infinity at the band edges. xi must lie in (-1/2, 1/2].
double clarke_psd(double max_doppler, double xi);

/// Uniform PSD of total `power` over `band`.
double flat_psd(Band band, double power, double xi);

enum class SpectrumKind { clarke, flat_band, sampled };

// A normalized Doppler PSD on the frequency circle (-1/2, 1/2].
class DopplerSpectrum {
  public:
    static DopplerSpectrum clarke(double max_doppler, double power = 1.0);
    static DopplerSpectrum flat_band(Band band, double power = 1.0);

    /// Piecewise-constant density; cell i is centred on i/N (mod 1) with width 1/N.
    static DopplerSpectrum sampled(std::vector<double> grid);

    SpectrumKind kind() const { return kind_; }
    double power() const { return power_; }
    double max_doppler() const { return max_doppler_; }
    Band band() const { return band_; }
    std::span<const double> grid() const { return grid_; }

    double density(double xi) const;

    /// Integral of the density over [a, b] on the circle; a <= b.
    double mass(double a, double b) const;

    /// r(v) = E[h(n + v) h(n)^*] = integral of S(xi) exp(j 2 pi xi v).
    cd autocorrelation(long lag) const;

    /// Points in (-1/2, 1/2] where the density jumps or is singular.
    std::vector<double> breakpoints() const;

    /// Closed arc outside of which the density vanishes, as (lo, hi) with lo <= hi
    /// in unwrapped coordinates. Sampled spectra report the whole circle.
    Band support() const;

  private:
    DopplerSpectrum() = default;

    double cumulative(double x) const;

    SpectrumKind kind_ = SpectrumKind::clarke;
    double power_ = 1.0;
    double max_doppler_ = 0.0;
    Band band_{};
    std::vector<double> grid_;
    std::vector<double> prefix_;
};

/// r(0), r(1), ..., r(P-1). Negative lags follow from conjugate symmetry.
class AutocorrelationSequence {
  public:
    AutocorrelationSequence() = default;
    explicit AutocorrelationSequence(std::vector<cd> values);

    std::size_t size() const { return values_.size(); }
    std::span<const cd> values() const { return values_; }
    cd operator()(long lag) const;
    bool is_real() const;

  private:
    std::vector<cd> values_;
};

// Toeplitz covariance R(l, l') = r(l - l') of P consecutive channel samples,
// together with its circulant approximation.
class ChannelCovariance {
  public:
    std::size_t size() const { return autocorrelation_.size(); }
    const AutocorrelationSequence& autocorrelation() const { return autocorrelation_; }
    const std::optional<DopplerSpectrum>& spectrum() const { return spectrum_; }

    /// DFT of the circulant first column, negatives clamped to zero.
    std::span<const double> eigenvalues() const { return eigenvalues_; }

    /// Eigenvalue mass added by the clamp.
    double clamped_mass() const { return clamped_mass_; }

    /// P times the PSD mass of each DFT bin. Exactly band limited, so this is
    /// the grid used for support tests. Falls back to eigenvalues() when the
    /// covariance was not built from a spectrum.
    std::span<const double> psd_samples() const { return psd_samples_; }

    /// c(0) = r(0), c(v) = r(v) + r(v - P).
    std::vector<cd> circulant_column() const;

    CMatrix toeplitz() const;
    CMatrix circulant() const;

  private:
    friend ChannelCovariance build_covariance(const DopplerSpectrum&, std::size_t);
    friend ChannelCovariance covariance_from_autocorrelation(std::vector<cd>);

    void compute_eigenvalues();

    AutocorrelationSequence autocorrelation_;
    std::optional<DopplerSpectrum> spectrum_;
    std::vector<double> eigenvalues_;
    std::vector<double> psd_samples_;
    double clamped_mass_ = 0.0;
};

ChannelCovariance build_covariance(const DopplerSpectrum& spectrum, std::size_t length);
ChannelCovariance covariance_from_autocorrelation(std::vector<cd> autocorrelation);

struct FadingRealization {
    CMatrix samples; ///< time slot x antenna
    std::uint64_t seed = 0;
};

/// Default oversampling of the spectral synthesis grid relative to P.
inline constexpr std::size_t default_embedding = 16;

/// Draws `antennas` independent columns of a stationary complex Gaussian
/// process. With a source spectrum the process is synthesized on an
/// embedding * P frequency grid from per-bin PSD masses and the first
/// `length` samples are kept, so its second-order statistics follow r(v);
/// otherwise the P-point circulant eigenvalues are used and length <= P.
// Precomputed spectral amplitudes for repeated draws from one covariance.
class ProcessSynthesizer {
  public:
    explicit ProcessSynthesizer(const ChannelCovariance& covariance,
                                std::size_t embedding = default_embedding);

    FadingRealization draw(std::size_t antennas, std::uint64_t seed, std::size_t length = 0) const;

    std::size_t grid_size() const { return grid_; }

  private:
    std::size_t length_ = 0;
    std::size_t grid_ = 0;
    std::vector<std::pair<std::size_t, double>> bins_;
};

FadingRealization synthesize_realization(const ChannelCovariance& covariance,
                                         std::size_t antennas, std::uint64_t seed,
                                         std::size_t length = 0,
                                         std::size_t embedding = default_embedding);

} // namespace psdalign
