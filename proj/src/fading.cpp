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

#include "psdalign/fading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "psdalign/fft.hpp"

namespace psdalign {
namespace {

void require_doppler(double max_doppler) {
    if (!(max_doppler > 0.0) || max_doppler > 0.5) {
        throw std::invalid_argument(
            fmt::format("normalized Doppler must satisfy 0 < F <= 1/2, got {}", max_doppler));
    }
}

void require_band(Band band) {
    if (!(band.lo >= -0.5) || !(band.hi <= 0.5) || !(band.lo < band.hi)) {
        throw std::invalid_argument(
            fmt::format("band [{}, {}] must satisfy -1/2 <= lo < hi <= 1/2", band.lo, band.hi));
    }
}

void require_frequency(double xi) {
    if (!(xi > -0.5) || xi > 0.5) {
        throw std::invalid_argument(fmt::format("frequency {} outside (-1/2, 1/2]", xi));
    }
}

std::size_t positive_mod(long value, std::size_t n) {
    const auto m = static_cast<long>(n);
    return static_cast<std::size_t>(((value % m) + m) % m);
}

} // namespace

double wrap_frequency(double xi) {
    double w = xi - std::ceil(xi - 0.5);
    if (w <= -0.5) {
        w += 1.0;
    }
    return w;
}

double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

double clarke_autocorrelation(double max_doppler, long lag) {
    require_doppler(max_doppler);
    return bessel_j0(2.0 * pi * max_doppler * static_cast<double>(lag));
}

double clarke_psd(double max_doppler, double xi) {
    require_doppler(max_doppler);
    require_frequency(xi);
    const double a = std::abs(xi);
    if (a > max_doppler) {
        return 0.0;
    }
    if (a == max_doppler) {
        return std::numeric_limits<double>::infinity();
    }
    return 1.0 / (pi * std::sqrt(max_doppler * max_doppler - xi * xi));
}

double flat_psd(Band band, double power, double xi) {
    require_band(band);
    require_frequency(xi);
    if (power < 0.0) {
        throw std::invalid_argument("flat PSD power must be nonnegative");
    }
    return (xi >= band.lo && xi <= band.hi) ? power / band.width() : 0.0;
}

// ---------------------------------------------------------------------------
// DopplerSpectrum

DopplerSpectrum DopplerSpectrum::clarke(double max_doppler, double power) {
    require_doppler(max_doppler);
    if (power < 0.0) {
        throw std::invalid_argument("spectrum power must be nonnegative");
    }
    DopplerSpectrum s;
    s.kind_ = SpectrumKind::clarke;
    s.power_ = power;
    s.max_doppler_ = max_doppler;
    s.band_ = {-max_doppler, max_doppler};
    return s;
}

DopplerSpectrum DopplerSpectrum::flat_band(Band band, double power) {
    require_band(band);
    if (power < 0.0) {
        throw std::invalid_argument("spectrum power must be nonnegative");
    }
    DopplerSpectrum s;
    s.kind_ = SpectrumKind::flat_band;
    s.power_ = power;
    s.band_ = band;
    s.max_doppler_ = std::max(std::abs(band.lo), std::abs(band.hi));
    return s;
}

DopplerSpectrum DopplerSpectrum::sampled(std::vector<double> grid) {
    if (grid.empty()) {
        throw std::invalid_argument("sampled spectrum needs at least one grid value");
    }
    for (double v : grid) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("sampled spectrum values must be finite and nonnegative");
        }
    }
    DopplerSpectrum s;
    s.kind_ = SpectrumKind::sampled;
    s.grid_ = std::move(grid);
    s.prefix_.resize(s.grid_.size() + 1, 0.0);
    std::partial_sum(s.grid_.begin(), s.grid_.end(), s.prefix_.begin() + 1);
    const double n = static_cast<double>(s.grid_.size());
    s.power_ = s.prefix_.back() / n;
    s.band_ = {-0.5, 0.5};
    s.max_doppler_ = 0.5;
    return s;
}

double DopplerSpectrum::density(double xi) const {
    const double w = wrap_frequency(xi);
    switch (kind_) {
    case SpectrumKind::clarke: {
        const double a = std::abs(w);
        if (a > max_doppler_) {
            return 0.0;
        }
        if (a == max_doppler_) {
            return std::numeric_limits<double>::infinity();
        }
        return power_ / (pi * std::sqrt(max_doppler_ * max_doppler_ - w * w));
    }
    case SpectrumKind::flat_band:
        return (w >= band_.lo && w <= band_.hi) ? power_ / band_.width() : 0.0;
    case SpectrumKind::sampled: {
        const auto n = grid_.size();
        const auto cell = positive_mod(std::lround(w * static_cast<double>(n)), n);
        return grid_[cell];
    }
    }
    return 0.0;
}

// Periodic primitive of the density; differences give band masses.
double DopplerSpectrum::cumulative(double x) const {
    switch (kind_) {
    case SpectrumKind::clarke: {
        const double turns = std::floor(x + 0.5);
        const double y = x - turns;
        const double u = std::clamp(y / max_doppler_, -1.0, 1.0);
        return turns * power_ + power_ * (std::asin(u) / pi + 0.5);
    }
    case SpectrumKind::flat_band: {
        const double turns = std::floor(x + 0.5);
        const double y = x - turns;
        const double u = std::clamp((y - band_.lo) / band_.width(), 0.0, 1.0);
        return turns * power_ + power_ * u;
    }
    case SpectrumKind::sampled: {
        const auto n = grid_.size();
        const double nd = static_cast<double>(n);
        const double shifted = x + 0.5 / nd;
        const double turns = std::floor(shifted);
        const double t = (shifted - turns) * nd;
        auto cell = static_cast<std::size_t>(t);
        cell = std::min(cell, n - 1);
        const double partial = t - static_cast<double>(cell);
        return turns * power_ + (prefix_[cell] + partial * grid_[cell]) / nd;
    }
    }
    return 0.0;
}

double DopplerSpectrum::mass(double a, double b) const {
    if (b < a) {
        throw std::invalid_argument("mass interval must satisfy a <= b");
    }
    return std::max(0.0, cumulative(b) - cumulative(a));
}

cd DopplerSpectrum::autocorrelation(long lag) const {
    const double v = static_cast<double>(lag);
    switch (kind_) {
    case SpectrumKind::clarke:
        return power_ * bessel_j0(2.0 * pi * max_doppler_ * v);
    case SpectrumKind::flat_band: {
        if (lag == 0) {
            return power_;
        }
        const double width = band_.width();
        const double arg = pi * width * v;
        const double sinc = std::sin(arg) / arg;
        return power_ * sinc * std::polar(1.0, pi * (band_.lo + band_.hi) * v);
    }
    case SpectrumKind::sampled: {
        const auto n = grid_.size();
        cd acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto phase = positive_mod(static_cast<long>(i) * lag, n);
            acc += grid_[i] * std::polar(1.0, 2.0 * pi * static_cast<double>(phase) /
                                                  static_cast<double>(n));
        }
        return acc / static_cast<double>(n);
    }
    }
    return 0.0;
}

std::vector<double> DopplerSpectrum::breakpoints() const {
    std::vector<double> points;
    switch (kind_) {
    case SpectrumKind::clarke:
    case SpectrumKind::flat_band:
        points = {wrap_frequency(band_.lo), wrap_frequency(band_.hi)};
        break;
    case SpectrumKind::sampled: {
        const double n = static_cast<double>(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            points.push_back(wrap_frequency((static_cast<double>(i) + 0.5) / n));
        }
        break;
    }
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return points;
}

Band DopplerSpectrum::support() const { return band_; }

// ---------------------------------------------------------------------------
// AutocorrelationSequence

AutocorrelationSequence::AutocorrelationSequence(std::vector<cd> values)
    : values_(std::move(values)) {
    if (values_.empty()) {
        throw std::invalid_argument("autocorrelation sequence must not be empty");
    }
}

cd AutocorrelationSequence::operator()(long lag) const {
    const auto index = static_cast<std::size_t>(std::labs(lag));
    if (index >= values_.size()) {
        throw std::out_of_range(fmt::format("lag {} beyond sequence length {}", lag, values_.size()));
    }
    return lag >= 0 ? values_[index] : std::conj(values_[index]);
}

bool AutocorrelationSequence::is_real() const {
    return std::all_of(values_.begin(), values_.end(), [](cd v) { return v.imag() == 0.0; });
}

// ---------------------------------------------------------------------------
// ChannelCovariance

std::vector<cd> ChannelCovariance::circulant_column() const {
    const auto n = size();
    const auto r = autocorrelation_.values();
    std::vector<cd> column(n);
    column[0] = r[0];
    for (std::size_t v = 1; v < n; ++v) {
        column[v] = r[v] + std::conj(r[n - v]);
    }
    return column;
}

CMatrix ChannelCovariance::toeplitz() const {
    const auto n = static_cast<Eigen::Index>(size());
    CMatrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, j) = autocorrelation_(static_cast<long>(i - j));
        }
    }
    return out;
}

CMatrix ChannelCovariance::circulant() const {
    const auto column = circulant_column();
    const auto n = static_cast<Eigen::Index>(size());
    CMatrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, j) = column[static_cast<std::size_t>((i - j + n) % n)];
        }
    }
    return out;
}

void ChannelCovariance::compute_eigenvalues() {
    auto column = circulant_column();
    fft::forward(column);
    eigenvalues_.resize(column.size());
    clamped_mass_ = 0.0;
    for (std::size_t p = 0; p < column.size(); ++p) {
        const double lambda = column[p].real();
        if (lambda < 0.0) {
            clamped_mass_ -= lambda;
        }
        eigenvalues_[p] = std::max(lambda, 0.0);
    }
    const double n = static_cast<double>(size());
    if (clamped_mass_ > 1e-3 * n) {
        static std::mutex mutex;
        static std::set<std::size_t> reported;
        bool first = false;
        {
            const std::lock_guard lock(mutex);
            first = reported.insert(size()).second;
        }
        spdlog::log(first ? spdlog::level::warn : spdlog::level::debug,
                    "circulant eigenvalue clamp added mass {:.4g} (= {:.3g} P) at P = {}", clamped_mass_,
                    clamped_mass_ / n, size());
    }
}

ChannelCovariance build_covariance(const DopplerSpectrum& spectrum, std::size_t length) {
    if (length < 2) {
        throw std::invalid_argument("covariance length P must be at least 2");
    }
    std::vector<cd> r(length);
    if (spectrum.kind() == SpectrumKind::sampled) {
        const auto grid = spectrum.grid();
        const auto n = grid.size();
        std::vector<cd> work(grid.begin(), grid.end());
        fft::backward(work);
        for (std::size_t v = 0; v < length; ++v) {
            r[v] = work[v % n] / static_cast<double>(n);
        }
    } else {
        for (std::size_t v = 0; v < length; ++v) {
            r[v] = spectrum.autocorrelation(static_cast<long>(v));
        }
    }

    ChannelCovariance cov;
    cov.autocorrelation_ = AutocorrelationSequence(std::move(r));
    cov.spectrum_ = spectrum;
    cov.compute_eigenvalues();

    const double n = static_cast<double>(length);
    cov.psd_samples_.resize(length);
    for (std::size_t p = 0; p < length; ++p) {
        const double centre = static_cast<double>(p) / n;
        cov.psd_samples_[p] = n * spectrum.mass(centre - 0.5 / n, centre + 0.5 / n);
    }
    return cov;
}

ChannelCovariance covariance_from_autocorrelation(std::vector<cd> autocorrelation) {
    if (autocorrelation.size() < 2) {
        throw std::invalid_argument("covariance length P must be at least 2");
    }
    ChannelCovariance cov;
    cov.autocorrelation_ = AutocorrelationSequence(std::move(autocorrelation));
    cov.compute_eigenvalues();
    cov.psd_samples_ = cov.eigenvalues_;
    return cov;
}

// ---------------------------------------------------------------------------
// Synthesis

ProcessSynthesizer::ProcessSynthesizer(const ChannelCovariance& covariance, std::size_t embedding)
    : length_(covariance.size()) {
    const auto& spectrum = covariance.spectrum();
    if (spectrum && embedding > 0) {
        grid_ = embedding * length_;
        const double n = static_cast<double>(grid_);
        for (std::size_t p = 0; p < grid_; ++p) {
            const double centre = static_cast<double>(p) / n;
            const double m = spectrum->mass(centre - 0.5 / n, centre + 0.5 / n);
            if (m > 0.0) {
                bins_.emplace_back(p, std::sqrt(m));
            }
        }
    } else {
        grid_ = length_;
        const auto lambda = covariance.eigenvalues();
        const double n = static_cast<double>(grid_);
        for (std::size_t p = 0; p < grid_; ++p) {
            if (lambda[p] > 0.0) {
                bins_.emplace_back(p, std::sqrt(lambda[p] / n));
            }
        }
    }
}

FadingRealization ProcessSynthesizer::draw(std::size_t antennas, std::uint64_t seed,
                                           std::size_t length) const {
    if (length == 0) {
        length = length_;
    }
    if (length > grid_) {
        throw std::invalid_argument(fmt::format(
            "cannot synthesize {} samples from a {}-point periodic grid", length, grid_));
    }
    FadingRealization out;
    out.seed = seed;
    out.samples = CMatrix::Zero(static_cast<Eigen::Index>(length),
                                static_cast<Eigen::Index>(antennas));
    if (bins_.empty()) {
        return out;
    }

    std::mt19937_64 engine(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::vector<cd> work(grid_);
    for (std::size_t m = 0; m < antennas; ++m) {
        std::fill(work.begin(), work.end(), cd{});
        for (const auto& [bin, amplitude] : bins_) {
            const double re = gauss(engine);
            const double im = gauss(engine);
            work[bin] = amplitude * cd(re, im);
        }
        fft::backward(work);
        for (std::size_t n = 0; n < length; ++n) {
            out.samples(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = work[n];
        }
    }
    return out;
}

FadingRealization synthesize_realization(const ChannelCovariance& covariance,
                                         std::size_t antennas, std::uint64_t seed,
                                         std::size_t length, std::size_t embedding) {
    return ProcessSynthesizer(covariance, embedding).draw(antennas, seed, length);
}

} // namespace psdalign
