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

#include "psdalign/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "psdalign/quadrature.hpp"

namespace psdalign {
namespace {

std::vector<kernels::ModulatedTerm> system_terms(const UplinkScene& scene) {
    std::vector<kernels::ModulatedTerm> terms;
    for (const auto* group : {&scene.users, &scene.interferers}) {
        for (const auto& m : *group) {
            terms.push_back({m.power, m.pilot.entries(), &m.covariance.autocorrelation()});
        }
    }
    return terms;
}

// X R as a dense matrix (rows of R scaled by the pilot).
CMatrix modulated_covariance(const SceneMember& member) {
    CMatrix out = member.covariance.toeplitz();
    const auto pilot = member.pilot.entries();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        out.row(i) *= pilot[static_cast<std::size_t>(i)];
    }
    return out;
}

template <typename Matrix>
double trace_of_inverse(const Matrix& a) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SingularSystem("matrix is not positive definite");
    }
    const Matrix inverse_factor =
        llt.matrixL().solve(Matrix::Identity(a.rows(), a.cols()));
    return inverse_factor.squaredNorm();
}

} // namespace

std::size_t UplinkScene::length() const {
    if (!users.empty()) {
        return users.front().pilot.size();
    }
    if (!interferers.empty()) {
        return interferers.front().pilot.size();
    }
    return 0;
}

void UplinkScene::validate() const {
    if (users.empty()) {
        throw std::invalid_argument("uplink scene needs at least one user");
    }
    if (!(noise_variance >= 0.0)) {
        throw std::invalid_argument("noise variance must be nonnegative");
    }
    const auto p = length();
    for (const auto* group : {&users, &interferers}) {
        for (const auto& m : *group) {
            if (m.pilot.size() != p || m.covariance.size() != p) {
                throw std::invalid_argument(
                    fmt::format("scene member has length {}/{} but P = {}", m.pilot.size(),
                                m.covariance.size(), p));
            }
            if (!(m.power >= 0.0)) {
                throw std::invalid_argument("transmit powers must be nonnegative");
            }
        }
    }
}

MmseEstimator::MmseEstimator(UplinkScene scene, kernels::Execution execution)
    : scene_(std::move(scene)), execution_(execution) {
    scene_.validate();
    const auto p = scene_.length();
    {
        const auto terms = system_terms(scene_);
        CMatrix q = kernels::assemble_system_matrix(terms, scene_.noise_variance, p, execution_);
        const double largest = q.diagonal().real().maxCoeff();
        factor_.compute(q);
        if (factor_.info() != Eigen::Success) {
            throw SingularSystem("received covariance is singular; add noise or regularize");
        }
        if (scene_.noise_variance == 0.0) {
            const double smallest = factor_.matrixLLT().diagonal().real().cwiseAbs2().minCoeff();
            const double threshold = static_cast<double>(p) *
                                     std::numeric_limits<double>::epsilon() * largest;
            if (!(smallest > threshold)) {
                throw SingularSystem("noise-free received covariance is rank deficient; "
                                     "add noise or regularize");
            }
        }
    }
    operators_.reserve(scene_.users.size());
    for (const auto& u : scene_.users) {
        operators_.emplace_back(u.covariance);
    }
}

CMatrix MmseEstimator::solve(const CMatrix& received) const {
    if (static_cast<std::size_t>(received.rows()) != scene_.length()) {
        throw std::invalid_argument("received block has wrong number of slots");
    }
    return factor_.solve(received);
}

CMatrix MmseEstimator::estimate_from_solved(std::size_t user, const CMatrix& solved) const {
    const auto& u = scene_.users.at(user);
    CMatrix derotated = solved;
    const auto pilot = u.pilot.entries();
    for (Eigen::Index i = 0; i < derotated.rows(); ++i) {
        derotated.row(i) *= std::conj(pilot[static_cast<std::size_t>(i)]);
    }
    CMatrix out = kernels::apply_toeplitz(operators_[user], derotated, execution_);
    out *= std::sqrt(u.power);
    return out;
}

CMatrix MmseEstimator::estimate(std::size_t user, const CMatrix& received) const {
    return estimate_from_solved(user, solve(received));
}

ErrorCovariance MmseEstimator::error_covariance(std::size_t user) const {
    const auto& u = scene_.users.at(user);
    const CMatrix whitened = factor_.matrixL().solve(modulated_covariance(u));
    ErrorCovariance out;
    out.matrix = u.covariance.toeplitz() - u.power * (whitened.adjoint() * whitened);
    out.mse = out.matrix.trace().real() / static_cast<double>(scene_.length());
    return out;
}

CVector mmse_estimate(const CVector& received, const UplinkScene& scene, std::size_t user) {
    const MmseEstimator estimator(scene);
    return estimator.estimate(user, received);
}

ErrorCovariance error_covariance(const UplinkScene& scene, std::size_t user) {
    const MmseEstimator estimator(scene);
    return estimator.error_covariance(user);
}

CMatrix interference_free_covariance(const ChannelCovariance& covariance, double power, double noise) {
    const CMatrix r = covariance.toeplitz();
    const auto n = r.rows();
    const CMatrix a = noise * CMatrix::Identity(n, n) + power * r;
    return r - power * r * a.llt().solve(r);
}

double interference_free_mse(const ChannelCovariance& covariance, double power, double noise) {
    if (!(power >= 0.0) || !(noise >= 0.0)) {
        throw std::invalid_argument("power and noise must be nonnegative");
    }
    const auto& r = covariance.autocorrelation();
    if (power == 0.0) {
        return r(0).real();
    }
    if (noise == 0.0) {
        return 0.0;
    }
    // E0 = noise R A^{-1} with A = noise I + power R, so
    // trace(E0) = noise (P - noise trace(A^{-1})) / power.
    const auto p = static_cast<Eigen::Index>(covariance.size());
    double trace_inverse = 0.0;
    if (r.is_real()) {
        RMatrix a(p, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) {
                a(i, j) = power * r(static_cast<long>(i - j)).real() + (i == j ? noise : 0.0);
            }
        }
        trace_inverse = trace_of_inverse(a);
    } else {
        CMatrix a = power * covariance.toeplitz();
        a.diagonal().array() += noise;
        trace_inverse = trace_of_inverse(a);
    }
    const double pd = static_cast<double>(p);
    return noise * (pd - noise * trace_inverse) / (power * pd);
}

double asymptotic_mse(const DopplerSpectrum& user, std::span<const ShiftedSpectrum> interferers,
                      double power, double noise) {
    if (!(power >= 0.0) || !(noise >= 0.0)) {
        throw std::invalid_argument("power and noise must be nonnegative");
    }
    if (power == 0.0 || user.power() == 0.0) {
        return user.power();
    }

    auto disturbance = [&](double xi) {
        double level = noise;
        for (const auto& g : interferers) {
            level += g.power * g.spectrum.density(xi - g.shift);
        }
        return level;
    };

    const Band support = user.support();
    std::vector<double> points{support.lo, support.hi};
    auto add_breakpoint = [&](double x) {
        for (int turn = -2; turn <= 2; ++turn) {
            const double y = x + turn;
            if (y > support.lo && y < support.hi) {
                points.push_back(y);
            }
        }
    };
    for (const auto& g : interferers) {
        for (double b : g.spectrum.breakpoints()) {
            add_breakpoint(b + g.shift);
        }
    }
    if (user.kind() == SpectrumKind::sampled) {
        for (double b : user.breakpoints()) {
            add_breakpoint(b);
        }
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    if (user.kind() == SpectrumKind::clarke) {
        // xi = F sin(theta) turns S(xi) d(xi) into (power / pi) d(theta).
        const double f = user.max_doppler();
        const double total = user.power();
        std::vector<double> angles;
        angles.reserve(points.size());
        for (double x : points) {
            angles.push_back(std::asin(std::clamp(x / f, -1.0, 1.0)));
        }
        auto integrand = [&](double theta) {
            const double level = disturbance(f * std::sin(theta));
            if (std::isinf(level)) {
                return total / pi;
            }
            const double scaled = level * pi * f * std::cos(theta);
            return (total / pi) * scaled / (power * total + scaled);
        };
        return quadrature::integrate_piecewise(integrand, angles);
    }

    auto integrand = [&](double xi) {
        const double s = user.density(xi);
        if (s == 0.0) {
            return 0.0;
        }
        const double level = disturbance(xi);
        if (std::isinf(level)) {
            return s;
        }
        return s * level / (power * s + level);
    };
    return quadrature::integrate_piecewise(integrand, points);
}

double clarke_closed_form(double alpha) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument(fmt::format("alpha must be positive, got {}", alpha));
    }
    // written as atan(t)/t and atanh(s)/s so the removable singularity at alpha = 1 stays accurate
    const double scale = 4.0 / (pi * (1.0 + alpha));
    if (alpha < 1.0) {
        const double t = std::sqrt((1.0 - alpha) / (1.0 + alpha));
        return 1.0 - scale * (t > 0.0 ? std::atan(t) / t : 1.0);
    }
    if (alpha > 1.0) {
        const double s = std::sqrt((alpha - 1.0) / (alpha + 1.0));
        return 1.0 - scale * std::atanh(s) / s;
    }
    return 1.0 - 2.0 / pi;
}

double small_alpha_mse(double max_doppler, double snr) {
    if (!(max_doppler > 0.0) || !(snr > 0.0)) {
        throw std::invalid_argument("Doppler and SNR must be positive");
    }
    return 2.0 * max_doppler / snr;
}

std::optional<double> processing_gain_db(double max_doppler, double snr) {
    if (!(max_doppler > 0.0) || !(snr > 0.0)) {
        throw std::invalid_argument("Doppler and SNR must be positive");
    }
    const double argument = 1.0 / (2.0 * max_doppler) - 1.0 / snr;
    if (!(argument > 0.0)) {
        return std::nullopt;
    }
    return 10.0 * std::log10(argument);
}

std::optional<double> empirical_processing_gain_db(double nmse, double snr) {
    if (!(nmse > 0.0) || !(nmse < 1.0) || !(snr > 0.0)) {
        return std::nullopt;
    }
    return 10.0 * std::log10((1.0 - nmse) / nmse / snr);
}

TaylorCheck taylor_check(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("Taylor check needs 0 < alpha < 1");
    }
    const double series = 2.0 * alpha / pi - 0.5 * alpha * alpha +
                          4.0 * alpha * alpha * alpha / (3.0 * pi);
    return {clarke_closed_form(alpha), series};
}

} // namespace psdalign
