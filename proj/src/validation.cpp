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

#include "psdalign/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "psdalign/config.hpp"
#include "psdalign/estimation.hpp"
#include "psdalign/fading.hpp"
#include "psdalign/output.hpp"
#include "psdalign/pilots.hpp"
#include "psdalign/stats.hpp"

namespace psdalign::validation {
namespace {

constexpr double reference_doppler = 0.002;

std::string sci(double v) { return fmt::format("{:.6g}", v); }

void below(CheckResult& c, std::string label, double measured, double limit) {
    c.measurements.push_back({std::move(label), measured, "< " + sci(limit), measured < limit});
}

void at_most(CheckResult& c, std::string label, double measured, double limit) {
    c.measurements.push_back({std::move(label), measured, "<= " + sci(limit), measured <= limit});
}

void above(CheckResult& c, std::string label, double measured, double limit) {
    c.measurements.push_back({std::move(label), measured, "> " + sci(limit), measured > limit});
}

void flag(CheckResult& c, std::string label, bool value, std::string target = "true") {
    c.measurements.push_back({std::move(label), value ? 1.0 : 0.0, std::move(target), value});
}

double relative(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) {
            return false;
        }
    }
    return true;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + sci(v[i]);
    }
    return out;
}

void closed_form_consistency(CheckResult& c, double scale) {
    const auto spectrum = DopplerSpectrum::clarke(reference_doppler);
    for (double alpha : {0.05, 0.2, 1.0, 5.0}) {
        const double noise = alpha / (pi * reference_doppler);
        const double integral = asymptotic_mse(spectrum, {}, 1.0, noise);
        below(c, fmt::format("alpha={} |integral - closed form|", alpha),
              std::abs(integral - clarke_closed_form(alpha)), 1e-6 * scale);
    }
}

void boundary_value(CheckResult& c, double scale) {
    const double exact = 1.0 - 2.0 / pi;
    at_most(c, "|closed form(1) - (1 - 2/pi)|", std::abs(clarke_closed_form(1.0) - exact), 1e-12 * scale);
    const double lo = clarke_closed_form(1.0 - 1e-6);
    const double hi = clarke_closed_form(1.0 + 1e-6);
    below(c, "|closed form(1-1e-6) - closed form(1+1e-6)|", std::abs(lo - hi), 1e-4 * scale);
    below(c, "|closed form(1-1e-6) - (1 - 2/pi)|", std::abs(lo - exact), 1e-4 * scale);
    below(c, "|closed form(1+1e-6) - (1 - 2/pi)|", std::abs(hi - exact), 1e-4 * scale);
}

void taylor_residual(CheckResult& c, double scale) {
    for (auto [alpha, limit] : {std::pair{0.1, 0.2}, std::pair{0.01, 0.02}}) {
        const auto t = taylor_check(alpha);
        at_most(c, fmt::format("alpha={} |exact - series| / alpha^3", alpha),
                std::abs(t.exact - t.series) / (alpha * alpha * alpha), limit * scale);
    }
}

void small_alpha(CheckResult& c, double scale) {
    const double mse = small_alpha_mse(reference_doppler, 1.0);
    below(c, "|small-alpha MSE - 0.004|", std::abs(mse - 0.004), 1e-12 * scale);
    below(c, "closed form(pi F) relative to 0.004", relative(clarke_closed_form(pi * reference_doppler), mse),
          0.01 * scale);
    const auto gain = processing_gain_db(reference_doppler, 1.0);
    below(c, "|gain - 10 log10(249)| dB", gain ? std::abs(*gain - 10.0 * std::log10(249.0)) : INFINITY,
          1e-6 * scale);
}

void finite_convergence(CheckResult& c, const ExperimentConfig& config, double scale) {
    const double noise = ExperimentConfig::noise_variance_for(0.0);
    const auto spectrum = DopplerSpectrum::clarke(reference_doppler);
    const double limit = asymptotic_mse(spectrum, {}, 1.0, noise);
    std::vector<double> values;
    for (auto p : config.validation.lengths) {
        values.push_back(interference_free_mse(build_covariance(spectrum, p), 1.0, noise));
        spdlog::debug("finite-P MSE at P = {}: {}", p, values.back());
    }
    flag(c, fmt::format("trace/P decreasing over P ({})", join(values)), strictly_decreasing(values));
    c.measurements.push_back({"integral value", limit, "reference", true});
    below(c, fmt::format("relative gap at P = {}", config.validation.lengths.back()),
          relative(values.back(), limit), 0.05 * scale);
}

void orthogonality_decay(CheckResult& c, const ExperimentConfig& config, double scale) {
    std::vector<double> residuals;
    const auto spectrum = DopplerSpectrum::clarke(reference_doppler);
    for (auto p : config.validation.lengths) {
        const auto cov = build_covariance(spectrum, p);
        const auto cross = cross_matrix(fft_pilot(0, p), fft_pilot(p / 2, p));
        residuals.push_back(orthogonality_residual(cov, cov, cross));
        spdlog::debug("orthogonality residual at P = {}: {}", p, residuals.back());
    }
    const auto p = config.validation.lengths.back();
    flag(c, fmt::format("residual decreasing over P ({})", join(residuals)), strictly_decreasing(residuals));
    below(c, fmt::format("residual at P = {}, shift P/2", p), residuals.back(), 1e-3 * scale);
    const auto cov = build_covariance(spectrum, p);
    flag(c, "shift_orthogonal at shift P/2", shift_orthogonal(cov.psd_samples(), cov.psd_samples(),
                                                              static_cast<long>(p / 2)));
    flag(c, "shift_orthogonal at shift 0", shift_orthogonal(cov.psd_samples(), cov.psd_samples(), 0),
         "false");
    c.measurements.back().passed = !c.measurements.back().passed;
    const auto same = cross_matrix(fft_pilot(0, p), fft_pilot(0, p));
    above(c, "residual at shift 0", orthogonality_residual(cov, cov, same), 0.1);
}

RunOptions options(kernels::Execution execution) {
    RunOptions o;
    o.execution = execution;
    return o;
}

ExperimentConfig monte_carlo_config(const ExperimentConfig& config) {
    ExperimentConfig mc = config;
    mc.length = config.validation.length;
    mc.antennas = config.validation.antennas;
    mc.trials = config.validation.trials;
    return mc;
}

void interference_free_equivalence(CheckResult& c, const ExperimentConfig& config,
                                   kernels::Execution execution, double scale) {
    const auto mc = monte_carlo_config(config);
    const auto run = run_uplink(mc, PilotScheme::psd_align, options(execution));
    const double noise = mc.noise_variance();
    for (const auto& u : run.users) {
        const double power = mc.users[u.user].power;
        const double eq4 = interference_free_mse(
            build_covariance(DopplerSpectrum::clarke(u.max_doppler), mc.length), power, noise);
        below(c, fmt::format("user {} nMSE {} vs interference-free {}", u.user, sci(u.nmse), sci(eq4)),
              relative(u.nmse, eq4), 0.10 * scale);
        below(c, fmt::format("user {} nMSE {} vs small-alpha {}", u.user, sci(u.nmse), sci(u.nmse_analytic)),
              relative(u.nmse, u.nmse_analytic), 0.10 * scale);
    }
}

void baseline_ordering(CheckResult& c, const ExperimentConfig& config, kernels::Execution execution) {
    const auto mc = monte_carlo_config(config);
    const auto aligned = run_downlink(mc, PilotScheme::psd_align, options(execution));
    const auto hadamard = run_downlink(mc, PilotScheme::hadamard, options(execution));
    const double nmse_gap = (hadamard.mean_nmse - hadamard.mean_nmse_half_width) -
                            (aligned.mean_nmse + aligned.mean_nmse_half_width);
    above(c,
          fmt::format("nMSE CI separation (hadamard {} +- {}, psdalign {} +- {})", sci(hadamard.mean_nmse),
                      sci(hadamard.mean_nmse_half_width), sci(aligned.mean_nmse),
                      sci(aligned.mean_nmse_half_width)),
          nmse_gap, 0.0);
    const double se_gap =
        (aligned.sum_se - aligned.sum_se_half_width) - (hadamard.sum_se + hadamard.sum_se_half_width);
    above(c,
          fmt::format("sum SE CI separation (psdalign {} +- {}, hadamard {} +- {})", sci(aligned.sum_se),
                      sci(aligned.sum_se_half_width), sci(hadamard.sum_se), sci(hadamard.sum_se_half_width)),
          se_gap, 0.0);
}

void capacity_rule(CheckResult& c) {
    constexpr std::size_t length = 4096;
    const auto capacity = alignment_capacity(reference_doppler, length);
    c.measurements.push_back({"users placed at F = 0.002, P = 4096", static_cast<double>(capacity), ">= 249",
                              capacity >= 249});
    const std::vector<double> dopplers(capacity, reference_doppler);
    const auto plan = plan_alignment(dopplers, {}, length);
    flag(c, "plan passes the alignment checker", check_plan(plan).valid);
    const auto cov = build_covariance(DopplerSpectrum::clarke(reference_doppler), length);
    bool all = true;
    for (std::size_t a = 0; a < plan.shifts.size() && all; ++a) {
        for (std::size_t b = a + 1; b < plan.shifts.size(); ++b) {
            const long shift = static_cast<long>(plan.shifts[b]) - static_cast<long>(plan.shifts[a]);
            if (!shift_orthogonal(cov.psd_samples(), cov.psd_samples(), shift)) {
                all = false;
                break;
            }
        }
    }
    flag(c, "every pair shift-orthogonal", all);
}

// Mean and standard error of a complex sample.
std::pair<cd, double> mean_and_error(const std::vector<cd>& samples) {
    cd mean{};
    for (const auto& z : samples) {
        mean += z;
    }
    const double n = static_cast<double>(samples.size());
    mean /= n;
    double spread = 0.0;
    for (const auto& z : samples) {
        spread += std::norm(z - mean);
    }
    return {mean, std::sqrt(spread / (n - 1.0) / n)};
}

void orthogonality_principle(CheckResult& c, double scale) {
    constexpr std::size_t length = 16;
    constexpr std::size_t draws = 500;
    constexpr std::uint64_t seed = 7001;
    UplinkScene scene;
    scene.noise_variance = 1.0;
    const auto user_cov = build_covariance(DopplerSpectrum::clarke(0.05), length);
    scene.users.push_back({1.0, fft_pilot(0, length), user_cov});
    scene.users.push_back({1.0, fft_pilot(length / 2, length), user_cov});
    scene.interferers.push_back(
        {1.0, fft_pilot(0, length), build_covariance(DopplerSpectrum::flat_band({-0.375, 0.375}), length)});

    std::vector<CMatrix> channels;
    CMatrix y = CMatrix::Zero(length, draws);
    std::uint64_t stream = 0;
    for (const auto* group : {&scene.users, &scene.interferers}) {
        for (const auto& m : *group) {
            CMatrix h = synthesize_realization(m.covariance, draws, stats::derive_seed(seed, {stream++})).samples;
            for (Eigen::Index n = 0; n < h.rows(); ++n) {
                y.row(n) += std::sqrt(m.power) * m.pilot.entries()[static_cast<std::size_t>(n)] * h.row(n);
            }
            channels.push_back(std::move(h));
        }
    }
    std::mt19937_64 rng(stats::derive_seed(seed, {stream}));
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * scene.noise_variance));
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double re = normal(rng);
            y(i, j) += cd(re, normal(rng));
        }
    }
    const MmseEstimator estimator(scene, kernels::Execution::serial);
    const CMatrix error = estimator.estimate(0, y) - channels[0];
    double worst = 0.0;
    std::vector<cd> samples(draws);
    for (Eigen::Index i = 0; i < error.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            for (std::size_t d = 0; d < draws; ++d) {
                const auto col = static_cast<Eigen::Index>(d);
                samples[d] = error(i, col) * std::conj(y(j, col));
            }
            const auto [mean, se] = mean_and_error(samples);
            worst = std::max(worst, std::abs(mean) / se);
        }
    }
    below(c, "max |E[e y^H]| in standard errors (500 draws)", worst, 4.0 * scale);
}

void synthesis_autocorrelation(CheckResult& c, double scale) {
    constexpr std::size_t length = 1024;
    constexpr std::size_t antennas = 128;
    constexpr std::size_t seeds = 100;
    constexpr long max_lag = 10;
    const auto cov = build_covariance(DopplerSpectrum::clarke(reference_doppler), length);
    const ProcessSynthesizer synthesizer(cov);
    std::vector<stats::Accumulator> lag_estimates(max_lag + 1);
    for (std::size_t s = 0; s < seeds; ++s) {
        const CMatrix h = synthesizer.draw(antennas, stats::derive_seed(9001, {s})).samples;
        for (long v = 0; v <= max_lag; ++v) {
            const auto rows = static_cast<Eigen::Index>(length) - v;
            const cd sum = (h.bottomRows(rows).array() * h.topRows(rows).array().conjugate()).sum();
            lag_estimates[static_cast<std::size_t>(v)].add(sum.real() / static_cast<double>(rows * antennas));
        }
    }
    double worst = 0.0;
    for (long v = 0; v <= max_lag; ++v) {
        const auto s = lag_estimates[static_cast<std::size_t>(v)].summary();
        const double se = s.std_dev / std::sqrt(static_cast<double>(s.count));
        worst = std::max(worst, std::abs(s.mean - clarke_autocorrelation(reference_doppler, v)) / se);
    }
    below(c, "max |r_hat(v) - J0(2 pi F v)| in standard errors, lags 0..10", worst, 3.0 * scale);
}

void determinism(CheckResult& c) {
    ExperimentConfig small = default_config();
    small.length = 512;
    small.antennas = 4;
    small.trials = 6;
    std::vector<RunResult> first;
    for (auto scheme : small.schemes) {
        first.push_back(run_downlink(small, scheme));
    }
    const auto text = output::manifest(small, first);
    const auto replay_config = parse_config(text);
    std::vector<RunResult> replay;
    std::vector<RunResult> serial;
    for (auto scheme : replay_config.schemes) {
        replay.push_back(run_downlink(replay_config, scheme));
        serial.push_back(run_downlink(replay_config, scheme, options(kernels::Execution::serial)));
    }
    const auto a = output::mse_csv(first) + output::dlse_csv(first);
    flag(c, "manifest replay gives byte-identical CSV",
         a == output::mse_csv(replay) + output::dlse_csv(replay) &&
             text == output::manifest(replay_config, replay));
    flag(c, "serial and parallel runs give byte-identical CSV",
         a == output::mse_csv(serial) + output::dlse_csv(serial));
}

} // namespace

bool CheckResult::passed() const {
    return error.empty() && !measurements.empty() &&
           std::all_of(measurements.begin(), measurements.end(), [](const auto& m) { return m.passed; });
}

bool Report::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
}

std::vector<int> Report::failed() const {
    std::vector<int> out;
    for (const auto& c : checks) {
        if (!c.passed()) {
            out.push_back(c.id);
        }
    }
    return out;
}

std::string Report::text() const {
    std::string out = "psdalign validation report\n";
    for (const auto& c : checks) {
        out += fmt::format("\n[{}] {} {}\n", c.passed() ? "PASS" : "FAIL", c.id, c.name);
        for (const auto& m : c.measurements) {
            out += fmt::format("    {:<4} {}: measured {}, target {}\n", m.passed ? "ok" : "FAIL", m.label,
                               sci(m.measured), m.target);
        }
        if (!c.error.empty()) {
            out += fmt::format("    error: {}\n", c.error);
        }
    }
    const auto bad = failed();
    out += bad.empty() ? "\nall checks passed\n" : fmt::format("\n{} of {} checks failed\n", bad.size(), checks.size());
    return out;
}

std::string check_name(int id) {
    switch (id) {
    case 1:
        return "closed-form consistency";
    case 2:
        return "boundary value at alpha = 1";
    case 3:
        return "Taylor residual";
    case 4:
        return "small-alpha formula and processing gain";
    case 5:
        return "finite-P convergence";
    case 6:
        return "orthogonality decay";
    case 7:
        return "interference-free equivalence";
    case 8:
        return "baseline ordering";
    case 9:
        return "capacity rule";
    case 10:
        return "statistical hygiene";
    default:
        throw std::out_of_range(fmt::format("no check {}", id));
    }
}

CheckResult run_check(int id, const ExperimentConfig& config, kernels::Execution execution) {
    CheckResult c;
    c.id = id;
    c.name = check_name(id);
    const double scale = config.validation.tolerance_scale;
    try {
        switch (id) {
        case 1:
            closed_form_consistency(c, scale);
            break;
        case 2:
            boundary_value(c, scale);
            break;
        case 3:
            taylor_residual(c, scale);
            break;
        case 4:
            small_alpha(c, scale);
            break;
        case 5:
            finite_convergence(c, config, scale);
            break;
        case 6:
            orthogonality_decay(c, config, scale);
            break;
        case 7:
            interference_free_equivalence(c, config, execution, scale);
            break;
        case 8:
            baseline_ordering(c, config, execution);
            break;
        case 9:
            capacity_rule(c);
            break;
        case 10:
            orthogonality_principle(c, scale);
            synthesis_autocorrelation(c, scale);
            determinism(c);
            break;
        }
    } catch (const std::exception& e) {
        c.error = e.what();
    }
    return c;
}

Report run_validation(const ExperimentConfig& config, kernels::Execution execution) {
    Report report;
    for (int id : config.validation.checks) {
        spdlog::info("check {}: {}", id, check_name(id));
        report.checks.push_back(run_check(id, config, execution));
    }
    return report;
}

std::string summary_line(const CheckResult& check) {
    std::size_t failures = 0;
    std::string first;
    for (const auto& m : check.measurements) {
        if (!m.passed && failures++ == 0) {
            first = fmt::format("{} = {} (target {})", m.label, sci(m.measured), m.target);
        }
    }
    std::string detail;
    if (failures > 0) {
        detail = fmt::format("; {} of {} measurements off target, first: {}", failures,
                             check.measurements.size(), first);
    }
    if (!check.error.empty()) {
        detail += "; error: " + check.error;
    }
    return fmt::format("{} criterion {}: {}{}", check.passed() ? "PASS" : "FAIL", check.id, check.name, detail);
}

} // namespace psdalign::validation
