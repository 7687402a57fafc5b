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

#include "psdalign/simkit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "psdalign/estimation.hpp"
#include "psdalign/fading.hpp"
#include "psdalign/stats.hpp"

namespace psdalign {
namespace {

std::string describe(const std::string& field, const std::string& message, std::optional<int> line) {
    if (line) {
        return fmt::format("line {}: {}: {}", *line, field, message);
    }
    return fmt::format("{}: {}", field, message);
}

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) {
        throw ConfigError(field, message);
    }
}

// Random-number streams below one trial seed.
enum Stream : std::uint64_t { user_channel = 0, contamination = 1, noise = 2, random_beam = 3 };

void add_gaussian(CMatrix& target, double variance, std::uint64_t seed) {
    if (variance == 0.0) {
        return;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * variance));
    for (Eigen::Index j = 0; j < target.cols(); ++j) {
        for (Eigen::Index i = 0; i < target.rows(); ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            target(i, j) += cd(re, im);
        }
    }
}

CVector gaussian_vector(Eigen::Index size, std::uint64_t seed) {
    CMatrix v = CMatrix::Zero(size, 1);
    add_gaussian(v, 1.0, seed);
    return v.col(0);
}

struct TrialOutcome {
    std::vector<double> nmse;
    std::vector<double> se;
    std::vector<double> sinr;
    std::vector<char> skipped;
    double received_power = 0.0;
};

struct Setup {
    UplinkScene scene;
    std::vector<double> max_dopplers;
    std::vector<std::size_t> shifts;
    double contamination_power = 0.0;
};

Setup build_setup(const ExperimentConfig& config, PilotScheme scheme, std::size_t length,
                  double noise) {
    Setup setup;
    const auto k = config.users.size();
    setup.scene.noise_variance = noise;
    std::vector<PilotSequence> pilots;
    if (scheme == PilotScheme::psd_align) {
        setup.shifts = resolve_shifts(config, length);
        for (auto tau : setup.shifts) {
            pilots.push_back(fft_pilot(tau, length));
        }
    } else {
        const auto rows = hadamard_pilots(std::bit_ceil(k));
        if (rows.size() > length) {
            throw std::invalid_argument(
                fmt::format("Hadamard pilots of length {} exceed P = {}", rows.size(), length));
        }
        for (std::size_t u = 0; u < k; ++u) {
            pilots.push_back(repeat_pilot(rows[u], length));
        }
        setup.shifts.assign(k, 0);
    }
    for (std::size_t u = 0; u < k; ++u) {
        const double f = config.normalized_doppler(u);
        setup.max_dopplers.push_back(f);
        setup.scene.users.push_back(
            {config.users[u].power, pilots[u], build_covariance(DopplerSpectrum::clarke(f), length)});
    }
    if (config.contamination.enabled) {
        double mean_power = 0.0;
        for (const auto& u : config.users) {
            mean_power += u.power / static_cast<double>(k);
        }
        setup.contamination_power = std::pow(10.0, config.contamination.inr_db / 10.0) * mean_power;
        setup.scene.interferers.push_back(
            {setup.contamination_power, fft_pilot(0, length),
             build_covariance(DopplerSpectrum::flat_band(config.contamination.band), length)});
    }
    return setup;
}

RunResult run(const ExperimentConfig& config, PilotScheme scheme, const RunOptions& options,
              bool downlink) {
    config.validate();
    const std::size_t length = options.length.value_or(config.length);
    const double snr_db = options.snr_db.value_or(config.snr_db);
    const double noise = ExperimentConfig::noise_variance_for(snr_db);
    const double dl_noise = ExperimentConfig::noise_variance_for(config.dl_snr_db.value_or(snr_db));
    const std::size_t users = config.users.size();
    const std::size_t antennas = config.antennas;
    const std::size_t span = downlink ? length + config.dl_lag : length;

    spdlog::info("{} {} run: P = {}, snr = {} dB, M = {}, {} trials", to_string(scheme),
                 downlink ? "downlink" : "uplink", length, snr_db, antennas, config.trials);

    Setup setup = build_setup(config, scheme, length, noise);
    std::vector<ProcessSynthesizer> user_sources;
    for (const auto& u : setup.scene.users) {
        user_sources.emplace_back(u.covariance);
    }
    std::optional<ProcessSynthesizer> contamination_source;
    if (!setup.scene.interferers.empty()) {
        contamination_source.emplace(setup.scene.interferers.front().covariance);
    }
    const MmseEstimator estimator(setup.scene, options.execution);

    std::vector<TrialOutcome> outcomes(config.trials);
    std::vector<std::uint64_t> seeds(config.trials);
    const auto p = static_cast<Eigen::Index>(length);

    kernels::for_each_index(config.trials, options.execution, [&](std::size_t t) {
        const std::uint64_t seed = trial_seed(config.seed, length, t);
        seeds[t] = seed;
        TrialOutcome& out = outcomes[t];
        out.nmse.assign(users, 0.0);
        out.se.assign(users, 0.0);
        out.sinr.assign(users, 0.0);
        out.skipped.assign(users, 0);

        std::vector<CMatrix> channels(users);
        CMatrix received = CMatrix::Zero(p, static_cast<Eigen::Index>(antennas));
        for (std::size_t u = 0; u < users; ++u) {
            channels[u] = user_sources[u]
                              .draw(antennas, stats::derive_seed(seed, {user_channel, u}), span)
                              .samples;
            const auto& member = setup.scene.users[u];
            const auto pilot = member.pilot.entries();
            const double amplitude = std::sqrt(member.power);
            for (Eigen::Index n = 0; n < p; ++n) {
                received.row(n) += amplitude * pilot[static_cast<std::size_t>(n)] * channels[u].row(n);
            }
        }
        if (contamination_source) {
            received += std::sqrt(setup.contamination_power) *
                        contamination_source->draw(antennas, stats::derive_seed(seed, {contamination}))
                            .samples;
        }
        add_gaussian(received, noise, stats::derive_seed(seed, {Stream::noise}));
        out.received_power = received.squaredNorm() / static_cast<double>(received.size());

        const CMatrix solved = estimator.solve(received);
        std::vector<CVector> beams(users);
        const double scale = static_cast<double>(length * antennas);
        for (std::size_t u = 0; u < users; ++u) {
            const CMatrix estimate = estimator.estimate_from_solved(u, solved);
            const double r0 = setup.scene.users[u].covariance.autocorrelation()(0).real();
            out.nmse[u] = (estimate - channels[u].topRows(p)).squaredNorm() / (scale * r0);
            if (!downlink) {
                continue;
            }
            switch (config.csi) {
            case CsiMode::estimated:
                beams[u] = estimate.row(p - 1).transpose();
                break;
            case CsiMode::perfect:
                beams[u] = channels[u].row(p - 1).transpose();
                break;
            case CsiMode::random:
                beams[u] = gaussian_vector(static_cast<Eigen::Index>(antennas),
                                           stats::derive_seed(seed, {random_beam, u}));
                break;
            }
            const double norm = beams[u].norm();
            if (norm == 0.0) {
                out.skipped[u] = 1;
            } else {
                beams[u] /= norm;
            }
        }
        if (!downlink) {
            return;
        }
        const auto slot = static_cast<Eigen::Index>(span - 1);
        for (std::size_t u = 0; u < users; ++u) {
            if (out.skipped[u]) {
                continue;
            }
            const CVector h = channels[u].row(slot).transpose();
            double interference = 0.0;
            double signal = 0.0;
            for (std::size_t g = 0; g < users; ++g) {
                if (out.skipped[g]) {
                    continue;
                }
                const double gain = setup.scene.users[g].power * std::norm(h.dot(beams[g]));
                (g == u ? signal : interference) += gain;
            }
            out.sinr[u] = signal / (interference + dl_noise);
            out.se[u] = std::log2(1.0 + out.sinr[u]);
        }
    });

    RunResult result;
    result.scheme = scheme;
    result.length = length;
    result.snr_db = snr_db;
    result.downlink = downlink;
    result.trial_seeds = seeds;

    stats::Accumulator mean_nmse;
    stats::Accumulator sum_se;
    std::vector<stats::Accumulator> nmse(users);
    std::vector<stats::Accumulator> se(users);
    std::vector<stats::Accumulator> sinr(users);
    stats::Accumulator received_power;
    std::vector<std::size_t> skipped(users, 0);
    for (const auto& out : outcomes) {
        double trial_mean = 0.0;
        double trial_sum = 0.0;
        for (std::size_t u = 0; u < users; ++u) {
            nmse[u].add(out.nmse[u]);
            se[u].add(out.se[u]);
            sinr[u].add(out.sinr[u]);
            skipped[u] += out.skipped[u] ? 1 : 0;
            trial_mean += out.nmse[u] / static_cast<double>(users);
            trial_sum += out.se[u];
        }
        mean_nmse.add(trial_mean);
        received_power.add(out.received_power);
        sum_se.add(trial_sum);
    }

    for (std::size_t u = 0; u < users; ++u) {
        UserResult r;
        r.user = u;
        r.max_doppler = setup.max_dopplers[u];
        r.shift = setup.shifts[u];
        const auto n = nmse[u].summary();
        r.nmse = n.mean;
        r.nmse_half_width = n.half_width;
        const double snr = config.users[u].power / noise;
        r.nmse_analytic = small_alpha_mse(r.max_doppler, snr);
        r.gain_db = empirical_processing_gain_db(n.mean, snr);
        const auto upper = empirical_processing_gain_db(n.mean - n.half_width, snr);
        const auto lower = empirical_processing_gain_db(n.mean + n.half_width, snr);
        if (upper && lower) {
            r.gain_half_width = 0.5 * (*upper - *lower);
        }
        r.gain_analytic_db = processing_gain_db(r.max_doppler, snr);
        if (downlink) {
            const auto s = se[u].summary();
            r.spectral_efficiency = s.mean;
            r.spectral_efficiency_half_width = s.half_width;
            r.mean_sinr = sinr[u].mean();
        }
        r.skipped_beams = skipped[u];
        if (skipped[u] > 0) {
            spdlog::warn("user {} had a zero-norm channel estimate in {} trials; skipped in the "
                         "downlink",
                         u, skipped[u]);
        }
        result.users.push_back(r);
    }
    const auto m = mean_nmse.summary();
    result.mean_nmse = m.mean;
    result.mean_nmse_half_width = m.half_width;
    result.received_power = received_power.mean();
    if (downlink) {
        const auto s = sum_se.summary();
        result.sum_se = s.mean;
        result.sum_se_half_width = s.half_width;
    }
    return result;
}

} // namespace

ConfigError::ConfigError(std::string field, const std::string& message, std::optional<int> line)
    : std::runtime_error(describe(field, message, line)), field_(std::move(field)), line_(line) {}

std::string to_string(PilotScheme scheme) {
    return scheme == PilotScheme::psd_align ? "psdalign" : "hadamard";
}

std::string to_string(CsiMode mode) {
    switch (mode) {
    case CsiMode::estimated:
        return "estimated";
    case CsiMode::perfect:
        return "perfect";
    case CsiMode::random:
        return "random";
    }
    return "estimated";
}

std::string to_string(SweepAxis axis) { return axis == SweepAxis::length ? "length" : "snr"; }

double ExperimentConfig::noise_variance_for(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

double ExperimentConfig::normalized_doppler(std::size_t user) const {
    return users.at(user).doppler_hz / sampling_hz;
}

void ExperimentConfig::validate() const {
    require(std::isfinite(sampling_hz) && sampling_hz > 0.0, "channel.sampling_hz", "must be positive");
    require(std::isfinite(symbol_s) && symbol_s > 0.0, "channel.symbol_s", "must be positive");
    require(std::abs(3.0 * symbol_s * sampling_hz - 1.0) <= 1e-3, "channel.symbol_s",
            fmt::format("sampling rate {} Hz is not 1/(3 T_s) for T_s = {} s", sampling_hz, symbol_s));
    require(!users.empty(), "users", "at least one user is required");
    std::size_t with_shift = 0;
    for (std::size_t u = 0; u < users.size(); ++u) {
        const auto field = fmt::format("users[{}]", u);
        require(std::isfinite(users[u].doppler_hz) && users[u].doppler_hz > 0.0,
                field + ".doppler_hz", "must be positive");
        const double f = normalized_doppler(u);
        require(f <= 0.5, field + ".doppler_hz",
                fmt::format("normalized Doppler F = {} exceeds 1/2", f));
        require(std::isfinite(users[u].power) && users[u].power > 0.0, field + ".power",
                "must be positive");
        if (users[u].shift_fraction) {
            require(std::isfinite(*users[u].shift_fraction), field + ".shift", "must be finite");
            ++with_shift;
        }
    }
    require(with_shift == 0 || with_shift == users.size(), "users",
            "give a shift for every user or for none");
    require(length >= 2, "experiment.length", "P must be at least 2");
    require(antennas >= 1, "experiment.antennas", "must be at least 1");
    require(trials >= 1, "experiment.trials", "must be at least 1");
    require(std::isfinite(snr_db), "experiment.snr_db", "must be finite");
    require(!dl_snr_db || std::isfinite(*dl_snr_db), "downlink.snr_db", "must be finite");
    const auto& band = contamination.band;
    require(band.lo >= -0.5 && band.lo < band.hi && band.hi <= 0.5, "contamination.band",
            "needs -1/2 <= lo < hi <= 1/2");
    require(std::isfinite(contamination.inr_db), "contamination.inr_db", "must be finite");
    for (auto p : sweep.lengths) {
        require(p >= 2, "sweep.lengths", "every P must be at least 2");
    }
    for (double s : sweep.snr_db) {
        require(std::isfinite(s), "sweep.snr_db", "must be finite");
    }
    require(std::isfinite(validation.tolerance_scale) && validation.tolerance_scale > 0.0,
            "validation.tolerance_scale", "must be positive");
    for (int c : validation.checks) {
        require(c >= 1 && c <= 10, "validation.checks", fmt::format("unknown check {}", c));
    }
    require(validation.trials >= 2, "validation.trials", "must be at least 2");
    require(validation.antennas >= 1, "validation.antennas", "must be at least 1");
    require(validation.length >= 8, "validation.length", "must be at least 8");
    for (auto p : validation.lengths) {
        require(p >= 2, "validation.lengths", "every P must be at least 2");
    }
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    for (int k = 1; k <= 8; ++k) {
        UserConfig u;
        u.shift_fraction = 3.0 / 8.0 + k / 36.0;
        c.users.push_back(u);
    }
    return c;
}

std::vector<std::size_t> resolve_shifts(const ExperimentConfig& config, std::size_t length) {
    if (config.users.empty()) {
        return {};
    }
    if (config.users.front().shift_fraction) {
        std::vector<std::size_t> shifts;
        const auto p = static_cast<long long>(length);
        for (const auto& u : config.users) {
            const long long tau = std::llround(*u.shift_fraction * static_cast<double>(length));
            shifts.push_back(static_cast<std::size_t>(((tau % p) + p) % p));
        }
        return shifts;
    }
    std::vector<double> dopplers;
    for (std::size_t u = 0; u < config.users.size(); ++u) {
        dopplers.push_back(config.normalized_doppler(u));
    }
    std::vector<Band> forbidden;
    if (config.contamination.enabled) {
        forbidden.push_back(config.contamination.band);
    }
    return plan_alignment(dopplers, forbidden, length).shifts;
}

EstimationReport estimation_report(const ExperimentConfig& config, PilotScheme scheme,
                                   std::size_t length, const RunResult* empirical) {
    config.validate();
    const double noise = config.noise_variance();
    const Setup setup = build_setup(config, scheme, length, noise);
    const MmseEstimator estimator(setup.scene);
    const double p = static_cast<double>(length);

    EstimationReport report;
    report.length = length;
    for (std::size_t u = 0; u < setup.scene.users.size(); ++u) {
        const auto& member = setup.scene.users[u];
        const double f = setup.max_dopplers[u];
        const double snr = member.power / noise;
        EstimationReportEntry e;
        e.user = u;
        e.finite_mse = estimator.error_covariance(u).mse;
        e.interference_free_mse = interference_free_mse(member.covariance, member.power, noise);
        if (scheme == PilotScheme::psd_align) {
            std::vector<ShiftedSpectrum> others;
            for (std::size_t g = 0; g < setup.scene.users.size(); ++g) {
                if (g != u) {
                    others.push_back({DopplerSpectrum::clarke(setup.max_dopplers[g]),
                                      wrap_frequency((static_cast<double>(setup.shifts[g]) -
                                                      static_cast<double>(setup.shifts[u])) / p),
                                      setup.scene.users[g].power});
                }
            }
            if (config.contamination.enabled) {
                others.push_back({DopplerSpectrum::flat_band(config.contamination.band),
                                  wrap_frequency(-static_cast<double>(setup.shifts[u]) / p),
                                  setup.contamination_power});
            }
            e.asymptotic_mse = asymptotic_mse(DopplerSpectrum::clarke(f), others, member.power, noise);
        } else {
            e.asymptotic_mse = std::nan("");
        }
        e.closed_form_mse = clarke_closed_form(pi * f / snr);
        e.small_alpha_mse = small_alpha_mse(f, snr);
        e.gain_db = processing_gain_db(f, snr);
        if (empirical != nullptr && u < empirical->users.size()) {
            e.empirical_nmse = empirical->users[u].nmse;
            e.empirical_half_width = empirical->users[u].nmse_half_width;
        }
        report.users.push_back(e);
    }
    return report;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t length, std::size_t trial) {
    return stats::derive_seed(master, {length, trial});
}

RunResult run_uplink(const ExperimentConfig& config, PilotScheme scheme, const RunOptions& options) {
    return run(config, scheme, options, false);
}

RunResult run_downlink(const ExperimentConfig& config, PilotScheme scheme,
                       const RunOptions& options) {
    return run(config, scheme, options, true);
}

} // namespace psdalign
