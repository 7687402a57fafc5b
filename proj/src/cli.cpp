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

#include "psdalign/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "psdalign/config.hpp"
#include "psdalign/output.hpp"
#include "psdalign/pilots.hpp"
#include "psdalign/simkit.hpp"
#include "psdalign/validation.hpp"

namespace psdalign::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::optional<std::string> config_path;
    std::string out_dir = "psdalign-out";
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<double> tolerance_scale;
    std::optional<std::string> plan_path;
    bool verbose = false;
    bool quiet = false;
};

ExperimentConfig load(const Options& o) {
    ExperimentConfig config = o.config_path ? load_config(*o.config_path) : default_config();
    if (o.seed) {
        config.seed = *o.seed;
    }
    if (o.tolerance_scale) {
        config.validation.tolerance_scale = *o.tolerance_scale;
    }
    if (o.plan_path) {
        apply_plan(config, load_plan(*o.plan_path));
    }
    config.validate();
    return config;
}

fs::path prepare_output(const Options& o) {
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    return dir;
}

int validate(const Options& o) {
    const auto config = load(o);
    const auto dir = prepare_output(o);
    const auto report = validation::run_validation(config);
    const auto text = report.text();
    output::write_atomic(dir / "report.txt", text);
    std::cout << text;
    return report.passed() ? success : failure;
}

struct SweepPoint {
    std::size_t length;
    double snr_db;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
    std::vector<SweepPoint> points;
    if (config.sweep.axis == SweepAxis::length) {
        for (auto p : config.sweep.lengths) {
            points.push_back({p, config.snr_db});
        }
    } else {
        for (double s : config.sweep.snr_db) {
            points.push_back({config.length, s});
        }
    }
    if (points.empty()) {
        throw UsageError(fmt::format("sweep axis '{}' has no values", to_string(config.sweep.axis)));
    }
    if (config.schemes.empty()) {
        throw UsageError("no pilot schemes selected");
    }
    return points;
}

std::vector<RunResult> sweep(const ExperimentConfig& config, bool downlink) {
    std::vector<RunResult> runs;
    for (auto scheme : config.schemes) {
        for (const auto& point : sweep_points(config)) {
            RunOptions options;
            options.length = point.length;
            options.snr_db = point.snr_db;
            runs.push_back(downlink ? run_downlink(config, scheme, options)
                                    : run_uplink(config, scheme, options));
        }
    }
    return runs;
}

int sweep_mse(const Options& o) {
    const auto config = load(o);
    sweep_points(config);
    const auto dir = prepare_output(o);
    const auto runs = sweep(config, false);
    output::write_atomic(dir / "mse.csv", output::mse_csv(runs));
    output::write_atomic(dir / "gain.csv", output::gain_csv(runs));
    output::write_atomic(dir / "mse.dat", output::aggregate_dat(runs, output::Quantity::nmse, config.sweep.axis));
    output::write_atomic(dir / "gain.dat", output::aggregate_dat(runs, output::Quantity::gain, config.sweep.axis));
    output::write_atomic(dir / "manifest.yaml", output::manifest(config, runs));
    for (const auto& r : runs) {
        std::cout << fmt::format("{:<9} P={:<5} snr={:>6.2f} dB  mean nMSE {:.6g} +- {:.3g}\n",
                                 to_string(r.scheme), r.length, r.snr_db, r.mean_nmse, r.mean_nmse_half_width);
    }
    return success;
}

int sweep_dl(const Options& o) {
    const auto config = load(o);
    sweep_points(config);
    const auto dir = prepare_output(o);
    const auto runs = sweep(config, true);
    output::write_atomic(dir / "dlse.csv", output::dlse_csv(runs));
    output::write_atomic(dir / "dlse.dat", output::aggregate_dat(runs, output::Quantity::sum_se, config.sweep.axis));
    output::write_atomic(dir / "manifest.yaml", output::manifest(config, runs));
    for (const auto& r : runs) {
        std::cout << fmt::format("{:<9} P={:<5} snr={:>6.2f} dB  sum SE {:.6g} +- {:.3g} bit/s/Hz\n",
                                 to_string(r.scheme), r.length, r.snr_db, r.sum_se, r.sum_se_half_width);
    }
    return success;
}

int plan(const Options& o) {
    const auto config = load(o);
    const auto dir = prepare_output(o);
    std::vector<double> dopplers;
    for (std::size_t u = 0; u < config.users.size(); ++u) {
        dopplers.push_back(config.normalized_doppler(u));
    }
    std::vector<Band> forbidden;
    if (config.contamination.enabled) {
        forbidden.push_back(config.contamination.band);
    }
    AlignmentPlan result;
    if (config.users.front().shift_fraction) {
        result.length = config.length;
        result.shifts = resolve_shifts(config, config.length);
        result.max_dopplers = dopplers;
        result.forbidden = forbidden;
    } else {
        try {
            result = plan_alignment(dopplers, forbidden, config.length);
        } catch (const InfeasiblePlan& e) {
            std::cerr << fmt::format("infeasible plan: {} (width deficit {:.6g}, {} of {} users placed)\n",
                                     e.what(), e.deficit(), e.placed(), dopplers.size());
            return failure;
        }
    }
    const auto check = check_plan(result);
    const double p = static_cast<double>(result.length);
    std::cout << fmt::format("P = {}, guard = {:.6g}\n", result.length, result.guard());
    std::cout << fmt::format("{:>5} {:>10} {:>6} {:>12} {:>24}\n", "user", "F", "shift", "shift/P", "support");
    for (std::size_t u = 0; u < result.shifts.size(); ++u) {
        const double centre = static_cast<double>(result.shifts[u]) / p;
        const double f = result.max_dopplers[u];
        std::cout << fmt::format("{:>5} {:>10.6g} {:>6} {:>12.8f}   [{:+.6f}, {:+.6f}]\n", u, f, result.shifts[u],
                                 centre, wrap_frequency(centre - f), wrap_frequency(centre + f));
    }
    for (const auto& b : result.forbidden) {
        std::cout << fmt::format("forbidden band [{:+.6f}, {:+.6f}]\n", b.lo, b.hi);
    }
    std::cout << fmt::format("minimum user gap margin {:.6g}, forbidden band margin {:.6g}\n", check.user_margin,
                             check.forbidden_margin);
    output::write_atomic(dir / "plan.yaml", serialize_plan(result));
    if (!check.valid) {
        for (const auto& v : check.violations) {
            std::cerr << "violation: " << v << "\n";
        }
        return failure;
    }
    std::cout << "plan is valid\n";
    return success;
}

void configure_logging(const Options& o) {
    auto logger = spdlog::get("psdalign");
    if (!logger) {
        logger = spdlog::stderr_color_mt("psdalign");
    }
    spdlog::set_default_logger(logger);
    spdlog::set_level(o.verbose ? spdlog::level::debug : (o.quiet ? spdlog::level::warn : spdlog::level::info));
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"PSD-aligned pilot design and MMSE channel estimation toolkit", "psdalign"};
    app.require_subcommand(1, 1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "experiment configuration (YAML)");
        sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", o.seed, "master seed override");
        sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("-v,--verbose", o.verbose, "debug logging");
        sub->add_flag("-q,--quiet", o.quiet, "warnings only");
    };
    auto* validate_cmd = app.add_subcommand("validate", "run the analytic and Monte-Carlo cross-checks");
    add_common(validate_cmd);
    validate_cmd->add_option("--tolerance-scale", o.tolerance_scale, "multiply every tolerance")
        ->check(CLI::PositiveNumber);
    auto* mse_cmd = app.add_subcommand("sweep-mse", "nMSE and processing gain over the sweep axis");
    add_common(mse_cmd);
    mse_cmd->add_option("--plan", o.plan_path, "alignment plan written by the plan command");
    auto* plan_cmd = app.add_subcommand("plan", "compute or check cyclic-shift assignments");
    add_common(plan_cmd);
    auto* dl_cmd = app.add_subcommand("sweep-dl", "downlink sum spectral efficiency over the sweep axis");
    add_common(dl_cmd);
    dl_cmd->add_option("--plan", o.plan_path, "alignment plan written by the plan command");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? success : usage_error;
    }
    configure_logging(o);
    if (o.jobs) {
        omp_set_num_threads(*o.jobs);
    }
    try {
        if (validate_cmd->parsed()) {
            return validate(o);
        }
        if (mse_cmd->parsed()) {
            return sweep_mse(o);
        }
        if (dl_cmd->parsed()) {
            return sweep_dl(o);
        }
        return plan(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return usage_error;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage_error;
    } catch (const InfeasiblePlan& e) {
        std::cerr << fmt::format("infeasible plan: {} (width deficit {:.6g})\n", e.what(), e.deficit());
        return failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
}

} // namespace psdalign::cli
