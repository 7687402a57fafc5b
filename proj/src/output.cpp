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

#include "psdalign/output.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "psdalign/config.hpp"

namespace psdalign::output {
namespace {

std::string number(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : "nan"; }

std::string number(const std::optional<double>& v) { return v ? number(*v) : "nan"; }

std::string header(const char* kind) {
    return fmt::format("# psdalign {} csv v{}\nscheme,P,snr_db,user,empirical,analytic,ci_halfwidth\n",
                       kind, csv_version);
}

template <typename Row>
std::string table(std::span<const RunResult> runs, const char* kind, Row row) {
    std::string out = header(kind);
    for (const auto& run : runs) {
        for (const auto& u : run.users) {
            const auto [empirical, analytic, half] = row(u);
            out += fmt::format("{},{},{},{},{},{},{}\n", to_string(run.scheme), run.length,
                               number(run.snr_db), u.user, empirical, analytic, half);
        }
    }
    return out;
}

} // namespace

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error(fmt::format("cannot write {}", temp.string()));
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error(fmt::format("failed writing {}", temp.string()));
        }
    }
    std::filesystem::rename(temp, path);
}

std::string mse_csv(std::span<const RunResult> runs) {
    return table(runs, "nmse", [](const UserResult& u) {
        return std::tuple{number(u.nmse), number(u.nmse_analytic), number(u.nmse_half_width)};
    });
}

std::string gain_csv(std::span<const RunResult> runs) {
    return table(runs, "processing-gain-db", [](const UserResult& u) {
        return std::tuple{number(u.gain_db), number(u.gain_analytic_db), number(u.gain_half_width)};
    });
}

std::string dlse_csv(std::span<const RunResult> runs) {
    return table(runs, "dl-spectral-efficiency", [](const UserResult& u) {
        return std::tuple{number(u.spectral_efficiency), std::string("nan"),
                          number(u.spectral_efficiency_half_width)};
    });
}

std::string aggregate_dat(std::span<const RunResult> runs, Quantity quantity, SweepAxis axis) {
    std::map<PilotScheme, std::vector<const RunResult*>> by_scheme;
    for (const auto& r : runs) {
        by_scheme[r.scheme].push_back(&r);
    }
    std::string out = fmt::format("# psdalign aggregate v{}\n", csv_version);
    bool first = true;
    for (const auto& [scheme, list] : by_scheme) {
        if (!first) {
            out += "\n\n";
        }
        first = false;
        out += fmt::format("# scheme {}\n# {} mean ci_halfwidth\n", to_string(scheme),
                           axis == SweepAxis::length ? "P" : "snr_db");
        for (const auto* r : list) {
            double mean = 0.0;
            double half = 0.0;
            switch (quantity) {
            case Quantity::nmse:
                mean = r->mean_nmse;
                half = r->mean_nmse_half_width;
                break;
            case Quantity::gain: {
                double sum = 0.0;
                double sum_half = 0.0;
                std::size_t count = 0;
                for (const auto& u : r->users) {
                    if (u.gain_db) {
                        sum += *u.gain_db;
                        sum_half += u.gain_half_width;
                        ++count;
                    }
                }
                mean = count ? sum / static_cast<double>(count) : std::nan("");
                half = count ? sum_half / static_cast<double>(count) : std::nan("");
                break;
            }
            case Quantity::sum_se:
                mean = r->sum_se;
                half = r->sum_se_half_width;
                break;
            }
            const std::string x =
                axis == SweepAxis::length ? std::to_string(r->length) : number(r->snr_db);
            out += fmt::format("{} {} {}\n", x, number(mean), number(half));
        }
    }
    return out;
}

std::string manifest(const ExperimentConfig& config, std::span<const RunResult> runs) {
    YAML::Emitter out;
    out << YAML::BeginMap << YAML::Key << "seeds" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "master" << YAML::Value << config.seed;
    out << YAML::Key << "runs" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : runs) {
        out << YAML::BeginMap;
        out << YAML::Key << "scheme" << YAML::Value << to_string(r.scheme);
        out << YAML::Key << "length" << YAML::Value << r.length;
        out << YAML::Key << "snr_db" << YAML::Value << r.snr_db;
        out << YAML::Key << "trials" << YAML::Value << YAML::Flow << r.trial_seeds;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap << YAML::EndMap;
    return "# psdalign run manifest; usable as --config for replay\n" + serialize_config(config) +
           out.c_str() + "\n";
}

} // namespace psdalign::output
