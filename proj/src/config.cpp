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

#include "psdalign/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace psdalign {
namespace {

std::optional<int> line_of(const YAML::Node& node) {
    const auto mark = node.Mark();
    if (mark.line < 0) {
        return std::nullopt;
    }
    return mark.line + 1;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& message) {
    throw ConfigError(field, message, line_of(node));
}

void expect_map(const YAML::Node& node, const std::string& field, std::set<std::string> allowed) {
    if (!node.IsMap()) {
        fail(node, field, "expected a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) {
            fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
        }
    }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& field) {
    if (!node.IsScalar()) {
        fail(node, field, "expected a scalar");
    }
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail(node, field, fmt::format("cannot read '{}'", node.Scalar()));
    }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, const std::string& section, T& target) {
    if (const auto node = parent[key]) {
        target = scalar<T>(node, section + "." + key);
    }
}

template <typename T>
std::vector<T> read_list(const YAML::Node& node, const std::string& field) {
    if (!node.IsSequence()) {
        fail(node, field, "expected a list");
    }
    std::vector<T> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(scalar<T>(node[i], fmt::format("{}[{}]", field, i)));
    }
    return out;
}

std::size_t read_count(const YAML::Node& node, const std::string& field) {
    const auto value = scalar<long long>(node, field);
    if (value < 0) {
        fail(node, field, "must be nonnegative");
    }
    return static_cast<std::size_t>(value);
}

std::vector<std::size_t> read_counts(const YAML::Node& node, const std::string& field) {
    if (!node.IsSequence()) {
        fail(node, field, "expected a list");
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(read_count(node[i], fmt::format("{}[{}]", field, i)));
    }
    return out;
}

Band read_band(const YAML::Node& node, const std::string& field) {
    const auto values = read_list<double>(node, field);
    if (values.size() != 2) {
        fail(node, field, "a band is [lo, hi]");
    }
    return {values[0], values[1]};
}

PilotScheme read_scheme(const YAML::Node& node, const std::string& field) {
    const auto name = scalar<std::string>(node, field);
    if (name == "psdalign") {
        return PilotScheme::psd_align;
    }
    if (name == "hadamard") {
        return PilotScheme::hadamard;
    }
    fail(node, field, fmt::format("unknown pilot scheme '{}'", name));
}

UserConfig read_user(const YAML::Node& node, const std::string& field) {
    expect_map(node, field, {"doppler_hz", "power", "shift"});
    UserConfig u;
    read(node, "doppler_hz", field, u.doppler_hz);
    read(node, "power", field, u.power);
    if (const auto s = node["shift"]) {
        u.shift_fraction = scalar<double>(s, field + ".shift");
    }
    return u;
}

void read_users(const YAML::Node& node, ExperimentConfig& c) {
    if (node.IsSequence()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
            c.users.push_back(read_user(node[i], fmt::format("users[{}]", i)));
        }
        return;
    }
    // Shorthand for identical users: {count, doppler_hz, power}.
    expect_map(node, "users", {"count", "doppler_hz", "power"});
    if (!node["count"]) {
        fail(node, "users.count", "missing");
    }
    UserConfig u;
    read(node, "doppler_hz", "users", u.doppler_hz);
    read(node, "power", "users", u.power);
    c.users.assign(read_count(node["count"], "users.count"), u);
}

ExperimentConfig from_yaml(const YAML::Node& root) {
    ExperimentConfig c;
    c.users.clear();
    if (root.IsNull()) {
        throw ConfigError("(root)", "configuration is empty");
    }
    expect_map(root, "", {"channel", "users", "experiment", "contamination", "downlink", "sweep",
                          "validation", "seeds"});
    if (const auto n = root["channel"]) {
        expect_map(n, "channel", {"sampling_hz", "symbol_s"});
        read(n, "sampling_hz", "channel", c.sampling_hz);
        read(n, "symbol_s", "channel", c.symbol_s);
    }
    if (const auto n = root["users"]) {
        read_users(n, c);
    } else {
        fail(root, "users", "missing");
    }
    if (const auto n = root["experiment"]) {
        expect_map(n, "experiment", {"length", "antennas", "trials", "snr_db", "seed", "schemes"});
        if (n["length"]) {
            c.length = read_count(n["length"], "experiment.length");
        }
        if (n["antennas"]) {
            c.antennas = read_count(n["antennas"], "experiment.antennas");
        }
        if (n["trials"]) {
            c.trials = read_count(n["trials"], "experiment.trials");
        }
        read(n, "snr_db", "experiment", c.snr_db);
        read(n, "seed", "experiment", c.seed);
        if (const auto s = n["schemes"]) {
            if (!s.IsSequence()) {
                fail(s, "experiment.schemes", "expected a list");
            }
            c.schemes.clear();
            for (std::size_t i = 0; i < s.size(); ++i) {
                c.schemes.push_back(read_scheme(s[i], fmt::format("experiment.schemes[{}]", i)));
            }
        }
    }
    if (const auto n = root["contamination"]) {
        expect_map(n, "contamination", {"enabled", "band", "inr_db"});
        read(n, "enabled", "contamination", c.contamination.enabled);
        if (n["band"]) {
            c.contamination.band = read_band(n["band"], "contamination.band");
        }
        read(n, "inr_db", "contamination", c.contamination.inr_db);
    }
    if (const auto n = root["downlink"]) {
        expect_map(n, "downlink", {"lag", "snr_db", "csi"});
        if (n["lag"]) {
            c.dl_lag = read_count(n["lag"], "downlink.lag");
        }
        if (const auto s = n["snr_db"]) {
            c.dl_snr_db = scalar<double>(s, "downlink.snr_db");
        }
        if (const auto s = n["csi"]) {
            const auto mode = scalar<std::string>(s, "downlink.csi");
            if (mode == "estimated") {
                c.csi = CsiMode::estimated;
            } else if (mode == "perfect") {
                c.csi = CsiMode::perfect;
            } else if (mode == "random") {
                c.csi = CsiMode::random;
            } else {
                fail(s, "downlink.csi", fmt::format("unknown CSI mode '{}'", mode));
            }
        }
    }
    if (const auto n = root["sweep"]) {
        expect_map(n, "sweep", {"axis", "lengths", "snr_db"});
        if (const auto a = n["axis"]) {
            const auto axis = scalar<std::string>(a, "sweep.axis");
            if (axis == "length") {
                c.sweep.axis = SweepAxis::length;
            } else if (axis == "snr") {
                c.sweep.axis = SweepAxis::snr;
            } else {
                fail(a, "sweep.axis", fmt::format("unknown axis '{}'", axis));
            }
        }
        if (n["lengths"]) {
            c.sweep.lengths = read_counts(n["lengths"], "sweep.lengths");
        }
        if (n["snr_db"]) {
            c.sweep.snr_db = read_list<double>(n["snr_db"], "sweep.snr_db");
        }
    }
    if (const auto n = root["validation"]) {
        expect_map(n, "validation",
                   {"tolerance_scale", "checks", "trials", "antennas", "length", "lengths"});
        read(n, "tolerance_scale", "validation", c.validation.tolerance_scale);
        if (n["checks"]) {
            c.validation.checks = read_list<int>(n["checks"], "validation.checks");
        }
        if (n["trials"]) {
            c.validation.trials = read_count(n["trials"], "validation.trials");
        }
        if (n["antennas"]) {
            c.validation.antennas = read_count(n["antennas"], "validation.antennas");
        }
        if (n["length"]) {
            c.validation.length = read_count(n["length"], "validation.length");
        }
        if (n["lengths"]) {
            c.validation.lengths = read_counts(n["lengths"], "validation.lengths");
        }
    }
    c.validate();
    return c;
}

YAML::Node load_yaml(const std::string& text, const std::string& origin) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin, e.msg, e.mark.line + 1);
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot open file");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

ExperimentConfig parse_config(const std::string& text) { return from_yaml(load_yaml(text, "(config)")); }

ExperimentConfig load_config(const std::filesystem::path& path) {
    return from_yaml(load_yaml(read_file(path), path.string()));
}

std::string serialize_config(const ExperimentConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "sampling_hz" << YAML::Value << c.sampling_hz;
    out << YAML::Key << "symbol_s" << YAML::Value << c.symbol_s;
    out << YAML::EndMap;

    out << YAML::Key << "users" << YAML::Value << YAML::BeginSeq;
    for (const auto& u : c.users) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "doppler_hz" << YAML::Value << u.doppler_hz;
        out << YAML::Key << "power" << YAML::Value << u.power;
        if (u.shift_fraction) {
            out << YAML::Key << "shift" << YAML::Value << *u.shift_fraction;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "length" << YAML::Value << c.length;
    out << YAML::Key << "antennas" << YAML::Value << c.antennas;
    out << YAML::Key << "trials" << YAML::Value << c.trials;
    out << YAML::Key << "snr_db" << YAML::Value << c.snr_db;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "schemes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto s : c.schemes) {
        out << to_string(s);
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;

    out << YAML::Key << "contamination" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "enabled" << YAML::Value << c.contamination.enabled;
    out << YAML::Key << "band" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << c.contamination.band.lo << c.contamination.band.hi << YAML::EndSeq;
    out << YAML::Key << "inr_db" << YAML::Value << c.contamination.inr_db;
    out << YAML::EndMap;

    out << YAML::Key << "downlink" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lag" << YAML::Value << c.dl_lag;
    if (c.dl_snr_db) {
        out << YAML::Key << "snr_db" << YAML::Value << *c.dl_snr_db;
    }
    out << YAML::Key << "csi" << YAML::Value << to_string(c.csi);
    out << YAML::EndMap;

    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "axis" << YAML::Value << to_string(c.sweep.axis);
    out << YAML::Key << "lengths" << YAML::Value << YAML::Flow << c.sweep.lengths;
    out << YAML::Key << "snr_db" << YAML::Value << YAML::Flow << c.sweep.snr_db;
    out << YAML::EndMap;

    out << YAML::Key << "validation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "tolerance_scale" << YAML::Value << c.validation.tolerance_scale;
    out << YAML::Key << "checks" << YAML::Value << YAML::Flow << c.validation.checks;
    out << YAML::Key << "trials" << YAML::Value << c.validation.trials;
    out << YAML::Key << "antennas" << YAML::Value << c.validation.antennas;
    out << YAML::Key << "length" << YAML::Value << c.validation.length;
    out << YAML::Key << "lengths" << YAML::Value << YAML::Flow << c.validation.lengths;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

AlignmentPlan parse_plan(const std::string& text) {
    const auto root = load_yaml(text, "(plan)");
    expect_map(root, "", {"plan"});
    const auto node = root["plan"];
    if (!node) {
        fail(root, "plan", "missing");
    }
    expect_map(node, "plan", {"length", "guard", "users", "forbidden"});
    AlignmentPlan plan;
    if (!node["length"] || !node["users"]) {
        fail(node, "plan", "needs length and users");
    }
    plan.length = read_count(node["length"], "plan.length");
    const auto users = node["users"];
    if (!users.IsSequence()) {
        fail(users, "plan.users", "expected a list");
    }
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto field = fmt::format("plan.users[{}]", i);
        expect_map(users[i], field, {"max_doppler", "shift", "shift_fraction"});
        if (!users[i]["max_doppler"] || !users[i]["shift"]) {
            fail(users[i], field, "needs max_doppler and shift");
        }
        plan.max_dopplers.push_back(scalar<double>(users[i]["max_doppler"], field + ".max_doppler"));
        plan.shifts.push_back(read_count(users[i]["shift"], field + ".shift"));
        if (plan.shifts.back() >= plan.length) {
            fail(users[i]["shift"], field + ".shift", "must be below the plan length");
        }
    }
    if (const auto f = node["forbidden"]) {
        if (!f.IsSequence()) {
            fail(f, "plan.forbidden", "expected a list");
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            plan.forbidden.push_back(read_band(f[i], fmt::format("plan.forbidden[{}]", i)));
        }
    }
    return plan;
}

AlignmentPlan load_plan(const std::filesystem::path& path) { return parse_plan(read_file(path)); }

std::string serialize_plan(const AlignmentPlan& plan) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap << YAML::Key << "plan" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "length" << YAML::Value << plan.length;
    out << YAML::Key << "guard" << YAML::Value << plan.guard();
    out << YAML::Key << "users" << YAML::Value << YAML::BeginSeq;
    for (std::size_t i = 0; i < plan.shifts.size(); ++i) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "max_doppler" << YAML::Value << plan.max_dopplers[i];
        out << YAML::Key << "shift" << YAML::Value << plan.shifts[i];
        out << YAML::Key << "shift_fraction" << YAML::Value
            << static_cast<double>(plan.shifts[i]) / static_cast<double>(plan.length);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "forbidden" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : plan.forbidden) {
        out << YAML::Flow << YAML::BeginSeq << b.lo << b.hi << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void apply_plan(ExperimentConfig& config, const AlignmentPlan& plan) {
    if (plan.shifts.size() != config.users.size()) {
        throw ConfigError("plan.users", fmt::format("plan has {} users, config has {}",
                                                    plan.shifts.size(), config.users.size()));
    }
    for (std::size_t u = 0; u < plan.shifts.size(); ++u) {
        config.users[u].shift_fraction =
            static_cast<double>(plan.shifts[u]) / static_cast<double>(plan.length);
    }
}

} // namespace psdalign
