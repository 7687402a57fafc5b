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

#include "psdalign/pilots.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "psdalign/fft.hpp"
#include "psdalign/kernels.hpp"
#include "psdalign/toeplitz.hpp"

namespace psdalign {
namespace {

constexpr double unit_modulus_tolerance = 1e-9;
constexpr double gap_tolerance = 1e-12;

// exp(j 2 pi m / P), exact at quarter turns.
cd unit_phase(std::size_t m, std::size_t length) {
    m %= length;
    if ((4 * m) % length == 0) {
        switch ((4 * m) / length) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
        }
    }
    return std::polar(1.0, 2.0 * pi * static_cast<double>(m) / static_cast<double>(length));
}

double circular_distance(double a, double b) { return std::abs(wrap_frequency(a - b)); }

struct Arc {
    double centre;
    double half_width;
};

Arc band_arc(Band b) { return {0.5 * (b.lo + b.hi), 0.5 * b.width()}; }

double arc_gap(Arc a, Arc b) { return circular_distance(a.centre, b.centre) - a.half_width - b.half_width; }

// Smallest slack (gap - guard) of a candidate arc against every obstacle.
double candidate_slack(Arc candidate, std::span<const Arc> obstacles, double guard) {
    double slack = std::numeric_limits<double>::infinity();
    for (const auto& o : obstacles) {
        slack = std::min(slack, arc_gap(candidate, o) - guard);
    }
    return slack;
}

struct Placement {
    std::optional<std::size_t> shift;
    double best_slack = -std::numeric_limits<double>::infinity();
};

Placement first_fit(std::span<const Arc> obstacles, double max_doppler, std::size_t length) {
    const double n = static_cast<double>(length);
    const double guard = 1.0 / n;
    Placement result;
    for (std::size_t tau = 0; tau < length; ++tau) {
        const Arc candidate{static_cast<double>(tau) / n, max_doppler};
        const double slack = candidate_slack(candidate, obstacles, guard);
        if (slack >= -gap_tolerance) {
            result.shift = tau;
            return result;
        }
        result.best_slack = std::max(result.best_slack, slack);
    }
    return result;
}

} // namespace

// ---------------------------------------------------------------------------

PilotSequence::PilotSequence(std::vector<cd> entries, std::optional<std::size_t> shift)
    : entries_(std::move(entries)), shift_(shift) {
    if (entries_.empty()) {
        throw std::invalid_argument("pilot sequence must not be empty");
    }
    if (modulus_deviation() > unit_modulus_tolerance) {
        throw std::invalid_argument("pilot entries must have unit modulus");
    }
}

double PilotSequence::modulus_deviation() const {
    double worst = 0.0;
    for (const auto& x : entries_) {
        worst = std::max(worst, std::abs(std::abs(x) - 1.0));
    }
    return worst;
}

PilotSequence fft_pilot(std::size_t shift, std::span<const cd> base) {
    const auto length = base.size();
    if (length == 0) {
        throw std::invalid_argument("base sequence must not be empty");
    }
    if (shift >= length) {
        throw std::invalid_argument(fmt::format("cyclic shift {} outside [0, {})", shift, length));
    }
    for (const auto& s : base) {
        if (std::abs(std::abs(s) - 1.0) > unit_modulus_tolerance) {
            throw std::invalid_argument("base sequence must have unit modulus");
        }
    }
    std::vector<cd> entries(length);
    for (std::size_t n = 0; n < length; ++n) {
        entries[n] = unit_phase((shift * n) % length, length) * base[n];
    }
    return PilotSequence(std::move(entries), shift);
}

PilotSequence fft_pilot(std::size_t shift, std::size_t length) {
    const std::vector<cd> ones(length, cd(1.0, 0.0));
    return fft_pilot(shift, ones);
}

std::vector<PilotSequence> hadamard_pilots(std::size_t count) {
    if (count == 0 || !std::has_single_bit(count)) {
        throw std::invalid_argument(fmt::format("Hadamard order {} is not a power of two", count));
    }
    std::vector<PilotSequence> rows;
    rows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<cd> entries(count);
        for (std::size_t j = 0; j < count; ++j) {
            entries[j] = (std::popcount(i & j) % 2 == 0) ? 1.0 : -1.0;
        }
        rows.emplace_back(std::move(entries));
    }
    return rows;
}

PilotSequence repeat_pilot(const PilotSequence& pilot, std::size_t length) {
    const auto src = pilot.entries();
    std::vector<cd> entries(length);
    for (std::size_t n = 0; n < length; ++n) {
        entries[n] = src[n % src.size()];
    }
    return PilotSequence(std::move(entries));
}

// ---------------------------------------------------------------------------

CMatrix CrossMatrix::matrix() const {
    const Eigen::Map<const CVector> d(diagonal.data(), static_cast<Eigen::Index>(diagonal.size()));
    return d.asDiagonal();
}

CMatrix CrossMatrix::theta() const {
    const auto n = static_cast<Eigen::Index>(theta_column.size());
    CMatrix out(n, n);
    for (Eigen::Index q = 0; q < n; ++q) {
        for (Eigen::Index p = 0; p < n; ++p) {
            out(p, q) = theta_column[static_cast<std::size_t>((p - q + n) % n)];
        }
    }
    return out;
}

CrossMatrix cross_matrix(const PilotSequence& a, const PilotSequence& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(
            fmt::format("pilot lengths differ ({} vs {})", a.size(), b.size()));
    }
    CrossMatrix out;
    out.diagonal.resize(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        out.diagonal[n] = std::conj(a.entries()[n]) * b.entries()[n];
    }
    out.theta_column = out.diagonal;
    fft::forward(out.theta_column);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& v : out.theta_column) {
        v *= scale;
    }
    return out;
}

double orthogonality_residual(const CMatrix& rk, const CMatrix& rg, std::span<const cd> cross_diagonal) {
    return kernels::modulated_product_norm_reference(rk, rg, cross_diagonal) /
           static_cast<double>(rk.rows());
}

double orthogonality_residual(const ChannelCovariance& k, const ChannelCovariance& g,
                              const CrossMatrix& cross) {
    if (k.size() != g.size() || cross.diagonal.size() != k.size()) {
        throw std::invalid_argument("orthogonality residual operands differ in length");
    }
    const ToeplitzOperator rk(k);
    return kernels::modulated_product_norm(rk, g.autocorrelation(), cross.diagonal,
                                           kernels::Execution::parallel) /
           static_cast<double>(k.size());
}

bool shift_orthogonal(std::span<const double> lambda_k, std::span<const double> lambda_g, long shift) {
    if (lambda_k.size() != lambda_g.size()) {
        throw std::invalid_argument("eigenvalue vectors differ in length");
    }
    const auto n = lambda_k.size();
    if (n == 0) {
        return true;
    }
    const double floor_k = support_floor * *std::max_element(lambda_k.begin(), lambda_k.end());
    const double floor_g = support_floor * *std::max_element(lambda_g.begin(), lambda_g.end());
    const auto m = static_cast<long>(n);
    for (long p = 0; p < m; ++p) {
        const auto q = static_cast<std::size_t>((((p - shift) % m) + m) % m);
        if (lambda_k[static_cast<std::size_t>(p)] > floor_k && lambda_g[q] > floor_g) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

PlanCheck check_plan(const AlignmentPlan& plan) {
    PlanCheck out;
    out.user_margin = std::numeric_limits<double>::infinity();
    out.forbidden_margin = std::numeric_limits<double>::infinity();
    if (plan.length < 2) {
        out.valid = false;
        out.violations.push_back("plan length P must be at least 2");
        return out;
    }
    if (plan.shifts.size() != plan.max_dopplers.size()) {
        out.valid = false;
        out.violations.push_back("shift and Doppler lists differ in length");
        return out;
    }
    const double n = static_cast<double>(plan.length);
    const double guard = plan.guard();
    std::vector<Arc> users;
    for (std::size_t k = 0; k < plan.shifts.size(); ++k) {
        if (plan.shifts[k] >= plan.length) {
            out.valid = false;
            out.violations.push_back(fmt::format("user {}: shift {} outside [0, {})", k,
                                                 plan.shifts[k], plan.length));
        }
        users.push_back({static_cast<double>(plan.shifts[k]) / n, plan.max_dopplers[k]});
    }
    for (std::size_t k = 0; k < users.size(); ++k) {
        for (std::size_t g = k + 1; g < users.size(); ++g) {
            const double margin = arc_gap(users[k], users[g]) - guard;
            out.user_margin = std::min(out.user_margin, margin);
            if (margin < -gap_tolerance) {
                out.valid = false;
                out.violations.push_back(fmt::format(
                    "users {} and {}: supports separated by {:.6g} < guard {:.6g}", k, g,
                    margin + guard, guard));
            }
        }
        for (std::size_t b = 0; b < plan.forbidden.size(); ++b) {
            const double gap = arc_gap(users[k], band_arc(plan.forbidden[b]));
            out.forbidden_margin = std::min(out.forbidden_margin, gap);
            if (gap <= 0.0) {
                out.valid = false;
                out.violations.push_back(
                    fmt::format("user {}: support intersects forbidden band [{}, {}]", k,
                                plan.forbidden[b].lo, plan.forbidden[b].hi));
            }
        }
    }
    return out;
}

AlignmentPlan plan_alignment(std::span<const double> max_dopplers, std::span<const Band> forbidden,
                             std::size_t length) {
    if (length < 2) {
        throw std::invalid_argument("plan length P must be at least 2");
    }
    for (double f : max_dopplers) {
        if (!(f >= 0.0) || f > 0.5) {
            throw std::invalid_argument(fmt::format("normalized Doppler {} outside [0, 1/2]", f));
        }
    }
    const double guard = 1.0 / static_cast<double>(length);

    double blocked = 0.0;
    std::vector<Arc> obstacles;
    for (const auto& b : forbidden) {
        if (!(b.lo < b.hi)) {
            throw std::invalid_argument("forbidden band must satisfy lo < hi");
        }
        obstacles.push_back(band_arc(b));
        blocked += b.width();
    }
    // Every support carries one guard gap unless it is alone on the circle.
    const bool guarded = max_dopplers.size() > 1 || !forbidden.empty();
    const double demanded =
        std::accumulate(max_dopplers.begin(), max_dopplers.end(), 0.0,
                        [&](double acc, double f) { return acc + 2.0 * f + (guarded ? guard : 0.0); });
    const double available = 1.0 - std::min(blocked, 1.0);
    if (demanded > available + gap_tolerance) {
        throw InfeasiblePlan(fmt::format("alignment needs bandwidth {:.6g} but only {:.6g} is "
                                         "available (deficit {:.6g})",
                                         demanded, available, demanded - available),
                             demanded - available, 0);
    }

    std::vector<std::size_t> order(max_dopplers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return max_dopplers[a] < max_dopplers[b]; });

    AlignmentPlan plan;
    plan.length = length;
    plan.max_dopplers.assign(max_dopplers.begin(), max_dopplers.end());
    plan.forbidden.assign(forbidden.begin(), forbidden.end());
    plan.shifts.assign(max_dopplers.size(), 0);
    std::size_t placed = 0;
    for (const auto k : order) {
        const auto slot = first_fit(obstacles, max_dopplers[k], length);
        if (!slot.shift) {
            const double deficit = -slot.best_slack;
            throw InfeasiblePlan(fmt::format("no room for user {} (F = {}) after placing {} users; "
                                             "deficit {:.6g}",
                                             k, max_dopplers[k], placed, deficit),
                                 deficit, placed);
        }
        plan.shifts[k] = *slot.shift;
        obstacles.push_back({static_cast<double>(*slot.shift) / static_cast<double>(length),
                             max_dopplers[k]});
        ++placed;
    }
    return plan;
}

std::size_t alignment_capacity(double max_doppler, std::size_t length) {
    std::vector<Arc> obstacles;
    for (;;) {
        const auto slot = first_fit(obstacles, max_doppler, length);
        if (!slot.shift) {
            return obstacles.size();
        }
        obstacles.push_back({static_cast<double>(*slot.shift) / static_cast<double>(length), max_doppler});
    }
}

} // namespace psdalign
