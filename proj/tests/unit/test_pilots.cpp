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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "psdalign/fading.hpp"
#include "psdalign/pilots.hpp"

using namespace psdalign;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<cd> random_unit_sequence(std::size_t length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
    std::vector<cd> out(length);
    for (auto& x : out) {
        x = std::polar(1.0, phase(rng));
    }
    return out;
}

} // namespace

TEST_CASE("FFT pilot with zero shift is the base", "[pilots]") {
    const auto x = fft_pilot(0, 8);
    for (const auto& v : x.entries()) {
        CHECK(v == cd(1.0));
    }
    CHECK(x.shift() == 0u);
}

TEST_CASE("FFT pilot with shift P/2 alternates sign", "[pilots]") {
    const auto x = fft_pilot(4, 8);
    for (std::size_t n = 0; n < 8; ++n) {
        CHECK(x.entries()[n] == cd(n % 2 == 0 ? 1.0 : -1.0));
    }
}

TEST_CASE("FFT pilots modulate the base and keep unit modulus", "[pilots][property]") {
    const auto base = random_unit_sequence(60, 5);
    for (std::size_t tau : {0UL, 1UL, 7UL, 30UL, 59UL}) {
        const auto x = fft_pilot(tau, base);
        CHECK(x.modulus_deviation() < 1e-12);
        for (std::size_t n = 0; n < 60; ++n) {
            const cd expected = std::polar(1.0, 2.0 * pi * static_cast<double>(tau * n) / 60.0) * base[n];
            CHECK(std::abs(x.entries()[n] - expected) < 1e-12);
        }
    }
}

TEST_CASE("FFT pilot rejects bad input", "[pilots]") {
    CHECK_THROWS_AS(fft_pilot(8, 8), std::invalid_argument);
    std::vector<cd> base(8, cd(1.0));
    base[3] = cd(0.5);
    CHECK_THROWS_AS(fft_pilot(1, base), std::invalid_argument);
    CHECK_THROWS_AS(PilotSequence(std::vector<cd>{cd(1.0), cd(2.0)}), std::invalid_argument);
}

TEST_CASE("Hadamard pilots", "[pilots]") {
    const auto one = hadamard_pilots(1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].entries()[0] == cd(1.0));

    const auto two = hadamard_pilots(2);
    CHECK(two[0].entries()[0] == cd(1.0));
    CHECK(two[0].entries()[1] == cd(1.0));
    CHECK(two[1].entries()[0] == cd(1.0));
    CHECK(two[1].entries()[1] == cd(-1.0));

    const auto eight = hadamard_pilots(8);
    int pairs = 0;
    for (std::size_t a = 0; a < 8; ++a) {
        CHECK(eight[a].modulus_deviation() == 0.0);
        for (std::size_t b = a + 1; b < 8; ++b) {
            cd inner{};
            for (std::size_t n = 0; n < 8; ++n) {
                inner += std::conj(eight[a].entries()[n]) * eight[b].entries()[n];
            }
            CHECK(inner == cd{});
            ++pairs;
        }
    }
    CHECK(pairs == 28);
    CHECK_THROWS_AS(hadamard_pilots(6), std::invalid_argument);
    CHECK_THROWS_AS(hadamard_pilots(0), std::invalid_argument);
}

TEST_CASE("Repeated pilots are periodic", "[pilots]") {
    const auto rows = hadamard_pilots(8);
    const auto x = repeat_pilot(rows[3], 64);
    REQUIRE(x.size() == 64);
    for (std::size_t n = 0; n < 64; ++n) {
        CHECK(x.entries()[n] == rows[3].entries()[n % 8]);
    }
}

TEST_CASE("Cross matrix of a pilot with itself is the identity", "[pilots]") {
    const auto x = fft_pilot(3, 16);
    const auto cross = cross_matrix(x, x);
    CHECK((cross.matrix() - CMatrix::Identity(16, 16)).norm() < 1e-12);
    CHECK((cross.theta() - CMatrix::Identity(16, 16)).norm() < 1e-12);
}

TEST_CASE("Theta of FFT pilots is the cyclic shift by the relative shift", "[pilots]") {
    const auto cross = cross_matrix(fft_pilot(0, 8), fft_pilot(3, 8));
    const std::vector<double> expected{0, 0, 0, 1, 0, 0, 0, 0};
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK_THAT(std::abs(cross.theta_column[i]), WithinAbs(expected[i], 1e-12));
    }
    CHECK_THROWS_AS(cross_matrix(fft_pilot(0, 8), fft_pilot(0, 16)), std::invalid_argument);
}

TEST_CASE("Theta of FFT pilot pairs is a permutation", "[pilots][property]") {
    const auto base = random_unit_sequence(32, 17);
    for (std::size_t a : {0UL, 5UL, 31UL}) {
        for (std::size_t b : {0UL, 2UL, 16UL}) {
            const CMatrix theta = cross_matrix(fft_pilot(a, base), fft_pilot(b, base)).theta();
            for (Eigen::Index i = 0; i < 32; ++i) {
                int row_units = 0;
                int col_units = 0;
                for (Eigen::Index j = 0; j < 32; ++j) {
                    for (auto [v, count] : {std::pair{theta(i, j), &row_units}, std::pair{theta(j, i), &col_units}}) {
                        if (std::abs(std::abs(v) - 1.0) < 1e-10) {
                            ++*count;
                        } else {
                            CHECK(std::abs(v) < 1e-10);
                        }
                    }
                }
                CHECK(row_units == 1);
                CHECK(col_units == 1);
            }
        }
    }
}

TEST_CASE("Hadamard cross matrices have zero trace", "[pilots]") {
    const auto rows = hadamard_pilots(8);
    const auto cross = cross_matrix(rows[1], rows[2]);
    CHECK(std::abs(cross.matrix().trace()) < 1e-12);
}

TEST_CASE("Constant channels with orthogonal Hadamard pilots have zero residual", "[pilots]") {
    const auto rows = hadamard_pilots(8);
    const CMatrix ones = CMatrix::Ones(8, 8);
    const auto cross = cross_matrix(rows[1], rows[2]);
    CHECK(orthogonality_residual(ones, ones, cross.diagonal) < 1e-10);
}

TEST_CASE("Residual of a user against itself is positive", "[pilots]") {
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.02), 64);
    const auto same = cross_matrix(fft_pilot(5, 64), fft_pilot(5, 64));
    const CMatrix r = cov.toeplitz();
    const double dense = orthogonality_residual(r, r, same.diagonal);
    CHECK(dense > 0.0);
    CHECK_THAT(dense, WithinAbs((r * r).norm() / 64.0, 1e-12));
}

TEST_CASE("Fast and dense orthogonality residuals agree", "[pilots]") {
    const auto k = build_covariance(DopplerSpectrum::clarke(0.02), 96);
    const auto g = build_covariance(DopplerSpectrum::flat_band({-0.1, 0.2}), 96);
    for (std::size_t shift : {0UL, 10UL, 48UL}) {
        const auto cross = cross_matrix(fft_pilot(0, 96), fft_pilot(shift, 96));
        const double dense = orthogonality_residual(k.toeplitz(), g.toeplitz(), cross.diagonal);
        CHECK_THAT(orthogonality_residual(k, g, cross), WithinAbs(dense, 1e-12 * (1.0 + dense)));
    }
}

TEST_CASE("Shift orthogonality on eigenvalue supports", "[pilots]") {
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.02), 128);
    CHECK_FALSE(shift_orthogonal(cov.psd_samples(), cov.psd_samples(), 0));

    const auto wide = build_covariance(DopplerSpectrum::clarke(0.002), 1000);
    CHECK(shift_orthogonal(wide.psd_samples(), wide.psd_samples(), 500));

    const std::vector<double> zero(1000, 0.0);
    for (long shift : {0L, 1L, 500L, 999L}) {
        CHECK(shift_orthogonal(zero, wide.psd_samples(), shift));
    }
    CHECK_THROWS_AS(shift_orthogonal(zero, std::vector<double>(10, 1.0), 0), std::invalid_argument);
}

TEST_CASE("Shift orthogonality implies decaying residuals", "[pilots][property]") {
    std::vector<double> residuals;
    for (std::size_t p : {512UL, 1024UL, 2048UL, 4096UL}) {
        const auto cov = build_covariance(DopplerSpectrum::clarke(0.002), p);
        REQUIRE(shift_orthogonal(cov.psd_samples(), cov.psd_samples(), static_cast<long>(p / 2)));
        residuals.push_back(orthogonality_residual(cov, cov, cross_matrix(fft_pilot(0, p), fft_pilot(p / 2, p))));
    }
    for (std::size_t i = 1; i < residuals.size(); ++i) {
        CHECK(residuals[i] < residuals[i - 1]);
    }
}

TEST_CASE("The published eight-user plan passes the checker", "[pilots][plan]") {
    AlignmentPlan plan;
    plan.length = 4032; // multiple of 36 so that k/36 is an integer shift
    plan.forbidden = {{-0.375, 0.375}};
    for (int k = 1; k <= 8; ++k) {
        const double fraction = wrap_frequency(3.0 / 8.0 + k / 36.0);
        plan.shifts.push_back(static_cast<std::size_t>(std::llround((fraction < 0 ? fraction + 1.0 : fraction) * 4032.0)));
        plan.max_dopplers.push_back(0.002);
    }
    const auto check = check_plan(plan);
    INFO(check.violations.size());
    CHECK(check.valid);
    CHECK(check.forbidden_margin > 0.0);
    CHECK(check.user_margin >= 0.0);
}

TEST_CASE("Checker rejects overlapping and intruding users", "[pilots][plan]") {
    AlignmentPlan plan;
    plan.length = 1000;
    plan.shifts = {0, 5};
    plan.max_dopplers = {0.002, 0.002};
    CHECK(check_plan(plan).valid);
    plan.shifts = {0, 4};
    CHECK_FALSE(check_plan(plan).valid);
    plan.shifts = {500, 0};
    plan.forbidden = {{-0.1, 0.1}};
    const auto check = check_plan(plan);
    CHECK_FALSE(check.valid);
    CHECK(check.violations.size() == 1);
}

TEST_CASE("Planner output always satisfies the plan invariants", "[pilots][plan][property]") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> doppler(0.0005, 0.02);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> fs(1 + trial % 12);
        for (auto& f : fs) {
            f = doppler(rng);
        }
        std::vector<Band> forbidden;
        if (trial % 2 == 0) {
            forbidden.push_back({-0.2, 0.15});
        }
        const std::size_t p = 2048;
        const auto plan = plan_alignment(fs, forbidden, p);
        CHECK(check_plan(plan).valid);
        std::vector<ChannelCovariance> covs;
        for (double f : fs) {
            covs.push_back(build_covariance(DopplerSpectrum::clarke(f), p));
        }
        for (std::size_t a = 0; a < fs.size(); ++a) {
            for (std::size_t b = a + 1; b < fs.size(); ++b) {
                const long shift = static_cast<long>(plan.shifts[b]) - static_cast<long>(plan.shifts[a]);
                CHECK(shift_orthogonal(covs[a].psd_samples(), covs[b].psd_samples(), shift));
            }
        }
    }
}

TEST_CASE("Uniform Doppler planning packs shifts evenly", "[pilots][plan]") {
    const std::vector<double> fs(10, 0.002);
    const auto plan = plan_alignment(fs, {}, 4096);
    // Closed supports of width 2FP = 16.384 bins plus a one-bin guard need 18 slots.
    for (std::size_t k = 0; k < fs.size(); ++k) {
        CHECK(plan.shifts[k] == 18 * k);
    }
}

TEST_CASE("Uniform Doppler shifts are multiples of ceil(2FP)", "[pilots][plan]") {
    const std::vector<double> fs(10, 0.002);
    const auto plan = plan_alignment(fs, {}, 4096);
    const auto step = static_cast<std::size_t>(std::ceil(2.0 * 0.002 * 4096));
    for (std::size_t k = 0; k < fs.size(); ++k) {
        CHECK(plan.shifts[k] == step * k);
    }
}

TEST_CASE("Single user is placed at zero shift", "[pilots][plan]") {
    for (double f : {0.001, 0.25, 0.5}) {
        const std::vector<double> fs{f};
        const auto plan = plan_alignment(fs, {}, 64);
        CHECK(plan.shifts == std::vector<std::size_t>{0});
    }
}

TEST_CASE("Overfull plans report the width deficit", "[pilots][plan]") {
    const std::vector<double> fs(300, 0.002);
    try {
        plan_alignment(fs, {}, 4096);
        FAIL("expected an infeasible plan");
    } catch (const InfeasiblePlan& e) {
        CHECK(e.deficit() > 0.0);
    }
    const std::vector<double> two{0.1, 0.1};
    const std::vector<Band> forbidden{{-0.45, 0.45}};
    CHECK_THROWS_AS(plan_alignment(two, forbidden, 256), InfeasiblePlan);
}
