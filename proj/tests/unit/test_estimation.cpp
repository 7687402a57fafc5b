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

#include "psdalign/estimation.hpp"
#include "psdalign/stats.hpp"

using namespace psdalign;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SceneMember member(double power, PilotSequence pilot, ChannelCovariance cov) {
    return {power, std::move(pilot), std::move(cov)};
}

// sqrt(rho) R X^H Q^{-1} y with Q assembled densely and solved by LU.
CMatrix dense_estimate(const UplinkScene& scene, std::size_t k, const CMatrix& y) {
    const auto p = static_cast<Eigen::Index>(scene.length());
    CMatrix q = scene.noise_variance * CMatrix::Identity(p, p);
    for (const auto* group : {&scene.users, &scene.interferers}) {
        for (const auto& m : *group) {
            CMatrix x = CMatrix::Zero(p, p);
            for (Eigen::Index i = 0; i < p; ++i) {
                x(i, i) = m.pilot.entries()[static_cast<std::size_t>(i)];
            }
            q += m.power * x * m.covariance.toeplitz() * x.adjoint();
        }
    }
    const auto& u = scene.users[k];
    CMatrix xk = CMatrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        xk(i, i) = u.pilot.entries()[static_cast<std::size_t>(i)];
    }
    return std::sqrt(u.power) * u.covariance.toeplitz() * xk.adjoint() * q.fullPivLu().solve(y);
}

UplinkScene random_scene(std::mt19937_64& rng, std::size_t p) {
    std::uniform_real_distribution<double> doppler(0.01, 0.3);
    std::uniform_real_distribution<double> power(0.2, 3.0);
    std::uniform_int_distribution<std::size_t> shift(0, p - 1);
    UplinkScene scene;
    scene.noise_variance = power(rng);
    for (int k = 0; k < 2; ++k) {
        scene.users.push_back(member(power(rng), fft_pilot(shift(rng), p),
                                     build_covariance(DopplerSpectrum::clarke(doppler(rng)), p)));
    }
    return scene;
}

} // namespace

TEST_CASE("Noise-free single user is recovered exactly", "[estimation]") {
    constexpr std::size_t p = 16;
    UplinkScene scene;
    scene.noise_variance = 0.0;
    const double rho = 2.0;
    scene.users.push_back(member(rho, fft_pilot(3, p), build_covariance(DopplerSpectrum::flat_band({-0.4, 0.45}), p)));
    const MmseEstimator estimator(scene, kernels::Execution::serial);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    CMatrix h(p, 3);
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        h(i) = cd(normal(rng), normal(rng));
    }
    CMatrix y = h;
    for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(p); ++n) {
        y.row(n) *= std::sqrt(rho) * scene.users[0].pilot.entries()[static_cast<std::size_t>(n)];
    }
    const CMatrix estimate = estimator.estimate(0, y);
    CHECK((estimate - h).norm() / h.norm() < 1e-8);
}

TEST_CASE("Noise-free rank-deficient system is rejected", "[estimation]") {
    UplinkScene scene;
    scene.noise_variance = 0.0;
    scene.users.push_back(member(1.0, fft_pilot(0, 8), covariance_from_autocorrelation(std::vector<cd>(8, cd(1.0)))));
    CHECK_THROWS_AS(MmseEstimator(scene), SingularSystem);
}

TEST_CASE("Scene validation", "[estimation]") {
    UplinkScene scene;
    CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
    scene.users.push_back(member(1.0, fft_pilot(0, 8), build_covariance(DopplerSpectrum::clarke(0.1), 8)));
    scene.users.push_back(member(1.0, fft_pilot(0, 16), build_covariance(DopplerSpectrum::clarke(0.1), 16)));
    CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
    scene.users.pop_back();
    scene.noise_variance = -1.0;
    CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
}

TEST_CASE("Zero transmit power gives the prior mean and prior covariance", "[estimation]") {
    constexpr std::size_t p = 32;
    UplinkScene scene;
    scene.users.push_back(member(0.0, fft_pilot(0, p), build_covariance(DopplerSpectrum::clarke(0.05), p)));
    scene.users.push_back(member(1.0, fft_pilot(16, p), build_covariance(DopplerSpectrum::clarke(0.05), p)));
    const CVector y = CVector::Ones(p);
    CHECK(mmse_estimate(y, scene, 0).norm() == 0.0);
    const auto e = error_covariance(scene, 0);
    CHECK((e.matrix - scene.users[0].covariance.toeplitz()).norm() < 1e-12);
    CHECK_THAT(e.mse, WithinAbs(1.0, 1e-12));
}

TEST_CASE("Small transmit power drives the estimate to zero", "[estimation]") {
    constexpr std::size_t p = 32;
    const CVector y = CVector::Ones(p);
    const auto pilot = fft_pilot(3, p);
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.05), p);
    CVector derotated(p);
    for (std::size_t n = 0; n < p; ++n) {
        derotated(static_cast<Eigen::Index>(n)) = std::conj(pilot.entries()[n]) * y(static_cast<Eigen::Index>(n));
    }
    // first order in rho: sqrt(rho) R X^H y / sigma^2
    const CVector limit = cov.toeplitz() * derotated / 2.0;
    double previous = INFINITY;
    for (double rho : {1.0, 1e-2, 1e-4, 1e-6}) {
        UplinkScene scene;
        scene.noise_variance = 2.0;
        scene.users.push_back(member(rho, pilot, cov));
        const CVector estimate = mmse_estimate(y, scene, 0);
        CHECK(estimate.norm() < previous);
        previous = estimate.norm();
        if (rho == 1e-6) {
            CHECK((estimate / std::sqrt(rho) - limit).norm() < 1e-4 * limit.norm());
        }
    }
}

TEST_CASE("Estimator matches the dense formula", "[estimation]") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        auto scene = random_scene(rng, 24);
        scene.interferers.push_back(member(0.7, fft_pilot(0, 24), build_covariance(DopplerSpectrum::flat_band({-0.375, 0.375}), 24)));
        CMatrix y(24, 2);
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y(i) = cd(normal(rng), normal(rng));
        }
        for (auto execution : {kernels::Execution::serial, kernels::Execution::parallel}) {
            const MmseEstimator estimator(scene, execution);
            for (std::size_t k = 0; k < 2; ++k) {
                const CMatrix reference = dense_estimate(scene, k, y);
                CHECK((estimator.estimate(k, y) - reference).norm() < 1e-10 * (1.0 + reference.norm()));
            }
        }
    }
}

TEST_CASE("Error covariance is Hermitian with MSE between 0 and r(0)", "[estimation][property]") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto scene = random_scene(rng, 20);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto e = error_covariance(scene, k);
            CHECK((e.matrix - e.matrix.adjoint()).norm() < 1e-12);
            CHECK(e.mse >= 0.0);
            CHECK(e.mse <= 1.0 + 1e-12);
            const auto& u = scene.users[k];
            const double alone = interference_free_mse(u.covariance, u.power, scene.noise_variance);
            CHECK(alone <= e.mse + 1e-12);
        }
    }
}

TEST_CASE("Without interference the error covariance reduces to the single-user form", "[estimation]") {
    constexpr std::size_t p = 48;
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.04), p);
    UplinkScene scene;
    scene.noise_variance = 0.5;
    scene.users.push_back(member(1.5, fft_pilot(7, p), cov));
    const auto e = error_covariance(scene, 0);
    const CMatrix e0 = interference_free_covariance(cov, 1.5, 0.5);
    CHECK((e.matrix - e0).norm() < 1e-10);
    CHECK_THAT(e.mse, WithinAbs(e0.trace().real() / p, 1e-12));
    CHECK_THAT(interference_free_mse(cov, 1.5, 0.5), WithinAbs(e.mse, 1e-12));
}

TEST_CASE("Fast interference-free MSE matches the dense covariance", "[estimation]") {
    for (const auto& spectrum : {DopplerSpectrum::clarke(0.002), DopplerSpectrum::clarke(0.2),
                                 DopplerSpectrum::flat_band({0.05, 0.3})}) {
        for (double noise : {0.01, 1.0, 10.0}) {
            const auto cov = build_covariance(spectrum, 64);
            const double dense = interference_free_covariance(cov, 1.0, noise).trace().real() / 64.0;
            CHECK_THAT(interference_free_mse(cov, 1.0, noise), WithinAbs(dense, 1e-12));
        }
    }
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.1), 16);
    CHECK(interference_free_mse(cov, 0.0, 1.0) == 1.0);
    CHECK(interference_free_mse(cov, 1.0, 0.0) == 0.0);
}

TEST_CASE("Interference-free MSE at P = 512 matches the frozen reference", "[estimation]") {
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.002), 512);
    CHECK_THAT(interference_free_mse(cov, 1.0, 1.0), WithinRel(0.008276133269717668, 1e-9));
}

TEST_CASE("Orthogonal Hadamard pilots on constant channels see no interference", "[estimation]") {
    constexpr std::size_t p = 8;
    const auto rows = hadamard_pilots(p);
    const auto cov = covariance_from_autocorrelation(std::vector<cd>(p, cd(1.0)));
    UplinkScene scene;
    scene.noise_variance = 1.0;
    scene.users.push_back(member(1.0, rows[1], cov));
    scene.users.push_back(member(1.0, rows[2], cov));
    const double single = interference_free_mse(cov, 1.0, 1.0);
    CHECK_THAT(error_covariance(scene, 0).mse, WithinAbs(single, 1e-12));
    CHECK_THAT(error_covariance(scene, 1).mse, WithinAbs(single, 1e-12));
}

TEST_CASE("MSE is monotone in power, noise and interference", "[estimation][property]") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        const auto base = random_scene(rng, 16);
        const double mse = error_covariance(base, 0).mse;

        auto stronger = base;
        stronger.users[0].power *= 2.0;
        CHECK(error_covariance(stronger, 0).mse <= mse + 1e-12);

        auto noisier = base;
        noisier.noise_variance *= 2.0;
        CHECK(error_covariance(noisier, 0).mse >= mse - 1e-12);

        auto louder = base;
        louder.users[1].power *= 3.0;
        CHECK(error_covariance(louder, 0).mse >= mse - 1e-12);

        auto contaminated = base;
        contaminated.interferers.push_back(
            member(0.5, fft_pilot(0, 16), build_covariance(DopplerSpectrum::flat_band({-0.375, 0.375}), 16)));
        CHECK(error_covariance(contaminated, 0).mse >= mse - 1e-12);
    }
}

TEST_CASE("Aligned users reach the interference-free MSE empirically", "[estimation][statistical]") {
    constexpr std::size_t p = 1024;
    constexpr std::size_t draws = 500;
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.002), p);
    UplinkScene scene;
    scene.noise_variance = 1.0;
    scene.users.push_back(member(1.0, fft_pilot(0, p), cov));
    scene.users.push_back(member(1.0, fft_pilot(p / 2, p), cov));
    const ProcessSynthesizer synthesizer(cov);
    const CMatrix h0 = synthesizer.draw(draws, 1).samples;
    const CMatrix h1 = synthesizer.draw(draws, 2).samples;
    CMatrix y(p, draws);
    for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(p); ++n) {
        y.row(n) = scene.users[0].pilot.entries()[static_cast<std::size_t>(n)] * h0.row(n) +
                   scene.users[1].pilot.entries()[static_cast<std::size_t>(n)] * h1.row(n);
    }
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y(i) += cd(normal(rng), normal(rng));
    }
    const MmseEstimator estimator(scene);
    const CMatrix solved = estimator.solve(y);
    const double alone = interference_free_mse(cov, 1.0, 1.0);
    for (std::size_t k = 0; k < 2; ++k) {
        const CMatrix& h = k == 0 ? h0 : h1;
        const CMatrix error = estimator.estimate_from_solved(k, solved) - h;
        stats::Accumulator per_draw;
        for (Eigen::Index d = 0; d < error.cols(); ++d) {
            per_draw.add(error.col(d).squaredNorm() / p);
        }
        const double exact = estimator.error_covariance(k).mse;
        const double se = std::sqrt(per_draw.variance() / static_cast<double>(draws));
        INFO("user " << k << " empirical " << per_draw.mean() << " exact " << exact << " alone " << alone);
        CHECK(std::abs(per_draw.mean() - exact) < 3.0 * se);
        CHECK(exact >= alone);
        CHECK_THAT(exact, WithinRel(alone, 0.05));
    }
}

TEST_CASE("Estimation error is orthogonal to the observation", "[estimation][statistical]") {
    constexpr std::size_t p = 12;
    constexpr std::size_t draws = 600;
    const auto cov = build_covariance(DopplerSpectrum::clarke(0.08), p);
    UplinkScene scene;
    scene.noise_variance = 0.5;
    scene.users.push_back(member(1.0, fft_pilot(2, p), cov));
    scene.users.push_back(member(0.8, fft_pilot(8, p), cov));
    const CMatrix h0 = synthesize_realization(cov, draws, 10).samples;
    const CMatrix h1 = synthesize_realization(cov, draws, 11).samples;
    CMatrix y(p, draws);
    for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(p); ++n) {
        y.row(n) = scene.users[0].pilot.entries()[static_cast<std::size_t>(n)] * h0.row(n) +
                   std::sqrt(0.8) * scene.users[1].pilot.entries()[static_cast<std::size_t>(n)] * h1.row(n);
    }
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.25));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y(i) += cd(normal(rng), normal(rng));
    }
    const CMatrix error = MmseEstimator(scene).estimate(0, y) - h0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(p); ++i) {
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
            const Eigen::ArrayXcd z = error.row(i).transpose().array() * y.row(j).transpose().array().conjugate();
            const cd mean = z.mean();
            const double se = std::sqrt((z - mean).abs2().sum() / (draws - 1.0) / draws);
            CHECK(std::abs(mean) < 4.0 * se);
        }
    }
}

TEST_CASE("Asymptotic MSE for a flat band", "[estimation]") {
    const auto flat = DopplerSpectrum::flat_band({-0.002, 0.002});
    CHECK_THAT(asymptotic_mse(flat, {}, 1.0, 1.0), WithinAbs(1.0 / 251.0, 1e-12));
    CHECK_THAT(asymptotic_mse(flat, {}, 1.0, 1.0), WithinAbs(0.00398406374501992, 1e-15));
}

TEST_CASE("Asymptotic MSE limits", "[estimation]") {
    const auto clarke = DopplerSpectrum::clarke(0.002);
    CHECK(asymptotic_mse(clarke, {}, 1.0, 0.0) == 0.0);
    CHECK(asymptotic_mse(clarke, {}, 0.0, 1.0) == 1.0);
    CHECK_THAT(asymptotic_mse(clarke, {}, 1.0, 1.0), WithinAbs(clarke_closed_form(pi * 0.002), 1e-6));
    CHECK_THAT(asymptotic_mse(clarke, {}, 1.0, 1.0), WithinAbs(0.0039803654858293345, 1e-12));
}

TEST_CASE("Asymptotic MSE ignores interferers with disjoint support", "[estimation]") {
    const auto user = DopplerSpectrum::clarke(0.002);
    const double alone = asymptotic_mse(user, {}, 1.0, 1.0);
    const std::vector<ShiftedSpectrum> far{{DopplerSpectrum::clarke(0.002), 0.5, 1.0},
                                           {DopplerSpectrum::flat_band({-0.375, 0.375}), 0.5, 1.0}};
    CHECK_THAT(asymptotic_mse(user, far, 1.0, 1.0), WithinAbs(alone, 1e-12));
    const std::vector<ShiftedSpectrum> near{{DopplerSpectrum::clarke(0.002), 0.001, 1.0}};
    CHECK(asymptotic_mse(user, near, 1.0, 1.0) > alone);
    const std::vector<ShiftedSpectrum> same{{DopplerSpectrum::clarke(0.002), 0.0, 1.0}};
    CHECK(asymptotic_mse(user, same, 1.0, 1.0) > alone);
}

TEST_CASE("Closed-form MSE matches the integral across alpha", "[estimation]") {
    const auto clarke = DopplerSpectrum::clarke(0.002);
    for (auto [alpha, frozen] : {std::pair{0.05, 0.030631797953724631}, std::pair{0.2, 0.11021104612641317},
                                 std::pair{1.0, 0.36338022763241866}, std::pair{5.0, 0.7020997266993957}}) {
        CHECK_THAT(clarke_closed_form(alpha), WithinAbs(frozen, 1e-14));
        CHECK_THAT(asymptotic_mse(clarke, {}, 1.0, alpha / (pi * 0.002)), WithinAbs(frozen, 1e-6));
    }
}

TEST_CASE("Closed form is continuous at alpha = 1", "[estimation]") {
    CHECK_THAT(clarke_closed_form(1.0), WithinAbs(1.0 - 2.0 / pi, 1e-12));
    CHECK_THAT(clarke_closed_form(1.0 - 1e-6), WithinAbs(0.363380015425743, 1e-12));
    CHECK_THAT(clarke_closed_form(1.0 + 1e-6), WithinAbs(0.363380439838925, 1e-12));
    CHECK_THAT(clarke_closed_form(1.0 - 1e-6), WithinAbs(1.0 - 2.0 / pi, 1e-4));
    CHECK_THAT(clarke_closed_form(1.0 + 1e-6), WithinAbs(1.0 - 2.0 / pi, 1e-4));
    CHECK(clarke_closed_form(1e-9) < 1e-8);
    CHECK_THROWS_AS(clarke_closed_form(0.0), std::invalid_argument);
    CHECK_THROWS_AS(clarke_closed_form(-1.0), std::invalid_argument);
}

TEST_CASE("Small-alpha MSE and processing gain", "[estimation]") {
    CHECK_THAT(small_alpha_mse(0.002, 1.0), WithinAbs(0.004, 1e-15));
    CHECK_THAT(small_alpha_mse(0.011, 1.0), WithinAbs(0.022, 1e-15));
    const auto gain = processing_gain_db(0.002, 1.0);
    REQUIRE(gain);
    CHECK_THAT(*gain, WithinAbs(10.0 * std::log10(249.0), 1e-12));
    CHECK_THAT(*gain, WithinAbs(23.9619934709574, 1e-9));
    CHECK_FALSE(processing_gain_db(0.25, 0.5).has_value());
    CHECK_FALSE(processing_gain_db(0.25, 0.1).has_value());
    CHECK_THROWS_AS(small_alpha_mse(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("Empirical gain equals the analytic gain at the small-alpha MSE", "[estimation]") {
    const double snr = 1.0;
    const double nmse = small_alpha_mse(0.002, snr);
    const auto empirical = empirical_processing_gain_db(nmse, snr);
    REQUIRE(empirical);
    CHECK_THAT(*empirical, WithinAbs(*processing_gain_db(0.002, snr), 1e-12));
    CHECK_FALSE(empirical_processing_gain_db(0.0, 1.0).has_value());
    CHECK_FALSE(empirical_processing_gain_db(1.0, 1.0).has_value());
}

TEST_CASE("Taylor expansion of the closed form", "[estimation]") {
    for (auto [alpha, limit, frozen] :
         {std::tuple{0.1, 0.2, 0.03439059008}, std::tuple{0.01, 0.02, 0.003716356562}}) {
        const auto t = taylor_check(alpha);
        const double ratio = std::abs(t.exact - t.series) / (alpha * alpha * alpha);
        CHECK(ratio <= limit);
        CHECK_THAT(ratio, WithinRel(frozen, 1e-6));
    }
    const double tiny = 1e-6;
    CHECK_THAT(taylor_check(tiny).exact / (2.0 * tiny / pi), WithinAbs(1.0, 1e-5));
    CHECK_THROWS_AS(taylor_check(1.5), std::invalid_argument);
}
