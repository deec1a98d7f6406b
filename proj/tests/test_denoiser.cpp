// Copyright 2026-present the scoamp project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "scoamp/denoiser.hpp"
#include "scoamp/errors.hpp"

using namespace scoamp;
using denoiser::Prior;

namespace {

// Independent posterior oracle: numeric integration of the BG posterior on a
// fine Simpson grid (no reuse of the closed-form pi).
struct PosteriorOracle {
    double rho, v;
    double mean = 0.0, second = 0.0;
    PosteriorOracle(double rho_, double u, double v_) : rho(rho_), v(v_) {
        const double s0 = 1.0 / rho;
        auto gauss = [](double x, double var) {
            return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var);
        };
        // Numerator integrals over the nonzero component.
        const double lim = 12.0 * std::sqrt(s0);
        const int steps = 40000;  // Simpson
        const double h = 2.0 * lim / steps;
        double z0 = 0.0, z1 = 0.0, z2 = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double x = -lim + i * h;
            const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double f = gauss(x, s0) * gauss(u - x, v);
            z0 += w * f;
            z1 += w * f * x;
            z2 += w * f * x * x;
        }
        z0 *= h / 3.0;
        z1 *= h / 3.0;
        z2 *= h / 3.0;
        const double denom = (1.0 - rho) * gauss(u, v) + rho * z0;
        mean = rho * z1 / denom;
        second = rho * z2 / denom;
    }
    double variance() const { return second - mean * mean; }
};

}  // namespace

TEST_CASE("denoise closed form matches the quadrature posterior oracle") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    for (double u : {0.3, 1.0, 2.5}) {
        for (double v : {0.5, 0.1}) {
            const PosteriorOracle oracle(0.1, u, v);
            CHECK(denoiser::denoise(bg, u, v) ==
                  Catch::Approx(oracle.mean).margin(1e-10));
            CHECK(denoiser::posterior_variance(bg, u, v) ==
                  Catch::Approx(oracle.variance()).margin(1e-10));
        }
    }
}

TEST_CASE("denoiser basics") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    auto gs = Prior::gaussian();
    CHECK(denoiser::denoise(gs, 0.8, 0.25) == Catch::Approx(0.8 / 1.25));
    CHECK(denoiser::denoise(bg, 0.0, 0.3) == 0.0);
    CHECK(denoiser::denoise_derivative(gs, 1.7, 0.25) == Catch::Approx(1.0 / 1.25));
    CHECK_THROWS_AS(denoiser::denoise(bg, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(denoiser::denoise(bg, 1.0, -1.0), DomainError);

    // rho = 1 is the Gaussian prior.
    auto bg1 = Prior::bernoulli_gaussian(1.0);
    for (double u : {-2.0, 0.4, 3.0}) {
        CHECK(denoiser::denoise(bg1, u, 0.6) ==
              Catch::Approx(denoiser::denoise(gs, u, 0.6)).margin(1e-12));
        CHECK(denoiser::posterior_variance(bg1, u, 0.6) ==
              Catch::Approx(denoiser::posterior_variance(gs, u, 0.6)).margin(1e-12));
    }
    CHECK(denoiser::mmse(bg1, 3.0) == Catch::Approx(0.25).margin(1e-10));
}

TEST_CASE("derivative matches central differences") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    const double u = 0.7, v = 0.3, h = 1e-6;
    const double fd =
        (denoiser::denoise(bg, u + h, v) - denoiser::denoise(bg, u - h, v)) /
        (2.0 * h);
    const double an = denoiser::denoise_derivative(bg, u, v);
    CHECK(std::abs(an - fd) / std::abs(an) < 1e-6);
}

TEST_CASE("posterior variance identity v f' and Monte-Carlo consistency") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    for (double u : {-3.0, -0.5, 0.0, 0.9, 4.2})
        for (double v : {0.03, 0.4, 2.0})
            CHECK(denoiser::posterior_variance(bg, u, v) ==
                  Catch::Approx(v * denoiser::denoise_derivative(bg, u, v))
                      .margin(1e-10));

    // Averaged posterior variance is a consistent MMSE estimator.
    const double v = 1.0;  // s = 1
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u01;
    double acc = 0.0;
    const long n = 1'000'000;
    for (long i = 0; i < n; ++i) {
        const double x = denoiser::sample(bg, u01(rng), g(rng));
        acc += denoiser::posterior_variance(bg, x + std::sqrt(v) * g(rng), v);
    }
    CHECK(std::abs(acc / n - denoiser::mmse(bg, 1.0 / v)) /
              denoiser::mmse(bg, 1.0 / v) <
          0.005);
}

TEST_CASE("mmse properties") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    auto gs = Prior::gaussian();
    CHECK(denoiser::mmse(gs, 4.0) == Catch::Approx(0.2));
    CHECK(denoiser::mmse(bg, 0.0) == 1.0);
    CHECK(denoiser::mmse(gs, 0.0) == 1.0);
    for (double s : {1.0, 10.0, 100.0}) {
        const double m = denoiser::mmse(bg, s);
        CHECK(m <= std::min(1.0, 1.0 / s));
    }
    // Strictly decreasing on a grid.
    double prev = 1.0 + 1e-12;
    for (int i = 0; i <= 40; ++i) {
        const double s = std::pow(10.0, -1.0 + 0.1 * i);
        const double m = denoiser::mmse(bg, s);
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("mmse matches direct Monte-Carlo at high SNR") {
    // Regression for the detection-boundary resolution at 30 dB regimes.
    auto bg = Prior::bernoulli_gaussian(0.1);
    const double s = 694.0, v = 1.0 / s;
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u01;
    double acc = 0.0;
    const long n = 4'000'000;
    for (long i = 0; i < n; ++i) {
        const double x = denoiser::sample(bg, u01(rng), g(rng));
        const double d = x - denoiser::denoise(bg, x + std::sqrt(v) * g(rng), v);
        acc += d * d;
    }
    const double mc = acc / n;
    CHECK(std::abs(denoiser::mmse(bg, s) - mc) / mc < 0.01);
}

TEST_CASE("mutual information") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    auto gs = Prior::gaussian();
    CHECK(std::abs(denoiser::mutual_info(gs, 3.0) - 0.5 * std::log(4.0)) /
              (0.5 * std::log(4.0)) <
          1e-6);
    CHECK(denoiser::mutual_info(bg, 0.0) == 0.0);

    double prev = -1e-12;
    for (int i = 0; i <= 20; ++i) {
        const double s = 5.0 * i;
        const double is = denoiser::mutual_info(bg, s);
        CHECK(is >= prev);
        prev = is;
    }

    // dI/ds = MMSE/2.
    const double s0 = 2.0, h = 1e-4;
    const double fd = (denoiser::mutual_info(bg, s0 + h) -
                       denoiser::mutual_info(bg, s0 - h)) /
                      (2.0 * h);
    CHECK(std::abs(fd - 0.5 * denoiser::mmse(bg, s0)) < 1e-5);

    // Cached integral agrees with direct quadrature.
    denoiser::MmseIntegralCache cache(bg);
    for (double s : {0.7, 3.0, 42.0, 1234.0})
        CHECK(cache.mutual_info(s) ==
              Catch::Approx(denoiser::mutual_info(bg, s)).epsilon(1e-7));
}

TEST_CASE("Bayes orthogonality: residual uncorrelated with the estimate") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u01;
    const double v = 0.5;
    double acc = 0.0, acc2 = 0.0;
    const long n = 1'000'000;
    for (long i = 0; i < n; ++i) {
        const double x = denoiser::sample(bg, u01(rng), g(rng));
        const double f = denoiser::denoise(bg, x + std::sqrt(v) * g(rng), v);
        const double t = (x - f) * f;
        acc += t;
        acc2 += t * t;
    }
    const double mean = acc / n;
    const double sd = std::sqrt((acc2 / n - mean * mean) / n);
    CHECK(std::abs(mean) < 3.0 * sd);
}

TEST_CASE("denoiser expectation functionals") {
    auto bg = Prior::bernoulli_gaussian(0.1);
    const double v = 0.2;
    // E[f'] = MMSE/v (conditional-variance identity aggregated).
    CHECK(denoiser::mean_fprime(bg, v) ==
          Catch::Approx(denoiser::mmse(bg, 1.0 / v) / v).epsilon(1e-8));
    // E[x f] = E[f^2] and MMSE = 1 - E[f^2] for the Bayes denoiser.
    const double exf = denoiser::mean_x_f(bg, v);
    const double ef2 = denoiser::mean_f_squared(bg, v);
    CHECK(exf == Catch::Approx(ef2).epsilon(1e-8));
    CHECK(denoiser::mmse(bg, 1.0 / v) == Catch::Approx(1.0 - ef2).epsilon(1e-8));
    // Zero-lag mean_ff is E[f^2].
    CHECK(denoiser::mean_ff_lagged(bg, v, v) == Catch::Approx(ef2).epsilon(1e-9));
}
