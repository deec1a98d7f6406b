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

#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "scoamp/errors.hpp"
#include "scoamp/spectra.hpp"

using namespace scoamp;
using spectra::Spectrum;

namespace {

// Monte-Carlo trace oracle: draws A (M x N, variance 1/M) once and evaluates
// (1/N) Tr{(I + z A^T A)^{-1}} through the M x M Woodbury reduction.
struct GaussianTraceOracle {
    Eigen::MatrixXd aat;  // A A^T
    int n;
    GaussianTraceOracle(int m, int n_, std::uint64_t seed) : n(n_) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(m));
        Eigen::MatrixXd a(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = g(rng);
        aat = a * a.transpose();
    }
    double eta(double z) const {
        const int m = static_cast<int>(aat.rows());
        Eigen::MatrixXd k =
            Eigen::MatrixXd::Identity(m, m) + z * aat;
        // Tr{(I_N + z A^T A)^{-1}} = N - M + Tr{(I_M + z A A^T)^{-1}}.
        const double tr = k.llt().solve(Eigen::MatrixXd::Identity(m, m)).trace();
        return (n - m + tr) / n;
    }
    double mu2() const { return aat.squaredNorm() / n; }
};

}  // namespace

TEST_CASE("eta transform basics") {
    // Identity spectrum: eta(z) = 1/(1+z).
    auto ident = Spectrum::empirical(std::vector<double>(64, 1.0), 64);
    CHECK(spectra::eta_transform(ident, 1.0) == Catch::Approx(0.5).margin(1e-15));
    for (auto spec : {Spectrum::iid_gaussian(0.5), Spectrum::row_orthogonal(0.4),
                      Spectrum::geometric(0.5, 10.0), ident})
        CHECK(spectra::eta_transform(spec, 0.0) == 1.0);
}

TEST_CASE("iid Gaussian eta matches the Monte-Carlo trace at N=4096") {
    const GaussianTraceOracle oracle(2048, 4096, 99);
    auto spec = Spectrum::iid_gaussian(0.5);
    const double z = 2.0;
    const double predicted = spectra::eta_transform(spec, z);
    CHECK(std::abs(predicted - oracle.eta(z)) / predicted < 0.02);
}

TEST_CASE("R-transform closed forms and identities") {
    auto sg = Spectrum::iid_gaussian(0.3);
    CHECK(spectra::r_transform(sg, -1.0) == Catch::Approx(0.3 / 1.3).epsilon(1e-12));
    for (auto spec : {Spectrum::iid_gaussian(0.5), Spectrum::row_orthogonal(0.4),
                      Spectrum::geometric(0.5, 10.0)})
        CHECK(spectra::r_transform(spec, 0.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(spectra::r_transform(sg, 0.5), DomainError);
}

TEST_CASE("row-orthogonal closed form agrees with empirical inversion") {
    auto ro = Spectrum::row_orthogonal(0.4);
    auto emp = Spectrum::empirical(std::vector<double>(400, 2.5), 1000);
    for (double z : {-0.25, -1.0, -4.0, -16.0})
        CHECK(spectra::r_transform(ro, z) ==
              Catch::Approx(spectra::r_transform(emp, z)).epsilon(1e-9));
}

TEST_CASE("geometric R by inversion agrees with a discretized empirical law") {
    const double delta = 0.5, kappa = 10.0;
    auto geo = Spectrum::geometric(delta, kappa);
    // Log-uniform discretization of the continuum law.
    const int r = 20000, dim = 40000;
    const double c = 2.0 * std::log(kappa) / delta;
    const double lmax = c / (1.0 - 1.0 / (kappa * kappa));
    std::vector<double> ev(r);
    for (int i = 0; i < r; ++i) {
        const double t = (i + 0.5) / r;
        ev[i] = lmax * std::pow(kappa, -2.0 * (1.0 - t));
    }
    auto emp = Spectrum::empirical(ev, dim, 0.01);
    for (double z : {-0.5, -2.0, -8.0})
        CHECK(spectra::r_transform(geo, z) ==
              Catch::Approx(spectra::r_transform(emp, z)).epsilon(1e-4));
}

TEST_CASE("coupled-limit geometric R matches the closed-form integral") {
    // Corollary-style width limit: R_G(z/w) for the width-w section law
    // approaches the closed form as w grows.
    for (double kappa : {10.0, 100.0}) {
        auto wide = Spectrum::geometric(0.5 / 256, kappa);
        double max_err = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double z = -10.0 * i / 20.0;
            max_err = std::max(
                max_err, std::abs(spectra::r_transform(wide, z / 256) -
                                  spectra::geometric_r_closed_form(0.5, kappa, z)));
        }
        CHECK(max_err < 1e-3);
    }
}

TEST_CASE("moments") {
    auto emp = Spectrum::empirical({2.0, 0.0}, 2);
    auto mu = spectra::moments(emp, 2);
    CHECK(mu[0] == 1.0);
    CHECK(mu[1] == 2.0);

    const GaussianTraceOracle oracle(1229, 4096, 101);
    auto sg = Spectrum::iid_gaussian(1229.0 / 4096.0);
    auto mu_g = spectra::moments(sg, 2);
    CHECK(mu_g[0] == Catch::Approx(1.0));
    CHECK(mu_g[1] == Catch::Approx(1.0 + 4096.0 / 1229.0).epsilon(1e-12));
    CHECK(std::abs(mu_g[1] - oracle.mu2()) / mu_g[1] < 0.02);

    auto ro = Spectrum::row_orthogonal(0.25);
    CHECK(spectra::moments(ro, 2)[1] == Catch::Approx(4.0));

    // Moment recursion vs direct quadrature of the MP density.
    auto mu_q = spectra::spectral_mean(sg, [](double l) { return l * l * l; });
    CHECK(spectra::moments(sg, 3)[2] == Catch::Approx(mu_q).epsilon(1e-8));
}

TEST_CASE("r_transform_identities_check") {
    auto rep = spectra::r_transform_identities_check(Spectrum::iid_gaussian(0.5));
    CHECK(rep.r_at_zero == Catch::Approx(1.0).margin(1e-12));
    CHECK(rep.r_deriv_at_zero == Catch::Approx(2.0).margin(1e-4));
    CHECK(rep.r0_residual < 1e-12);
    CHECK(rep.r_deriv0_residual < 1e-4);

    auto ident = Spectrum::empirical(std::vector<double>(32, 1.0), 32);
    auto rep_i = spectra::r_transform_identities_check(ident);
    CHECK(std::abs(rep_i.r_deriv_at_zero) < 1e-6);

    auto rep_g = spectra::r_transform_identities_check(Spectrum::geometric(0.5, 10.0));
    CHECK(rep_g.r0_residual < 1e-4);
    CHECK(rep_g.r_deriv0_residual < 1e-4);
}

TEST_CASE("transform invariants on grids") {
    auto specs = {Spectrum::iid_gaussian(0.3), Spectrum::row_orthogonal(0.3),
                  Spectrum::geometric(0.5, 10.0)};
    for (const auto& spec : specs) {
        // z eta(z) strictly increasing, eta in (0,1] nonincreasing.
        double prev_ze = 0.0, prev_eta = 1.0 + 1e-15;
        for (int i = 1; i <= 100; ++i) {
            const double z = 0.2 * i;
            const double eta = spectra::eta_transform(spec, z);
            CHECK(z * eta > prev_ze);
            CHECK(eta > 0.0);
            CHECK(eta <= prev_eta);
            prev_ze = z * eta;
            prev_eta = eta;
        }
        // R nonnegative and nondecreasing on (z_min, 0].
        double prev_r = 0.0;
        for (int i = 60; i >= 0; --i) {
            const double z = -0.5 * i;
            const double r = spectra::r_transform(spec, z);
            CHECK(r >= prev_r - 1e-12);
            CHECK(r >= 0.0);
            prev_r = r;
        }
    }
    // z R(-z) -> delta for full-rank-ratio spectra.
    for (auto spec : {Spectrum::iid_gaussian(0.3), Spectrum::row_orthogonal(0.3)})
        CHECK(std::abs(1e4 * spectra::r_transform(spec, -1e4) - 0.3) < 1e-2);
}

TEST_CASE("coupled-limit convergence halves with the width") {
    const double delta = 0.3;
    double prev = 0.0;
    for (int w : {4, 8, 16, 32}) {
        auto g = Spectrum::row_orthogonal(delta / (w + 1));
        double max_err = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double z = -10.0 * i / 20.0;
            max_err = std::max(max_err,
                               std::abs(spectra::r_transform(g, z / (w + 1)) -
                                        delta / (delta - z)));
        }
        if (prev > 0.0) {
            CHECK(max_err / prev > 0.4);
            CHECK(max_err / prev < 0.6);
        }
        prev = max_err;
    }
}

TEST_CASE("empirical spectrum validation") {
    CHECK_THROWS_AS(Spectrum::empirical({5.0, 5.0}, 2), DomainError);
    CHECK_THROWS_AS(Spectrum::empirical({-1.0, 3.0}, 2), DomainError);
    auto emp = Spectrum::empirical({2.0, 0.0}, 2);
    CHECK(emp.delta == 0.5);
}
