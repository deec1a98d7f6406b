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

#include "scoamp/coupling.hpp"
#include "scoamp/errors.hpp"
#include "scoamp/kernels.hpp"

using namespace scoamp;
using coupling::BaseMatrix;
using coupling::Ensemble;

namespace {
denoiser::Prior bg01() { return denoiser::Prior::bernoulli_gaussian(0.1); }
}

TEST_CASE("uniform base matrix") {
    auto b0 = BaseMatrix::uniform(3, 0);
    for (int l = 0; l < 3; ++l) CHECK(b0.gamma(l, l) == 1.0);
    CHECK(b0.gamma(1, 0) == 0.0);

    auto b1 = BaseMatrix::uniform(2, 1);
    CHECK(b1.rows() == 3);
    for (int l = 0; l < 2; ++l)
        for (int w = 0; w <= 1; ++w)
            CHECK(b1.gamma(l + w, l) == Catch::Approx(1.0 / std::sqrt(2.0)));
    CHECK(b1.gamma(0, 1) == 0.0);

    // Column sums of squares are 1 for any (L, W).
    for (auto [L, W] : {std::pair{5, 2}, std::pair{8, 3}, std::pair{4, 0}}) {
        auto b = BaseMatrix::uniform(L, W);
        for (int l = 0; l < L; ++l) {
            double acc = 0.0;
            for (int w = 0; w <= W; ++w) acc += b.gamma(l + w, l) * b.gamma(l + w, l);
            CHECK(acc == Catch::Approx(1.0).margin(1e-14));
        }
    }
    CHECK_THROWS_AS(BaseMatrix::uniform(3, 3), DimError);
    // Band structure holds exactly outside ell - l in {0..W}.
    auto b2 = BaseMatrix::uniform(6, 2);
    for (int ell = 0; ell < b2.rows(); ++ell)
        for (int l = 0; l < 6; ++l)
            if (ell - l < 0 || ell - l > 2) CHECK(b2.gamma(ell, l) == 0.0);
}

TEST_CASE("build determinism and measurement consistency") {
    auto base = BaseMatrix::uniform(3, 1);
    auto s1 = coupling::build_system(base, 64, 19, Ensemble::IidGaussian, 1.0,
                                     bg01(), 1e-2, 42);
    auto s2 = coupling::build_system(base, 64, 19, Ensemble::IidGaussian, 1.0,
                                     bg01(), 1e-2, 42);
    for (int ell = 0; ell < base.rows(); ++ell)
        for (int i = 0; i < 19; ++i) CHECK(s1.y[ell][i] == s2.y[ell][i]);

    // y[ell] = A[ell] xvec[ell] + n[ell] exactly as built.
    for (int ell = 0; ell < base.rows(); ++ell) {
        const int nc = s1.nc(ell);
        std::vector<double> xvec(nc), ax(19);
        s1.projectors[ell].apply(s1.x_true.data(), xvec.data());
        const double sc = std::sqrt(double(base.w_count(ell)));
        for (auto& v : xvec) v *= sc;
        s1.sections[ell]->apply_a(xvec.data(), ax.data());
        for (int i = 0; i < 19; ++i)
            CHECK(s1.y[ell][i] - ax[i] - s1.noise[ell][i] ==
                  Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("W=0 system reduces to the uncoupled model") {
    auto base = BaseMatrix::uniform(1, 0);
    auto sys = coupling::build_system(base, 32, 13, Ensemble::IidGaussian, 1.0,
                                      bg01(), 1e-2, 5);
    auto a = sys.sections[0]->dense();
    std::vector<double> ax(13);
    kernels::gemv(a.data(), sys.x_true.data(), ax.data(), 13, 32);
    for (int i = 0; i < 13; ++i)
        CHECK(sys.y[0][i] == Catch::Approx(ax[i] + sys.noise[0][i]).margin(1e-10));
}

TEST_CASE("geometric singular values follow the condition-number profile") {
    const int m = 16, nc = 64;
    const double kappa = 10.0;
    auto s = coupling::geometric_singular_values(m, nc, kappa);
    CHECK(s.front() / s.back() == Catch::Approx(kappa).epsilon(1e-12));
    const double ratio = std::pow(kappa, -1.0 / (m - 1));
    for (int i = 1; i < m; ++i)
        CHECK(s[i] / s[i - 1] == Catch::Approx(ratio).epsilon(1e-12));
    CHECK(s[0] * s[0] ==
          Catch::Approx(nc * (1.0 - std::pow(kappa, -2.0 / (m - 1))) /
                        (1.0 - std::pow(kappa, -2.0 * m / (m - 1)))));
    // Unit-mean normalization of the section law.
    double acc = 0.0;
    for (double v : s) acc += v * v;
    CHECK(acc / nc == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("gamma projector action and adjoint") {
    auto base = BaseMatrix::uniform(4, 1);
    const int n = 8;
    auto proj = coupling::gamma_projector(base, 2, n);  // bulk section
    for (const auto& b : proj.blocks)
        CHECK(b.weight == Catch::Approx(1.0 / std::sqrt(2.0)));

    auto p0 = coupling::gamma_projector(BaseMatrix::uniform(3, 0), 1, n);
    CHECK(p0.blocks.size() == 1);
    CHECK(p0.blocks[0].weight == 1.0);

    // Random-vector adjoint identity <Gamma x, u> = <x, Gamma^T u>.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> x(4 * n), u(2 * n), gx(2 * n), gtu(4 * n, 0.0);
    for (auto& v : x) v = g(rng);
    for (auto& v : u) v = g(rng);
    proj.apply(x.data(), gx.data());
    proj.apply_adjoint_add(u.data(), gtu.data());
    const double lhs = kernels::dot(gx.data(), u.data(), u.size());
    const double rhs = kernels::dot(x.data(), gtu.data(), x.size());
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12));

    CHECK_THROWS_AS(coupling::gamma_projector(base, 5, n), IndexError);
    CHECK_THROWS_AS(coupling::gamma_projector(base, -1, n), IndexError);
}

TEST_CASE("initial variance") {
    auto b1 = BaseMatrix::uniform(8, 1);
    CHECK(coupling::initial_variance(b1, 4, 16) == Catch::Approx(1.0));
    auto b0 = BaseMatrix::uniform(4, 0);
    for (int ell = 0; ell < 4; ++ell)
        CHECK(coupling::initial_variance(b0, ell, 16) == Catch::Approx(1.0));

    // Boundary section, W=2: direct evaluation of
    // |W[0]| Nc^-1 sum_w N gamma^2 with W[0] = {0}.
    auto b2 = BaseMatrix::uniform(8, 2);
    const int n = 16;
    double direct = 0.0;
    for (int w = b2.w_min(0); w <= b2.w_max(0); ++w)
        direct += n * b2.gamma(0, -w) * b2.gamma(0, -w);
    direct *= b2.w_count(0) / double(b2.w_count(0) * n);
    CHECK(coupling::initial_variance(b2, 0, n) == Catch::Approx(direct));
    CHECK(direct == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("extraction identity across all three ensembles") {
    auto base = BaseMatrix::uniform(4, 1);
    const int n = 16, m = 8;
    for (auto ens : {Ensemble::IidGaussian, Ensemble::RowOrthogonal,
                     Ensemble::Geometric}) {
        const double kappa = ens == Ensemble::Geometric ? 5.0 : 1.0;
        auto sys = coupling::build_system(base, n, m, ens, kappa, bg01(), 1e-2, 9);
        for (int l = 0; l < 4; ++l)
            for (int w = 0; w <= 1; ++w) {
                const int ell = l + w;
                const int wsize = base.w_count(ell);
                std::vector<double> xvec(sys.nc(ell));
                sys.projectors[ell].apply(sys.x_true.data(), xvec.data());
                const double sc = std::sqrt(double(wsize));
                const std::size_t off = std::size_t(base.w_max(ell) - w) * n;
                for (int i = 0; i < n; ++i) {
                    const double lhs = (1.0 / sc) * (sc * xvec[off + i]);
                    const double rhs = base.gamma(ell, l) * sys.x_true[l * n + i];
                    CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
                }
            }
    }
}

TEST_CASE("cached SVD factors are orthogonal and reproduce the section") {
    auto base = BaseMatrix::uniform(2, 1);
    const int n = 16, m = 8;
    for (auto ens : {Ensemble::IidGaussian, Ensemble::RowOrthogonal,
                     Ensemble::Geometric}) {
        const double kappa = ens == Ensemble::Geometric ? 4.0 : 1.0;
        auto sys = coupling::build_system(base, n, m, ens, kappa, bg01(), 1e-2, 17);
        for (int ell = 0; ell < base.rows(); ++ell) {
            const auto& sec = *sys.sections[ell];
            const int nc = sec.nc();
            // ||U^T U - I||_max via basis vectors.
            std::vector<double> e(m, 0.0), ue(m), f(m);
            for (int j = 0; j < m; ++j) {
                e[j] = 1.0;
                sec.apply_u(e.data(), ue.data());
                sec.apply_ut(ue.data(), f.data());
                for (int i = 0; i < m; ++i)
                    CHECK(f[i] == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
                e[j] = 0.0;
            }
            // A e_j = U S V^T e_j columnwise.
            std::vector<double> basis(nc, 0.0), col(m), vt(m), usv(m);
            for (int j = 0; j < nc; ++j) {
                basis[j] = 1.0;
                sec.apply_a(basis.data(), col.data());
                sec.apply_vt(basis.data(), vt.data());
                for (int i = 0; i < m; ++i) vt[i] *= sec.sv()[i];
                sec.apply_u(vt.data(), usv.data());
                basis[j] = 0.0;
                for (int i = 0; i < m; ++i)
                    CHECK(col[i] == Catch::Approx(usv[i]).margin(1e-10));
            }
        }
    }
}

TEST_CASE("haar fallback engages on non-power-of-two sections") {
    // W=2 bulk sections have Nc = 3N, never a power of two.
    auto base = BaseMatrix::uniform(4, 2);
    auto sys = coupling::build_system(base, 8, 4, Ensemble::RowOrthogonal, 1.0,
                                      bg01(), 1e-2, 23);
    const auto& sec = *sys.sections[2];
    CHECK(sec.nc() == 24);
    // V1 columns orthonormal: V^T V = I.
    std::vector<double> d(4, 0.0), v(24), vt(4);
    for (int j = 0; j < 4; ++j) {
        d[j] = 1.0;
        sec.apply_v(d.data(), v.data());
        sec.apply_vt(v.data(), vt.data());
        for (int i = 0; i < 4; ++i)
            CHECK(vt[i] == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
        d[j] = 0.0;
    }
}

TEST_CASE("empirical section eigenvalues match the declared spectrum") {
    auto base = BaseMatrix::uniform(2, 1);
    const int n = 2048, m = 614;  // bulk Nc = 4096
    auto sys = coupling::build_system(base, n, m, Ensemble::IidGaussian, 1.0,
                                      bg01(), 1e-3, 31);
    const auto spec = sys.section_spectrum(1);
    const auto mu = spectra::moments(spec, 2);
    const auto& sv = sys.sections[1]->sv();
    const int nc = sys.nc(1);
    const double wsize = 2.0;
    double m1 = 0.0, m2 = 0.0;
    for (double s : sv) {
        const double lam = wsize * s * s;  // eigenvalue of |W| A^T A
        m1 += lam;
        m2 += lam * lam;
    }
    m1 /= nc;
    m2 /= nc;
    CHECK(std::abs(m1 - mu[0]) / mu[0] < 0.03);
    CHECK(std::abs(m2 - mu[1]) / mu[1] < 0.03);
}

TEST_CASE("config validation errors") {
    auto base = BaseMatrix::uniform(2, 1);
    CHECK_THROWS_AS(coupling::build_system(base, 16, 24, Ensemble::IidGaussian,
                                           1.0, bg01(), 1e-2, 1),
                    ConfigError);  // M > N
    CHECK_THROWS_AS(coupling::build_system(base, 16, 8, Ensemble::IidGaussian,
                                           1.0, bg01(), 0.0, 1),
                    ConfigError);  // sigma2 = 0
    CHECK_THROWS_AS(coupling::build_system(base, 16, 8, Ensemble::Geometric,
                                           1.0, bg01(), 1e-2, 1),
                    ConfigError);  // geometric needs kappa > 1
}
