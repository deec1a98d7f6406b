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
#include <vector>

#include "scoamp/kernels.hpp"

using namespace scoamp::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

struct BackendGuard {
    Backend saved = active_backend();
    ~BackendGuard() { force_backend(saved); }
};

}  // namespace

TEST_CASE("scalar and AVX2 backends agree on all kernels") {
    if (!avx2_available()) {
        SUCCEED("no AVX2 on this machine; dispatch stays scalar");
        return;
    }
    BackendGuard guard;
    std::mt19937_64 seeds(123);
    // Odd lengths exercise the vector-tail paths.
    for (std::size_t n : {1ul, 3ul, 4ul, 7ul, 61ul, 256ul, 1000ul, 4097ul}) {
        auto a = random_vec(n, seeds());
        auto b = random_vec(n, seeds());

        force_backend(Backend::Scalar);
        const double dot_s = dot(a.data(), b.data(), n);
        const double sum_s = sum(a.data(), n);
        const double sq_s = sumsq(a.data(), n);
        const double sd_s = sqdiff(a.data(), b.data(), n);
        auto y_s = b;
        axpy(0.773, a.data(), y_s.data(), n);
        std::vector<double> z_s(n);
        scale_add(0.3, a.data(), -1.7, b.data(), z_s.data(), n);

        force_backend(Backend::Avx2);
        const double dot_v = dot(a.data(), b.data(), n);
        const double sum_v = sum(a.data(), n);
        const double sq_v = sumsq(a.data(), n);
        const double sd_v = sqdiff(a.data(), b.data(), n);
        auto y_v = b;
        axpy(0.773, a.data(), y_v.data(), n);
        std::vector<double> z_v(n);
        scale_add(0.3, a.data(), -1.7, b.data(), z_v.data(), n);

        const double scale = std::sqrt(static_cast<double>(n));
        CHECK(std::abs(dot_s - dot_v) < 1e-12 * scale);
        CHECK(std::abs(sum_s - sum_v) < 1e-12 * scale);
        CHECK(std::abs(sq_s - sq_v) < 1e-12 * n);
        CHECK(std::abs(sd_s - sd_v) < 1e-12 * n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(y_s[i] == Catch::Approx(y_v[i]).margin(1e-14));
            CHECK(z_s[i] == Catch::Approx(z_v[i]).margin(1e-14));
        }
    }
}

TEST_CASE("gemv matches a naive triple loop on both backends") {
    const std::size_t rows = 13, cols = 37;
    auto a = random_vec(rows * cols, 5);
    auto x = random_vec(cols, 6);
    auto xr = random_vec(rows, 7);

    std::vector<double> y_ref(rows, 0.0), yt_ref(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            y_ref[r] += a[r * cols + c] * x[c];
            yt_ref[c] += a[r * cols + c] * xr[r];
        }

    BackendGuard guard;
    for (Backend b : {Backend::Scalar, Backend::Avx2}) {
        if (b == Backend::Avx2 && !avx2_available()) continue;
        force_backend(b);
        std::vector<double> y(rows), yt(cols);
        gemv(a.data(), x.data(), y.data(), rows, cols);
        gemv_t(a.data(), xr.data(), yt.data(), rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            CHECK(y[r] == Catch::Approx(y_ref[r]).margin(1e-12));
        for (std::size_t c = 0; c < cols; ++c)
            CHECK(yt[c] == Catch::Approx(yt_ref[c]).margin(1e-12));
    }
}

TEST_CASE("fwht is an involution up to scale and matches both backends") {
    BackendGuard guard;
    for (std::size_t n : {2ul, 8ul, 64ul, 1024ul}) {
        auto x = random_vec(n, 17 + n);
        auto ref = x;
        force_backend(Backend::Scalar);
        auto xs = x;
        fwht(xs.data(), n);
        auto twice = xs;
        fwht(twice.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(twice[i] == Catch::Approx(n * ref[i]).margin(1e-9 * n));

        if (avx2_available()) {
            force_backend(Backend::Avx2);
            auto xv = x;
            fwht(xv.data(), n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(xs[i] == Catch::Approx(xv[i]).margin(1e-11 * n));
        }
    }
}
