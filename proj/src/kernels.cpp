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

#include "scoamp/kernels.hpp"

#include <stdexcept>

namespace scoamp::kernels {

namespace {

bool detect_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    bool has_avx2 = detect_avx2();
    Backend backend = has_avx2 ? Backend::Avx2 : Backend::Scalar;
    const detail::Ops* ops =
        has_avx2 ? &detail::avx2_ops() : &detail::scalar_ops();
};

State& state() {
    static State s;
    return s;
}

}  // namespace

bool avx2_available() { return state().has_avx2; }

Backend active_backend() { return state().backend; }

void force_backend(Backend b) {
    if (b == Backend::Avx2 && !state().has_avx2)
        throw std::runtime_error("force_backend: AVX2 not available on this CPU");
    state().backend = b;
    state().ops = (b == Backend::Avx2) ? &detail::avx2_ops() : &detail::scalar_ops();
}

double dot(const double* a, const double* b, std::size_t n) {
    return state().ops->dot(a, b, n);
}
double sum(const double* a, std::size_t n) { return state().ops->sum(a, n); }
double sumsq(const double* a, std::size_t n) { return state().ops->sumsq(a, n); }
double sqdiff(const double* a, const double* b, std::size_t n) {
    return state().ops->sqdiff(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    state().ops->axpy(alpha, x, y, n);
}
void scale_add(double alpha, const double* x, double beta, const double* y,
               double* out, std::size_t n) {
    state().ops->scale_add(alpha, x, beta, y, out, n);
}
void gemv(const double* a, const double* x, double* y, std::size_t rows,
          std::size_t cols) {
    state().ops->gemv(a, x, y, rows, cols);
}
void gemv_t(const double* a, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    state().ops->gemv_t(a, x, y, rows, cols);
}
void fwht(double* x, std::size_t n) { state().ops->fwht(x, n); }

}  // namespace scoamp::kernels
