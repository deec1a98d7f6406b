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

#pragma once

#include <cstddef>

// Inner-loop arithmetic kernels used by the message-passing solvers.
// Each kernel has a scalar reference implementation and an AVX2 variant;
// the backend is selected once at startup from CPUID and can be forced
// for equivalence testing.
namespace scoamp::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
// Testing hook. Forcing Avx2 on a CPU without it throws.
void force_backend(Backend b);
bool avx2_available();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
// Sum of squared differences.
double sqdiff(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// out = alpha * x + beta * y  (aliasing with x or y allowed)
void scale_add(double alpha, const double* x, double beta, const double* y,
               double* out, std::size_t n);
// y = A x with A row-major (rows x cols)
void gemv(const double* a, const double* x, double* y, std::size_t rows,
          std::size_t cols);
// y = A^T x with A row-major (rows x cols); y has length cols
void gemv_t(const double* a, const double* x, double* y, std::size_t rows,
            std::size_t cols);
// In-place unnormalized Walsh-Hadamard transform; n must be a power of two.
void fwht(double* x, std::size_t n);

namespace detail {
struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
    double (*sqdiff)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale_add)(double, const double*, double, const double*, double*,
                      std::size_t);
    void (*gemv)(const double*, const double*, double*, std::size_t,
                 std::size_t);
    void (*gemv_t)(const double*, const double*, double*, std::size_t,
                   std::size_t);
    void (*fwht)(double*, std::size_t);
};
const Ops& scalar_ops();
const Ops& avx2_ops();
}  // namespace detail

}  // namespace scoamp::kernels
