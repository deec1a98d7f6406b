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

#include "scoamp/coupling.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "scoamp/errors.hpp"
#include "scoamp/kernels.hpp"

namespace scoamp::coupling {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Beyond this size the O(Nc^3) Haar fallback is refused.
constexpr int kHaarFallbackLimit = 8192;

class DenseSection final : public RowSection {
  public:
    DenseSection(std::vector<double> a, int m, int nc) : RowSection(m, nc), a_(std::move(a)) {
        Eigen::Map<const RowMat> amap(a_.data(), m, nc);
        Eigen::MatrixXd aat = amap * amap.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(aat);
        sv_.resize(m);
        u_.resize(static_cast<std::size_t>(m) * m);
        for (int j = 0; j < m; ++j) {
            const int src = m - 1 - j;  // descending order
            sv_[j] = std::sqrt(std::max(es.eigenvalues()(src), 0.0));
            for (int i = 0; i < m; ++i)
                u_[static_cast<std::size_t>(i) * m + j] = es.eigenvectors()(i, src);
        }
    }

    void apply_a(const double* x, double* y) const override {
        kernels::gemv(a_.data(), x, y, m_, nc_);
    }
    void apply_at(const double* y, double* x) const override {
        kernels::gemv_t(a_.data(), y, x, m_, nc_);
    }
    void apply_u(const double* d, double* out) const override {
        kernels::gemv(u_.data(), d, out, m_, m_);
    }
    void apply_ut(const double* r, double* out) const override {
        kernels::gemv_t(u_.data(), r, out, m_, m_);
    }
    void apply_v(const double* d, double* out) const override {
        std::vector<double> t(m_), t2(m_);
        for (int i = 0; i < m_; ++i) t[i] = sv_[i] > 0.0 ? d[i] / sv_[i] : 0.0;
        apply_u(t.data(), t2.data());
        apply_at(t2.data(), out);
    }
    void apply_vt(const double* x, double* out) const override {
        std::vector<double> t(m_), t2(m_);
        apply_a(x, t.data());
        apply_ut(t.data(), t2.data());
        for (int i = 0; i < m_; ++i) out[i] = sv_[i] > 0.0 ? t2[i] / sv_[i] : 0.0;
    }

  private:
    std::vector<double> a_;  // row-major M x Nc
    std::vector<double> u_;  // row-major M x M
};

// A = S H with H the row-permuted normalized Hadamard: U = I and the first
// M rows of H form V1^T. Applications go through the fast transform.
class HadamardSection final : public RowSection {
  public:
    HadamardSection(std::vector<int> perm, std::vector<double> s, int m, int nc)
        : RowSection(m, nc), perm_(std::move(perm)) {
        sv_ = std::move(s);
    }

    void apply_a(const double* x, double* y) const override {
        std::vector<double> t(x, x + nc_);
        hadamard(t.data());
        for (int i = 0; i < m_; ++i) y[i] = sv_[i] * t[perm_[i]];
    }
    void apply_at(const double* y, double* x) const override {
        std::fill(x, x + nc_, 0.0);
        for (int i = 0; i < m_; ++i) x[perm_[i]] = sv_[i] * y[i];
        hadamard(x);
    }
    void apply_u(const double* d, double* out) const override {
        std::copy(d, d + m_, out);
    }
    void apply_ut(const double* r, double* out) const override {
        std::copy(r, r + m_, out);
    }
    void apply_v(const double* d, double* out) const override {
        std::fill(out, out + nc_, 0.0);
        for (int i = 0; i < m_; ++i) out[perm_[i]] = d[i];
        hadamard(out);
    }
    void apply_vt(const double* x, double* out) const override {
        std::vector<double> t(x, x + nc_);
        hadamard(t.data());
        for (int i = 0; i < m_; ++i) out[i] = t[perm_[i]];
    }

  private:
    void hadamard(double* v) const {
        kernels::fwht(v, static_cast<std::size_t>(nc_));
        const double inv = 1.0 / std::sqrt(static_cast<double>(nc_));
        for (int i = 0; i < nc_; ++i) v[i] *= inv;
    }
    std::vector<int> perm_;
};

// A = S V1^T with V1 the first M columns of a Haar orthogonal matrix.
class HaarSection final : public RowSection {
  public:
    HaarSection(std::vector<double> v1t, std::vector<double> s, int m, int nc)
        : RowSection(m, nc), v1t_(std::move(v1t)) {
        sv_ = std::move(s);
    }

    void apply_a(const double* x, double* y) const override {
        kernels::gemv(v1t_.data(), x, y, m_, nc_);
        for (int i = 0; i < m_; ++i) y[i] *= sv_[i];
    }
    void apply_at(const double* y, double* x) const override {
        std::vector<double> t(m_);
        for (int i = 0; i < m_; ++i) t[i] = sv_[i] * y[i];
        kernels::gemv_t(v1t_.data(), t.data(), x, m_, nc_);
    }
    void apply_u(const double* d, double* out) const override {
        std::copy(d, d + m_, out);
    }
    void apply_ut(const double* r, double* out) const override {
        std::copy(r, r + m_, out);
    }
    void apply_v(const double* d, double* out) const override {
        kernels::gemv_t(v1t_.data(), d, out, m_, nc_);
    }
    void apply_vt(const double* x, double* out) const override {
        kernels::gemv(v1t_.data(), x, out, m_, nc_);
    }

  private:
    std::vector<double> v1t_;  // row-major M x Nc
};

}  // namespace

BaseMatrix::BaseMatrix(int L, int W, std::vector<double> band)
    : L_(L), W_(W), band_(std::move(band)) {
    if (W < 0 || W >= L) throw DimError("base matrix: requires 0 <= W < L");
    if (band_.size() != static_cast<std::size_t>((W + 1) * L))
        throw DimError("base matrix: band table must be (W+1) x L");
    double power = 0.0;
    for (int l = 0; l < L; ++l)
        for (int w = 0; w <= W; ++w) power += gamma(l + w, l) * gamma(l + w, l);
    power /= L;
    if (std::abs(power - 1.0) > 1e-12)
        throw DomainError("base matrix: power normalization violated (" +
                          std::to_string(power) + ")");
}

BaseMatrix BaseMatrix::uniform(int L, int W) {
    if (W < 0 || W >= L) throw DimError("uniform base: requires 0 <= W < L");
    std::vector<double> band(static_cast<std::size_t>((W + 1) * L),
                             1.0 / std::sqrt(static_cast<double>(W + 1)));
    return BaseMatrix(L, W, std::move(band));
}

double BaseMatrix::gamma(int ell, int l) const {
    const int w = ell - l;
    if (l < 0 || l >= L_ || w < 0 || w > W_) return 0.0;
    return band_[static_cast<std::size_t>(w) * L_ + l];
}

std::vector<double> RowSection::dense() const {
    std::vector<double> a(static_cast<std::size_t>(m_) * nc_);
    std::vector<double> e(nc_, 0.0), col(m_);
    for (int j = 0; j < nc_; ++j) {
        e[j] = 1.0;
        apply_a(e.data(), col.data());
        e[j] = 0.0;
        for (int i = 0; i < m_; ++i) a[static_cast<std::size_t>(i) * nc_ + j] = col[i];
    }
    return a;
}

void GammaProjector::apply(const double* x_all, double* out) const {
    for (const auto& b : blocks) {
        const double* src = x_all + static_cast<std::size_t>(b.col_section) * n;
        double* dst = out + b.offset;
        for (int i = 0; i < n; ++i) dst[i] = b.weight * src[i];
    }
}

void GammaProjector::apply_adjoint_add(const double* u, double* x_all) const {
    for (const auto& b : blocks) {
        const double* src = u + b.offset;
        double* dst = x_all + static_cast<std::size_t>(b.col_section) * n;
        kernels::axpy(b.weight, src, dst, static_cast<std::size_t>(n));
    }
}

GammaProjector gamma_projector(const BaseMatrix& base, int ell, int n) {
    if (ell < 0 || ell >= base.rows())
        throw IndexError("gamma_projector: row section " + std::to_string(ell) +
                         " outside L_W");
    GammaProjector p;
    p.ell = ell;
    p.n = n;
    // Blocks ordered by ascending column section, i.e. w descending.
    std::size_t offset = 0;
    for (int w = base.w_max(ell); w >= base.w_min(ell); --w) {
        p.blocks.push_back({w, ell - w, offset, base.gamma(ell, ell - w)});
        offset += static_cast<std::size_t>(n);
    }
    return p;
}

double initial_variance(const BaseMatrix& base, int ell, int n) {
    if (ell < 0 || ell >= base.rows())
        throw IndexError("initial_variance: row section outside L_W");
    const double wsize = base.w_count(ell);
    const double nc = wsize * n;
    double acc = 0.0;
    for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
        const double g = base.gamma(ell, ell - w);
        acc += n * g * g;
    }
    return wsize * acc / nc;
}

std::vector<double> geometric_singular_values(int m, int nc_scaled, double kappa) {
    std::vector<double> s(m);
    if (kappa == 1.0) {
        const double v = std::sqrt(static_cast<double>(nc_scaled) / m);
        std::fill(s.begin(), s.end(), v);
        return s;
    }
    if (m < 2) throw DimError("geometric singular values: need M >= 2 for kappa > 1");
    const double ratio = std::pow(kappa, -1.0 / (m - 1));
    const double s0 = std::sqrt(nc_scaled * (1.0 - ratio * ratio) /
                                (1.0 - std::pow(ratio, 2.0 * m)));
    double cur = s0;
    for (int i = 0; i < m; ++i) {
        s[i] = cur;
        cur *= ratio;
    }
    return s;
}

spectra::Spectrum CoupledSystem::section_spectrum(int ell) const {
    const double delta_eff = static_cast<double>(m) / nc(ell);
    switch (ensemble) {
        case Ensemble::IidGaussian:
            return spectra::Spectrum::iid_gaussian(delta_eff);
        case Ensemble::RowOrthogonal:
            return spectra::Spectrum::row_orthogonal(delta_eff);
        case Ensemble::Geometric:
            return spectra::Spectrum::geometric(delta_eff, kappa);
    }
    throw ConfigError("unknown ensemble");
}

CoupledSystem build_system(const BaseMatrix& base, int n, int m,
                           Ensemble ensemble, double kappa,
                           const denoiser::Prior& prior, double sigma2,
                           std::uint64_t seed) {
    if (n < 1 || m < 1 || m > n)
        throw ConfigError("build_system: requires 1 <= M <= N");
    if (!(sigma2 > 0.0)) throw ConfigError("build_system: sigma2 must be > 0");
    if (ensemble == Ensemble::Geometric && !(kappa > 1.0))
        throw ConfigError("build_system: geometric ensemble needs kappa > 1");

    CoupledSystem sys{base, n, m, ensemble, kappa, sigma2, seed, prior, {}, {}, {}, {}, {}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    sys.x_true.resize(static_cast<std::size_t>(base.L()) * n);
    for (auto& xi : sys.x_true) {
        const double u = unif(rng);
        xi = denoiser::sample(prior, u, gauss(rng));
    }

    for (int ell = 0; ell < base.rows(); ++ell) {
        const int wsize = base.w_count(ell);
        const int nc = wsize * n;

        std::unique_ptr<RowSection> section;
        if (ensemble == Ensemble::IidGaussian) {
            // sqrt(|W|) A has N(0, 1/M) entries.
            const double sd = 1.0 / std::sqrt(static_cast<double>(m) * wsize);
            std::vector<double> a(static_cast<std::size_t>(m) * nc);
            for (auto& v : a) v = sd * gauss(rng);
            section = std::make_unique<DenseSection>(std::move(a), m, nc);
        } else {
            auto s = geometric_singular_values(m, nc, kappa);
            const double inv_w = 1.0 / std::sqrt(static_cast<double>(wsize));
            for (auto& v : s) v *= inv_w;
            if (is_pow2(nc)) {
                std::vector<int> perm(nc);
                std::iota(perm.begin(), perm.end(), 0);
                for (int i = nc - 1; i > 0; --i) {
                    std::uniform_int_distribution<int> pick(0, i);
                    std::swap(perm[i], perm[pick(rng)]);
                }
                section = std::make_unique<HadamardSection>(std::move(perm),
                                                            std::move(s), m, nc);
            } else if (nc <= kHaarFallbackLimit) {
                // Haar V1: QR of a Gaussian Nc x M block with sign-fixed R diagonal.
                Eigen::MatrixXd g(nc, m);
                for (int j = 0; j < m; ++j)
                    for (int i = 0; i < nc; ++i) g(i, j) = gauss(rng);
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
                Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nc, m);
                for (int j = 0; j < m; ++j)
                    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
                std::vector<double> v1t(static_cast<std::size_t>(m) * nc);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < nc; ++j)
                        v1t[static_cast<std::size_t>(i) * nc + j] = q(j, i);
                section = std::make_unique<HaarSection>(std::move(v1t), std::move(s), m, nc);
            } else {
                throw DimError("build_system: |W[ell]|*N = " + std::to_string(nc) +
                               " is not a power of two and exceeds the Haar "
                               "fallback limit");
            }
        }

        auto proj = gamma_projector(base, ell, n);
        std::vector<double> xvec(nc);
        proj.apply(sys.x_true.data(), xvec.data());
        const double scale = std::sqrt(static_cast<double>(wsize));
        for (auto& v : xvec) v *= scale;

        std::vector<double> yell(m), nell(m);
        section->apply_a(xvec.data(), yell.data());
        const double sd_noise = std::sqrt(sigma2);
        for (int i = 0; i < m; ++i) {
            nell[i] = sd_noise * gauss(rng);
            yell[i] += nell[i];
        }

        sys.sections.push_back(std::move(section));
        sys.projectors.push_back(std::move(proj));
        sys.y.push_back(std::move(yell));
        sys.noise.push_back(std::move(nell));
    }
    return sys;
}

}  // namespace scoamp::coupling
