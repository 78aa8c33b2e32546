#include "cqnls/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cqnls::kernels {

namespace {
Backend g_backend =
#ifdef _OPENMP
    Backend::openmp;
#else
    Backend::serial;
#endif

inline std::size_t nblocks(std::size_t n) {
    return (n + reduce_block - 1) / reduce_block;
}
} // namespace

Backend backend() { return g_backend; }

void set_backend(Backend b) {
#ifndef _OPENMP
    b = Backend::serial;
#endif
    g_backend = b;
}

bool openmp_compiled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Deterministic blocked reduction: each block is summed left-to-right, block
// results are combined in index order.  The OpenMP variant distributes blocks
// over threads; the arithmetic is identical to the serial variant.
template <typename T, typename F>
static T blocked_reduce(std::size_t n, F&& block_sum) {
    const std::size_t nb = nblocks(n);
    if (nb == 0) return T{};
    std::vector<T> partial(nb);
    if (g_backend == Backend::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (nb > 4)
#endif
        for (std::ptrdiff_t b = 0; b < (std::ptrdiff_t)nb; ++b) {
            const std::size_t lo = (std::size_t)b * reduce_block;
            const std::size_t hi = std::min(lo + reduce_block, n);
            partial[(std::size_t)b] = block_sum(lo, hi);
        }
    } else {
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t lo = b * reduce_block;
            const std::size_t hi = std::min(lo + reduce_block, n);
            partial[b] = block_sum(lo, hi);
        }
    }
    T total{};
    for (const T& p : partial) total += p;
    return total;
}

double sum(std::span<const double> a) {
    return blocked_reduce<double>(a.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i];
        return s;
    });
}

double dot(std::span<const double> a, std::span<const double> b) {
    return blocked_reduce<double>(a.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        return s;
    });
}

double weighted_sum(std::span<const double> w, std::span<const double> f) {
    return blocked_reduce<double>(w.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += w[i] * f[i];
        return s;
    });
}

cplx cdot(std::span<const cplx> a, std::span<const cplx> b) {
    return blocked_reduce<cplx>(a.size(), [&](std::size_t lo, std::size_t hi) {
        cplx s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * std::conj(b[i]);
        return s;
    });
}

namespace {
struct Pow3 {
    double p2 = 0, p4 = 0, p6 = 0;
    Pow3& operator+=(const Pow3& o) {
        p2 += o.p2;
        p4 += o.p4;
        p6 += o.p6;
        return *this;
    }
};
} // namespace

void weighted_powers(std::span<const double> w, std::span<const cplx> a,
                     double& p2, double& p4, double& p6) {
    Pow3 r = blocked_reduce<Pow3>(a.size(), [&](std::size_t lo, std::size_t hi) {
        Pow3 s;
        for (std::size_t i = lo; i < hi; ++i) {
            const double m2 = std::norm(a[i]);
            s.p2 += w[i] * m2;
            s.p4 += w[i] * m2 * m2;
            s.p6 += w[i] * m2 * m2 * m2;
        }
        return s;
    });
    p2 = r.p2;
    p4 = r.p4;
    p6 = r.p6;
}

void cubic_quintic_weight(std::span<const cplx> a, std::span<double> out) {
    const std::ptrdiff_t n = (std::ptrdiff_t)a.size();
    if (g_backend == Backend::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 16384)
#endif
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double m2 = std::norm(a[(std::size_t)i]);
            out[(std::size_t)i] = m2 + m2 * m2;
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double m2 = std::norm(a[(std::size_t)i]);
            out[(std::size_t)i] = m2 + m2 * m2;
        }
    }
}

void axpy(cplx s, std::span<const cplx> b, std::span<cplx> out) {
    const std::ptrdiff_t n = (std::ptrdiff_t)b.size();
    if (g_backend == Backend::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 16384)
#endif
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[(std::size_t)i] += s * b[(std::size_t)i];
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[(std::size_t)i] += s * b[(std::size_t)i];
    }
}

void mask_multiply(std::span<const double> s, std::span<cplx> out) {
    const std::ptrdiff_t n = (std::ptrdiff_t)s.size();
    if (g_backend == Backend::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 16384)
#endif
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[(std::size_t)i] *= s[(std::size_t)i];
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[(std::size_t)i] *= s[(std::size_t)i];
    }
}

template <typename T>
static void tridiag_impl(std::vector<T> dl, std::vector<T> d, std::vector<T> du,
                         std::span<T> b) {
    const std::size_t n = d.size();
    if (n == 0) return;
    if (dl.size() != n - 1 || du.size() != n - 1 || b.size() != n)
        throw std::invalid_argument("solve_tridiag: size mismatch");
    // LU with partial pivoting on a tridiagonal; one extra superdiagonal
    // appears under row swaps.
    std::vector<T> du2(n > 2 ? n - 2 : 0, T{});
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (std::abs(dl[k]) > std::abs(d[k])) {
            std::swap(d[k], dl[k]);
            std::swap(du[k], d[k + 1]);
            if (k + 2 < n) {
                du2[k] = du[k + 1];
                du[k + 1] = T{};
            }
            std::swap(b[k], b[k + 1]);
        }
        if (d[k] == T{}) throw std::runtime_error("solve_tridiag: singular matrix");
        const T m = dl[k] / d[k];
        d[k + 1] -= m * du[k];
        if (k + 2 < n) du[k + 1] -= m * du2[k];
        b[k + 1] -= m * b[k];
    }
    if (d[n - 1] == T{}) throw std::runtime_error("solve_tridiag: singular matrix");
    b[n - 1] /= d[n - 1];
    if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t i = n - 2; i-- > 0;) {
        T r = b[i] - du[i] * b[i + 1];
        if (i + 2 < n) r -= du2[i] * b[i + 2];
        b[i] = r / d[i];
    }
}

void solve_tridiag(std::vector<cplx> dl, std::vector<cplx> d,
                   std::vector<cplx> du, std::span<cplx> b) {
    tridiag_impl<cplx>(std::move(dl), std::move(d), std::move(du), b);
}

void solve_tridiag(std::vector<double> dl, std::vector<double> d,
                   std::vector<double> du, std::span<double> b) {
    tridiag_impl<double>(std::move(dl), std::move(d), std::move(du), b);
}

// ---- banded LU ----

BandedLU::BandedLU(std::size_t n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), a_(n * (std::size_t)(2 * kl + ku + 1), 0.0), piv_(n, 0) {}

double& BandedLU::at(std::size_t i, std::size_t j) {
    // row-major band storage: row i holds columns j in [i-kl, i+kl+ku]
    // (the extra kl upper columns absorb pivoting fill-in)
    const int w = 2 * kl_ + ku_ + 1;
    const int col = (int)j - (int)i + kl_;
    if (col < 0 || col >= w) throw std::out_of_range("BandedLU::at outside band");
    return a_[i * (std::size_t)w + (std::size_t)col];
}

void BandedLU::factor() {
    const int w = 2 * kl_ + ku_ + 1;      // width with fill-in
    const int uw = kl_ + ku_;             // widened upper bandwidth
    min_pivot_ = 1e300;
    max_pivot_ = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
        // pivot search in column k, rows k..k+kl
        std::size_t p = k;
        auto entry = [&](std::size_t i, std::size_t j) -> double& {
            const int col = (int)j - (int)i + kl_;
            return a_[i * (std::size_t)w + (std::size_t)col];
        };
        double best = std::abs(entry(k, k));
        for (std::size_t i = k + 1; i < std::min(n_, k + (std::size_t)kl_ + 1); ++i) {
            const double v = std::abs(entry(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        piv_[k] = (int)p;
        if (best == 0.0) {
            singular_ = true;
            factored_ = true;
            return;
        }
        min_pivot_ = std::min(min_pivot_, best);
        max_pivot_ = std::max(max_pivot_, best);
        if (p != k) {
            // swap rows k and p over the shared column range
            for (std::size_t j = k; j < std::min(n_, k + (std::size_t)uw + 1); ++j)
                std::swap(entry(k, j), entry(p, j));
        }
        const double pivot = entry(k, k);
        for (std::size_t i = k + 1; i < std::min(n_, k + (std::size_t)kl_ + 1); ++i) {
            const double m = entry(i, k) / pivot;
            entry(i, k) = m; // store multiplier
            for (std::size_t j = k + 1; j < std::min(n_, k + (std::size_t)uw + 1); ++j)
                entry(i, j) -= m * entry(k, j);
        }
    }
    factored_ = true;
}

void BandedLU::solve(std::span<double> b) const {
    if (!factored_ || singular_)
        throw std::runtime_error("BandedLU::solve on unfactored or singular matrix");
    const int w = 2 * kl_ + ku_ + 1;
    const int uw = kl_ + ku_;
    auto entry = [&](std::size_t i, std::size_t j) -> double {
        const int col = (int)j - (int)i + kl_;
        return a_[i * (std::size_t)w + (std::size_t)col];
    };
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t p = (std::size_t)piv_[k];
        if (p != k) std::swap(b[k], b[p]);
        for (std::size_t i = k + 1; i < std::min(n_, k + (std::size_t)kl_ + 1); ++i)
            b[i] -= entry(i, k) * b[k];
    }
    for (std::size_t k = n_; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < std::min(n_, k + (std::size_t)uw + 1); ++j)
            s -= entry(k, j) * b[j];
        b[k] = s / entry(k, k);
    }
}

} // namespace cqnls::kernels
