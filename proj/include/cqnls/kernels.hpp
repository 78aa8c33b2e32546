#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

// Low-level array kernels shared by the whole code base.
//
// Every kernel exists in two variants selected at runtime: a plain serial
// reference and an OpenMP-parallel one.  Reductions are blocked with a fixed
// chunk size and the partial sums are combined in index order, so the result
// is bitwise identical for any thread count (and identical to the serial
// reference).  That keeps all file outputs reproducible run-to-run.

namespace cqnls::kernels {

using cplx = std::complex<double>;

enum class Backend { serial, openmp };

// Global default backend: openmp when compiled with it, serial otherwise.
Backend backend();
void set_backend(Backend b);
bool openmp_compiled();
int max_threads();

// block size for deterministic reductions
inline constexpr std::size_t reduce_block = 4096;

// sum_i a[i]
double sum(std::span<const double> a);
// sum_i a[i]*b[i]
double dot(std::span<const double> a, std::span<const double> b);
// sum_i w[i]*f[i]
double weighted_sum(std::span<const double> w, std::span<const double> f);
// sum_i a[i]*conj(b[i])
cplx cdot(std::span<const cplx> a, std::span<const cplx> b);
// sum_i |a[i]|^2, sum_i |a[i]|^4, sum_i |a[i]|^6 weighted by w
void weighted_powers(std::span<const double> w, std::span<const cplx> a,
                     double& p2, double& p4, double& p6);

// out[i] = (|a[i]|^2 + |a[i]|^4)
void cubic_quintic_weight(std::span<const cplx> a, std::span<double> out);
// out[i] = a[i] + s*b[i]
void axpy(cplx s, std::span<const cplx> b, std::span<cplx> out);
// out[i] *= s[i] (real mask)
void mask_multiply(std::span<const double> s, std::span<cplx> out);

// Tridiagonal solve (Thomas algorithm with partial pivoting); serial on
// purpose, the recurrence is sequential.  dl/d/du are the sub/main/super
// diagonals; b is overwritten with the solution.
void solve_tridiag(std::vector<cplx> dl, std::vector<cplx> d,
                   std::vector<cplx> du, std::span<cplx> b);
void solve_tridiag(std::vector<double> dl, std::vector<double> d,
                   std::vector<double> du, std::span<double> b);

// General banded solve with partial pivoting, kl sub- and ku super-diagonals.
// `band` is row-major: band[r*(kl+ku+1) + c] holds A(r, r + c - kl).
// Used for the pentadiagonal composed-operator systems.
class BandedLU {
public:
    BandedLU(std::size_t n, int kl, int ku);
    // a(i,j): set entry, |i-j| <= min(kl,ku) range enforced by caller
    double& at(std::size_t i, std::size_t j);
    void factor();           // LU with partial pivoting
    bool singular() const { return singular_; }
    double min_pivot() const { return min_pivot_; }
    double max_pivot() const { return max_pivot_; }
    void solve(std::span<double> b) const;

private:
    std::size_t n_;
    int kl_, ku_;
    std::vector<double> a_;   // working storage with extra kl fill-in rows
    std::vector<int> piv_;
    bool factored_ = false;
    bool singular_ = false;
    double min_pivot_ = 0.0, max_pivot_ = 0.0;
};

} // namespace cqnls::kernels
