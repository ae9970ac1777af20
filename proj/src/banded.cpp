#include "vortexlab/banded.hpp"

#include <algorithm>
#include <stdexcept>

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab, const int* ldab,
             int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info);
}

namespace vlab {

BandedLU::BandedLU(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
      ab_(static_cast<std::size_t>(2 * kl + ku + 1) * n, 0.0), ipiv_(n)
{
}

void BandedLU::add(int i, int j, double v)
{
    if (j - i > ku_ || i - j > kl_)
        throw std::out_of_range("BandedLU::add outside band");
    ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_] += v;
}

double BandedLU::get(int i, int j) const
{
    if (j - i > ku_ || i - j > kl_)
        return 0.0;
    const auto& a = factored_ ? orig_ : ab_;
    return a[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ldab_];
}

void BandedLU::multiply(const double* x, double* y) const
{
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j)
            s += get(i, j) * x[j];
        y[i] = s;
    }
}

int BandedLU::factor()
{
    int info = 0;
    orig_ = ab_;
    dgbtrf_(&n_, &n_, &kl_, &ku_, ab_.data(), &ldab_, ipiv_.data(), &info);
    factored_ = info == 0;
    return info;
}

void BandedLU::solve(double* b, int nrhs) const
{
    int info = 0;
    const char trans = 'N';
    dgbtrs_(&trans, &n_, &kl_, &ku_, &nrhs, ab_.data(), &ldab_, ipiv_.data(), b, &n_, &info);
}

} // namespace vlab
