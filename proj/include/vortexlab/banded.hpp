#pragma once

#include <vector>

namespace vlab {

/// Real banded matrix with LAPACK LU (dgbtrf/dgbtrs).
class BandedLU {
public:
    BandedLU() = default;
    BandedLU(int n, int kl, int ku);

    int n() const { return n_; }
    void add(int i, int j, double v);
    double get(int i, int j) const;
    /// y = A x with the unfactored matrix.
    void multiply(const double* x, double* y) const;
    /// Returns LAPACK info; nonzero means singular.
    int factor();
    /// In-place solve for nrhs column-major right-hand sides of length n.
    void solve(double* b, int nrhs) const;
    bool factored() const { return factored_; }

private:
    int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 0;
    std::vector<double> ab_;
    std::vector<double> orig_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

} // namespace vlab
