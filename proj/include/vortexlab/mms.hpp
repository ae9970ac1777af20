#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "vortexlab/domain.hpp"
#include "vortexlab/state.hpp"

namespace vlab {

/// Second-order forward AD in the three variables (t, x1, x3).
struct Dual2 {
    double v = 0.0;
    std::array<double, 3> g{};
    std::array<std::array<double, 3>, 3> H{};

    Dual2() = default;
    Dual2(double c) : v(c) {}
    static Dual2 variable(double x, int i)
    {
        Dual2 r(x);
        r.g[i] = 1.0;
        return r;
    }
};

Dual2 operator+(const Dual2& a, const Dual2& b);
Dual2 operator-(const Dual2& a, const Dual2& b);
Dual2 operator-(const Dual2& a);
Dual2 operator*(const Dual2& a, const Dual2& b);
Dual2 operator/(const Dual2& a, const Dual2& b);
Dual2 exp(const Dual2& a);
Dual2 sin(const Dual2& a);
Dual2 cos(const Dual2& a);
Dual2 pow(const Dual2& a, double e);

/// Smooth, Gaussian-localized manufactured solution (rho, m1, m3) on T x R
/// with u_bar = 0, so the far field is the rest state (rho_bar, 0).
class ManufacturedSolution {
public:
    ManufacturedSolution(const PhysParams& p, double amplitude = 0.05, double width = 1.0);

    /// (rho, m1, m3) with derivatives at (t, x1, x3).
    std::array<Dual2, 3> eval(double t, double x1, double x3) const;
    /// Source making eval an exact solution of the compressible system,
    /// entries (rho, m1, m3).
    std::array<double, 3> source(double t, double x1, double x3) const;

    State exact_state(const Grid& g, double t) const;
    /// Forcing callback for SolverConfig::forcing.
    std::function<void(double, std::vector<Field>&)> forcing(const Grid& g) const;

private:
    PhysParams p_;
    double a_, s_;
};

} // namespace vlab
