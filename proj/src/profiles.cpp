#include "vortexlab/profiles.hpp"

#include <cmath>
#include <numbers>

namespace vlab {

double theta(double xi, const PhysParams& p)
{
    return std::erf(0.5 * std::sqrt(p.rho_bar / p.mu) * xi);
}

Jet theta(const Jet& xi, const PhysParams& p)
{
    return erf(xi * (0.5 * std::sqrt(p.rho_bar / p.mu)));
}

std::array<double, 2> vortex_layer_velocity(double x3, double t, const PhysParams& p, double age)
{
    const double th = theta(x3 / std::sqrt(t + age), p);
    return {th * p.u_bar[0], th * p.u_bar[1]};
}

Jet vortex_layer_velocity_jet(double x3, double t, const PhysParams& p, double age, int i)
{
    Jet xi = Jet::variable(x3) * (1.0 / std::sqrt(t + age));
    return theta(xi, p) * p.u_bar[i];
}

std::array<double, 3> vortex_layer_vorticity(double x3, double t, const PhysParams& p,
                                             double age)
{
    const double tau = t + age;
    const double amp = std::sqrt(p.rho_bar / std::numbers::pi) / std::sqrt(p.mu * tau) *
                       std::exp(-p.rho_bar * x3 * x3 / (4.0 * p.mu * tau));
    return {-amp * p.u_bar[1], amp * p.u_bar[0], 0.0};
}

double branch_speed(Branch b, const PhysParams& p)
{
    switch (b) {
    case Branch::plus:
        return p.a_bar() / p.eps;
    case Branch::minus:
        return -p.a_bar() / p.eps;
    default:
        return 0.0;
    }
}

double diffusion_wave(double x3, double t, const PhysParams& p, Branch b)
{
    const double tau = t + p.Lambda;
    const double y = x3 - branch_speed(b, p) * tau;
    return std::sqrt(p.rho_bar) / (2.0 * std::sqrt(std::numbers::pi * p.mu * tau)) *
           std::exp(-p.rho_bar * y * y / (4.0 * p.mu * tau));
}

Jet diffusion_wave_jet(double x3, double t, const PhysParams& p, Branch b)
{
    const double tau = t + p.Lambda;
    Jet y = Jet::variable(x3 - branch_speed(b, p) * tau);
    const double amp = std::sqrt(p.rho_bar) / (2.0 * std::sqrt(std::numbers::pi * p.mu * tau));
    return exp(y * y * (-p.rho_bar / (4.0 * p.mu * tau))) * amp;
}

} // namespace vlab
