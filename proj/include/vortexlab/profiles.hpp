#pragma once

#include <array>

#include "vortexlab/domain.hpp"
#include "vortexlab/jet.hpp"

namespace vlab {

/// Shear profile Theta(xi) = erf(sqrt(rho_bar/mu) xi / 2).
double theta(double xi, const PhysParams& p);
Jet theta(const Jet& xi, const PhysParams& p);

/// Tangential components of Theta(x3 / sqrt(t + age)) u_bar.
/// Pass age = p.t0 for the layer itself and age = p.Lambda for the
/// auxiliary flow.
std::array<double, 2> vortex_layer_velocity(double x3, double t, const PhysParams& p, double age);
/// Normal jet of component i of the layer velocity.
Jet vortex_layer_velocity_jet(double x3, double t, const PhysParams& p, double age, int i);

/// Vorticity of the layer of age t + age: (rho_bar/pi)^{1/2} (mu tau)^{-1/2}
/// exp(-rho_bar x3^2 / (4 mu tau)) e3 x u_bar.
std::array<double, 3> vortex_layer_vorticity(double x3, double t, const PhysParams& p,
                                             double age);

enum class Branch { center, plus, minus };

/// Acoustic transport speed of a branch: 0, +a_bar/eps, -a_bar/eps.
double branch_speed(Branch b, const PhysParams& p);

/// Unit-mass heat kernel aged by Lambda, shifted along its branch.
double diffusion_wave(double x3, double t, const PhysParams& p, Branch b);
Jet diffusion_wave_jet(double x3, double t, const PhysParams& p, Branch b);

/// Sample a profile-valued function on the normal nodes.
template <class F>
Profile sample_profile(const Grid& g, F&& f)
{
    Profile out(g);
    for (int j = 0; j < g.n_nodes(); ++j)
        out[j] = f(g.x3(j));
    return out;
}

} // namespace vlab
