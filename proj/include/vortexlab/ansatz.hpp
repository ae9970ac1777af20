#pragma once

#include <array>
#include <string>
#include <vector>

#include "vortexlab/domain.hpp"
#include "vortexlab/jet.hpp"
#include "vortexlab/profiles.hpp"
#include "vortexlab/state.hpp"

namespace vlab {

/// Perturbation (b0, v0) of the layer at t = 0:
/// rho0 = rho_bar + eps b0, u0 = u_vs(., t0) + v0.
struct InitialPerturbation {
    Field b0;
    std::vector<Field> v0; // d + 1 components

    InitialPerturbation() = default;
    explicit InitialPerturbation(const Grid& g) : b0(g), v0(g.d + 1, Field(g)) {}
    const Grid& grid() const { return b0.grid; }
};

/// v0 shifted to the auxiliary flow: v0 + u_vs(., t0) - u_vs(., Lambda).
std::vector<Field> shifted_v0(const InitialPerturbation& ip, const PhysParams& p);
/// Momentum perturbation rho0 u0 - rho_bar u_vs(., Lambda).
std::vector<Field> momentum_perturbation(const InitialPerturbation& ip, const PhysParams& p);

/// Full-gradient H^s norm over the strip (multi-index sum of squared L^2
/// norms of all mixed partials up to order s).
double sobolev_norm(const Field& f, int s);
/// H^s norm of a profile.
double sobolev_norm(const Profile& p, int s);
/// ||(b0, v0)||_{H^3_{3/4}}
double initial_M0(const InitialPerturbation& ip);
/// ||(b0, v03)^flat||_{H^1_{3/4}} + ||(b0, v0)^sharp||_{H^1}
double initial_chi(const InitialPerturbation& ip);

/// (alpha0, alpha1, alpha2, alpha3); alpha2 = 0 when d = 1.
using Alphas = std::array<double, 4>;

Alphas compute_alphas(const InitialPerturbation& ip, const PhysParams& p);

/// Right-hand side of the mass identity: alpha1 r1 + alpha2 r2 +
/// eps (alpha0 r0- + alpha3 r3+), entries (rho, m1, m2, m3).
std::array<double, 4> alpha_mass_vector(const Alphas& a, const PhysParams& p);
/// Left-hand side: integral of (eps b0, w0)^flat.
std::array<double, 4> initial_mass_vector(const InitialPerturbation& ip, const PhysParams& p);

struct AnsatzPoint {
    double rho = 0.0;
    std::array<double, 3> m{};
    std::array<double, 3> u{};
};

struct AnsatzJets {
    Jet rho;
    std::array<Jet, 3> m;
    std::array<Jet, 3> u;
    std::array<Jet, 2> uvs; // auxiliary flow
    Jet th, thp, thm;       // diffusion waves
};

struct ErrorTerms {
    double F0 = 0.0;
    std::array<double, 3> F{};
};

struct ErrorJets {
    Jet F0;
    std::array<Jet, 3> F;
};

/// Sampled ansatz on the normal nodes, stored components as in State.
struct AnsatzProfiles {
    Profile rho;
    std::vector<Profile> m;
    std::vector<Profile> u;
};

/// Diffusion-wave ansatz; immutable after construction.
class AnsatzSpec {
public:
    AnsatzSpec(const Alphas& a, const PhysParams& p, int d);

    const Alphas& alphas() const { return a_; }
    const PhysParams& params() const { return p_; }
    int d() const { return d_; }

    AnsatzJets jets(double x3, double t) const;
    AnsatzPoint eval(double x3, double t) const;
    ErrorJets error_jets(double x3, double t) const;
    ErrorTerms error_terms(double x3, double t) const;
    AnsatzProfiles sample(const Grid& g, double t) const;

private:
    Alphas a_;
    PhysParams p_;
    int d_;
};

/// Throws DensityFloorViolation when eps (|a0| + |a3|) max(theta) > rho_bar/2.
AnsatzSpec build_ansatz(const Alphas& a, const PhysParams& p, int d);

/// Integrals of (rho^flat - rho~, m^flat - m~); entries (rho, m_1..m_d, m3).
std::vector<double> zero_mass_check(const State& s, const AnsatzSpec& spec, double t);

/// sum of three Gaussians exp(-c |x3 - s (t+Lambda)|^2 / (t+Lambda)),
/// s in {0, -a/eps, +a/eps}
double envelope(double x3, double t, const PhysParams& p, double c);

struct EnvelopeFit {
    double c = 0.0;
    /// C for |d^j F0| + |d^j F| <= C chi (t+Lambda)^{-(2+j)/2} E, j = 0..2
    std::array<double, 3> C_F{};
    /// Three blocks of the ansatz-difference bounds, j = 0..2 each.
    std::array<std::array<double, 3>, 3> C_diff{};
};

/// Smallest constants over the sample set (x3 nodes of g, times ts).
/// chi scales the F bounds and the first difference block; c <= 0 selects
/// c by fit_envelope_c.
EnvelopeFit envelope_bound_monitor(const AnsatzSpec& spec, const Grid& g,
                                   const std::vector<double>& ts, double chi = 1.0,
                                   double c = -1.0);

/// Largest c = kappa rho_bar/(4 mu), kappa on a descending scan, for which the
/// F ratio does not peak in the outer tenth of the box.
double fit_envelope_c(const AnsatzSpec& spec, const Grid& g, const std::vector<double>& ts);

void write_ansatz_record(const std::string& path, const AnsatzSpec& spec);

} // namespace vlab
