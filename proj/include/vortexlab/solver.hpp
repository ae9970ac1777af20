#pragma once

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vortexlab/banded.hpp"
#include "vortexlab/domain.hpp"
#include "vortexlab/state.hpp"

namespace vlab {

enum class BoundaryMode {
    characteristic, ///< incoming acoustic characteristic set to the far field
    none            ///< no closure, boundary rows evolve with one-sided stencils
};

struct SolverConfig {
    /// Fixed step when > 0, otherwise chosen from the initial state by CFL.
    double dt = 0.0;
    double cfl = 0.4;
    /// Treat div m and eps^-2 a^2 grad rho implicitly.
    bool implicit_acoustics = true;
    BoundaryMode boundary = BoundaryMode::characteristic;
    /// Absorbing layer of this width (length units) at each end; 0 disables.
    double sponge_width = 0.0;
    /// Peak damping rate in units of (a_bar/eps)/sponge_width.
    double sponge_strength = 20.0;
    /// Relative residual above which a banded solve is declared diverged.
    double linear_tol = 1e-8;
    double poisson_tol = 1e-8;
    /// rho must stay >= floor * rho_bar.
    double density_floor = 0.25;
    /// Optional source added to the right-hand side: (t, out) with out
    /// holding d + 2 fields (rho, m components) to accumulate into.
    std::function<void(double, std::vector<Field>&)> forcing;

    void validate() const;
};

/// Background layer (rho_bar, rho_bar u_vs(., t + t0), 0).
State background_state(const Grid& g, const PhysParams& p, double t);

/// Largest stable step for the explicit part at the given state.
double cfl_dt(const State& s, const SolverConfig& cfg, const PhysParams& p);

/// IMEX Runge-Kutta (ARS(3,4,3), acoustics and sponge implicit) integrator of the
/// Mach-scaled isentropic Navier-Stokes system on T x [-L, L] (d = 1).
class CompressibleSolver {
public:
    CompressibleSolver(const Grid& g, const PhysParams& p, const SolverConfig& cfg);

    /// Fixes dt; if cfg.dt <= 0 it is taken from cfl_dt(s).
    void initialize(const State& s);
    double dt() const { return dt_; }
    void set_dt(double dt);

    /// One step in place.
    void step(State& s);
    /// Steps until s.t >= t_end - 1e-12 dt (last step shortened).
    void advance_to(State& s, double t_end);

    const std::vector<double>& sponge() const { return sigma_; }

private:
    void explicit_rhs(const State& s, double t, std::vector<Field>& N) const;
    void implicit_solve(const std::vector<Field>& R, double tau, double t_new, State& out);
    const BandedLU& factorization(double tau, int coef);
    void check_state(const State& s) const;

    Grid g_;
    PhysParams p_;
    SolverConfig cfg_;
    TangentialTransform tt_;
    double dt_ = 0.0;
    double c_; // a_bar / eps
    std::vector<double> sigma_;
    std::map<std::pair<double, int>, std::unique_ptr<BandedLU>> lu_;
};

/// Convenience wrapper: one step with a fresh solver.
State step_compressible(const State& s, const SolverConfig& cfg, const PhysParams& p);

/// Far-field closure applied to boundary rows of an arbitrary state:
/// incoming characteristic set to the far field, outgoing kept, tangential
/// momentum set to the layer value.
void boundary_apply(State& s, const SolverConfig& cfg, const PhysParams& p);

/// Leray projection (Id - grad Lap^{-1} div) with the discrete FD4 / spectral
/// gradient; d + 1 velocity components, d = 1.
std::vector<Field> leray_project(const std::vector<Field>& v, double tol = 1e-8);
/// Discrete divergence matching leray_project.
Field divergence(const std::vector<Field>& v);

/// Explicit RK3 with projection after every stage.
class IncompressibleSolver {
public:
    IncompressibleSolver(const Grid& g, const PhysParams& p, const SolverConfig& cfg);
    void initialize(const IncState& s);
    double dt() const { return dt_; }
    void set_dt(double dt) { dt_ = dt; }
    void step(IncState& s);
    void advance_to(IncState& s, double t_end);

private:
    void rhs(const IncState& s, std::vector<Field>& N) const;
    Grid g_;
    PhysParams p_;
    SolverConfig cfg_;
    double dt_ = 0.0;
};

IncState step_incompressible(const IncState& s, const SolverConfig& cfg, const PhysParams& p);

/// Checkpoint: magic "VLC1", time, params, then rho and m fields in the
/// domain binary format.
void save_checkpoint(const std::string& path, const State& s, const PhysParams& p);
State load_checkpoint(const std::string& path, PhysParams* p = nullptr);

} // namespace vlab
