#pragma once

#include <map>
#include <string>
#include <vector>

#include "vortexlab/ansatz.hpp"
#include "vortexlab/domain.hpp"
#include "vortexlab/state.hpp"

namespace vlab {

/// phi = (rho - rho~)/eps, psi = m - m~, zeta = u - u~, w = psi - eps u~ phi.
/// Vector members hold d + 1 components, normal last.
struct PerturbationSet {
    Field phi;
    std::vector<Field> psi;
    std::vector<Field> zeta;
    std::vector<Field> w;
    AnsatzProfiles ansatz; // rho~, m~, u~ on the normal nodes at time t
    double eps = 1.0;
    double t = 0.0;
    const Grid& grid() const { return phi.grid; }
};

PerturbationSet extract_perturbations(const State& s, const AnsatzSpec& spec);

struct AntiDerivativeSet {
    Profile Phi;
    std::vector<Profile> Psi;
    std::vector<Profile> Z; // Psi - eps u~ Phi
    /// Values at x3 = +L of Phi and each Psi component.
    std::vector<double> endpoints;
    bool zero_mass_violated = false;
};

/// Anti-derivatives of the zero modes from -L; flags (but still computes)
/// when an endpoint exceeds tol.
AntiDerivativeSet build_antiderivatives(const PerturbationSet& p, double tol = 1e-6);

/// ||nabla^j f||_{L^2}^2 summed over the full derivative tensor.
double grad_norm_sq(const Field& f, int j);

struct EnergyStar {
    double value = 0.0;
    std::array<double, 3> anti{}; // (t+1)^j ||d3^j (Phi, Z3)||^2
    std::array<double, 2> md{};   // (t+1)^j ||nabla^j (phi#, w#)||^2
};

struct EnergyFull {
    double value = 0.0;
    EnergyStar star;
    std::array<double, 3> zperp{}; // (t+1)^j ||d3^j Z_perp||^2
    double high = 0.0;             // (t+1)^2 ||nabla^2 (phi, w)||_{H^1}^2
};

EnergyStar energy_star(const AntiDerivativeSet& a, const PerturbationSet& p, double t);
EnergyFull energy_full(const AntiDerivativeSet& a, const PerturbationSet& p, double t);

/// Running nu^2 = sup (t+1)^{-1/2} E*, M^2 = sup (t+1)^{-1/2} E.
struct RunningMonitors {
    double nu2 = 0.0;
    double M2 = 0.0;
    void update(double t, double e_star, double e_full);
    double nu() const;
    double M() const; // max(1, sqrt(M2))
};

/// One time sample of everything the harness records.
struct EnergyReport {
    double t = 0.0;
    double E_star = 0.0;
    double E_full = 0.0;
    EnergyFull parts;
    double nu = 0.0; // running
    double M = 1.0;  // running
    double nu2 = 0.0;
    double M2 = 0.0;
    double linf_bv = 0.0;       // ||(b, v)||_inf
    double md_h1 = 0.0;         // ||(phi#, w#)||_{H^1}
    double dZperp_inf = 0.0;    // ||d3 Z_perp||_inf
    double phi_flat_w34 = 0.0;  // ||<x3>^{3/4} phi^flat||_{L^2}
    double phi_h1 = 0.0;        // ||phi||_{H^1}
    double q_norm = 0.0;
    double div_norm = 0.0;
    std::vector<double> zero_mass; // rho, m components
    bool zero_mass_violated = false;
    /// Quantities of the a-priori bound catalogue, keyed by bound name.
    std::map<std::string, double> catalogue;
};

/// Fixed CSV column order of EnergyReport rows.
std::vector<std::string> report_columns();
std::vector<double> report_row(const EnergyReport& r);

/// Full diagnostic pass; updates the running monitors.
EnergyReport make_report(const State& s, const AnsatzSpec& spec, RunningMonitors& mon,
                         double zero_mass_tol = 1e-6);

/// ||(b, v)||_inf with b = (rho - rho_bar)/eps, v = u - u_vs(., t + t0).
double perturbation_linf(const State& s, const PhysParams& p);

struct MachMetrics {
    double q_norm = 0.0;
    double div_norm = 0.0;
};

MachMetrics mach_metrics(const State& s, const PhysParams& p);

/// ||f#||_{L^4}^4 / ||grad f#||_{L^2}^4, the Gagliardo-Nirenberg quotient of
/// the non-zero mode (0 when the gradient vanishes).
double gagliardo_nirenberg_ratio(const Field& f);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // rms of log residuals
    double stderr_slope = 0.0;
    int n = 0;
};

/// Least squares of log(value) against log(t + 1) over t in [t_lo, t_hi].
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& v, double t_lo,
                   double t_hi);

/// Rate factor of each catalogue bound given running nu and M.
double catalogue_rate(const std::string& name, double t, double nu, double M);

/// Running maxima of quantity / rate for every catalogue bound.
class AprioriMonitor {
public:
    void feed(const EnergyReport& r);
    struct Entry {
        double max_ratio = 0.0;
        std::vector<std::pair<double, double>> history; // (t, ratio)
    };
    const std::map<std::string, Entry>& entries() const { return e_; }
    /// Bounds whose running max grew by more than rel_tol over the second half
    /// of the sampled interval.
    std::vector<std::string> not_plateaued(double rel_tol = 0.05) const;

private:
    std::map<std::string, Entry> e_;
};

} // namespace vlab
