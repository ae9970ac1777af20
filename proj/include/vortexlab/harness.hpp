#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vortexlab/ansatz.hpp"
#include "vortexlab/diagnostics.hpp"
#include "vortexlab/domain.hpp"
#include "vortexlab/solver.hpp"

namespace vlab {

inline constexpr int kConfigVersion = 1;

/// Initial-data families.  Amplitudes: chi_amp drives the small channel
/// (density and tangentially modulated parts), zero_amp the tangential
/// zero-mode velocity.
struct InitialSpec {
    std::string family = "nonzero-bump";
    double chi_amp = 0.02;
    double zero_amp = 0.0;
    double width = 1.0;  // Gaussian width of the bumps in x3
    double center = 0.0;
    int mode = 1;        // tangential wavenumber of the modulation
};

struct ExperimentConfig {
    int version = kConfigVersion;
    std::string name = "run";
    std::uint64_t seed = 0;

    PhysParams params;
    bool lambda_auto = true; // Lambda = default_Lambda(params, M0, C1)
    double C1 = 10.0;

    Grid grid;
    SolverConfig solver;
    InitialSpec initial;

    double T = 10.0;
    double sample_dt = 0.5;
    int checkpoint_every = 0; // samples between checkpoints; 0 = final only
    double fit_lo = 10.0;
    double fit_hi = 200.0;
    double zero_mass_tol = 1e-6;

    std::vector<double> eps_list;
    std::vector<int> refine_list; // n3 values
    std::string converge_kind = "layer"; // layer | mms
    double converge_T = 1.0;

    std::string out_dir = "out";
    int threads = 1;
    bool deterministic = true;

    void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical INI text; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& c);
/// FNV-1a of the canonical text, hex.
std::string config_hash(const ExperimentConfig& c);

InitialPerturbation build_initial(const InitialSpec& spec, const Grid& g, std::uint64_t seed = 0);
/// (rho_bar + eps b0, rho0 (u_vs(., t0) + v0)) at t = 0.
State initial_state(const InitialPerturbation& ip, const PhysParams& p);

struct FitResult {
    std::string quantity;
    double t_lo = 0.0, t_hi = 0.0;
    std::optional<DecayFit> fit;
    std::string error;
};

struct RunRecord {
    std::string config_hash;
    std::string out_dir;
    std::string series_path;
    std::vector<std::string> checkpoints;
    Alphas alphas{};
    double Lambda = 0.0;
    double M0 = 0.0;
    double chi = 0.0;
    double dt = 0.0;
    std::vector<FitResult> fits;
    std::vector<std::string> not_plateaued;
    double M2_growth_second_half = 0.0;
    double nu2_final = 0.0;
    double M2_final = 0.0;
    bool zero_mass_violated = false;
    double wall_seconds = 0.0;
    std::vector<EnergyReport> series;
};

/// Fits recorded for every run: ||(b,v)||_inf, ||(phi#, w#)||_{H^1}, ||d3 Z_perp||_inf, E*.
std::vector<FitResult> standard_fits(const std::vector<EnergyReport>& series, double t_lo,
                                     double t_hi);

/// Builds data, ansatz and solver, evolves to T, samples diagnostics and
/// persists series.csv, record.json and checkpoints under cfg.out_dir
/// (nothing is written when out_dir is empty).
RunRecord run_single(const ExperimentConfig& cfg);

struct SweepRow {
    double eps = 0.0;
    double q_avg = 0.0;
    double div_avg = 0.0;
    double du_avg = 0.0; // time average of ||u^eps - u^0||_{L^2}
    double wall_seconds = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows; // in the order of cfg.eps_list
    double inc_wall_seconds = 0.0;
    double total_wall_seconds = 0.0;
};

/// Same (b0, v0) for every eps plus one incompressible reference started from
/// u_vs(., t0) + Pi v0.
SweepReport run_mach_sweep(const ExperimentConfig& cfg);

struct ConvergenceRow {
    int n3 = 0;
    double dt = 0.0;
    double error = 0.0;
    double order = 0.0; // against the previous row; 0 for the first
    double wall_seconds = 0.0;
};

struct ConvergenceReport {
    std::string kind;
    std::vector<ConvergenceRow> rows;
    bool pre_asymptotic = false;
};

/// L^inf error against the exact layer (kind = layer) or the manufactured
/// solution (kind = mms) after converge_T, with dt halved along with h3.
ConvergenceReport run_convergence(const ExperimentConfig& cfg);

/// Re-derives fits from an existing series.csv.
std::vector<FitResult> report_from_series(const std::string& series_csv, double t_lo,
                                          double t_hi);

void write_series_csv(const std::string& path, const std::vector<EnergyReport>& series);

} // namespace vlab
