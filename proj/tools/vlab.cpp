// Command-line front end: run | sweep-mach | converge | report.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "vortexlab/harness.hpp"

using namespace vlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

template <class T>
std::vector<T> parse_list(const std::string& s)
{
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T v;
        if (!(is >> v))
            throw ConfigError("bad list entry '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void print_fits(const std::vector<FitResult>& fits)
{
    for (const auto& f : fits) {
        if (f.fit)
            std::printf("  %-12s slope %+.4f +- %.4f  (n = %d, rms %.3g, t in [%g, %g])\n",
                        f.quantity.c_str(), f.fit->slope, f.fit->stderr_slope, f.fit->n,
                        f.fit->residual, f.t_lo, f.t_hi);
        else
            std::printf("  %-12s no fit: %s\n", f.quantity.c_str(), f.error.c_str());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"vortex-layer stability experiments"};
    app.require_subcommand(1);

    std::string config, out, eps_list, refine_list, series;
    int threads = 0;
    bool deterministic = false;
    double fit_lo = 10.0, fit_hi = 200.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "INI config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides [output] dir)");
        sub->add_option("--threads", threads, "worker threads for sweeps");
        sub->add_flag("--deterministic", deterministic, "fixed reduction order (always on)");
    };
    auto* run = app.add_subcommand("run", "single run with diagnostics");
    common(run);
    auto* sweep = app.add_subcommand("sweep-mach", "Mach sweep plus incompressible reference");
    common(sweep);
    sweep->add_option("--eps-list", eps_list, "comma-separated eps values");
    auto* conv = app.add_subcommand("converge", "refinement study");
    common(conv);
    conv->add_option("--refine-list", refine_list, "comma-separated n3 values");
    auto* rep = app.add_subcommand("report", "re-derive fits from a series.csv");
    rep->add_option("--series", series, "series.csv or run directory")->required();
    rep->add_option("--fit-lo", fit_lo, "fit window start");
    rep->add_option("--fit-hi", fit_hi, "fit window end");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (rep->parsed()) {
            std::filesystem::path p(series);
            if (std::filesystem::is_directory(p))
                p /= "series.csv";
            std::printf("fits from %s\n", p.c_str());
            print_fits(report_from_series(p.string(), fit_lo, fit_hi));
            return 0;
        }

        ExperimentConfig cfg = load_config(config);
        if (!out.empty())
            cfg.out_dir = out;
        if (threads > 0)
            cfg.threads = threads;
        if (deterministic)
            cfg.deterministic = true;
        if (!eps_list.empty())
            cfg.eps_list = parse_list<double>(eps_list);
        if (!refine_list.empty())
            cfg.refine_list = parse_list<int>(refine_list);
        cfg.validate();

        if (run->parsed()) {
            RunRecord r = run_single(cfg);
            std::printf("run %s  hash %s  dt %.4g  Lambda %.4g  wall %.1f s\n", cfg.name.c_str(),
                        r.config_hash.c_str(), r.dt, r.Lambda, r.wall_seconds);
            std::printf("  nu^2 %.4g  M^2 %.4g  M^2 growth (2nd half) %.3f  zero mass %s\n",
                        r.nu2_final, r.M2_final, r.M2_growth_second_half,
                        r.zero_mass_violated ? "VIOLATED" : "ok");
            print_fits(r.fits);
            std::printf("  series: %s\n", r.series_path.c_str());
        } else if (sweep->parsed()) {
            SweepReport s = run_mach_sweep(cfg);
            std::printf("%10s %14s %14s %14s\n", "eps", "<q>", "<div u>", "<|u-u0|>");
            for (const auto& r : s.rows)
                std::printf("%10.4g %14.6e %14.6e %14.6e\n", r.eps, r.q_avg, r.div_avg, r.du_avg);
            std::printf("wall %.1f s\n", s.total_wall_seconds);
        } else if (conv->parsed()) {
            ConvergenceReport c = run_convergence(cfg);
            std::printf("%s convergence\n%8s %12s %14s %8s\n", c.kind.c_str(), "n3", "dt", "error",
                        "order");
            for (const auto& r : c.rows)
                std::printf("%8d %12.4e %14.6e %8.3f\n", r.n3, r.dt, r.error, r.order);
            if (c.pre_asymptotic)
                std::printf("warning: orders not settled (pre-asymptotic)\n");
        }
    } catch (const RunAborted& e) {
        std::fprintf(stderr, "numerical failure: %s\ncheckpoint: %s\n", e.what(),
                     e.checkpoint().empty() ? "(none)" : e.checkpoint().c_str());
        return kExitNumerical;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\ncheckpoint: (none)\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
