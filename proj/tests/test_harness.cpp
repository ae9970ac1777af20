#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vortexlab/errors.hpp"
#include "vortexlab/harness.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(; tiny run used by the harness tests
[meta]
version = 1
name = small
seed = 3

[params]
u_bar1 = 0.5
mu = 0.1
eps = 0.3
t0 = 1
Lambda = auto

[grid]
d = 1
n_perp = 8
n3 = 64
L = 8

[solver]
sponge_width = 2

[initial]
family = mixed
chi_amp = 0.05
zero_amp = 0.1

[run]
T = 1
sample_dt = 0.25
checkpoint_every = 2
fit_lo = 0
fit_hi = 1

[output]
dir = out/small
)";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    fs::path d = fs::temp_directory_path() / ("vlab_harness_" + name);
    fs::remove_all(d);
    return d;
}

} // namespace

TEST_CASE("config parsing and canonical form")
{
    ExperimentConfig c = parse_config(kSmall);
    CHECK(c.name == "small");
    CHECK(c.seed == 3);
    CHECK(c.params.mu == 0.1);
    CHECK(c.lambda_auto);
    CHECK(c.grid.n3 == 64);
    CHECK(c.solver.sponge_width == 2.0);
    CHECK(c.initial.family == "mixed");
    CHECK(c.checkpoint_every == 2);

    ExperimentConfig r = parse_config(to_ini(c));
    CHECK(to_ini(r) == to_ini(c));
    CHECK(config_hash(r) == config_hash(c));

    ExperimentConfig moved = c;
    moved.out_dir = "elsewhere";
    moved.threads = 4;
    CHECK(config_hash(moved) == config_hash(c));
    ExperimentConfig changed = c;
    changed.params.mu = 0.2;
    CHECK(config_hash(changed) != config_hash(c));

    ExperimentConfig fixed = parse_config(std::string(kSmall) + "");
    fixed.lambda_auto = false;
    fixed.params.Lambda = 7.0;
    ExperimentConfig fr = parse_config(to_ini(fixed));
    CHECK_FALSE(fr.lambda_auto);
    CHECK(fr.params.Lambda == 7.0);
}

TEST_CASE("config errors")
{
    std::string s = kSmall;
    CHECK_THROWS_AS(parse_config(s + "\n[grid2]\nx = 1\n"), ConfigError);
    std::string unknown = s;
    unknown.replace(unknown.find("n3 = 64"), 7, "n3 = 64\nnz = 3");
    CHECK_THROWS_AS(parse_config(unknown), ConfigError);
    std::string nover = s;
    nover.replace(nover.find("version = 1"), 11, "");
    CHECK_THROWS_AS(parse_config(nover), ConfigError);
    std::string v2 = s;
    v2.replace(v2.find("version = 1"), 11, "version = 2");
    CHECK_THROWS_AS(parse_config(v2), ConfigError);
    std::string badfam = s;
    badfam.replace(badfam.find("family = mixed"), 14, "family = vortex");
    CHECK_THROWS_AS(parse_config(badfam), ConfigError);
    std::string badnum = s;
    badnum.replace(badnum.find("mu = 0.1"), 8, "mu = fast");
    CHECK_THROWS_AS(parse_config(badnum), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);

    ExperimentConfig c = parse_config(s);
    c.eps_list = {0.1};
    CHECK_THROWS_AS(run_mach_sweep(c), ConfigError);
    c.eps_list = {0.4, 0.2, 0.15};
    CHECK_THROWS_AS(run_mach_sweep(c), ConfigError);
    c.refine_list = {32, 64};
    CHECK_THROWS_AS(run_convergence(c), ConfigError);
    c.refine_list = {32, 64, 100};
    CHECK_THROWS_AS(run_convergence(c), ConfigError);
}

TEST_CASE("initial data families")
{
    Grid g = make_grid(1, 8, 128, 8.0);
    InitialSpec z;
    z.chi_amp = 0.0;
    InitialPerturbation ip0 = build_initial(z, g);
    CHECK(linf_norm(ip0.b0) == 0.0);
    for (const auto& v : ip0.v0)
        CHECK(linf_norm(v) == 0.0);

    InitialSpec a;
    a.family = "mixed";
    a.chi_amp = 0.02;
    a.zero_amp = 0.1;
    InitialSpec b = a;
    b.chi_amp = 0.04;
    b.zero_amp = 0.2;
    InitialPerturbation pa = build_initial(a, g, 5), pb = build_initial(b, g, 5);
    for (std::size_t i = 0; i < pa.b0.values.size(); ++i)
        CHECK(pb.b0.values[i] == doctest::Approx(2 * pa.b0.values[i]));
    InitialPerturbation again = build_initial(a, g, 5), other = build_initial(a, g, 6);
    CHECK(again.b0.values == pa.b0.values);
    CHECK(other.b0.values != pa.b0.values);

    // the zero-mode family carries its large part in the tangential mean only
    InitialSpec t;
    t.family = "tangential-zeromode";
    t.chi_amp = 0.0;
    t.zero_amp = 0.5;
    InitialPerturbation pt = build_initial(t, g);
    CHECK(linf_norm(pt.b0) == 0.0);
    CHECK(linf_norm(nonzero_mode(pt.v0[0])) <= 1e-15);
    CHECK(linf_norm(zero_mode(pt.v0[0])) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("run, determinism and report")
{
    ExperimentConfig c = parse_config(kSmall);
    fs::path d1 = scratch("a"), d2 = scratch("b");
    c.out_dir = d1.string();
    RunRecord r1 = run_single(c);
    c.out_dir = d2.string();
    RunRecord r2 = run_single(c);
    CHECK(fs::exists(d1 / "series.csv"));
    CHECK(fs::exists(d1 / "record.json"));
    CHECK(fs::exists(d1 / "config.ini"));
    CHECK(fs::exists(d1 / "checkpoints" / "ckpt_final.bin"));
    CHECK(fs::exists(d1 / "checkpoints" / "ckpt_00002.bin"));
    CHECK(slurp(d1 / "series.csv") == slurp(d2 / "series.csv"));
    CHECK(r1.series.size() == 5);

    auto rec = nlohmann::json::parse(slurp(d1 / "record.json"));
    CHECK(rec["config_hash"] == config_hash(c));
    // the stored config reproduces the run
    ExperimentConfig back = parse_config(rec["config"].get<std::string>());
    back.out_dir = scratch("c").string();
    RunRecord r3 = run_single(back);
    CHECK(slurp(d1 / "series.csv") == slurp(fs::path(back.out_dir) / "series.csv"));

    auto fits = report_from_series((d1 / "series.csv").string(), c.fit_lo, c.fit_hi);
    REQUIRE(fits.size() == r1.fits.size());
    for (std::size_t i = 0; i < fits.size(); ++i) {
        CHECK(fits[i].quantity == r1.fits[i].quantity);
        CHECK(fits[i].fit.has_value() == r1.fits[i].fit.has_value());
        if (fits[i].fit && r1.fits[i].fit)
            CHECK(fits[i].fit->slope == doctest::Approx(r1.fits[i].fit->slope).epsilon(1e-9));
    }
    CHECK_THROWS_AS(report_from_series((d1 / "missing.csv").string(), 0, 1), ConfigError);
    for (auto& d : {d1, d2, fs::path(back.out_dir)})
        fs::remove_all(d);
}

TEST_CASE("numerical failure leaves a checkpoint")
{
    ExperimentConfig c = parse_config(kSmall);
    c.solver.dt = 0.5; // far above the explicit viscous limit
    fs::path d = scratch("fail");
    c.out_dir = d.string();
    try {
        run_single(c);
        FAIL("expected RunAborted");
    } catch (const RunAborted& e) {
        CHECK(fs::exists(e.checkpoint()));
    }
    fs::remove_all(d);
}

TEST_CASE("unresolved refinement is flagged")
{
    ExperimentConfig c = parse_config(kSmall);
    c.refine_list = {16, 32, 64};
    c.converge_T = 0.5;
    c.out_dir.clear();
    ConvergenceReport rep = run_convergence(c);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].order == 0.0);
    CHECK(rep.rows[1].dt == doctest::Approx(2 * rep.rows[2].dt));
    CHECK(rep.pre_asymptotic);
}

#ifdef VLAB_EXE
TEST_CASE("command line exit codes")
{
    fs::path d = scratch("cli");
    fs::create_directories(d);
    const std::string exe = VLAB_EXE;
    auto run = [&](const std::string& args) {
        const std::string cmd = exe + " " + args + " > " + (d / "out.txt").string() + " 2> " +
                                (d / "err.txt").string();
        const int rc = std::system(cmd.c_str());
        return WEXITSTATUS(rc);
    };
    std::ofstream(d / "bad.ini") << "[meta]\nversion = 9\n";
    CHECK(run("run --config " + (d / "bad.ini").string()) == 2);

    std::string failing = kSmall;
    failing.replace(failing.find("sponge_width = 2"), 16, "sponge_width = 2\ndt = 0.5");
    std::ofstream(d / "fail.ini") << failing;
    CHECK(run("run --config " + (d / "fail.ini").string() + " --out " + (d / "run").string()) == 3);
    CHECK(slurp(d / "err.txt").find("checkpoint: ") != std::string::npos);

    std::ofstream(d / "ok.ini") << kSmall;
    CHECK(run("run --config " + (d / "ok.ini").string() + " --out " + (d / "ok").string()) == 0);
    CHECK(run("report --series " + (d / "ok").string() + " --fit-lo 0 --fit-hi 1") == 0);
    fs::remove_all(d);
}
#endif
