#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "vortexlab/errors.hpp"
#include "vortexlab/mms.hpp"
#include "vortexlab/solver.hpp"

using namespace vlab;
using std::numbers::pi;

namespace {

double max_diff(const Field& a, const Field& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        e = std::max(e, std::abs(a.values[i] - b.values[i]));
    return e;
}

double state_error(const State& s, const State& e)
{
    double err = max_diff(s.rho, e.rho);
    for (std::size_t c = 0; c < s.m.size(); ++c)
        err = std::max(err, max_diff(s.m[c], e.m[c]));
    return err;
}

double total(const Field& f) { return integrate(zero_mode(f)); }

State pulse_state(const Grid& g, const PhysParams& p, double amp, double width = 1.0)
{
    State s = background_state(g, p, 0.0);
    for (int j = 0; j < g.n_nodes(); ++j) {
        const double x = g.x3(j);
        for (int k = 0; k < g.n_tan(); ++k) {
            const double r = p.rho_bar + p.eps * amp * std::exp(-x * x / (width * width));
            s.m[0].at(j, k) *= r / s.rho.at(j, k);
            s.rho.at(j, k) = r;
        }
    }
    return s;
}

} // namespace

TEST_CASE("rest state is a fixed point")
{
    PhysParams p;
    p.u_bar = {0.0, 0.0};
    p.eps = 0.1;
    Grid g = make_grid(1, 8, 128, 8.0);
    SolverConfig cfg;
    State s = background_state(g, p, 0.0);
    CompressibleSolver sol(g, p, cfg);
    sol.initialize(s);
    sol.advance_to(s, 2.0);
    CHECK(s.t == doctest::Approx(2.0));
    State e = background_state(g, p, 2.0);
    CHECK(state_error(s, e) < 1e-11); // roundoff of eps^-2 p(rho_bar) differences
}

TEST_CASE("vortex layer converges under refinement")
{
    PhysParams p;
    p.eps = 0.5;
    p.mu = 0.1;
    p.u_bar = {1.0, 0.0};
    p.t0 = 1.0;
    double prev = 0.0;
    for (int n3 : {64, 128, 256}) {
        Grid g = make_grid(1, 4, n3, 8.0);
        SolverConfig cfg;
        cfg.dt = 0.02 * std::pow(64.0 / n3, 2); // viscosity is explicit
        State s = background_state(g, p, 0.0);
        CompressibleSolver sol(g, p, cfg);
        sol.initialize(s);
        sol.advance_to(s, 1.0);
        const double err = state_error(s, background_state(g, p, 1.0));
        if (prev > 0.0)
            CHECK(prev / err >= 3.6);
        prev = err;
    }
    CHECK(prev < 1e-5);
}

TEST_CASE("acoustic pulse speed and boundary reflection")
{
    PhysParams p;
    p.u_bar = {0.0, 0.0};
    p.mu = 0.01;
    p.eps = 0.1;
    Grid g = make_grid(1, 4, 512, 20.0);
    SolverConfig cfg;
    cfg.sponge_width = 4.0;
    cfg.dt = 0.004;
    const double amp = 0.1;
    State s = pulse_state(g, p, amp);
    CompressibleSolver sol(g, p, cfg);
    sol.initialize(s);
    const double c = p.a_bar() / p.eps;

    auto peak = [&](const State& st, double& where) {
        double mx = 0.0;
        for (int j = 0; j < g.n_nodes(); ++j) {
            const double v = std::abs(st.rho.at(j, 0) - p.rho_bar);
            if (g.x3(j) > 0.0 && v > mx) {
                mx = v;
                where = g.x3(j);
            }
        }
        return mx;
    };
    double x1 = 0.0, x2 = 0.0;
    sol.advance_to(s, 4.0 / c);
    peak(s, x1);
    const double t1 = s.t;
    sol.advance_to(s, 12.0 / c);
    const double incident = peak(s, x2);
    const double speed = (x2 - x1) / (s.t - t1);
    CHECK(std::abs(speed / c - 1.0) <= 0.02);

    // after the pulse reached the boundary everything left is reflection
    sol.advance_to(s, 40.0 / c);
    double xr = 0.0;
    const double reflected = peak(s, xr);
    CHECK(reflected <= 0.05 * incident);
}

TEST_CASE("implicit acoustics stay bounded as eps shrinks")
{
    Grid g = make_grid(1, 4, 128, 8.0);
    for (double eps : {0.5, 0.05, 0.005}) {
        PhysParams p;
        p.u_bar = {0.5, 0.0};
        p.mu = 0.05;
        p.eps = eps;
        SolverConfig cfg;
        cfg.dt = 0.02; // far above the acoustic limit for the small eps
        cfg.sponge_width = 2.0;
        State s = pulse_state(g, p, 0.2);
        State bg = background_state(g, p, 0.0);
        const double init = max_diff(s.rho, bg.rho) / eps;
        CompressibleSolver sol(g, p, cfg);
        sol.initialize(s);
        REQUIRE_NOTHROW(sol.advance_to(s, 1.0));
        const double dev = max_diff(s.rho, background_state(g, p, 1.0).rho) / eps;
        CHECK(std::isfinite(dev));
        CHECK(dev <= 2.0 * init);
    }
}

TEST_CASE("mass is conserved while signals stay interior")
{
    PhysParams p;
    p.u_bar = {0.5, 0.0};
    p.mu = 0.05;
    p.eps = 0.5;
    Grid g = make_grid(1, 8, 256, 16.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    State s = pulse_state(g, p, 0.2);
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k)
            s.m[1].at(j, k) = 0.05 * std::exp(-g.x3(j) * g.x3(j)) * std::cos(2 * pi * g.xt(k));
    const double m0 = total(s.rho);
    const double box = 2 * g.L * p.rho_bar;
    CompressibleSolver sol(g, p, cfg);
    sol.initialize(s);
    sol.advance_to(s, 1.0); // pulse travels about 2.4, far from x3 = +-16
    CHECK(std::abs(total(s.rho) - m0) <= 1e-10 * box);
}

TEST_CASE("manufactured solution converges at fourth order")
{
    PhysParams p;
    p.u_bar = {0.0, 0.0};
    p.mu = 0.05;
    p.eps = 0.5;
    ManufacturedSolution ms(p, 0.05, 1.0);
    double prev = 0.0;
    for (int n3 : {64, 128}) {
        Grid g = make_grid(1, 8, n3, 6.0);
        SolverConfig cfg;
        cfg.forcing = ms.forcing(g);
        State s = ms.exact_state(g, 0.0);
        CompressibleSolver sol(g, p, cfg);
        sol.initialize(s);
        sol.set_dt(0.004 * std::pow(64.0 / n3, 2));
        sol.advance_to(s, 0.25);
        const double err = state_error(s, ms.exact_state(g, 0.25));
        if (prev > 0.0)
            CHECK(std::log2(prev / err) >= 3.5);
        prev = err;
    }
}

TEST_CASE("density floor aborts the step")
{
    PhysParams p;
    p.eps = 1.0;
    p.u_bar = {0.0, 0.0};
    Grid g = make_grid(1, 4, 64, 8.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    State s = background_state(g, p, 0.0);
    s.rho.at(32, 0) = 0.1;
    CompressibleSolver sol(g, p, cfg);
    CHECK_THROWS_AS(sol.initialize(s), NumericalError);
}

TEST_CASE("Leray projection")
{
    Grid g = make_grid(1, 16, 256, 8.0);
    std::vector<Field> v(2, Field(g)), grad(2, Field(g));
    Field q(g);
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k) {
            const double x = g.x3(j), y = g.xt(k);
            const double e = std::exp(-x * x);
            v[0].at(j, k) = e * (std::sin(2 * pi * y) + 0.3);
            v[1].at(j, k) = x * e * std::cos(4 * pi * y);
            q.at(j, k) = e * (std::cos(2 * pi * y) + 0.5 * std::sin(6 * pi * y));
        }
    auto P = leray_project(v, 1e-12);
    Field div = divergence(P);
    CHECK(linf_norm(div) <= 1e-10);
    auto PP = leray_project(P, 1e-12);
    CHECK(max_diff(PP[0], P[0]) <= 1e-10);
    CHECK(max_diff(PP[1], P[1]) <= 1e-10);

    grad[0] = d_tangential(q, 0, 1);
    grad[1] = d_normal(q, 1);
    auto Pg = leray_project(grad, 1e-12);
    CHECK(linf_norm(Pg[0]) <= 1e-10 * linf_norm(grad[0]));
    CHECK(linf_norm(Pg[1]) <= 1e-10 * linf_norm(grad[1]));
}

TEST_CASE("incompressible shear mode decays at the viscous rate")
{
    PhysParams p;
    p.mu = 0.02;
    p.u_bar = {0.0, 0.0};
    Grid g = make_grid(1, 16, 64, 4.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    IncState s(g);
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k)
            s.u[1].at(j, k) = 0.1 * std::cos(2 * pi * g.xt(k));
    IncompressibleSolver sol(g, p, cfg);
    sol.initialize(s);
    sol.advance_to(s, 2.0);
    const double rate = -std::log(s.u[1].at(10, 0) / 0.1) / 2.0;
    CHECK(rate == doctest::Approx(p.mu * 4 * pi * pi / p.rho_bar).epsilon(0.01));

    IncState z(g);
    IncompressibleSolver sz(g, p, cfg);
    sz.initialize(z);
    sz.advance_to(z, 1.0);
    CHECK(linf_norm(z.u[0]) == 0.0);
    CHECK(linf_norm(z.u[1]) == 0.0);
}

TEST_CASE("checkpoint round trip")
{
    PhysParams p;
    p.eps = 0.3;
    p.mu = 0.07;
    p.t0 = 2.5;
    Grid g = make_grid(1, 8, 64, 5.0);
    State s = pulse_state(g, p, 0.1);
    s.t = 1.25;
    const auto path = std::filesystem::temp_directory_path() / "vlab_ckpt_test.bin";
    save_checkpoint(path.string(), s, p);
    PhysParams q;
    State r = load_checkpoint(path.string(), &q);
    std::filesystem::remove(path);
    CHECK(r.t == s.t);
    CHECK(q.eps == p.eps);
    CHECK(q.mu == p.mu);
    CHECK(q.t0 == p.t0);
    CHECK(r.grid().n3 == g.n3);
    CHECK(state_error(r, s) == 0.0);
}
