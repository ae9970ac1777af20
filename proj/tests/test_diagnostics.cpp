#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vortexlab/diagnostics.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/solver.hpp"

using namespace vlab;
using std::numbers::pi;

namespace {

PhysParams params()
{
    PhysParams p;
    p.mu = 0.1;
    p.eps = 0.3;
    p.u_bar = {0.5, 0.0};
    p.t0 = 1.0;
    p.Lambda = 2.0;
    return p;
}

// ansatz state plus delta times a fixed smooth pattern
State perturbed(const Grid& g, const AnsatzSpec& spec, double t, double delta)
{
    const auto A = spec.sample(g, t);
    State s(g);
    s.t = t;
    for (int j = 0; j < g.n_nodes(); ++j) {
        const double x = g.x3(j);
        const double e = std::exp(-x * x);
        for (int k = 0; k < g.n_tan(); ++k) {
            const double y = g.xt(k);
            s.rho.at(j, k) = A.rho[j] + delta * e * (0.3 + std::cos(2 * pi * y));
            s.m[0].at(j, k) = A.m[0][j] + delta * e * (0.2 * x + std::sin(2 * pi * y));
            s.m[1].at(j, k) = A.m[1][j] + delta * x * e * (0.5 + std::cos(4 * pi * y));
        }
    }
    return s;
}

double max_abs_diff(const Field& a, const Field& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

} // namespace

TEST_CASE("perturbation variables")
{
    PhysParams p = params();
    Grid g = make_grid(1, 8, 256, 8.0);
    AnsatzSpec spec = build_ansatz({0.1, 0.05, 0.0, -0.08}, p, 1);
    State s = perturbed(g, spec, 0.7, 0.05);
    PerturbationSet P = extract_perturbations(s, spec);
    CHECK(P.t == 0.7);
    for (int j = 0; j < g.n_nodes(); j += 7)
        for (int k = 0; k < g.n_tan(); ++k) {
            const double rho = s.rho.at(j, k);
            CHECK(P.phi.at(j, k) == doctest::Approx((rho - P.ansatz.rho[j]) / p.eps).epsilon(1e-12));
            for (int c = 0; c < 2; ++c) {
                // m = rho (u~ + zeta) gives w = rho zeta
                CHECK(std::abs(P.w[c].at(j, k) - rho * P.zeta[c].at(j, k)) <= 1e-12);
                CHECK(std::abs(P.psi[c].at(j, k) - P.w[c].at(j, k) - p.eps * P.ansatz.u[c][j] * P.phi.at(j, k)) <= 1e-12);
            }
        }
}

TEST_CASE("anti-derivatives")
{
    PhysParams p = params();
    Grid g = make_grid(1, 8, 512, 8.0);
    AnsatzSpec spec = build_ansatz({0.1, 0.05, 0.0, -0.08}, p, 1);
    State s = perturbed(g, spec, 0.7, 0.05);
    PerturbationSet P = extract_perturbations(s, spec);
    AntiDerivativeSet a = build_antiderivatives(P);

    // path B: Z = int w_flat + eps (int (u~ phi)_flat - u~ Phi)
    Profile uphi(g);
    const Profile phif = zero_mode(P.phi);
    for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < g.n_nodes(); ++j)
            uphi[j] = P.ansatz.u[c][j] * phif[j];
        const Profile Iw = antiderivative(zero_mode(P.w[c]));
        const Profile Iu = antiderivative(uphi);
        for (int j = 0; j < g.n_nodes(); ++j) {
            const double zb = Iw[j] + p.eps * (Iu[j] - P.ansatz.u[c][j] * a.Phi[j]);
            CHECK(std::abs(zb - a.Z[c][j]) <= 1e-10);
        }
    }
    // d3 Phi = phi_flat away from the ends
    const Profile dPhi = d_normal(a.Phi, 1);
    double e = 0.0;
    for (int j = 8; j <= g.n3 - 8; ++j)
        e = std::max(e, std::abs(dPhi[j] - phif[j]));
    CHECK(e <= 0.02 * g.h3() * g.h3()); // cumulative trapezoid is second order
    CHECK(a.Phi[0] == 0.0);
    // the pattern carries mass 0.3 * sqrt(pi) * delta in rho
    CHECK(a.endpoints[0] == doctest::Approx(0.3 * std::sqrt(pi) * 0.05 / p.eps).epsilon(1e-8));
    CHECK(a.zero_mass_violated);
}

TEST_CASE("energies")
{
    PhysParams p = params();
    Grid g = make_grid(1, 8, 256, 8.0);
    AnsatzSpec spec = build_ansatz({0.1, 0.05, 0.0, -0.08}, p, 1);
    State s = perturbed(g, spec, 0.0, 0.05);
    PerturbationSet P = extract_perturbations(s, spec);
    AntiDerivativeSet a = build_antiderivatives(P);
    EnergyStar e0 = energy_star(a, P, 0.0);
    EnergyStar e3 = energy_star(a, P, 3.0);
    EnergyFull f0 = energy_full(a, P, 0.0);
    CHECK(e0.value <= f0.value);
    CHECK(f0.star.value == e0.value);
    // weights (t+1)^j
    for (int j = 0; j < 3; ++j)
        CHECK(e3.anti[j] == doctest::Approx(std::pow(4.0, j) * e0.anti[j]).epsilon(1e-13));
    CHECK(e3.md[1] == doctest::Approx(4.0 * e0.md[1]).epsilon(1e-13));
    CHECK(e0.anti[0] == doctest::Approx(std::pow(l2_norm(a.Phi), 2) + std::pow(l2_norm(a.Z[1]), 2)).epsilon(1e-13));

    // quadratic in the perturbation amplitude
    State h = perturbed(g, spec, 0.0, 0.025);
    PerturbationSet Ph = extract_perturbations(h, spec);
    EnergyStar eh = energy_star(build_antiderivatives(Ph), Ph, 0.0);
    CHECK(eh.value == doctest::Approx(0.25 * e0.value).epsilon(1e-9));

    // tangential shift by one cell changes nothing
    State sh = s;
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k) {
            const int k2 = (k + 1) % g.n_tan();
            sh.rho.at(j, k) = s.rho.at(j, k2);
            sh.m[0].at(j, k) = s.m[0].at(j, k2);
            sh.m[1].at(j, k) = s.m[1].at(j, k2);
        }
    PerturbationSet Ps = extract_perturbations(sh, spec);
    EnergyFull fs = energy_full(build_antiderivatives(Ps), Ps, 0.0);
    CHECK(fs.value == doctest::Approx(f0.value).epsilon(1e-12));

    // multinomial weights: grad_norm_sq(f, 1) = ||d1 f||^2 + ||d3 f||^2
    const Field& f = P.phi;
    const double g1 = std::pow(l2_norm(d_tangential(f, 0, 1)), 2) + std::pow(l2_norm(d_normal(f, 1)), 2);
    CHECK(grad_norm_sq(f, 1) == doctest::Approx(g1).epsilon(1e-13));
    const double g2 = std::pow(l2_norm(d_tangential(f, 0, 2)), 2) +
                      2 * std::pow(l2_norm(d_normal(d_tangential(f, 0, 1), 1)), 2) +
                      std::pow(l2_norm(d_normal(f, 2)), 2);
    CHECK(grad_norm_sq(f, 2) == doctest::Approx(g2).epsilon(1e-13));
}

TEST_CASE("exact ansatz state has vanishing report")
{
    PhysParams p = params();
    Grid g = make_grid(1, 8, 256, 8.0);
    AnsatzSpec spec = build_ansatz({0.0, 0.0, 0.0, 0.0}, p, 1);
    State s = perturbed(g, spec, 0.0, 0.0);
    RunningMonitors mon;
    EnergyReport r = make_report(s, spec, mon);
    CHECK(r.E_star == 0.0);
    CHECK(r.E_full == 0.0);
    CHECK(r.md_h1 == 0.0);
    CHECK(r.M == 1.0);
    CHECK_FALSE(r.zero_mass_violated);
    CHECK(report_row(r).size() == report_columns().size());
    // auxiliary layer differs from the true layer by the age shift
    CHECK(r.linf_bv == doctest::Approx(std::abs(vortex_layer_velocity(-10.0, 0.0, p, p.t0)[0] -
                                                vortex_layer_velocity(-10.0, 0.0, p, p.Lambda)[0]))
                           .epsilon(0.5));
}

TEST_CASE("running monitors are monotone")
{
    RunningMonitors m;
    double prev_nu = 0.0, prev_M = 0.0;
    const double es[] = {1.0, 0.2, 3.0, 0.1, 0.0, 5.0};
    for (int i = 0; i < 6; ++i) {
        m.update(i, es[i], 2 * es[i]);
        CHECK(m.nu2 >= prev_nu);
        CHECK(m.M2 >= prev_M);
        prev_nu = m.nu2;
        prev_M = m.M2;
    }
    CHECK(m.nu2 == doctest::Approx(5.0 / std::sqrt(6.0)));
    CHECK(m.M() >= 1.0);
    RunningMonitors z;
    CHECK(z.M() == 1.0);
}

TEST_CASE("decay fits")
{
    std::vector<double> t, v, h;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(2.0 * i);
        v.push_back(3.0 * std::pow(2.0 * i + 1.0, -0.7));
        h.push_back(1.0 / std::sqrt(4 * pi * (2.0 * i + 0.5))); // heat kernel peak
    }
    DecayFit f = fit_decay(t, v, 10.0, 200.0);
    CHECK(std::abs(f.slope + 0.7) <= 1e-12);
    CHECK(std::abs(f.intercept - std::log(3.0)) <= 1e-11);
    CHECK(f.n == 96);
    CHECK(f.residual <= 1e-12);
    DecayFit fh = fit_decay(t, h, 10.0, 200.0);
    CHECK(fh.slope == doctest::Approx(-0.5).epsilon(0.01));

    auto bad = v;
    bad[50] = 0.0;
    CHECK_THROWS_AS(fit_decay(t, bad, 10.0, 200.0), NonPositiveSamples);
    CHECK_THROWS_AS(fit_decay(t, v, 10.0, 20.0), NonPositiveSamples);
    CHECK_THROWS_AS(fit_decay(t, std::vector<double>(3, 1.0), 0.0, 1.0), ConfigError);
}

TEST_CASE("catalogue rates and plateau monitor")
{
    CHECK(catalogue_rate("aL2-anti-nu-0", 15.0, 2.0, 3.0) == doctest::Approx(2.0 * 2.0));
    CHECK(catalogue_rate("aL2-od-M-1", 15.0, 2.0, 3.0) == doctest::Approx(3.0 * std::pow(16.0, -0.75)));
    CHECK(catalogue_rate("aL2-md", 15.0, 2.0, 3.0) ==
          doctest::Approx(std::min(2.0 * 0.5, 3.0 * 0.125)));
    CHECK(catalogue_rate("aLinf-pert-nu", 15.0, 16.0, 1.0) == doctest::Approx(2.0 * 0.25));
    CHECK_THROWS_AS(catalogue_rate("no-such-bound", 1.0, 1.0, 1.0), ConfigError);

    AprioriMonitor flat, growing;
    for (int i = 0; i <= 20; ++i) {
        EnergyReport r;
        r.t = i;
        r.nu = 1.0;
        r.M = 1.0;
        r.catalogue["aL2-od-M-0"] = std::pow(i + 1.0, -0.25);
        flat.feed(r);
        r.catalogue["aL2-od-M-0"] = 1.0;
        growing.feed(r);
    }
    CHECK(flat.not_plateaued().empty());
    CHECK(flat.entries().at("aL2-od-M-0").max_ratio == doctest::Approx(1.0));
    REQUIRE(growing.not_plateaued().size() == 1);
    CHECK(growing.not_plateaued()[0] == "aL2-od-M-0");
}

TEST_CASE("Mach metrics and Gagliardo-Nirenberg quotient")
{
    PhysParams p = params();
    Grid g = make_grid(1, 8, 256, 8.0);
    State s = background_state(g, p, 0.0);
    MachMetrics m = mach_metrics(s, p);
    CHECK(m.q_norm == 0.0);
    CHECK(m.div_norm <= 1e-14);

    CHECK(gagliardo_nirenberg_ratio(Field(g)) == 0.0);
    double prev = 0.0;
    for (int n3 : {128, 256, 512}) {
        Grid gg = make_grid(1, 16, n3, 8.0);
        Field f(gg);
        for (int j = 0; j < gg.n_nodes(); ++j)
            for (int k = 0; k < gg.n_tan(); ++k)
                f.at(j, k) = std::exp(-gg.x3(j) * gg.x3(j)) * std::cos(2 * pi * gg.xt(k));
        const double r = gagliardo_nirenberg_ratio(f);
        CHECK(r > 0.0);
        if (prev > 0.0)
            CHECK(std::abs(r / prev - 1.0) <= 1e-3);
        prev = r;
    }
}
