#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vortexlab/domain.hpp"
#include "vortexlab/io.hpp"

using namespace vlab;
using std::numbers::pi;

namespace {

template <class F>
Field sample(const Grid& g, F&& f)
{
    Field out(g);
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k)
            out.at(j, k) = f(g.xt(k, 0), g.d == 2 ? g.xt(k, 1) : 0.0, g.x3(j));
    return out;
}

Field random_field(const Grid& g, unsigned seed)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    Field f(g);
    for (auto& v : f.values)
        v = N(rng);
    return f;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// composite Simpson with many panels, independent of the library quadrature
template <class F>
double simpson(F&& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("grid validation")
{
    CHECK_NOTHROW(make_grid(1, 8, 16, 1.0));
    CHECK_THROWS_AS(make_grid(1, 6, 64, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 8, 15, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(3, 8, 64, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 8, 64, 0.0), ConfigError);
    Grid g = make_grid(2, 4, 32, 2.0);
    CHECK(Field(g).size() == 16u * 33u);
    CHECK(Profile(g).size() == 33u);
    CHECK(g.x3(0) == -2.0);
    CHECK(g.x3(32) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("params validation and pressure law")
{
    PhysParams p;
    CHECK_NOTHROW(p.validate());
    p.mu = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = PhysParams{};
    p.lambda = -0.2;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = PhysParams{};
    p.gamma = 1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = PhysParams{};
    CHECK(p.a_bar() == doctest::Approx(std::sqrt(1.4)));
    CHECK(p.varpi(p.rho_bar) == 0.0);
    CHECK(p.varpi(1.1) > 0.0);
}

TEST_CASE("zero and non-zero modes")
{
    Grid g = make_grid(1, 16, 32, 3.0);
    Field c(g, 2.5);
    for (double v : zero_mode(c).values)
        CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(max_abs(nonzero_mode(c).values) < 1e-15);

    Field s = sample(g, [](double x1, double, double x3) { return std::sin(2 * pi * x1) * std::exp(-x3 * x3); });
    CHECK(max_abs(zero_mode(s).values) < 1e-15);
    Field sn = nonzero_mode(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(sn.values[i] == doctest::Approx(s.values[i]).epsilon(1e-14));

    Field gc = sample(g, [](double x1, double, double x3) { return std::exp(-x3 * x3) + 0.3 * std::cos(4 * pi * x1); });
    Profile gp = zero_mode(gc);
    for (int j = 0; j < g.n_nodes(); ++j)
        CHECK(gp[j] == doctest::Approx(std::exp(-g.x3(j) * g.x3(j))).epsilon(1e-14));
}

TEST_CASE("mode decomposition identities on random fields")
{
    for (int d : {1, 2}) {
        Grid g = make_grid(d, 8, 24, 1.0);
        Field f = random_field(g, 7 + d);
        Field fs = nonzero_mode(f);
        Field fb = broadcast(zero_mode(f));
        const double scale = max_abs(f.values);
        double err = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            err = std::max(err, std::abs(f.values[i] - fb.values[i] - fs.values[i]));
        CHECK(err <= 1e-13 * scale);
        CHECK(max_abs(zero_mode(fs).values) <= 1e-13 * scale);
    }
}

TEST_CASE("discrete Poincare inequality for the non-zero mode")
{
    for (int d : {1, 2})
        for (unsigned seed = 1; seed <= 5; ++seed) {
            Grid g = make_grid(d, 8, 20, 1.0);
            Field fs = nonzero_mode(random_field(g, seed));
            const double lhs = l2_norm(fs);
            const double rhs = tangential_gradient_l2(fs) / (2 * pi);
            CHECK(lhs <= rhs * (1.0 + 1e-10));
        }
    // equality for a single lowest mode
    Grid g = make_grid(1, 16, 20, 1.0);
    Field f = sample(g, [](double x1, double, double) { return std::cos(2 * pi * x1); });
    CHECK(l2_norm(f) == doctest::Approx(tangential_gradient_l2(f) / (2 * pi)).epsilon(1e-12));
}

TEST_CASE("weighted L2 norm")
{
    Grid g = make_grid(1, 4, 4000, 10.0);
    Profile z(g);
    CHECK(weighted_l2_norm(z, 0.75) == 0.0);
    Profile b(g);
    for (int j = 0; j < g.n_nodes(); ++j)
        b[j] = std::exp(-g.x3(j) * g.x3(j));
    // int e^{-2x^2} = sqrt(pi/2)
    CHECK(weighted_l2_norm(b, 0.0) == doctest::Approx(std::pow(pi / 2, 0.25)).epsilon(1e-10));
    const double oracle = std::sqrt(simpson(
        [](double x) { return std::pow(1 + x * x, 0.75) * std::exp(-2 * x * x); }, -10, 10, 1000000));
    CHECK(weighted_l2_norm(b, 0.75) == doctest::Approx(oracle).epsilon(1e-6));
    CHECK_THROWS_AS(weighted_l2_norm(b, -0.1), ConfigError);
    CHECK(l2_norm(b) == doctest::Approx(weighted_l2_norm(b, 0.0)).epsilon(1e-15));
}

TEST_CASE("normal derivatives")
{
    Grid g = make_grid(1, 4, 64, 3.0);
    for (int order : {1, 2, 3}) {
        Field c(g, 1.7);
        CHECK(linf_norm(d_normal(c, order)) < 1e-10);
    }
    // cubic polynomials are differentiated exactly
    Field p3 = sample(g, [](double, double, double x) { return 1 + 2 * x - x * x + 0.5 * x * x * x; });
    Field d1 = d_normal(p3, 1), d2 = d_normal(p3, 2), d3 = d_normal(p3, 3);
    for (int j = 0; j < g.n_nodes(); ++j) {
        const double x = g.x3(j);
        CHECK(d1.at(j, 0) == doctest::Approx(2 - 2 * x + 1.5 * x * x).epsilon(1e-10));
        CHECK(d2.at(j, 0) == doctest::Approx(-2 + 3 * x).epsilon(1e-9));
        CHECK(d3.at(j, 0) == doctest::Approx(3.0).epsilon(1e-8));
    }
    Profile lin(g);
    for (int j = 0; j < g.n_nodes(); ++j)
        lin[j] = g.x3(j);
    for (double v : d_normal(lin, 1).values)
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    // sin, order 2, 4th-order convergence
    double prev = 0.0;
    for (int n3 : {60, 120, 240}) {
        Grid gs = make_grid(1, 4, n3, 3.0);
        Profile s(gs);
        for (int j = 0; j < gs.n_nodes(); ++j)
            s[j] = std::sin(gs.x3(j));
        Profile dd = d_normal(s, 2);
        double err = 0.0;
        for (int j = 0; j < gs.n_nodes(); ++j)
            err = std::max(err, std::abs(dd[j] + std::sin(gs.x3(j))));
        if (n3 == 120)
            CHECK(err < 1e-5); // h3 = 0.05
        if (prev > 0.0)
            CHECK(prev / err > 12.0);
        prev = err;
    }
    CHECK_THROWS_AS(normal_stencil(8, 3), StencilTooWide);
}

TEST_CASE("normal derivative is linear")
{
    Grid g = make_grid(1, 8, 40, 2.0);
    Field a = random_field(g, 3), b = random_field(g, 4), ab(g);
    for (std::size_t i = 0; i < ab.size(); ++i)
        ab.values[i] = 2 * a.values[i] - 3 * b.values[i];
    Field da = d_normal(a, 2), db = d_normal(b, 2), dab = d_normal(ab, 2);
    for (std::size_t i = 0; i < ab.size(); ++i)
        CHECK(dab.values[i] == doctest::Approx(2 * da.values[i] - 3 * db.values[i]).epsilon(1e-10));
}

TEST_CASE("tangential derivatives are spectral")
{
    Grid g = make_grid(1, 16, 16, 1.0);
    CHECK(linf_norm(d_tangential(Field(g, 3.0), 0, 1)) < 1e-13);
    Field s = sample(g, [](double x1, double, double) { return std::sin(2 * pi * x1); });
    Field ds = d_tangential(s, 0, 1);
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k)
            CHECK(std::abs(ds.at(j, k) - 2 * pi * std::cos(2 * pi * g.xt(k))) <= 1e-12);
    // product rule oracle: d/dx (sin cos) = 2 pi cos(4 pi x)
    Field sc = sample(g, [](double x1, double, double) { return std::sin(2 * pi * x1) * std::cos(2 * pi * x1); });
    Field dsc = d_tangential(sc, 0, 1);
    for (int k = 0; k < g.n_tan(); ++k)
        CHECK(std::abs(dsc.at(3, k) - 2 * pi * std::cos(4 * pi * g.xt(k))) <= 1e-12);
    // second direction in d = 2
    Grid g2 = make_grid(2, 8, 16, 1.0);
    Field c2 = sample(g2, [](double, double x2, double) { return std::cos(4 * pi * x2); });
    Field d2 = d_tangential(c2, 1, 2);
    for (int k = 0; k < g2.n_tan(); ++k)
        CHECK(std::abs(d2.at(0, k) + 16 * pi * pi * std::cos(4 * pi * g2.xt(k, 1))) <= 1e-10);
}

TEST_CASE("anti-derivative")
{
    Grid g = make_grid(1, 4, 4000, 10.0);
    Profile z(g);
    CHECK(linf_norm(antiderivative(z)) == 0.0);
    Profile gs(g), dip(g);
    auto kern = [](double x) { return std::exp(-x * x / 4) / (2 * std::sqrt(pi)); };
    for (int j = 0; j < g.n_nodes(); ++j) {
        gs[j] = std::exp(-g.x3(j) * g.x3(j));
        dip[j] = kern(g.x3(j)) - kern(g.x3(j) - 2.0);
    }
    Profile G = antiderivative(gs);
    CHECK(G[0] == 0.0);
    CHECK(G[g.n3] == doctest::Approx(std::sqrt(pi)).epsilon(1e-8));
    for (int j = 0; j < g.n_nodes(); j += 400)
        CHECK(G[j] == doctest::Approx(0.5 * std::sqrt(pi) * (1 + std::erf(g.x3(j)))).epsilon(1e-6));
    CHECK(std::abs(antiderivative(dip)[g.n3]) < 1e-8);
    // second-order consistency of d_normal(antiderivative(p)) with p
    Profile back = d_normal(G, 1);
    double err = 0.0;
    for (int j = 0; j < g.n_nodes(); ++j)
        err = std::max(err, std::abs(back[j] - gs[j]));
    CHECK(err < 10 * g.h3() * g.h3());
}

TEST_CASE("field and profile serialization round trip")
{
    Grid g = make_grid(2, 4, 16, 1.5);
    Field f = random_field(g, 11);
    std::stringstream ss;
    write_field(ss, f);
    Field r = read_field(ss);
    CHECK(r.grid == g);
    CHECK(r.values == f.values);
    Profile p = zero_mode(f);
    std::stringstream sp;
    write_profile(sp, p);
    Profile q = read_profile(sp);
    CHECK(q.values == p.values);
    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_field(bad), Error);
}
