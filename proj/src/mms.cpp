#include "vortexlab/mms.hpp"

#include <numbers>

namespace vlab {

namespace {

// f(a) given f, f', f'' at a.v
Dual2 chain(const Dual2& a, double f0, double f1, double f2)
{
    Dual2 r(f0);
    for (int i = 0; i < 3; ++i) {
        r.g[i] = f1 * a.g[i];
        for (int j = 0; j < 3; ++j)
            r.H[i][j] = f1 * a.H[i][j] + f2 * a.g[i] * a.g[j];
    }
    return r;
}

} // namespace

Dual2 operator+(const Dual2& a, const Dual2& b)
{
    Dual2 r(a.v + b.v);
    for (int i = 0; i < 3; ++i) {
        r.g[i] = a.g[i] + b.g[i];
        for (int j = 0; j < 3; ++j)
            r.H[i][j] = a.H[i][j] + b.H[i][j];
    }
    return r;
}

Dual2 operator-(const Dual2& a) { return chain(a, -a.v, -1.0, 0.0); }

Dual2 operator-(const Dual2& a, const Dual2& b) { return a + (-b); }

Dual2 operator*(const Dual2& a, const Dual2& b)
{
    Dual2 r(a.v * b.v);
    for (int i = 0; i < 3; ++i) {
        r.g[i] = a.g[i] * b.v + a.v * b.g[i];
        for (int j = 0; j < 3; ++j)
            r.H[i][j] = a.H[i][j] * b.v + a.v * b.H[i][j] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    }
    return r;
}

Dual2 operator/(const Dual2& a, const Dual2& b)
{
    const double x = b.v;
    return a * chain(b, 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
}

Dual2 exp(const Dual2& a)
{
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}

Dual2 sin(const Dual2& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }

Dual2 cos(const Dual2& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }

Dual2 pow(const Dual2& a, double e)
{
    return chain(a, std::pow(a.v, e), e * std::pow(a.v, e - 1.0),
                 e * (e - 1.0) * std::pow(a.v, e - 2.0));
}

ManufacturedSolution::ManufacturedSolution(const PhysParams& p, double amplitude, double width)
    : p_(p), a_(amplitude), s_(width)
{
    p_.u_bar = {0.0, 0.0};
}

std::array<Dual2, 3> ManufacturedSolution::eval(double t, double x1, double x3) const
{
    const double tp = 2.0 * std::numbers::pi;
    Dual2 T = Dual2::variable(t, 0), X = Dual2::variable(x1, 1), Z = Dual2::variable(x3, 2);
    Dual2 g = exp(-(Z * Z) / (s_ * s_));
    Dual2 rho = Dual2(p_.rho_bar) + a_ * g * (1.0 + 0.5 * sin(tp * X)) * cos(T);
    Dual2 m1 = a_ * g * cos(tp * X) * sin(T + 0.3);
    Dual2 m3 = a_ * Z * g * (1.0 + 0.3 * cos(tp * X)) * cos(2.0 * T);
    return {rho, m1, m3};
}

std::array<double, 3> ManufacturedSolution::source(double t, double x1, double x3) const
{
    auto [rho, m1, m3] = eval(t, x1, x3);
    const double ie2 = 1.0 / (p_.eps * p_.eps);
    const double mu = p_.mu, ml = p_.mu + p_.lambda;
    Dual2 u1 = m1 / rho, u3 = m3 / rho;
    Dual2 pr = pow(rho, p_.gamma);
    Dual2 F11 = m1 * u1, F13 = m1 * u3, F33 = m3 * u3;
    // indices: 0 = t, 1 = x1, 2 = x3
    const double div_x1 = u1.H[1][1] + u3.H[2][1];
    const double div_x3 = u1.H[1][2] + u3.H[2][2];
    std::array<double, 3> f{};
    f[0] = rho.g[0] + m1.g[1] + m3.g[2];
    f[1] = m1.g[0] + F11.g[1] + F13.g[2] + ie2 * pr.g[1] - mu * (u1.H[1][1] + u1.H[2][2]) -
           ml * div_x1;
    f[2] = m3.g[0] + F13.g[1] + F33.g[2] + ie2 * pr.g[2] - mu * (u3.H[1][1] + u3.H[2][2]) -
           ml * div_x3;
    return f;
}

State ManufacturedSolution::exact_state(const Grid& g, double t) const
{
    if (g.d != 1)
        throw ConfigError("manufactured solution: d = 1 only");
    State s(g);
    s.t = t;
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k) {
            auto u = eval(t, g.xt(k), g.x3(j));
            s.rho.at(j, k) = u[0].v;
            s.m[0].at(j, k) = u[1].v;
            s.m[1].at(j, k) = u[2].v;
        }
    return s;
}

std::function<void(double, std::vector<Field>&)> ManufacturedSolution::forcing(const Grid& g) const
{
    ManufacturedSolution self = *this;
    return [self, g](double t, std::vector<Field>& N) {
        for (int j = 0; j < g.n_nodes(); ++j)
            for (int k = 0; k < g.n_tan(); ++k) {
                auto f = self.source(t, g.xt(k), g.x3(j));
                for (int q = 0; q < 3; ++q)
                    N[q].at(j, k) += f[q];
            }
    };
}

} // namespace vlab
