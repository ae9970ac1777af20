#include "vortexlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <tuple>

#include "vortexlab/io.hpp"
#include "vortexlab/profiles.hpp"

namespace vlab {

namespace {

using cplx = std::complex<double>;

// Low-storage RK3 coefficients (Spalart, Moser & Rogers 1991), used by the
// explicit incompressible integrator.
constexpr double kGamma[3] = {8.0 / 15.0, 5.0 / 12.0, 3.0 / 4.0};
constexpr double kZeta[3] = {0.0, -17.0 / 60.0, -5.0 / 12.0};

// ARS(3,4,3) IMEX Runge-Kutta (Ascher, Ruuth & Spiteri 1997).  The implicit
// part is L-stable and stiffly accurate; the Crank-Nicolson pairing of the
// low-storage scheme amplifies modes with acoustic phase ~16 per step once
// explicit advection is present.
constexpr double kG = 0.4358665215084590;
constexpr double kB1 = -1.5 * kG * kG + 4.0 * kG - 0.25;
constexpr double kB2 = 1.5 * kG * kG - 5.0 * kG + 1.25;
constexpr double kAE[4][4] = {{0.0, 0.0, 0.0, 0.0},
                              {kG, 0.0, 0.0, 0.0},
                              {0.3212788860286278, 0.3966543747256017, 0.0, 0.0},
                              {-0.1058582960718797, 0.5529291480359398, 0.5529291480359398, 0.0}};
constexpr double kAI[4][4] = {{0.0, 0.0, 0.0, 0.0},
                              {0.0, kG, 0.0, 0.0},
                              {0.0, 0.5 * (1.0 - kG), kG, 0.0},
                              {0.0, kB1, kB2, kG}};
constexpr double kC[4] = {0.0, kG, 0.5 * (1.0 + kG), 1.0};

template <class T>
void apply_stencil(const NormalStencil& s, double scale, const T* in, T* out)
{
    for (int j = 0; j < s.n; ++j) {
        const auto& w = s.w[j];
        const T* fp = in + s.start[j];
        T acc{};
        for (std::size_t i = 0; i < w.size(); ++i)
            acc += w[i] * fp[i];
        out[j] = acc * scale;
    }
}

double varpi_accurate(double rho, const PhysParams& p)
{
    const double r = (rho - p.rho_bar) / p.rho_bar;
    return std::pow(p.rho_bar, p.gamma) * (std::expm1(p.gamma * std::log1p(r)) - p.gamma * r);
}

struct Spectrum {
    int nc = 0;
    int nn = 0;
    std::vector<cplx> c;
    cplx* line(int j) { return c.data() + static_cast<std::size_t>(j) * nc; }
    cplx& at(int j, int i) { return c[static_cast<std::size_t>(j) * nc + i]; }
};

Spectrum fwd(const TangentialTransform& tt, const Field& f)
{
    Spectrum s;
    s.nc = tt.n_coef();
    s.nn = f.grid.n_nodes();
    s.c.resize(static_cast<std::size_t>(s.nc) * s.nn);
    tt.forward(f.values.data(), s.c.data());
    return s;
}

Field bwd(const TangentialTransform& tt, const Spectrum& s, const Grid& g)
{
    Field f(g);
    tt.backward(s.c.data(), f.values.data());
    return f;
}

/// Effective first-derivative wavenumber; Nyquist is not representable.
double keff(const TangentialTransform& tt, int i)
{
    return tt.is_nyquist(i, 0) ? 0.0 : tt.wavenumber(i, 0);
}

void require_d1(const Grid& g, const char* who)
{
    if (g.d != 1)
        throw ConfigError(std::string(who) + ": only d = 1 is supported by the solvers");
}

bool all_finite(const Field& f)
{
    for (double v : f.values)
        if (!std::isfinite(v))
            return false;
    return true;
}

double max_abs_diff_rel(const std::vector<double>& a, const std::vector<double>& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return den > 0.0 ? num / den : num;
}

} // namespace

void SolverConfig::validate() const
{
    if (dt < 0.0 || !std::isfinite(dt))
        throw ConfigError("solver: dt must be >= 0 (0 selects CFL)");
    if (!(cfl > 0.0))
        throw ConfigError("solver: cfl must be > 0");
    if (sponge_width < 0.0 || sponge_strength < 0.0)
        throw ConfigError("solver: sponge parameters must be >= 0");
    if (!(linear_tol > 0.0) || !(poisson_tol > 0.0))
        throw ConfigError("solver: tolerances must be > 0");
    if (!(density_floor > 0.0) || density_floor >= 1.0)
        throw ConfigError("solver: density_floor must lie in (0, 1)");
}

State background_state(const Grid& g, const PhysParams& p, double t)
{
    State s(g);
    s.t = t;
    for (int j = 0; j < g.n_nodes(); ++j) {
        const auto u = vortex_layer_velocity(g.x3(j), t, p, p.t0);
        for (int k = 0; k < g.n_tan(); ++k) {
            s.rho.at(j, k) = p.rho_bar;
            for (int c = 0; c < g.d; ++c)
                s.m[c].at(j, k) = p.rho_bar * u[c];
        }
    }
    return s;
}

std::vector<Field> velocity(const State& s)
{
    std::vector<Field> u = s.m;
    for (auto& f : u)
        for (std::size_t i = 0; i < f.values.size(); ++i)
            f.values[i] /= s.rho.values[i];
    return u;
}

double cfl_dt(const State& s, const SolverConfig& cfg, const PhysParams& p)
{
    const Grid& g = s.grid();
    const double h = g.h3();
    const double kmax = std::numbers::pi * g.n_perp;
    const double c = p.a_bar() / p.eps;
    double u1 = 0.0, u3 = 0.0, rmin = std::numeric_limits<double>::infinity(), dp = 0.0;
    for (std::size_t i = 0; i < s.rho.values.size(); ++i) {
        const double r = s.rho.values[i];
        rmin = std::min(rmin, r);
        u1 = std::max(u1, std::abs(s.m[0].values[i] / r));
        u3 = std::max(u3, std::abs(s.m[g.d].values[i] / r));
        dp = std::max(dp, std::abs(p.dpressure(r) - p.dpressure(p.rho_bar)));
    }
    const double cn = std::sqrt(dp) / p.eps + (cfg.implicit_acoustics ? 0.0 : c);
    const double adv = (u1 + cn) * kmax + (u3 + cn) * 1.372 / h;
    const double nu = std::max(p.mu, p.mu_tilde()) / rmin;
    const double visc = nu * (kmax * kmax + 16.0 / (3.0 * h * h));
    double dt = std::numeric_limits<double>::infinity();
    if (adv > 0.0)
        dt = std::min(dt, 0.85 / adv); // imaginary-axis limit of the IMEX pair
    if (visc > 0.0)
        dt = std::min(dt, 2.2 / visc);
    return cfg.cfl * dt;
}

// ---------------------------------------------------------------------------

CompressibleSolver::CompressibleSolver(const Grid& g, const PhysParams& p, const SolverConfig& cfg)
    : g_(g), p_(p), cfg_(cfg), tt_(g)
{
    require_d1(g, "CompressibleSolver");
    g.validate();
    p.validate();
    cfg.validate();
    c_ = p.a_bar() / p.eps;
    sigma_.assign(g.n_nodes(), 0.0);
    if (cfg.sponge_width > 0.0) {
        const double w = cfg.sponge_width;
        const double smax = cfg.sponge_strength * c_ / w;
        for (int j = 0; j < g.n_nodes(); ++j) {
            const double e = std::abs(g.x3(j)) - (g.L - w);
            if (e > 0.0)
                sigma_[j] = smax * (e / w) * (e / w);
        }
    }
}

void CompressibleSolver::initialize(const State& s)
{
    check_state(s);
    set_dt(cfg_.dt > 0.0 ? cfg_.dt : cfl_dt(s, cfg_, p_));
}

void CompressibleSolver::set_dt(double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError("solver: dt must be positive and finite");
    dt_ = dt;
}

void CompressibleSolver::check_state(const State& s) const
{
    if (!all_finite(s.rho))
        throw LinearSolveDiverged("compressible state became non-finite");
    for (const auto& m : s.m)
        if (!all_finite(m))
            throw LinearSolveDiverged("compressible state became non-finite");
    const double floor = cfg_.density_floor * p_.rho_bar;
    for (double r : s.rho.values)
        if (r < floor)
            throw DensityFloorViolation("density fell below " + std::to_string(floor));
}

void CompressibleSolver::explicit_rhs(const State& s, double t, std::vector<Field>& N) const
{
    const Grid& g = g_;
    const double h = g.h3();
    const NormalStencil& S1 = normal_stencil(g.n_nodes(), 1);
    const NormalStencil& S2 = normal_stencil(g.n_nodes(), 2);
    const double mu = p_.mu, lam = p_.lambda, ie2 = 1.0 / (p_.eps * p_.eps);
    const std::size_t n = g.size();

    Field u1(g), u3(g), G1(g), F13(g), G3(g);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = s.rho.values[i];
        const double a = s.m[0].values[i] / r;
        const double b = s.m[1].values[i] / r;
        const double pr = varpi_accurate(r, p_) * ie2;
        u1.values[i] = a;
        u3.values[i] = b;
        G1.values[i] = s.m[0].values[i] * a + pr;
        F13.values[i] = s.m[0].values[i] * b;
        G3.values[i] = s.m[1].values[i] * b + pr;
    }
    Field Du1 = d_normal(u1, 1);
    Field Du3 = d_normal(u3, 1);

    Spectrum sG1 = fwd(tt_, G1), sF13 = fwd(tt_, F13), su1 = fwd(tt_, u1), su3 = fwd(tt_, u3),
             sDu1 = fwd(tt_, Du1), sDu3 = fwd(tt_, Du3);
    Spectrum n1 = sG1, n3 = sG1;
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int i = 0; i < tt_.n_coef(); ++i) {
            const double k = tt_.wavenumber(i, 0);
            const cplx ik(0.0, keff(tt_, i));
            const double k2 = k * k;
            n1.at(j, i) = -ik * sG1.at(j, i) - mu * k2 * su1.at(j, i) +
                          (mu + lam) * (-k2 * su1.at(j, i) + ik * sDu3.at(j, i));
            n3.at(j, i) = -ik * sF13.at(j, i) - mu * k2 * su3.at(j, i) +
                          (mu + lam) * ik * sDu1.at(j, i);
        }
    N.assign(3, Field(g));
    N[1] = bwd(tt_, n1, g);
    N[2] = bwd(tt_, n3, g);

    const int nt = g.n_tan();
    const double s1 = 1.0 / h, s2 = 1.0 / (h * h);
    std::vector<double> a(g.n_nodes()), b(g.n_nodes());
    auto column_d = [&](const NormalStencil& st, double scale, const Field& f, int k) {
        for (int j = 0; j < g.n_nodes(); ++j)
            a[j] = f.at(j, k);
        apply_stencil(st, scale, a.data(), b.data());
    };
    for (int k = 0; k < nt; ++k) {
        column_d(S1, s1, F13, k);
        for (int j = 0; j < g.n_nodes(); ++j)
            N[1].at(j, k) -= b[j];
        column_d(S2, s2, u1, k);
        for (int j = 0; j < g.n_nodes(); ++j)
            N[1].at(j, k) += mu * b[j];
        column_d(S1, s1, G3, k);
        for (int j = 0; j < g.n_nodes(); ++j)
            N[2].at(j, k) -= b[j];
        column_d(S2, s2, u3, k);
        for (int j = 0; j < g.n_nodes(); ++j)
            N[2].at(j, k) += (2.0 * mu + lam) * b[j];
    }

    if (!cfg_.implicit_acoustics) {
        Spectrum sr = fwd(tt_, s.rho), sm1 = fwd(tt_, s.m[0]);
        Spectrum a1 = sr, a2 = sr;
        for (int j = 0; j < g.n_nodes(); ++j)
            for (int i = 0; i < tt_.n_coef(); ++i) {
                const cplx ik(0.0, keff(tt_, i));
                a1.at(j, i) = -ik * sm1.at(j, i);
                a2.at(j, i) = -c_ * c_ * ik * sr.at(j, i);
            }
        N[0] = bwd(tt_, a1, g);
        Field t2 = bwd(tt_, a2, g);
        Field Dm3 = d_normal(s.m[1], 1);
        Field Dr = d_normal(s.rho, 1);
        for (std::size_t i = 0; i < n; ++i) {
            N[0].values[i] -= Dm3.values[i];
            N[1].values[i] += t2.values[i];
            N[2].values[i] -= c_ * c_ * Dr.values[i];
        }
    }
    if (cfg_.forcing)
        cfg_.forcing(t, N);
}

const BandedLU& CompressibleSolver::factorization(double tau, int coef)
{
    auto key = std::make_pair(tau, coef);
    auto it = lu_.find(key);
    if (it != lu_.end())
        return *it->second;

    const Grid& g = g_;
    const int n = g.n_nodes();
    const double h = g.h3();
    const NormalStencil& S1 = normal_stencil(n, 1);
    const double k = keff(tt_, coef);
    const double c2 = c_ * c_;
    std::vector<double> sv(n);
    for (int j = 0; j < n; ++j)
        sv[j] = 1.0 / (1.0 + tau * sigma_[j]);

    // band of D s D
    int band = 0;
    for (int j = 0; j < n; ++j)
        for (std::size_t a = 0; a < S1.w[j].size(); ++a) {
            const int l = S1.start[j] + static_cast<int>(a);
            band = std::max({band, std::abs(S1.start[l] - j),
                             std::abs(S1.start[l] + static_cast<int>(S1.w[l].size()) - 1 - j)});
        }
    auto lu = std::make_unique<BandedLU>(n, band, band);
    const bool closure = cfg_.boundary == BoundaryMode::characteristic;
    for (int j = 0; j < n; ++j) {
        if (closure && (j == 0 || j == n - 1)) {
            const double sgn = j == 0 ? 1.0 : -1.0;
            lu->add(j, j, sgn * c_);
            for (std::size_t a = 0; a < S1.w[j].size(); ++a)
                lu->add(j, S1.start[j] + static_cast<int>(a), -sv[j] * tau * c2 * S1.w[j][a] / h);
            continue;
        }
        lu->add(j, j, 1.0 + tau * sigma_[j] + tau * tau * c2 * k * k * sv[j]);
        for (std::size_t a = 0; a < S1.w[j].size(); ++a) {
            const int l = S1.start[j] + static_cast<int>(a);
            const double djl = S1.w[j][a] / h;
            for (std::size_t b = 0; b < S1.w[l].size(); ++b) {
                const int m = S1.start[l] + static_cast<int>(b);
                lu->add(j, m, -tau * tau * c2 * djl * sv[l] * S1.w[l][b] / h);
            }
        }
    }
    if (lu->factor() != 0)
        throw LinearSolveDiverged("acoustic system is singular");
    return *lu_.emplace(key, std::move(lu)).first->second;
}

void CompressibleSolver::implicit_solve(const std::vector<Field>& R, double tau, double t_new,
                                        State& out)
{
    const Grid& g = g_;
    const int n = g.n_nodes();
    const int nt = g.n_tan();
    const double h = g.h3();
    std::vector<double> sv(n);
    for (int j = 0; j < n; ++j)
        sv[j] = 1.0 / (1.0 + tau * sigma_[j]);

    // S = R + tau sigma T
    std::vector<Field> S = R;
    if (cfg_.sponge_width > 0.0)
        for (int j = 0; j < n; ++j) {
            if (sigma_[j] == 0.0)
                continue;
            const double m1t = p_.rho_bar * vortex_layer_velocity(g.x3(j), t_new, p_, p_.t0)[0];
            for (int k = 0; k < nt; ++k) {
                S[0].at(j, k) += tau * sigma_[j] * p_.rho_bar;
                S[1].at(j, k) += tau * sigma_[j] * m1t;
            }
        }

    if (!cfg_.implicit_acoustics) {
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < nt; ++k) {
                out.rho.at(j, k) = S[0].at(j, k) * sv[j];
                out.m[0].at(j, k) = S[1].at(j, k) * sv[j];
                out.m[1].at(j, k) = S[2].at(j, k) * sv[j];
            }
        if (cfg_.boundary == BoundaryMode::characteristic)
            boundary_apply(out, cfg_, p_);
        return;
    }

    const NormalStencil& S1 = normal_stencil(n, 1);
    const double c2 = c_ * c_;
    const bool closure = cfg_.boundary == BoundaryMode::characteristic;
    Spectrum sr = fwd(tt_, S[0]), s1 = fwd(tt_, S[1]), s3 = fwd(tt_, S[2]);
    std::vector<cplx> lr(n), l1(n), l3(n), tmp(n), drho(n);
    std::vector<double> b(2 * n), bcopy(2 * n), ax(n);
    for (int i = 0; i < tt_.n_coef(); ++i) {
        const cplx ik(0.0, keff(tt_, i));
        for (int j = 0; j < n; ++j) {
            lr[j] = sr.at(j, i);
            l1[j] = s1.at(j, i);
            l3[j] = s3.at(j, i);
            tmp[j] = sv[j] * l3[j];
        }
        std::vector<cplx> dsS3(n);
        apply_stencil(S1, 1.0 / h, tmp.data(), dsS3.data());
        const double far = i == 0 ? p_.rho_bar : 0.0;
        for (int j = 0; j < n; ++j) {
            cplx r;
            if (closure && j == 0)
                r = c_ * far - sv[j] * l3[j];
            else if (closure && j == n - 1)
                r = -c_ * far - sv[j] * l3[j];
            else
                r = lr[j] - tau * ik * sv[j] * l1[j] - tau * dsS3[j];
            b[j] = r.real();
            b[n + j] = r.imag();
        }
        bcopy = b;
        const BandedLU& lu = factorization(tau, i);
        lu.solve(b.data(), 2);
        for (int part = 0; part < 2; ++part) {
            lu.multiply(b.data() + part * n, ax.data());
            std::vector<double> rhs(bcopy.begin() + part * n, bcopy.begin() + (part + 1) * n);
            double scale = 0.0;
            for (double v : rhs)
                scale = std::max(scale, std::abs(v));
            if (scale > 0.0 && !(max_abs_diff_rel(ax, rhs) <= cfg_.linear_tol))
                throw LinearSolveDiverged("acoustic solve residual above tolerance");
        }
        for (int j = 0; j < n; ++j)
            lr[j] = cplx(b[j], b[n + j]);
        apply_stencil(S1, 1.0 / h, lr.data(), drho.data());
        for (int j = 0; j < n; ++j) {
            sr.at(j, i) = lr[j];
            s1.at(j, i) = sv[j] * (l1[j] - tau * c2 * ik * lr[j]);
            s3.at(j, i) = sv[j] * (l3[j] - tau * c2 * drho[j]);
        }
    }
    out.rho = bwd(tt_, sr, g);
    out.m[0] = bwd(tt_, s1, g);
    out.m[1] = bwd(tt_, s3, g);
}

void CompressibleSolver::step(State& s)
{
    if (!(dt_ > 0.0))
        initialize(s);
    const double t = s.t;
    const double dt = dt_;
    const double tau = kG * dt;
    const State u0 = s;
    // N[j]: explicit part at stage j; L[j]: implicit part recovered from the
    // solve itself, (U_j - R_j) / tau, so closure rows stay consistent.
    std::vector<std::vector<Field>> N(4), L(4);
    std::vector<Field> R(3, Field(g_));
    explicit_rhs(u0, t, N[0]);
    for (int i = 1; i < 4; ++i) {
        const Field* U0[3] = {&u0.rho, &u0.m[0], &u0.m[1]};
        for (int q = 0; q < 3; ++q) {
            auto& r = R[q].values;
            r = U0[q]->values;
            for (int j = 0; j < i; ++j) {
                const double ae = dt * kAE[i][j], ai = dt * kAI[i][j];
                if (ae != 0.0)
                    for (std::size_t n = 0; n < r.size(); ++n)
                        r[n] += ae * N[j][q].values[n];
                if (ai != 0.0)
                    for (std::size_t n = 0; n < r.size(); ++n)
                        r[n] += ai * L[j][q].values[n];
            }
        }
        const double ti = t + kC[i] * dt;
        implicit_solve(R, tau, ti, s);
        const Field* U[3] = {&s.rho, &s.m[0], &s.m[1]};
        L[i].assign(3, Field(g_));
        for (int q = 0; q < 3; ++q)
            for (std::size_t n = 0; n < R[q].values.size(); ++n)
                L[i][q].values[n] = (U[q]->values[n] - R[q].values[n]) / tau;
        s.t = ti;
        check_state(s);
        explicit_rhs(s, ti, N[i]);
    }
    // The implicit weights equal the last implicit row; only the explicit
    // weights (0, b1, b2, g) differ from the last explicit row.
    const double bw[4] = {0.0, kB1, kB2, kG};
    Field* U[3] = {&s.rho, &s.m[0], &s.m[1]};
    for (int j = 0; j < 4; ++j) {
        const double w = dt * (bw[j] - kAE[3][j]);
        if (w == 0.0)
            continue;
        for (int q = 0; q < 3; ++q)
            for (std::size_t n = 0; n < U[q]->values.size(); ++n)
                U[q]->values[n] += w * N[j][q].values[n];
    }
    s.t = t + dt;
    check_state(s);
}

void CompressibleSolver::advance_to(State& s, double t_end)
{
    if (!(dt_ > 0.0))
        initialize(s);
    const double dt = dt_;
    while (s.t < t_end - 1e-9 * dt) {
        if (s.t + dt > t_end + 1e-9 * dt) {
            dt_ = t_end - s.t;
            step(s);
            dt_ = dt;
        } else {
            step(s);
        }
    }
}

State step_compressible(const State& s, const SolverConfig& cfg, const PhysParams& p)
{
    CompressibleSolver solver(s.grid(), p, cfg);
    solver.initialize(s);
    State out = s;
    solver.step(out);
    return out;
}

void boundary_apply(State& s, const SolverConfig& cfg, const PhysParams& p)
{
    if (cfg.boundary != BoundaryMode::characteristic)
        return;
    const Grid& g = s.grid();
    const double c = p.a_bar() / p.eps;
    const int nt = g.n_tan();
    const int d = g.d;
    for (int side = 0; side < 2; ++side) {
        const int j = side == 0 ? 0 : g.n3;
        const auto uf = vortex_layer_velocity(g.x3(j), s.t, p, p.t0);
        for (int k = 0; k < nt; ++k) {
            double& rho = s.rho.at(j, k);
            double& m3 = s.m[d].at(j, k);
            if (side == 1) {
                const double wout = m3 + c * (rho - p.rho_bar);
                rho = p.rho_bar + wout / (2.0 * c);
                m3 = 0.5 * wout;
            } else {
                const double wout = m3 - c * (rho - p.rho_bar);
                rho = p.rho_bar - wout / (2.0 * c);
                m3 = 0.5 * wout;
            }
            for (int q = 0; q < d; ++q)
                s.m[q].at(j, k) = rho * uf[q];
        }
    }
}

// ---------------------------------------------------------------------------
// projection

namespace {

struct PoissonCache {
    std::mutex mtx;
    std::map<std::tuple<int, double, int, int>, std::unique_ptr<BandedLU>> lu;
};

PoissonCache& poisson_cache()
{
    static PoissonCache c;
    return c;
}

/// Factorization of D D - k^2 (all rows) for coefficient i.
const BandedLU& poisson_lu(const Grid& g, const TangentialTransform& tt, int i)
{
    PoissonCache& pc = poisson_cache();
    std::lock_guard<std::mutex> lock(pc.mtx);
    auto key = std::make_tuple(g.n_nodes(), g.h3(), g.n_perp, i);
    auto it = pc.lu.find(key);
    if (it != pc.lu.end())
        return *it->second;
    const int n = g.n_nodes();
    const double h = g.h3();
    const NormalStencil& S1 = normal_stencil(n, 1);
    const double k = keff(tt, i);
    int band = 0;
    for (int j = 0; j < n; ++j)
        for (std::size_t a = 0; a < S1.w[j].size(); ++a) {
            const int l = S1.start[j] + static_cast<int>(a);
            band = std::max({band, std::abs(S1.start[l] - j),
                             std::abs(S1.start[l] + static_cast<int>(S1.w[l].size()) - 1 - j)});
        }
    auto lu = std::make_unique<BandedLU>(n, band, band);
    for (int j = 0; j < n; ++j) {
        lu->add(j, j, -k * k);
        for (std::size_t a = 0; a < S1.w[j].size(); ++a) {
            const int l = S1.start[j] + static_cast<int>(a);
            for (std::size_t b = 0; b < S1.w[l].size(); ++b)
                lu->add(j, S1.start[l] + static_cast<int>(b), S1.w[j][a] * S1.w[l][b] / (h * h));
        }
    }
    if (lu->factor() != 0)
        throw PoissonSolveDiverged("projection Poisson matrix is singular");
    return *pc.lu.emplace(key, std::move(lu)).first->second;
}

} // namespace

Field divergence(const std::vector<Field>& v)
{
    const Grid& g = v.front().grid;
    require_d1(g, "divergence");
    Field out = d_tangential(v[0], 0, 1);
    Field d3 = d_normal(v[1], 1);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] += d3.values[i];
    return out;
}

std::vector<Field> leray_project(const std::vector<Field>& v, double tol)
{
    const Grid& g = v.front().grid;
    require_d1(g, "leray_project");
    const int n = g.n_nodes();
    const double h = g.h3();
    TangentialTransform tt(g);
    const NormalStencil& S1 = normal_stencil(n, 1);
    Spectrum s1 = fwd(tt, v[0]), s3 = fwd(tt, v[1]);
    std::vector<cplx> l1(n), l3(n), dv(n), chi(n), dchi(n);
    std::vector<double> b(2 * n), bcopy, ax(n);
    for (int i = 0; i < tt.n_coef(); ++i) {
        const double k = keff(tt, i);
        if (k == 0.0) {
            for (int j = 0; j < n; ++j)
                s3.at(j, i) = 0.0;
            continue;
        }
        const cplx ik(0.0, k);
        for (int j = 0; j < n; ++j) {
            l1[j] = s1.at(j, i);
            l3[j] = s3.at(j, i);
        }
        apply_stencil(S1, 1.0 / h, l3.data(), dv.data());
        for (int j = 0; j < n; ++j) {
            dv[j] += ik * l1[j];
            b[j] = dv[j].real();
            b[n + j] = dv[j].imag();
        }
        bcopy = b;
        const BandedLU& lu = poisson_lu(g, tt, i);
        lu.solve(b.data(), 2);
        for (int part = 0; part < 2; ++part) {
            lu.multiply(b.data() + part * n, ax.data());
            std::vector<double> rhs(bcopy.begin() + part * n, bcopy.begin() + (part + 1) * n);
            double scale = 0.0;
            for (double x : rhs)
                scale = std::max(scale, std::abs(x));
            if (scale > 0.0 && !(max_abs_diff_rel(ax, rhs) <= tol))
                throw PoissonSolveDiverged("projection solve residual above tolerance");
        }
        for (int j = 0; j < n; ++j)
            chi[j] = cplx(b[j], b[n + j]);
        apply_stencil(S1, 1.0 / h, chi.data(), dchi.data());
        for (int j = 0; j < n; ++j) {
            s1.at(j, i) = l1[j] - ik * chi[j];
            s3.at(j, i) = l3[j] - dchi[j];
        }
    }
    return {bwd(tt, s1, g), bwd(tt, s3, g)};
}

// ---------------------------------------------------------------------------

IncompressibleSolver::IncompressibleSolver(const Grid& g, const PhysParams& p,
                                           const SolverConfig& cfg)
    : g_(g), p_(p), cfg_(cfg)
{
    require_d1(g, "IncompressibleSolver");
    g.validate();
    p.validate();
    cfg.validate();
}

void IncompressibleSolver::initialize(const IncState& s)
{
    if (cfg_.dt > 0.0) {
        dt_ = cfg_.dt;
        return;
    }
    const double h = g_.h3();
    const double kmax = std::numbers::pi * g_.n_perp;
    double u1 = 0.0, u3 = 0.0;
    for (std::size_t i = 0; i < s.u[0].values.size(); ++i) {
        u1 = std::max(u1, std::abs(s.u[0].values[i]));
        u3 = std::max(u3, std::abs(s.u[1].values[i]));
    }
    const double adv = u1 * kmax + u3 * 1.372 / h;
    const double visc = p_.mu / p_.rho_bar * (kmax * kmax + 16.0 / (3.0 * h * h));
    double dt = 2.51 / visc;
    if (adv > 0.0)
        dt = std::min(dt, std::sqrt(3.0) / adv);
    dt_ = cfg_.cfl * dt;
}

void IncompressibleSolver::rhs(const IncState& s, std::vector<Field>& N) const
{
    const Grid& g = g_;
    const double nu = p_.mu / p_.rho_bar;
    const std::size_t n = g.size();
    Field f11(g), f13(g), f33(g);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = s.u[0].values[i], b = s.u[1].values[i];
        f11.values[i] = a * a;
        f13.values[i] = a * b;
        f33.values[i] = b * b;
    }
    Field a1 = d_tangential(f11, 0, 1), a2 = d_normal(f13, 1);
    Field b1 = d_tangential(f13, 0, 1), b2 = d_normal(f33, 1);
    Field l1 = d_tangential(s.u[0], 0, 2), l2 = d_normal(s.u[0], 2);
    Field m1 = d_tangential(s.u[1], 0, 2), m2 = d_normal(s.u[1], 2);
    N.assign(2, Field(g));
    for (std::size_t i = 0; i < n; ++i) {
        N[0].values[i] = -a1.values[i] - a2.values[i] + nu * (l1.values[i] + l2.values[i]);
        N[1].values[i] = -b1.values[i] - b2.values[i] + nu * (m1.values[i] + m2.values[i]);
    }
    (void)cfg_;
}

void IncompressibleSolver::step(IncState& s)
{
    if (!(dt_ > 0.0))
        initialize(s);
    std::vector<Field> N, Nold;
    for (int k = 0; k < 3; ++k) {
        rhs(s, N);
        for (int q = 0; q < 2; ++q) {
            auto& u = s.u[q].values;
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] += dt_ * kGamma[k] * N[q].values[i];
                if (k > 0)
                    u[i] += dt_ * kZeta[k] * Nold[q].values[i];
            }
        }
        s.u = leray_project(s.u, cfg_.poisson_tol);
        std::swap(N, Nold);
    }
    s.t += dt_;
    for (const auto& f : s.u)
        if (!all_finite(f))
            throw PoissonSolveDiverged("incompressible state became non-finite");
}

void IncompressibleSolver::advance_to(IncState& s, double t_end)
{
    if (!(dt_ > 0.0))
        initialize(s);
    const double dt = dt_;
    while (s.t < t_end - 1e-9 * dt) {
        if (s.t + dt > t_end + 1e-9 * dt) {
            dt_ = t_end - s.t;
            step(s);
            dt_ = dt;
        } else {
            step(s);
        }
    }
}

IncState step_incompressible(const IncState& s, const SolverConfig& cfg, const PhysParams& p)
{
    IncompressibleSolver solver(s.grid(), p, cfg);
    solver.initialize(s);
    IncState out = s;
    solver.step(out);
    return out;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const State& s, const PhysParams& p)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot open " + path);
    os.write("VLC1", 4);
    const double vals[10] = {s.t,    p.rho_bar, p.u_bar[0], p.u_bar[1], p.mu,
                             p.lambda, p.gamma, p.eps,      p.t0,       p.Lambda};
    os.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    const std::int32_t nm = static_cast<std::int32_t>(s.m.size());
    os.write(reinterpret_cast<const char*>(&nm), sizeof(nm));
    write_field(os, s.rho);
    for (const auto& m : s.m)
        write_field(os, m);
}

State load_checkpoint(const std::string& path, PhysParams* p)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "VLC1")
        throw Error("load_checkpoint: bad magic");
    double vals[10];
    is.read(reinterpret_cast<char*>(vals), sizeof(vals));
    std::int32_t nm = 0;
    is.read(reinterpret_cast<char*>(&nm), sizeof(nm));
    if (!is)
        throw Error("load_checkpoint: truncated header");
    if (p) {
        p->rho_bar = vals[1];
        p->u_bar = {vals[2], vals[3]};
        p->mu = vals[4];
        p->lambda = vals[5];
        p->gamma = vals[6];
        p->eps = vals[7];
        p->t0 = vals[8];
        p->Lambda = vals[9];
    }
    State s;
    s.t = vals[0];
    s.rho = read_field(is);
    for (int i = 0; i < nm; ++i)
        s.m.push_back(read_field(is));
    return s;
}

} // namespace vlab
