#include "vortexlab/ansatz.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace vlab {

namespace {

Jet djet(const Jet& f)
{
    Jet r(0.0);
    for (int k = 0; k + 1 < Jet::N; ++k)
        r.c[k] = (k + 1) * f.c[k + 1];
    return r;
}

double sq(double x) { return x * x; }

} // namespace

std::vector<Field> shifted_v0(const InitialPerturbation& ip, const PhysParams& p)
{
    const Grid& g = ip.grid();
    std::vector<Field> out = ip.v0;
    for (int c = 0; c < g.d; ++c)
        for (int j = 0; j < g.n_nodes(); ++j) {
            const double x = g.x3(j);
            const double shift = vortex_layer_velocity(x, 0.0, p, p.t0)[c] -
                                 vortex_layer_velocity(x, 0.0, p, p.Lambda)[c];
            for (int k = 0; k < g.n_tan(); ++k)
                out[c].at(j, k) += shift;
        }
    return out;
}

std::vector<Field> momentum_perturbation(const InitialPerturbation& ip, const PhysParams& p)
{
    const Grid& g = ip.grid();
    std::vector<Field> out(g.d + 1, Field(g));
    for (int j = 0; j < g.n_nodes(); ++j) {
        const double x = g.x3(j);
        const auto us = vortex_layer_velocity(x, 0.0, p, p.t0);
        const auto ua = vortex_layer_velocity(x, 0.0, p, p.Lambda);
        for (int k = 0; k < g.n_tan(); ++k) {
            const double rho0 = p.rho_bar + p.eps * ip.b0.at(j, k);
            for (int c = 0; c < g.d; ++c)
                out[c].at(j, k) = rho0 * (us[c] + ip.v0[c].at(j, k)) - p.rho_bar * ua[c];
            out[g.d].at(j, k) = rho0 * ip.v0[g.d].at(j, k);
        }
    }
    return out;
}

double sobolev_norm(const Field& f, int s)
{
    const int d = f.grid.d;
    double total = 0.0;
    for (int a = 0; a <= s; ++a)
        for (int b = 0; b <= (d == 2 ? s - a : 0); ++b)
            for (int c = 0; c + a + b <= s; ++c) {
                Field g = f;
                if (a > 0)
                    g = d_tangential(g, 0, a);
                if (b > 0)
                    g = d_tangential(g, 1, b);
                if (c > 0)
                    g = d_normal(g, c);
                total += sq(l2_norm(g));
            }
    return std::sqrt(total);
}

double sobolev_norm(const Profile& p, int s)
{
    double total = sq(l2_norm(p));
    for (int j = 1; j <= s; ++j)
        total += sq(l2_norm(d_normal(p, j)));
    return std::sqrt(total);
}

double initial_M0(const InitialPerturbation& ip)
{
    double wl = sq(weighted_l2_norm(zero_mode(ip.b0), 0.75));
    double hs = sq(sobolev_norm(ip.b0, 3));
    for (const auto& v : ip.v0) {
        wl += sq(weighted_l2_norm(zero_mode(v), 0.75));
        hs += sq(sobolev_norm(v, 3));
    }
    return std::sqrt(wl) + std::sqrt(hs);
}

double initial_chi(const InitialPerturbation& ip)
{
    const int d = ip.grid().d;
    Profile bf = zero_mode(ip.b0);
    Profile vf = zero_mode(ip.v0[d]);
    double flat = std::sqrt(sq(weighted_l2_norm(bf, 0.75)) + sq(weighted_l2_norm(vf, 0.75))) +
                  std::sqrt(sq(sobolev_norm(bf, 1)) + sq(sobolev_norm(vf, 1)));
    double sharp = sq(sobolev_norm(nonzero_mode(ip.b0), 1));
    for (const auto& v : ip.v0)
        sharp += sq(sobolev_norm(nonzero_mode(v), 1));
    return flat + std::sqrt(sharp);
}

std::array<double, 4> initial_mass_vector(const InitialPerturbation& ip, const PhysParams& p)
{
    const int d = ip.grid().d;
    auto w = momentum_perturbation(ip, p);
    std::array<double, 4> r{};
    r[0] = p.eps * integrate(zero_mode(ip.b0));
    for (int c = 0; c < d; ++c)
        r[1 + c] = integrate(zero_mode(w[c]));
    r[3] = integrate(zero_mode(w[d]));
    return r;
}

Alphas compute_alphas(const InitialPerturbation& ip, const PhysParams& p)
{
    const int d = ip.grid().d;
    auto w = momentum_perturbation(ip, p);
    const double B = integrate(zero_mode(ip.b0));
    const double W3 = integrate(zero_mode(w[d]));
    const double a = p.a_bar();
    Alphas al{};
    al[0] = 0.5 * (B - W3 / a);
    al[3] = 0.5 * (B + W3 / a);
    for (int c = 0; c < d; ++c)
        al[1 + c] = integrate(zero_mode(w[c])) - p.eps * p.u_bar[c] * W3 / a;
    return al;
}

std::array<double, 4> alpha_mass_vector(const Alphas& al, const PhysParams& p)
{
    const double a = p.a_bar();
    std::array<double, 4> r{};
    r[0] = p.eps * (al[0] + al[3]);
    for (int i = 0; i < 2; ++i)
        r[1 + i] = al[1 + i] + p.eps * p.u_bar[i] * (al[3] - al[0]);
    r[3] = a * (al[3] - al[0]);
    return r;
}

AnsatzSpec::AnsatzSpec(const Alphas& a, const PhysParams& p, int d) : a_(a), p_(p), d_(d)
{
    if (d == 1) {
        p_.u_bar[1] = 0.0;
        a_[2] = 0.0;
    }
}

AnsatzJets AnsatzSpec::jets(double x3, double t) const
{
    const PhysParams& p = p_;
    AnsatzJets J;
    J.th = diffusion_wave_jet(x3, t, p, Branch::center);
    J.thp = diffusion_wave_jet(x3, t, p, Branch::plus);
    J.thm = diffusion_wave_jet(x3, t, p, Branch::minus);
    const double a = p.a_bar();
    const Jet acoustic = J.thp * a_[3] - J.thm * a_[0];
    J.rho = Jet(p.rho_bar) + (J.thm * a_[0] + J.thp * a_[3]) * p.eps;
    J.m[2] = acoustic * a;
    for (int i = 0; i < 2; ++i) {
        J.uvs[i] = vortex_layer_velocity_jet(x3, t, p, p.Lambda, i);
        J.m[i] = J.uvs[i] * p.rho_bar + J.th * a_[1 + i] + acoustic * (p.eps * p.u_bar[i]);
    }
    for (int i = 0; i < 3; ++i)
        J.u[i] = J.m[i] / J.rho;
    return J;
}

AnsatzPoint AnsatzSpec::eval(double x3, double t) const
{
    const PhysParams& p = p_;
    const double th = diffusion_wave(x3, t, p, Branch::center);
    const double thp = diffusion_wave(x3, t, p, Branch::plus);
    const double thm = diffusion_wave(x3, t, p, Branch::minus);
    const double acoustic = a_[3] * thp - a_[0] * thm;
    const auto uvs = vortex_layer_velocity(x3, t, p, p.Lambda);
    AnsatzPoint r;
    r.rho = p.rho_bar + p.eps * (a_[0] * thm + a_[3] * thp);
    r.m[2] = p.a_bar() * acoustic;
    for (int i = 0; i < 2; ++i)
        r.m[i] = p.rho_bar * uvs[i] + a_[1 + i] * th + p.eps * p.u_bar[i] * acoustic;
    for (int i = 0; i < 3; ++i)
        r.u[i] = r.m[i] / r.rho;
    return r;
}

ErrorJets AnsatzSpec::error_jets(double x3, double t) const
{
    const PhysParams& p = p_;
    const AnsatzJets J = jets(x3, t);
    const double a = p.a_bar();
    const double mu = p.mu;
    const double rb = p.rho_bar;
    const Jet dth = djet(J.th);
    const Jet dthp = djet(J.thp);
    const Jet dthm = djet(J.thm);
    const Jet dacoustic = dthp * a_[3] - dthm * a_[0];
    const Jet mass = J.thm * a_[0] + J.thp * a_[3];

    ErrorJets E;
    E.F0 = (dthm * a_[0] + dthp * a_[3]) * (mu / rb);
    for (int i = 0; i < 2; ++i) {
        E.F[i] = (dth * (a_[1 + i] / rb) - djet(J.u[i] - J.uvs[i])) * mu +
                 (J.m[2] * J.m[i] / J.rho - mass * (a * p.u_bar[i])) +
                 dacoustic * (p.eps * mu * p.u_bar[i] / rb);
    }
    // varpi through r = (rho~ - rho_bar)/rho_bar, value via expm1/log1p
    const Jet r = mass * (p.eps / rb);
    const double rbg = std::pow(rb, p.gamma);
    Jet varpi = (pow(Jet(1.0) + r, p.gamma) - Jet(1.0) - r * p.gamma) * rbg;
    varpi.c[0] = rbg * (std::expm1(p.gamma * std::log1p(r.c[0])) - p.gamma * r.c[0]);
    E.F[2] = J.m[2] * J.m[2] / J.rho + varpi * (1.0 / (p.eps * p.eps)) +
             dacoustic * (mu * a / rb) - djet(J.u[2]) * p.mu_tilde();
    return E;
}

ErrorTerms AnsatzSpec::error_terms(double x3, double t) const
{
    const ErrorJets E = error_jets(x3, t);
    ErrorTerms r;
    r.F0 = E.F0.value();
    for (int i = 0; i < 3; ++i)
        r.F[i] = E.F[i].value();
    return r;
}

AnsatzProfiles AnsatzSpec::sample(const Grid& g, double t) const
{
    AnsatzProfiles out;
    out.rho = Profile(g);
    out.m.assign(g.d + 1, Profile(g));
    out.u.assign(g.d + 1, Profile(g));
    for (int j = 0; j < g.n_nodes(); ++j) {
        const AnsatzPoint pt = eval(g.x3(j), t);
        out.rho[j] = pt.rho;
        for (int c = 0; c <= g.d; ++c) {
            out.m[c][j] = pt.m[phys_index(c, g.d)];
            out.u[c][j] = pt.u[phys_index(c, g.d)];
        }
    }
    return out;
}

AnsatzSpec build_ansatz(const Alphas& a, const PhysParams& p, int d)
{
    p.validate();
    const double peak = diffusion_wave(0.0, 0.0, p, Branch::center);
    if (p.eps * (std::abs(a[0]) + std::abs(a[3])) * peak > 0.5 * p.rho_bar)
        throw DensityFloorViolation("build_ansatz: acoustic amplitudes push rho~ below rho_bar/2");
    return AnsatzSpec(a, p, d);
}

std::vector<double> zero_mass_check(const State& s, const AnsatzSpec& spec, double t)
{
    const Grid& g = s.grid();
    AnsatzProfiles A = spec.sample(g, t);
    std::vector<double> out(g.d + 2);
    Profile r = zero_mode(s.rho);
    for (int j = 0; j < g.n_nodes(); ++j)
        r[j] -= A.rho[j];
    out[0] = integrate(r);
    for (int c = 0; c <= g.d; ++c) {
        Profile m = zero_mode(s.m[c]);
        for (int j = 0; j < g.n_nodes(); ++j)
            m[j] -= A.m[c][j];
        out[1 + c] = integrate(m);
    }
    return out;
}

double envelope(double x3, double t, const PhysParams& p, double c)
{
    const double tau = t + p.Lambda;
    const double s = p.a_bar() / p.eps * tau;
    return std::exp(-c * x3 * x3 / tau) + std::exp(-c * sq(x3 + s) / tau) +
           std::exp(-c * sq(x3 - s) / tau);
}

namespace {

struct RatioScan {
    std::array<double, 3> C_F{};
    std::array<std::array<double, 3>, 3> C_diff{};
    double worst_exponent = 0.0; // c dist^2 / tau at the F argmax
    bool at_edge = false;
};

RatioScan scan_ratios(const AnsatzSpec& spec, const Grid& g, const std::vector<double>& ts,
                      double chi, double c)
{
    const PhysParams& p = spec.params();
    const double a = p.a_bar();
    RatioScan R;
    double best = -1.0;
    for (double t : ts) {
        const double tau = t + p.Lambda;
        const double s = a / p.eps * tau;
        for (int jn = 0; jn < g.n_nodes(); ++jn) {
            const double x = g.x3(jn);
            const double env = envelope(x, t, p, c);
            if (env < 1e-250)
                continue;
            const ErrorJets E = spec.error_jets(x, t);
            const AnsatzJets J = spec.jets(x, t);
            for (int j = 0; j < 3; ++j) {
                double num = std::abs(E.F0.deriv(j));
                double fv = 0.0;
                for (int i = 0; i < 3; ++i)
                    fv += sq(E.F[i].deriv(j));
                num += std::sqrt(fv);
                const double den = chi * std::pow(tau, -(2.0 + j) / 2.0) * env;
                const double ratio = num / den;
                if (ratio > R.C_F[j]) {
                    R.C_F[j] = ratio;
                }
                if (j <= 1 && ratio > best) {
                    best = ratio;
                    const double e = std::min({x * x, sq(x + s), sq(x - s)});
                    R.worst_exponent = c * e / tau;
                    R.at_edge = jn == 0 || jn == g.n_nodes() - 1;
                }
                const double db = std::pow(tau, -(1.0 + j) / 2.0) * env;
                const Jet mass = J.thm * spec.alphas()[0] + J.thp * spec.alphas()[3];
                const double b0 = std::abs(mass.deriv(j)) + std::abs(J.m[2].deriv(j)) +
                                  std::abs(J.u[2].deriv(j));
                double b1 = 0.0, b2 = 0.0;
                for (int i = 0; i < spec.d(); ++i) {
                    b1 += std::abs((J.m[i] - J.uvs[i] * p.rho_bar).deriv(j)) +
                          std::abs((J.u[i] - J.uvs[i]).deriv(j));
                    b2 += std::abs(J.m[i].deriv(j + 1)) + std::abs(J.u[i].deriv(j + 1));
                }
                R.C_diff[0][j] = std::max(R.C_diff[0][j], b0 / (chi * db));
                R.C_diff[1][j] = std::max(R.C_diff[1][j], b1 / db);
                R.C_diff[2][j] = std::max(R.C_diff[2][j], b2 / db);
            }
        }
    }
    return R;
}

} // namespace

double fit_envelope_c(const AnsatzSpec& spec, const Grid& g, const std::vector<double>& ts)
{
    const PhysParams& p = spec.params();
    const double base = p.rho_bar / (4.0 * p.mu);
    for (int i = 10; i >= 1; --i) {
        const double kappa = 0.1 * i;
        RatioScan R = scan_ratios(spec, g, ts, 1.0, kappa * base);
        if (!R.at_edge && R.worst_exponent <= 30.0)
            return kappa * base;
    }
    return 0.1 * base;
}

EnvelopeFit envelope_bound_monitor(const AnsatzSpec& spec, const Grid& g,
                                   const std::vector<double>& ts, double chi, double c)
{
    if (c <= 0.0)
        c = fit_envelope_c(spec, g, ts);
    RatioScan R = scan_ratios(spec, g, ts, chi, c);
    EnvelopeFit f;
    f.c = c;
    f.C_F = R.C_F;
    f.C_diff = R.C_diff;
    return f;
}

void write_ansatz_record(const std::string& path, const AnsatzSpec& spec)
{
    const PhysParams& p = spec.params();
    nlohmann::json j;
    j["d"] = spec.d();
    j["alphas"] = spec.alphas();
    j["params"] = {{"rho_bar", p.rho_bar}, {"u_bar", p.u_bar}, {"mu", p.mu},
                   {"lambda", p.lambda},   {"gamma", p.gamma}, {"eps", p.eps},
                   {"t0", p.t0},           {"Lambda", p.Lambda}};
    std::ofstream os(path);
    if (!os)
        throw Error("cannot open " + path);
    os << j.dump(2) << '\n';
}

} // namespace vlab
