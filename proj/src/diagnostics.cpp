#include "vortexlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vortexlab/profiles.hpp"

namespace vlab {

namespace {

double sq(double x) { return x * x; }

double factorial(int n)
{
    double r = 1.0;
    for (int i = 2; i <= n; ++i)
        r *= i;
    return r;
}

// d1^a d2^b d3^c f
Field mixed(const Field& f, int a, int b, int c)
{
    Field g = f;
    if (a > 0)
        g = d_tangential(g, 0, a);
    if (b > 0)
        g = d_tangential(g, 1, b);
    if (c > 0)
        g = d_normal(g, c);
    return g;
}

double w1_inf(const Field& f)
{
    double m = std::max(linf_norm(f), linf_norm(d_normal(f, 1)));
    for (int dir = 0; dir < f.grid.d; ++dir)
        m = std::max(m, linf_norm(d_tangential(f, dir, 1)));
    return m;
}

// Max over j <= order of ||nabla^j f||_inf, tensor entries taken separately.
double grad_linf(const Field& f, int j)
{
    const int d = f.grid.d;
    double m = 0.0;
    for (int a = 0; a <= j; ++a)
        for (int b = 0; b <= (d == 2 ? j - a : 0); ++b)
            m = std::max(m, linf_norm(mixed(f, a, b, j - a - b)));
    return m;
}

double profile_deriv_sq(const Profile& p, int j)
{
    return sq(l2_norm(j == 0 ? p : d_normal(p, j)));
}

double profile_deriv_inf(const Profile& p, int j)
{
    return linf_norm(j == 0 ? p : d_normal(p, j));
}

enum class RateKind { nu, M, l2_md, linf_md, mixed_nu_M };

struct RateEntry {
    const char* name;
    RateKind kind;
    double exponent; // of (t+1)
};

// Catalogue of a-priori bounds checked by the monitor.
const std::vector<RateEntry>& rate_table()
{
    static const std::vector<RateEntry> t = {
        {"aL2-anti-nu-0", RateKind::nu, 0.25},
        {"aL2-anti-nu-1", RateKind::nu, -0.25},
        {"aL2-anti-nu-2", RateKind::nu, -0.75},
        {"aL2-anti-M-0", RateKind::M, 0.25},
        {"aL2-anti-M-1", RateKind::M, -0.25},
        {"aL2-anti-M-2", RateKind::M, -0.75},
        {"aL2-od-nu-0", RateKind::nu, -0.25},
        {"aL2-od-nu-1", RateKind::nu, -0.75},
        {"aL2-od-M-0", RateKind::M, -0.25},
        {"aL2-od-M-1", RateKind::M, -0.75},
        {"aL2-md", RateKind::l2_md, 0.0},
        {"aL2-pert-nu", RateKind::nu, -0.25},
        {"aL2-pert-M-0", RateKind::M, -0.25},
        {"aL2-pert-M-1", RateKind::M, -0.75},
        {"aL2-pert-M-2", RateKind::M, -1.25},
        {"aLinf-anti-nu-0", RateKind::nu, 0.0},
        {"aLinf-anti-nu-1", RateKind::nu, -0.5},
        {"aLinf-anti-M-0", RateKind::M, 0.0},
        {"aLinf-anti-M-1", RateKind::M, -0.5},
        {"aLinf-od-nu", RateKind::nu, -0.5},
        {"aLinf-od-M", RateKind::M, -0.5},
        {"aLinf-md", RateKind::linf_md, 0.0},
        {"aLinf-pert-nu", RateKind::mixed_nu_M, -0.5},
        {"aLinf-pert-M-0", RateKind::M, -0.5},
        {"aLinf-pert-M-1", RateKind::M, -0.75},
    };
    return t;
}

} // namespace

PerturbationSet extract_perturbations(const State& s, const AnsatzSpec& spec)
{
    const Grid& g = s.grid();
    const int d = g.d;
    const double eps = spec.params().eps;
    PerturbationSet P;
    P.eps = eps;
    P.t = s.t;
    P.ansatz = spec.sample(g, s.t);
    const auto& A = P.ansatz;

    P.phi = Field(g);
    P.psi.assign(d + 1, Field(g));
    P.zeta.assign(d + 1, Field(g));
    P.w.assign(d + 1, Field(g));
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int k = 0; k < g.n_tan(); ++k) {
            const double rho = s.rho.at(j, k);
            const double phi = (rho - A.rho[j]) / eps;
            P.phi.at(j, k) = phi;
            for (int c = 0; c <= d; ++c) {
                const double m = s.m[c].at(j, k);
                const double psi = m - A.m[c][j];
                P.psi[c].at(j, k) = psi;
                P.zeta[c].at(j, k) = m / rho - A.u[c][j];
                P.w[c].at(j, k) = psi - eps * A.u[c][j] * phi;
            }
        }
    return P;
}

AntiDerivativeSet build_antiderivatives(const PerturbationSet& p, double tol)
{
    const Grid& g = p.grid();
    const int d = g.d;
    AntiDerivativeSet a;
    a.Phi = antiderivative(zero_mode(p.phi));
    a.endpoints.push_back(a.Phi[g.n3]);
    for (int c = 0; c <= d; ++c) {
        a.Psi.push_back(antiderivative(zero_mode(p.psi[c])));
        a.endpoints.push_back(a.Psi.back()[g.n3]);
        Profile Z = a.Psi.back();
        for (int j = 0; j < g.n_nodes(); ++j)
            Z[j] -= p.eps * p.ansatz.u[c][j] * a.Phi[j];
        a.Z.push_back(std::move(Z));
    }
    for (double e : a.endpoints)
        if (std::abs(e) > tol)
            a.zero_mass_violated = true;
    return a;
}

double grad_norm_sq(const Field& f, int j)
{
    const int d = f.grid.d;
    double total = 0.0;
    for (int a = 0; a <= j; ++a)
        for (int b = 0; b <= (d == 2 ? j - a : 0); ++b) {
            const int c = j - a - b;
            const double mult = factorial(j) / (factorial(a) * factorial(b) * factorial(c));
            total += mult * sq(l2_norm(mixed(f, a, b, c)));
        }
    return total;
}

EnergyStar energy_star(const AntiDerivativeSet& a, const PerturbationSet& p, double t)
{
    const int d = p.grid().d;
    EnergyStar e;
    for (int j = 0; j <= 2; ++j)
        e.anti[j] = std::pow(t + 1.0, j) * (profile_deriv_sq(a.Phi, j) + profile_deriv_sq(a.Z[d], j));
    Field phs = nonzero_mode(p.phi);
    std::vector<Field> ws;
    for (const auto& w : p.w)
        ws.push_back(nonzero_mode(w));
    for (int j = 0; j <= 1; ++j) {
        double s = grad_norm_sq(phs, j);
        for (const auto& w : ws)
            s += grad_norm_sq(w, j);
        e.md[j] = std::pow(t + 1.0, j) * s;
    }
    e.value = e.anti[0] + e.anti[1] + e.anti[2] + e.md[0] + e.md[1];
    return e;
}

EnergyFull energy_full(const AntiDerivativeSet& a, const PerturbationSet& p, double t)
{
    const int d = p.grid().d;
    EnergyFull e;
    e.star = energy_star(a, p, t);
    for (int j = 0; j <= 2; ++j) {
        double s = 0.0;
        for (int c = 0; c < d; ++c)
            s += profile_deriv_sq(a.Z[c], j);
        e.zperp[j] = std::pow(t + 1.0, j) * s;
    }
    double hi = grad_norm_sq(p.phi, 2) + grad_norm_sq(p.phi, 3);
    for (const auto& w : p.w)
        hi += grad_norm_sq(w, 2) + grad_norm_sq(w, 3);
    e.high = sq(t + 1.0) * hi;
    e.value = e.star.value + e.zperp[0] + e.zperp[1] + e.zperp[2] + e.high;
    return e;
}

void RunningMonitors::update(double t, double e_star, double e_full)
{
    const double s = 1.0 / std::sqrt(t + 1.0);
    nu2 = std::max(nu2, s * e_star);
    M2 = std::max(M2, s * e_full);
}

double RunningMonitors::nu() const { return std::sqrt(nu2); }

double RunningMonitors::M() const { return std::max(1.0, std::sqrt(M2)); }

double perturbation_linf(const State& s, const PhysParams& p)
{
    const Grid& g = s.grid();
    const int d = g.d;
    double m = 0.0;
    for (int j = 0; j < g.n_nodes(); ++j) {
        const auto uvs = vortex_layer_velocity(g.x3(j), s.t, p, p.t0);
        for (int k = 0; k < g.n_tan(); ++k) {
            const double rho = s.rho.at(j, k);
            m = std::max(m, std::abs(rho - p.rho_bar) / p.eps);
            for (int c = 0; c <= d; ++c) {
                const double base = c < d ? uvs[c] : 0.0;
                m = std::max(m, std::abs(s.m[c].at(j, k) / rho - base));
            }
        }
    }
    return m;
}

MachMetrics mach_metrics(const State& s, const PhysParams& p)
{
    const Grid& g = s.grid();
    const int d = g.d;
    Field q(g);
    const double p0 = p.pressure(p.rho_bar);
    for (std::size_t i = 0; i < q.values.size(); ++i)
        q.values[i] = (p.pressure(s.rho.values[i]) - p0) / p.eps;
    auto u = velocity(s);
    Field div = d_normal(u[d], 1);
    for (int c = 0; c < d; ++c) {
        Field dc = d_tangential(u[c], c, 1);
        for (std::size_t i = 0; i < div.values.size(); ++i)
            div.values[i] += dc.values[i];
    }
    return {l2_norm(q), l2_norm(div)};
}

std::vector<std::string> report_columns()
{
    std::vector<std::string> c = {"t",        "E_star",     "E_full",   "E_anti0",   "E_anti1",
                                  "E_anti2",  "E_md0",      "E_md1",    "E_zperp0",  "E_zperp1",
                                  "E_zperp2", "E_high",     "nu",       "M",         "linf_bv",
                                  "md_h1",    "dZperp_inf", "phi_flat_w34", "phi_h1", "q_norm",
                                  "div_norm", "zero_mass_max", "zero_mass_violated"};
    for (const auto& r : rate_table())
        c.push_back(r.name);
    return c;
}

std::vector<double> report_row(const EnergyReport& r)
{
    double zm = 0.0;
    for (double z : r.zero_mass)
        zm = std::max(zm, std::abs(z));
    std::vector<double> v = {r.t,
                             r.E_star,
                             r.E_full,
                             r.parts.star.anti[0],
                             r.parts.star.anti[1],
                             r.parts.star.anti[2],
                             r.parts.star.md[0],
                             r.parts.star.md[1],
                             r.parts.zperp[0],
                             r.parts.zperp[1],
                             r.parts.zperp[2],
                             r.parts.high,
                             r.nu,
                             r.M,
                             r.linf_bv,
                             r.md_h1,
                             r.dZperp_inf,
                             r.phi_flat_w34,
                             r.phi_h1,
                             r.q_norm,
                             r.div_norm,
                             zm,
                             r.zero_mass_violated ? 1.0 : 0.0};
    for (const auto& e : rate_table()) {
        auto it = r.catalogue.find(e.name);
        v.push_back(it == r.catalogue.end() ? 0.0 : it->second);
    }
    return v;
}

EnergyReport make_report(const State& s, const AnsatzSpec& spec, RunningMonitors& mon,
                         double zero_mass_tol)
{
    const Grid& g = s.grid();
    const int d = g.d;
    const PhysParams& p = spec.params();
    PerturbationSet P = extract_perturbations(s, spec);
    AntiDerivativeSet A = build_antiderivatives(P, zero_mass_tol);

    EnergyReport r;
    r.t = s.t;
    r.parts = energy_full(A, P, s.t);
    r.E_star = r.parts.star.value;
    r.E_full = r.parts.value;
    mon.update(s.t, r.E_star, r.E_full);
    r.nu2 = mon.nu2;
    r.M2 = mon.M2;
    r.nu = mon.nu();
    r.M = mon.M();
    r.linf_bv = perturbation_linf(s, p);
    const auto mm = mach_metrics(s, p);
    r.q_norm = mm.q_norm;
    r.div_norm = mm.div_norm;
    r.zero_mass_violated = A.zero_mass_violated;
    r.zero_mass = A.endpoints;

    // flat and sharp parts
    Profile phf = zero_mode(P.phi);
    Field phs = nonzero_mode(P.phi);
    std::vector<Profile> psf, wf;
    std::vector<Field> pss, ws;
    for (int c = 0; c <= d; ++c) {
        psf.push_back(zero_mode(P.psi[c]));
        wf.push_back(zero_mode(P.w[c]));
        pss.push_back(nonzero_mode(P.psi[c]));
        ws.push_back(nonzero_mode(P.w[c]));
    }

    double md = sobolev_norm(phs, 1) * sobolev_norm(phs, 1);
    for (int c = 0; c <= d; ++c)
        md += sq(sobolev_norm(ws[c], 1));
    r.md_h1 = std::sqrt(md);
    double dz = 0.0;
    for (int c = 0; c < d; ++c)
        dz = std::max(dz, profile_deriv_inf(A.Z[c], 1));
    r.dZperp_inf = dz;
    r.phi_flat_w34 = weighted_l2_norm(phf, 0.75);
    r.phi_h1 = sobolev_norm(P.phi, 1);

    auto& cat = r.catalogue;
    for (int j = 0; j <= 2; ++j) {
        cat["aL2-anti-nu-" + std::to_string(j)] =
            std::sqrt(profile_deriv_sq(A.Phi, j) + profile_deriv_sq(A.Psi[d], j) +
                      profile_deriv_sq(A.Z[d], j));
        double s2 = 0.0;
        for (int c = 0; c < d; ++c)
            s2 += profile_deriv_sq(A.Psi[c], j) + profile_deriv_sq(A.Z[c], j);
        cat["aL2-anti-M-" + std::to_string(j)] = std::sqrt(s2);
    }
    for (int j = 0; j <= 1; ++j) {
        cat["aL2-od-nu-" + std::to_string(j)] = std::sqrt(
            profile_deriv_sq(phf, j) + profile_deriv_sq(psf[d], j) + profile_deriv_sq(wf[d], j));
        double s2 = 0.0;
        for (int c = 0; c < d; ++c)
            s2 += profile_deriv_sq(psf[c], j) + profile_deriv_sq(wf[c], j);
        cat["aL2-od-M-" + std::to_string(j)] = std::sqrt(s2);
    }
    {
        double s2 = sq(sobolev_norm(phs, 1));
        for (int c = 0; c <= d; ++c)
            s2 += sq(sobolev_norm(pss[c], 1)) + sq(sobolev_norm(ws[c], 1));
        cat["aL2-md"] = std::sqrt(s2);
    }
    cat["aL2-pert-nu"] =
        std::sqrt(sq(l2_norm(P.phi)) + sq(l2_norm(P.psi[d])) + sq(l2_norm(P.w[d])));
    for (int j = 0; j <= 2; ++j) {
        double s2 = 0.0;
        for (int c = 0; c < d; ++c)
            s2 += grad_norm_sq(P.psi[c], j) + grad_norm_sq(P.w[c], j);
        cat["aL2-pert-M-" + std::to_string(j)] = std::sqrt(s2);
    }
    for (int j = 0; j <= 1; ++j) {
        cat["aLinf-anti-nu-" + std::to_string(j)] =
            std::max({profile_deriv_inf(A.Phi, j), profile_deriv_inf(A.Psi[d], j),
                      profile_deriv_inf(A.Z[d], j)});
        double m = 0.0;
        for (int c = 0; c < d; ++c)
            m = std::max({m, profile_deriv_inf(A.Psi[c], j), profile_deriv_inf(A.Z[c], j)});
        cat["aLinf-anti-M-" + std::to_string(j)] = m;
    }
    cat["aLinf-od-nu"] = std::max({linf_norm(phf), linf_norm(psf[d]), linf_norm(wf[d])});
    {
        double m = 0.0;
        for (int c = 0; c < d; ++c)
            m = std::max({m, linf_norm(psf[c]), linf_norm(wf[c])});
        cat["aLinf-od-M"] = m;
    }
    {
        double m = w1_inf(phs);
        for (int c = 0; c <= d; ++c)
            m = std::max({m, w1_inf(pss[c]), w1_inf(ws[c])});
        cat["aLinf-md"] = m;
    }
    cat["aLinf-pert-nu"] = std::max({linf_norm(P.phi), linf_norm(P.psi[d]), linf_norm(P.w[d])});
    for (int j = 0; j <= 1; ++j) {
        double m = 0.0;
        for (int c = 0; c < d; ++c)
            m = std::max({m, grad_linf(P.psi[c], j), grad_linf(P.w[c], j)});
        cat["aLinf-pert-M-" + std::to_string(j)] = m;
    }
    return r;
}

double gagliardo_nirenberg_ratio(const Field& f)
{
    const Grid& g = f.grid;
    Field fs = nonzero_mode(f);
    const auto w = trapezoid_weights(g);
    double l4 = 0.0;
    for (int j = 0; j < g.n_nodes(); ++j) {
        double s = 0.0;
        for (int k = 0; k < g.n_tan(); ++k)
            s += std::pow(fs.at(j, k), 4);
        l4 += w[j] * s / g.n_tan();
    }
    const double grad = grad_norm_sq(fs, 1);
    return grad > 0.0 ? l4 / (grad * grad) : 0.0;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& v, double t_lo,
                   double t_hi)
{
    if (t.size() != v.size())
        throw ConfigError("fit_decay: size mismatch");
    std::vector<double> X, Y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi)
            continue;
        if (!(v[i] > 0.0))
            throw NonPositiveSamples("fit_decay: non-positive sample at t = " +
                                     std::to_string(t[i]));
        X.push_back(std::log(t[i] + 1.0));
        Y.push_back(std::log(v[i]));
    }
    const int n = static_cast<int>(X.size());
    if (n < 8)
        throw NonPositiveSamples("fit_decay: fewer than 8 samples in window");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += X[i];
        my += Y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += sq(X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    if (sxx <= 0.0)
        throw ConfigError("fit_decay: degenerate time window");
    DecayFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (int i = 0; i < n; ++i)
        ss += sq(Y[i] - f.intercept - f.slope * X[i]);
    f.residual = std::sqrt(ss / n);
    f.stderr_slope = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
    return f;
}

double catalogue_rate(const std::string& name, double t, double nu, double M)
{
    const double T = t + 1.0;
    for (const auto& e : rate_table()) {
        if (name != e.name)
            continue;
        switch (e.kind) {
        case RateKind::nu:
            return nu * std::pow(T, e.exponent);
        case RateKind::M:
            return M * std::pow(T, e.exponent);
        case RateKind::l2_md:
            return std::min(nu * std::pow(T, -0.25), M * std::pow(T, -0.75));
        case RateKind::linf_md:
            return std::min(std::pow(M, 0.75) * std::pow(nu, 0.25) * std::pow(T, -0.5),
                            M * std::pow(T, -0.75));
        case RateKind::mixed_nu_M:
            return std::pow(M, 0.75) * std::pow(nu, 0.25) * std::pow(T, e.exponent);
        }
    }
    throw ConfigError("unknown catalogue bound: " + name);
}

void AprioriMonitor::feed(const EnergyReport& r)
{
    for (const auto& [name, q] : r.catalogue) {
        const double rate = catalogue_rate(name, r.t, r.nu, r.M);
        double ratio;
        if (rate > 0.0)
            ratio = q / rate;
        else
            ratio = q > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        auto& e = e_[name];
        e.history.emplace_back(r.t, ratio);
        e.max_ratio = std::max(e.max_ratio, ratio);
    }
}

std::vector<std::string> AprioriMonitor::not_plateaued(double rel_tol) const
{
    std::vector<std::string> out;
    for (const auto& [name, e] : e_) {
        if (e.history.size() < 2)
            continue;
        const double t_mid = 0.5 * (e.history.front().first + e.history.back().first);
        double first = 0.0;
        for (const auto& [t, ratio] : e.history)
            if (t <= t_mid)
                first = std::max(first, ratio);
        if (e.max_ratio > first * (1.0 + rel_tol) && e.max_ratio > 1e-300)
            out.push_back(name);
    }
    return out;
}

} // namespace vlab
