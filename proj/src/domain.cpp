#include "vortexlab/domain.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace vlab {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

void Grid::validate() const
{
    if (d != 1 && d != 2)
        throw ConfigError("grid: d must be 1 or 2");
    if (!is_pow2(n_perp) || n_perp < 2)
        throw ConfigError("grid: n_perp must be a power of two >= 2");
    if (n3 < 16)
        throw ConfigError("grid: n3 must be >= 16");
    if (!(L > 0.0) || !std::isfinite(L))
        throw ConfigError("grid: L must be positive");
}

Grid make_grid(int d, int n_perp, int n3, double L)
{
    Grid g{d, n_perp, n3, L};
    g.validate();
    return g;
}

double PhysParams::a_bar() const { return std::sqrt(dpressure(rho_bar)); }

double PhysParams::pressure(double rho) const { return std::pow(rho, gamma); }

double PhysParams::dpressure(double rho) const { return gamma * std::pow(rho, gamma - 1.0); }

double PhysParams::varpi(double rho) const
{
    return pressure(rho) - pressure(rho_bar) - dpressure(rho_bar) * (rho - rho_bar);
}

void PhysParams::validate() const
{
    if (!(rho_bar > 0.0))
        throw ConfigError("params: rho_bar must be > 0");
    if (!(mu > 0.0))
        throw ConfigError("params: mu must be > 0");
    if (!(mu + lambda >= 0.0))
        throw ConfigError("params: mu + lambda must be >= 0");
    if (!(gamma > 1.0))
        throw ConfigError("params: gamma must be > 1");
    if (!(eps > 0.0) || eps > 1.0)
        throw ConfigError("params: eps must lie in (0, 1]");
    if (!(t0 > 0.0))
        throw ConfigError("params: t0 must be > 0");
    if (!(Lambda > 0.0))
        throw ConfigError("params: Lambda must be > 0");
}

double default_Lambda(const PhysParams& p, double M0, double C1)
{
    return std::max(C1 * (p.u_bar_sq() + M0), 1.0);
}

std::vector<double> trapezoid_weights(const Grid& g)
{
    std::vector<double> w(g.n_nodes(), g.h3());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

Profile zero_mode(const Field& f)
{
    const Grid& g = f.grid;
    const int nt = g.n_tan();
    Profile p(g);
    for (int j = 0; j < g.n_nodes(); ++j) {
        const double* row = f.values.data() + static_cast<std::size_t>(j) * nt;
        double s = 0.0;
        for (int k = 0; k < nt; ++k)
            s += row[k];
        p[j] = s / nt;
    }
    return p;
}

Field nonzero_mode(const Field& f)
{
    Profile p = zero_mode(f);
    Field out = f;
    const int nt = f.grid.n_tan();
    for (int j = 0; j < f.grid.n_nodes(); ++j)
        for (int k = 0; k < nt; ++k)
            out.at(j, k) -= p[j];
    return out;
}

Field broadcast(const Profile& p)
{
    Field f(p.grid);
    const int nt = p.grid.n_tan();
    for (int j = 0; j < p.grid.n_nodes(); ++j)
        for (int k = 0; k < nt; ++k)
            f.at(j, k) = p[j];
    return f;
}

double integrate(const Profile& p)
{
    auto w = trapezoid_weights(p.grid);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        s += w[j] * p.values[j];
    return s;
}

double weighted_l2_norm(const Profile& p, double alpha)
{
    if (alpha < 0.0)
        throw ConfigError("weighted_l2_norm: alpha must be >= 0");
    auto w = trapezoid_weights(p.grid);
    double s = 0.0;
    for (int j = 0; j < p.grid.n_nodes(); ++j) {
        double x = p.grid.x3(j);
        double wt = alpha == 0.0 ? 1.0 : std::pow(1.0 + x * x, alpha);
        s += w[j] * wt * p[j] * p[j];
    }
    return std::sqrt(s);
}

double l2_norm(const Profile& p) { return weighted_l2_norm(p, 0.0); }

double l2_norm(const Field& f)
{
    const Grid& g = f.grid;
    auto w = trapezoid_weights(g);
    const int nt = g.n_tan();
    double s = 0.0;
    for (int j = 0; j < g.n_nodes(); ++j) {
        double r = 0.0;
        for (int k = 0; k < nt; ++k)
            r += f.at(j, k) * f.at(j, k);
        s += w[j] * r / nt;
    }
    return std::sqrt(s);
}

double linf_norm(const Field& f)
{
    double m = 0.0;
    for (double v : f.values)
        m = std::max(m, std::abs(v));
    return m;
}

double linf_norm(const Profile& p)
{
    double m = 0.0;
    for (double v : p.values)
        m = std::max(m, std::abs(v));
    return m;
}

Profile antiderivative(const Profile& p)
{
    Profile out(p.grid);
    const double h = p.grid.h3();
    out[0] = 0.0;
    for (int j = 1; j < p.grid.n_nodes(); ++j)
        out[j] = out[j - 1] + 0.5 * h * (p[j - 1] + p[j]);
    return out;
}

// ---------------------------------------------------------------------------
// normal finite differences

std::vector<double> fornberg_weights(double z, const std::vector<double>& x, int m)
{
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i)
        w[i] = c[i][m];
    return w;
}

namespace {

int interior_half(int order) { return order == 3 ? 3 : 2; }
int closure_width(int order) { return order + 4; }

NormalStencil build_stencil(int n, int order)
{
    const int half = interior_half(order);
    const int cw = closure_width(order);
    if (n < std::max(2 * half + 1, cw) + 2 * order + 1)
        throw StencilTooWide("d_normal: " + std::to_string(n) + " nodes too few for order " +
                             std::to_string(order));
    NormalStencil s;
    s.order = order;
    s.n = n;
    s.start.resize(n);
    s.w.resize(n);

    std::vector<double> xi(2 * half + 1);
    for (int i = 0; i < 2 * half + 1; ++i)
        xi[i] = i - half;
    const auto wi = fornberg_weights(0.0, xi, order);

    std::vector<double> xc(cw);
    for (int i = 0; i < cw; ++i)
        xc[i] = i;
    const double sign = (order % 2 == 1) ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
        if (j < half) {
            s.start[j] = 0;
            s.w[j] = fornberg_weights(static_cast<double>(j), xc, order);
        } else if (j >= n - half) {
            // mirror of the left closure
            int jm = n - 1 - j;
            auto wl = fornberg_weights(static_cast<double>(jm), xc, order);
            std::vector<double> wr(cw);
            for (int i = 0; i < cw; ++i)
                wr[cw - 1 - i] = sign * wl[i];
            s.start[j] = n - cw;
            s.w[j] = std::move(wr);
        } else {
            s.start[j] = j - half;
            s.w[j] = wi;
        }
    }
    return s;
}

} // namespace

const NormalStencil& normal_stencil(int n, int order)
{
    if (order < 1 || order > 3)
        throw ConfigError("d_normal: order must be 1, 2 or 3");
    static std::mutex mtx;
    static std::map<std::pair<int, int>, NormalStencil> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(n, order);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, build_stencil(n, order)).first;
    return it->second;
}

void d_normal_line(const double* f, double* out, int n, double h, int order)
{
    const NormalStencil& s = normal_stencil(n, order);
    const double scale = std::pow(h, -order);
    for (int j = 0; j < n; ++j) {
        const auto& w = s.w[j];
        const double* fp = f + s.start[j];
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            acc += w[i] * fp[i];
        out[j] = acc * scale;
    }
}

Profile d_normal(const Profile& p, int order)
{
    Profile out(p.grid);
    d_normal_line(p.values.data(), out.values.data(), p.grid.n_nodes(), p.grid.h3(), order);
    return out;
}

Field d_normal(const Field& f, int order)
{
    const Grid& g = f.grid;
    const NormalStencil& s = normal_stencil(g.n_nodes(), order);
    const double scale = std::pow(g.h3(), -order);
    const int nt = g.n_tan();
    Field out(g);
    for (int j = 0; j < g.n_nodes(); ++j) {
        double* o = out.values.data() + static_cast<std::size_t>(j) * nt;
        const auto& w = s.w[j];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double wi = w[i] * scale;
            const double* fp = f.values.data() + static_cast<std::size_t>(s.start[j] + i) * nt;
            for (int k = 0; k < nt; ++k)
                o[k] += wi * fp[k];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// tangential transform

namespace {

struct PlanPair {
    fftw_plan fwd;
    fftw_plan bwd;
};

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

PlanPair get_plans(const Grid& g)
{
    static std::map<std::tuple<int, int, int>, PlanPair> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto key = std::make_tuple(g.d, g.n_perp, g.n_nodes());
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;

    const int n = g.n_perp;
    const int nt = g.n_tan();
    const int nc = g.d == 1 ? n / 2 + 1 : n * (n / 2 + 1);
    const int howmany = g.n_nodes();
    std::vector<double> r(static_cast<std::size_t>(nt) * howmany);
    fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(nc) * howmany);
    int dims[2] = {n, n};
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair pp;
    pp.fwd = fftw_plan_many_dft_r2c(g.d, dims, howmany, r.data(), nullptr, 1, nt, c, nullptr, 1,
                                    nc, flags);
    pp.bwd = fftw_plan_many_dft_c2r(g.d, dims, howmany, c, nullptr, 1, nc, r.data(), nullptr, 1,
                                    nt, flags);
    fftw_free(c);
    cache.emplace(key, pp);
    return pp;
}

} // namespace

TangentialTransform::TangentialTransform(const Grid& g) : g_(g)
{
    n_coef_ = g.d == 1 ? g.n_perp / 2 + 1 : g.n_perp * (g.n_perp / 2 + 1);
    PlanPair pp = get_plans(g);
    fwd_ = pp.fwd;
    bwd_ = pp.bwd;
}

void TangentialTransform::forward(const double* in, std::complex<double>* out) const
{
    // r2c does not modify its input
    fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    const double inv = 1.0 / g_.n_tan();
    const std::size_t total = static_cast<std::size_t>(n_coef_) * g_.n_nodes();
    for (std::size_t i = 0; i < total; ++i)
        out[i] *= inv;
}

void TangentialTransform::backward(const std::complex<double>* in, double* out) const
{
    std::vector<std::complex<double>> tmp(in, in + static_cast<std::size_t>(n_coef_) * g_.n_nodes());
    fftw_execute_dft_c2r(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(tmp.data()),
                         out);
}

double TangentialTransform::wavenumber(int c, int dir) const
{
    const int n = g_.n_perp;
    const int nh = n / 2 + 1;
    int m;
    if (dir == 0) {
        m = g_.d == 1 ? c : c % nh;
    } else {
        if (g_.d == 1)
            return 0.0;
        int k2 = c / nh;
        m = k2 <= n / 2 ? k2 : k2 - n;
    }
    return 2.0 * std::numbers::pi * m;
}

bool TangentialTransform::is_nyquist(int c, int dir) const
{
    const int n = g_.n_perp;
    const int nh = n / 2 + 1;
    if (dir == 0)
        return (g_.d == 1 ? c : c % nh) == n / 2;
    if (g_.d == 1)
        return false;
    return c / nh == n / 2;
}

Field d_tangential(const Field& f, int dir, int order)
{
    const Grid& g = f.grid;
    if (dir < 0 || dir >= g.d)
        throw ConfigError("d_tangential: direction out of range");
    if (order < 0)
        throw ConfigError("d_tangential: negative order");
    TangentialTransform tt(g);
    const int nc = tt.n_coef();
    std::vector<std::complex<double>> c(static_cast<std::size_t>(nc) * g.n_nodes());
    tt.forward(f.values.data(), c.data());
    std::vector<std::complex<double>> mult(nc);
    for (int i = 0; i < nc; ++i) {
        if (order % 2 == 1 && tt.is_nyquist(i, dir)) {
            mult[i] = 0.0;
            continue;
        }
        std::complex<double> ik(0.0, tt.wavenumber(i, dir));
        mult[i] = std::pow(ik, order);
    }
    for (int j = 0; j < g.n_nodes(); ++j)
        for (int i = 0; i < nc; ++i)
            c[static_cast<std::size_t>(j) * nc + i] *= mult[i];
    Field out(g);
    tt.backward(c.data(), out.values.data());
    return out;
}

double tangential_gradient_l2(const Field& f)
{
    const Grid& g = f.grid;
    TangentialTransform tt(g);
    const int nc = tt.n_coef();
    const int nh = g.n_perp / 2 + 1;
    std::vector<std::complex<double>> c(static_cast<std::size_t>(nc) * g.n_nodes());
    tt.forward(f.values.data(), c.data());
    std::vector<double> k2(nc);
    for (int i = 0; i < nc; ++i) {
        double k = 0.0;
        for (int dir = 0; dir < g.d; ++dir) {
            double kk = tt.wavenumber(i, dir);
            k += kk * kk;
        }
        int c1 = g.d == 1 ? i : i % nh;
        double mult = (c1 == 0 || c1 == g.n_perp / 2) ? 1.0 : 2.0;
        k2[i] = mult * k;
    }
    auto w = trapezoid_weights(g);
    double s = 0.0;
    for (int j = 0; j < g.n_nodes(); ++j) {
        double r = 0.0;
        for (int i = 0; i < nc; ++i)
            r += k2[i] * std::norm(c[static_cast<std::size_t>(j) * nc + i]);
        s += w[j] * r;
    }
    return std::sqrt(s);
}

} // namespace vlab
