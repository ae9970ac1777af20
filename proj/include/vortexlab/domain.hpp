#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "vortexlab/errors.hpp"

namespace vlab {

/// Periodic-tangential x truncated-normal grid on T^d x [-L, L].
///
/// Tangential period is 1.  Normal nodes are x3_j = -L + j h3, j = 0..n3,
/// so there are n3 + 1 normal levels.  Storage is row-major with the
/// tangential index fastest: idx = j * n_tan() + k.  For d = 2 the tangential
/// index is k = k2 * n_perp + k1.
struct Grid {
    int d = 1;
    int n_perp = 32;
    int n3 = 256;
    double L = 40.0;

    double h3() const { return 2.0 * L / n3; }
    int n_nodes() const { return n3 + 1; }
    int n_tan() const { return d == 1 ? n_perp : n_perp * n_perp; }
    std::size_t size() const { return static_cast<std::size_t>(n_tan()) * n_nodes(); }
    double x3(int j) const { return -L + j * h3(); }
    /// Tangential coordinate along direction dir (0 -> x1, 1 -> x2) of node k.
    double xt(int k, int dir = 0) const
    {
        int kk = dir == 0 ? k % n_perp : k / n_perp;
        return static_cast<double>(kk) / n_perp;
    }

    void validate() const;
    bool operator==(const Grid& o) const
    {
        return d == o.d && n_perp == o.n_perp && n3 == o.n3 && L == o.L;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Validated constructor.
Grid make_grid(int d, int n_perp, int n3, double L);

/// Scalar values on every grid node.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double& at(int j, int k) { return values[static_cast<std::size_t>(j) * grid.n_tan() + k]; }
    double at(int j, int k) const { return values[static_cast<std::size_t>(j) * grid.n_tan() + k]; }
    std::size_t size() const { return values.size(); }
};

/// Scalar values on the normal nodes only.
struct Profile {
    Grid grid;
    std::vector<double> values;

    Profile() = default;
    explicit Profile(const Grid& g, double fill = 0.0) : grid(g), values(g.n_nodes(), fill) {}

    double& operator[](int j) { return values[j]; }
    double operator[](int j) const { return values[j]; }
    std::size_t size() const { return values.size(); }
};

/// Physical and scaling constants.  u_bar holds the tangential components
/// (only the first d are used).
struct PhysParams {
    double rho_bar = 1.0;
    std::array<double, 2> u_bar{0.5, 0.0};
    double mu = 0.1;
    double lambda = 0.0;
    double gamma = 1.4;
    double eps = 0.5;
    double t0 = 1.0;
    double Lambda = 1.0;

    double a_bar() const;
    double mu_tilde() const { return 2.0 * mu + lambda; }
    double pressure(double rho) const;
    double dpressure(double rho) const;
    /// p(rho) - p(rb) - p'(rb)(rho - rb)
    double varpi(double rho) const;
    double u_bar_sq() const { return u_bar[0] * u_bar[0] + u_bar[1] * u_bar[1]; }
    void validate() const;
};

/// Default auxiliary-flow age max(C1 (|u_bar|^2 + M0), 1).
double default_Lambda(const PhysParams& p, double M0, double C1 = 10.0);

/// Trapezoid weights on the normal nodes.
std::vector<double> trapezoid_weights(const Grid& g);

Profile zero_mode(const Field& f);
Field nonzero_mode(const Field& f);
Field broadcast(const Profile& p);

/// Trapezoid integral over [-L, L].
double integrate(const Profile& p);
/// ||<x3>^alpha p||_{L^2(-L,L)}
double weighted_l2_norm(const Profile& p, double alpha);
double l2_norm(const Profile& p);
/// L^2 norm over T^d x [-L, L] (torus measure 1).
double l2_norm(const Field& f);
double linf_norm(const Field& f);
double linf_norm(const Profile& p);
/// Cumulative trapezoid from -L.
Profile antiderivative(const Profile& p);

/// Finite-difference rows for d^order/dx3^order on a line of n nodes with
/// unit spacing.  Row j touches nodes start[j] .. start[j] + w[j].size() - 1.
struct NormalStencil {
    int order = 1;
    int n = 0;
    std::vector<int> start;
    std::vector<std::vector<double>> w;
};

/// Fornberg weights for derivative m at z from nodes x.
std::vector<double> fornberg_weights(double z, const std::vector<double>& x, int m);

/// Cached stencil (unit spacing); throws StencilTooWide when n is too small.
const NormalStencil& normal_stencil(int n, int order);

/// Derivative along a raw line with spacing h.
void d_normal_line(const double* f, double* out, int n, double h, int order);

Profile d_normal(const Profile& p, int order);
Field d_normal(const Field& f, int order);

/// Spectral tangential derivative; dir = 0 (x1) or 1 (x2, d = 2 only).
Field d_tangential(const Field& f, int dir, int order);

/// ||grad_perp f||_{L^2} computed by Parseval; the Nyquist mode carries its
/// full wavenumber so the discrete Poincare inequality holds for any field.
double tangential_gradient_l2(const Field& f);

/// Real <-> half-complex tangential transform for every normal level.
/// Forward output is normalized so coefficient 0 equals the tangential mean.
class TangentialTransform {
public:
    explicit TangentialTransform(const Grid& g);

    /// Complex coefficients per normal level.
    int n_coef() const { return n_coef_; }
    void forward(const double* in, std::complex<double>* out) const;
    /// Destroys nothing: input is copied internally.
    void backward(const std::complex<double>* in, double* out) const;
    /// Wavenumber (2 pi m) along dir for coefficient c; Nyquist reported as
    /// +pi n_perp.
    double wavenumber(int c, int dir) const;
    bool is_nyquist(int c, int dir) const;

private:
    Grid g_;
    int n_coef_;
    void* fwd_;
    void* bwd_;
};

} // namespace vlab
