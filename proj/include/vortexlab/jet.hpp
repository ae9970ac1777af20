#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace vlab {

/// Truncated Taylor series in one variable: c[k] = f^(k)(x0) / k!.
/// Used to get exact normal derivatives of the closed-form profiles.
struct Jet {
    static constexpr int N = 6;
    std::array<double, N> c{};

    Jet() = default;
    Jet(double v) { c[0] = v; }

    static Jet variable(double x0)
    {
        Jet j(x0);
        j.c[1] = 1.0;
        return j;
    }

    double value() const { return c[0]; }
    /// k-th derivative at the expansion point.
    double deriv(int k) const
    {
        double f = 1.0;
        for (int i = 2; i <= k; ++i)
            f *= i;
        return c[k] * f;
    }

    Jet& operator+=(const Jet& o)
    {
        for (int k = 0; k < N; ++k)
            c[k] += o.c[k];
        return *this;
    }
    Jet& operator-=(const Jet& o)
    {
        for (int k = 0; k < N; ++k)
            c[k] -= o.c[k];
        return *this;
    }
    Jet& operator*=(double s)
    {
        for (auto& v : c)
            v *= s;
        return *this;
    }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator-(Jet a)
{
    a *= -1.0;
    return a;
}
inline Jet operator*(Jet a, double s) { return a *= s; }
inline Jet operator*(double s, Jet a) { return a *= s; }

inline Jet operator*(const Jet& a, const Jet& b)
{
    Jet r(0.0);
    for (int k = 0; k < Jet::N; ++k) {
        double s = 0.0;
        for (int j = 0; j <= k; ++j)
            s += a.c[j] * b.c[k - j];
        r.c[k] = s;
    }
    return r;
}

inline Jet operator/(const Jet& a, const Jet& b)
{
    Jet q(0.0);
    for (int k = 0; k < Jet::N; ++k) {
        double s = a.c[k];
        for (int j = 1; j <= k; ++j)
            s -= b.c[j] * q.c[k - j];
        q.c[k] = s / b.c[0];
    }
    return q;
}

inline Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }

inline Jet exp(const Jet& f)
{
    Jet h(0.0);
    h.c[0] = std::exp(f.c[0]);
    for (int k = 1; k < Jet::N; ++k) {
        double s = 0.0;
        for (int j = 1; j <= k; ++j)
            s += j * f.c[j] * h.c[k - j];
        h.c[k] = s / k;
    }
    return h;
}

inline Jet log(const Jet& f)
{
    Jet h(0.0);
    h.c[0] = std::log(f.c[0]);
    for (int k = 1; k < Jet::N; ++k) {
        double s = 0.0;
        for (int j = 1; j < k; ++j)
            s += j * h.c[j] * f.c[k - j];
        h.c[k] = (f.c[k] - s / k) / f.c[0];
    }
    return h;
}

inline Jet pow(const Jet& f, double a)
{
    Jet h(0.0);
    h.c[0] = std::pow(f.c[0], a);
    for (int k = 1; k < Jet::N; ++k) {
        double s = 0.0;
        for (int j = 1; j <= k; ++j)
            s += ((a + 1.0) * j - k) * f.c[j] * h.c[k - j];
        h.c[k] = s / (k * f.c[0]);
    }
    return h;
}

/// erf composed with f, through erf' = 2/sqrt(pi) exp(-x^2).
inline Jet erf(const Jet& f)
{
    Jet e = exp(-(f * f));
    Jet df(0.0);
    for (int k = 0; k + 1 < Jet::N; ++k)
        df.c[k] = (k + 1) * f.c[k + 1];
    Jet p = e * df;
    Jet g(0.0);
    g.c[0] = std::erf(f.c[0]);
    const double s = 2.0 / std::sqrt(std::numbers::pi);
    for (int k = 1; k < Jet::N; ++k)
        g.c[k] = s * p.c[k - 1] / k;
    return g;
}

} // namespace vlab
