#pragma once

#include "rtint/absorption.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace rtint {

// Stefan-Boltzmann constant in the reduced units used throughout: the total
// Planck emission is integral_0^inf nu^3/(e^{nu/T}-1) dnu = sigma * T^4.
inline constexpr double kSigma = 6.493939402266829149096; // pi^4 / 15

// Planck spectral radiance nu^3 / (e^{nu/T} - 1), stable for extreme nu/T.
inline double planck(double nu, double T) {
    if (T <= 0.0 || nu < 0.0) return 0.0;
    const double x = nu / T;
    if (x > 700.0) return 0.0;
    if (x < 1e-4) return nu * nu * T * (1.0 - 0.5 * x + x * x / 12.0);
    return nu * nu * nu / std::expm1(x);
}

// d/dT of planck(nu, T)
inline double planck_dT(double nu, double T) {
    if (T <= 0.0 || nu <= 0.0) return 0.0;
    const double x = nu / T;
    if (x > 700.0) return 0.0;
    if (x < 1e-4) return nu * nu * (1.0 - x * x / 12.0);
    const double em = std::expm1(x);
    return nu * nu * nu * nu * std::exp(x) / (T * T * em * em);
}

namespace detail {

inline double simpson(double a, double fa, double fm, double b, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa,
                                   double b, double fb, double m, double fm, double whole,
                                   double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, flm, m, fm);
    const double right = simpson(m, fm, frm, b, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = simpson(a, fa, fm, b, fb);
    return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 40);
}

} // namespace detail

// integral over [band.lo, band.hi] of planck(nu, T) dnu; substitution
// u = nu/T keeps the integrand well scaled for all temperatures
inline double band_planck(const Band& band, double T) {
    if (T <= 0.0) return 0.0;
    const double a = band.lo / T, b = band.hi / T;
    auto f = [](double u) {
        if (u > 700.0) return 0.0;
        if (u < 1e-4) return u * u * (1.0 - 0.5 * u + u * u / 12.0);
        return u * u * u / std::expm1(u);
    };
    const double scale = kSigma; // integral over (0, inf) of f
    const double val = detail::adaptive_simpson(f, a, b, 1e-12 * scale);
    return T * T * T * T * std::max(val, 0.0);
}

inline double band_planck_dT(const Band& band, double T) {
    if (T <= 0.0) return 0.0;
    auto f = [T](double nu) { return planck_dT(nu, T); };
    const double scale = 4.0 * kSigma * T * T * T;
    return std::max(detail::adaptive_simpson(f, band.lo, band.hi, 1e-12 * std::max(scale, 1e-290)),
                    0.0);
}

// closed form for the grey medium: sigma T^4 = Jbar
inline double grey_temperature(double j_total) {
    if (j_total < 0.0) j_total = 0.0;
    return std::pow(j_total / kSigma, 0.25);
}

// Solves the nodal energy budget sum_b c_b * (J_b - B_b(T)) = 0 for T, where
// c_b = kappa_b (1 - a_b), J_b is the band-integrated mean intensity and
// B_b(T) = band_planck. The left side is strictly decreasing in T, so the
// root is unique; Newton with a bisection safeguard.
inline double solve_temperature(const std::vector<Band>& bands, const std::vector<double>& coeff,
                                const std::vector<double>& j_band) {
    if (bands.size() != coeff.size() || bands.size() != j_band.size())
        throw std::invalid_argument("solve_temperature: band/coefficient size mismatch");
    double target = 0.0, csum = 0.0;
    for (size_t b = 0; b < bands.size(); ++b) {
        target += coeff[b] * j_band[b];
        csum += coeff[b];
    }
    if (csum <= 0.0)
        throw std::runtime_error(
            "solve_temperature: temperature undetermined (kappa * (1 - albedo) vanishes in "
            "every band)");
    if (target <= 0.0) return 0.0;

    auto emitted = [&](double T) {
        double s = 0.0;
        for (size_t b = 0; b < bands.size(); ++b) s += coeff[b] * band_planck(bands[b], T);
        return s;
    };

    // bracket the root; the grey closed form gives a good starting scale
    double T = grey_temperature(target / csum);
    if (T <= 0.0) T = 1.0;
    double lo = 0.0, hi = T;
    int guard = 0;
    while (emitted(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 600) throw std::runtime_error("solve_temperature: failed to bracket root");
    }

    T = std::min(std::max(T, lo), hi);
    const double ftol = 1e-12 * target;
    for (int it = 0; it < 100; ++it) {
        const double f = emitted(T) - target;
        if (std::abs(f) <= ftol) return T;
        if (f > 0.0)
            hi = T;
        else
            lo = T;
        double df = 0.0;
        for (size_t b = 0; b < bands.size(); ++b) df += coeff[b] * band_planck_dT(bands[b], T);
        double Tn = (df > 0.0) ? T - f / df : -1.0;
        if (!(Tn > lo && Tn < hi)) Tn = 0.5 * (lo + hi); // bisection fallback
        if (std::abs(Tn - T) <= 1e-15 * std::max(T, 1.0)) return Tn;
        T = Tn;
    }
    return T;
}

} // namespace rtint
