#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "elcp/errors.hpp"

namespace elcp {

/// Smallest series length accepted by default_trim.
inline constexpr std::size_t kMinTrimLength = 25;

/// Trimming (n_T1, n_T2) = (2 floor(sqrt n), 2 floor(sqrt n)).
inline std::pair<std::size_t, std::size_t> default_trim(std::size_t n) {
    if (n < kMinTrimLength)
        throw InputError("series of length " + std::to_string(n) +
                         " is too short for the trimmed scan (need >= 25); use bootstrap mode with an explicit trim");
    std::size_t r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return {2 * r, 2 * r};
}

/// u(n) = (n^2 + (2 floor(sqrt n))^2 - 2 n floor(sqrt n)) / (2 floor(sqrt n))^2.
inline double u_of_n(std::size_t n) {
    if (n < 5) throw InputError("u(n) requires n >= 5");
    std::size_t r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    const double nn = static_cast<double>(n);
    const double rr = static_cast<double>(r);
    return (nn * nn + 4.0 * rr * rr - 2.0 * nn * rr) / (4.0 * rr * rr);
}

/// A(x) = sqrt(2 log x).
inline double norm_a(double x) { return std::sqrt(2.0 * std::log(x)); }

/// D_r(x) = 2 log x + (r/2) log log x - log Gamma(r/2).
inline double norm_d(double x, int r) {
    return 2.0 * std::log(x) + 0.5 * r * std::log(std::log(x)) - std::lgamma(0.5 * r);
}

/// Normalizing constants evaluated at x = log u(n).
struct CalibrationConstants {
    double a_val = 0.0;
    double d_val = 0.0;
    double u_n = 0.0;
    int r = 1;

    static CalibrationConstants for_length(std::size_t n, int r) {
        if (r < 1) throw InputError("dimension r must be >= 1");
        CalibrationConstants c;
        c.u_n = u_of_n(n);
        c.r = r;
        const double x = std::log(c.u_n);
        // A and D_r need log x > 0, i.e. u(n) > e; the r/2 log log x term needs x > 1 too.
        if (!(x > 1.0) || !(std::log(x) > 0.0))
            throw InputError("u(" + std::to_string(n) + ") = " + std::to_string(c.u_n) +
                             " is too small for the extreme-value normalization; use bootstrap p-values");
        c.a_val = norm_a(x);
        c.d_val = norm_d(x, r);
        return c;
    }

    double normalize(double z) const { return a_val * std::sqrt(z) - d_val; }

    /// Raw statistic threshold equivalent to a normalized threshold t.
    double raw_threshold(double t) const {
        const double root = (t + d_val) / a_val;
        return root > 0.0 ? root * root : 0.0;
    }
};

/// A(log u(n)) sqrt(z) - D_r(log u(n)).
inline double normalize(double z, std::size_t n, int r) {
    if (!(z >= 0.0)) throw InputError("statistic must be non-negative");
    return CalibrationConstants::for_length(n, r).normalize(z);
}

/// Upper-alpha quantile of the standard Gumbel law: -log(-log(1 - alpha)).
inline double gumbel_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("level must lie in (0, 1)");
    return -std::log(-std::log1p(-alpha));
}

/// 1 - exp(-exp(-t)).
inline double p_value_asymptotic(double t) {
    if (std::isnan(t)) throw InputError("normalized statistic is NaN");
    return -std::expm1(-std::exp(-t));
}

}  // namespace elcp
