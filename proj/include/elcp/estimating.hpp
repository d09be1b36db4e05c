#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elcp/errors.hpp"
#include "elcp/time_series.hpp"

namespace elcp {

/// Estimating-function rows for one segment. Row i belongs to time index
/// index_range.first + i and holds (X_t, X_{t-1} e_t, ..., X_{t-p} e_t, e_t^2 - sigma2).
struct GFrame {
    Eigen::MatrixXd rows;
    IndexRange index_range;

    Eigen::Index dim() const noexcept { return rows.cols(); }
    Eigen::Index count() const noexcept { return rows.rows(); }
    Eigen::VectorXd mean() const { return rows.colwise().mean().transpose(); }
};

namespace detail {

inline void check_lag_range(std::size_t n, std::size_t p, IndexRange range) {
    if (range.empty()) throw IndexError("empty index range");
    if (range.first < p + 1)
        throw IndexError("range starts at " + std::to_string(range.first) + " but AR(" +
                         std::to_string(p) + ") needs lags back to index 1");
    if (range.last > n)
        throw IndexError("range ends at " + std::to_string(range.last) +
                         " past the series length " + std::to_string(n));
}

inline double residual_at(std::span<const double> x, std::span<const double> phi, std::size_t t) {
    double e = x[t - 1];
    for (std::size_t r = 1; r <= phi.size(); ++r) e -= phi[r - 1] * x[t - 1 - r];
    return e;
}

/// Fills `out` (count x (p+2)) without range checks.
inline void fill_frame(std::span<const double> x, std::span<const double> phi, double sigma2,
                       IndexRange range, Eigen::MatrixXd& out) {
    const std::size_t p = phi.size();
    out.resize(static_cast<Eigen::Index>(range.size()), static_cast<Eigen::Index>(p + 2));
    for (std::size_t t = range.first; t <= range.last; ++t) {
        const auto i = static_cast<Eigen::Index>(t - range.first);
        const double e = residual_at(x, phi, t);
        out(i, 0) = x[t - 1];
        for (std::size_t r = 1; r <= p; ++r) out(i, static_cast<Eigen::Index>(r)) = x[t - 1 - r] * e;
        out(i, static_cast<Eigen::Index>(p + 1)) = e * e - sigma2;
    }
}

}  // namespace detail

/// e_t = X_t - sum_r phi_r X_{t-r} for every t in `range` (1-based).
inline std::vector<double> residuals(const TimeSeries& series, const ARSpec& spec, IndexRange range) {
    const auto x = series.values();
    detail::check_lag_range(x.size(), spec.order(), range);
    std::vector<double> out;
    out.reserve(range.size());
    for (std::size_t t = range.first; t <= range.last; ++t)
        out.push_back(detail::residual_at(x, spec.phi, t));
    return out;
}

inline GFrame g_frame(const TimeSeries& series, const ARSpec& spec, IndexRange range) {
    const auto x = series.values();
    detail::check_lag_range(x.size(), spec.order(), range);
    GFrame frame;
    frame.index_range = range;
    detail::fill_frame(x, spec.phi, spec.sigma2, range, frame.rows);
    if (!frame.rows.allFinite()) throw NumericalError("estimating-function frame has non-finite entries");
    return frame;
}

}  // namespace elcp
