#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "elcp/errors.hpp"

namespace elcp {

/// Ordered, finite sequence of real observations. Never empty.
class TimeSeries {
public:
    TimeSeries() = default;

    explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw InputError("time series must contain at least one value");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]))
                throw InputError("time series value at index " + std::to_string(i + 1) +
                                 " is not finite");
        }
    }

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    /// 1-based access, matching the documented indexing convention.
    double at(std::size_t t) const {
        if (t < 1 || t > values_.size())
            throw IndexError("time index " + std::to_string(t) + " outside [1, " +
                             std::to_string(values_.size()) + "]");
        return values_[t - 1];
    }

    TimeSeries scaled(double c) const {
        std::vector<double> v(values_);
        for (double& x : v) x *= c;
        return TimeSeries(std::move(v));
    }

    TimeSeries reversed() const {
        return TimeSeries(std::vector<double>(values_.rbegin(), values_.rend()));
    }

    /// Observations first..last (1-based, inclusive) as a new series.
    TimeSeries slice(std::size_t first, std::size_t last) const {
        if (first < 1 || last > values_.size() || first > last)
            throw IndexError("slice [" + std::to_string(first) + ", " + std::to_string(last) +
                             "] outside series of length " + std::to_string(values_.size()));
        return TimeSeries(std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first - 1),
                                              values_.begin() + static_cast<std::ptrdiff_t>(last)));
    }

private:
    std::vector<double> values_;
};

/// Inclusive interval of 1-based time indices.
struct IndexRange {
    std::size_t first = 1;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last >= first ? last - first + 1 : 0; }
    bool empty() const noexcept { return last < first; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Smallest modulus over the roots of 1 - phi_1 z - ... - phi_p z^p.
/// Stationarity holds when this exceeds one. Returns +inf for an all-zero vector.
inline double min_root_modulus(std::span<const double> phi) {
    std::size_t p = phi.size();
    while (p > 0 && phi[p - 1] == 0.0) --p;
    if (p == 0) return std::numeric_limits<double>::infinity();
    // Roots of the AR polynomial are reciprocals of the companion eigenvalues.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                      static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) companion(0, static_cast<Eigen::Index>(j)) = phi[j];
    for (std::size_t j = 1; j < p; ++j)
        companion(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j - 1)) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    double max_eig = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        max_eig = std::max(max_eig, std::abs(es.eigenvalues()[i]));
    return max_eig > 0.0 ? 1.0 / max_eig : std::numeric_limits<double>::infinity();
}

inline bool is_stationary(std::span<const double> phi) { return min_root_modulus(phi) > 1.0; }

/// AR(p) coefficients and innovation variance.
struct ARSpec {
    std::vector<double> phi;
    double sigma2 = 1.0;

    ARSpec() = default;
    ARSpec(std::vector<double> coefficients, double innovation_variance)
        : phi(std::move(coefficients)), sigma2(innovation_variance) {
        validate();
    }

    std::size_t order() const noexcept { return phi.size(); }

    void validate() const {
        if (phi.empty()) throw InputError("AR order must be at least 1");
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw InputError("innovation variance must be positive and finite");
        for (double c : phi)
            if (!std::isfinite(c)) throw InputError("AR coefficient is not finite");
    }

    bool stationary() const { return is_stationary(phi); }
};

/// One-change alternative: phi_pre up to index k, phi_post afterwards.
struct ChangeAlternative {
    std::vector<double> phi_pre;
    std::vector<double> phi_post;
    std::vector<double> delta;
    std::size_t k = 0;
    double sigma2 = 1.0;

    ChangeAlternative(std::vector<double> pre, std::vector<double> post, std::size_t change,
                      std::size_t n, double innovation_variance = 1.0)
        : phi_pre(std::move(pre)), phi_post(std::move(post)), k(change), sigma2(innovation_variance) {
        if (phi_pre.empty() || phi_pre.size() != phi_post.size())
            throw InputError("pre- and post-change coefficient vectors must have equal, nonzero length");
        if (k < 1 || k >= n) throw InputError("change location must satisfy 1 <= k < n");
        if (!(sigma2 > 0.0)) throw InputError("innovation variance must be positive");
        delta.resize(phi_pre.size());
        for (std::size_t i = 0; i < phi_pre.size(); ++i) delta[i] = phi_post[i] - phi_pre[i];
    }

    std::size_t order() const noexcept { return phi_pre.size(); }
};

/// Least-squares AR(p) fit without intercept over rows t in `rows`
/// (lags may reach before rows.first). Returns coefficients and the mean squared residual.
inline ARSpec fit_ols(std::span<const double> x, std::size_t p, IndexRange rows) {
    if (p == 0) throw InputError("AR order must be at least 1");
    if (rows.first < p + 1 || rows.last > x.size() || rows.empty())
        throw IndexError("OLS rows need all p lags inside the series");
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto q = static_cast<Eigen::Index>(p);
    if (m < q + 1) throw DegenerateSegment("too few rows for an AR(" + std::to_string(p) + ") fit");

    Eigen::MatrixXd design(m, q);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t t = rows.first + static_cast<std::size_t>(i);
        y(i) = x[t - 1];
        for (Eigen::Index r = 0; r < q; ++r) design(i, r) = x[t - 1 - static_cast<std::size_t>(r) - 1];
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const double scale = gram.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * scale)
        throw DegenerateSegment("lagged design matrix is rank-deficient");
    Eigen::VectorXd coef = ldlt.solve(design.transpose() * y);
    Eigen::VectorXd resid = y - design * coef;
    const double s2 = resid.squaredNorm() / static_cast<double>(m);
    if (!(s2 > 0.0)) throw DegenerateSegment("segment is fitted exactly; residual variance is zero");

    ARSpec out;
    out.phi.assign(coef.data(), coef.data() + coef.size());
    out.sigma2 = s2;
    return out;
}

}  // namespace elcp
