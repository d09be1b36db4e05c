#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elcp/calibration.hpp"
#include "elcp/el_solver.hpp"
#include "elcp/errors.hpp"
#include "elcp/parallel.hpp"
#include "elcp/random.hpp"
#include "elcp/time_series.hpp"

namespace elcp {

struct ScanOptions {
    double alpha = 0.05;
    std::optional<int> r;                                       ///< defaults to the AR order
    std::optional<std::pair<std::size_t, std::size_t>> trim;   ///< defaults to default_trim(n)
    bool warm_start = true;
    unsigned jobs = 1;
    SolverSettings solver;
};

struct ProfilePoint {
    std::size_t k = 0;
    double stat = 0.0;  ///< -2 log Lambda_k
    double z_h0 = 0.0;
    double z_h1 = 0.0;
};

struct ScanResult {
    std::size_t n = 0;
    std::size_t p = 1;
    std::vector<ProfilePoint> profile;
    std::vector<std::size_t> failed_k;
    double z_star = 0.0;
    std::size_t k_hat = 0;
    double theta_hat = 0.0;
    bool calibrated = false;  ///< false when n is too small for the extreme-value normalization
    double t_normalized = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double critical_value = std::numeric_limits<double>::quiet_NaN();  ///< Gumbel quantile at alpha
    double alpha = 0.05;
    bool reject = false;
    std::pair<std::size_t, std::size_t> trim{0, 0};
    int r = 1;
};

/// Warm-start chains restart every kScanBlock change indices, so the profile is the
/// same for any worker count.
inline constexpr std::size_t kScanBlock = 16;

/// Largest fraction of the trimmed range allowed to fail before the scan aborts.
inline constexpr double kMaxFailedFraction = 0.2;

namespace detail {

inline std::pair<std::size_t, std::size_t> scan_range(std::size_t n, std::size_t p,
                                                      const std::optional<std::pair<std::size_t, std::size_t>>& trim) {
    const auto [t1, t2] = trim ? *trim : default_trim(n);
    if (t1 < 1 || t2 < 1 || t1 + t2 >= n)
        throw InputError("trim (" + std::to_string(t1) + ", " + std::to_string(t2) +
                         ") leaves no change index for n = " + std::to_string(n));
    const std::size_t lo = std::max(t1, p + min_segment_rows(p));
    const std::size_t hi = std::min(n - t2, n - min_segment_rows(p));
    if (lo > hi) throw InputError("trimmed range is empty after enforcing minimum segment lengths");
    return {lo, hi};
}

}  // namespace detail

/// Evaluates -2 log Lambda_k for every k in {n_T1, ..., n - n_T2} and calibrates the maximum.
inline ScanResult trimmed_scan(const TimeSeries& series, std::size_t p, const ScanOptions& options = {}) {
    if (p < 1) throw InputError("AR order must be at least 1");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    options.solver.validate();
    const std::size_t n = series.size();

    ScanResult res;
    res.n = n;
    res.p = p;
    res.alpha = options.alpha;
    res.trim = options.trim ? *options.trim : default_trim(n);
    res.r = options.r.value_or(static_cast<int>(p));
    if (res.r < 1) throw InputError("dimension r must be >= 1");
    const auto [lo, hi] = detail::scan_range(n, p, res.trim);

    // Zero-variance or exactly-fitted input fails here with DegenerateSegment.
    (void)fit_ols(series.values(), p, IndexRange{p + 1, n});

    const std::size_t count = hi - lo + 1;
    std::vector<std::optional<ProfilePoint>> slots(count);
    const std::size_t blocks = (count + kScanBlock - 1) / kScanBlock;
    parallel_for(blocks, options.jobs, [&](std::size_t b) {
        std::optional<ChangeFit> prev;
        for (std::size_t i = b * kScanBlock; i < std::min(count, (b + 1) * kScanBlock); ++i) {
            const std::size_t k = lo + i;
            WarmStart warm;
            if (options.warm_start && prev) warm = WarmStart{&prev->h0, &prev->h1};
            try {
                ChangeFit fit = fit_change(series, k, p, options.solver, warm);
                slots[i] = ProfilePoint{k, fit.statistic, fit.z_h0, fit.z_h1};
                prev = std::move(fit);
            } catch (const NumericalError&) {
                prev.reset();
            }
        }
    });

    for (std::size_t i = 0; i < count; ++i) {
        if (slots[i]) res.profile.push_back(*slots[i]);
        else res.failed_k.push_back(lo + i);
    }
    if (res.profile.empty() ||
        static_cast<double>(res.failed_k.size()) > kMaxFailedFraction * static_cast<double>(count))
        throw ScanError(std::to_string(res.failed_k.size()) + " of " + std::to_string(count) +
                        " change indices failed to solve");

    // Smallest k wins ties.
    const auto best = std::max_element(res.profile.begin(), res.profile.end(),
                                       [](const ProfilePoint& a, const ProfilePoint& b) { return a.stat < b.stat; });
    res.z_star = best->stat;
    res.k_hat = best->k;
    res.theta_hat = static_cast<double>(res.k_hat) / static_cast<double>(n);

    res.critical_value = gumbel_quantile(options.alpha);
    try {
        const auto c = CalibrationConstants::for_length(n, res.r);
        res.t_normalized = c.normalize(res.z_star);
        res.p_value = p_value_asymptotic(res.t_normalized);
        res.calibrated = true;
        res.reject = res.t_normalized > res.critical_value;
    } catch (const InputError&) {
        res.calibrated = false;
    }
    return res;
}

struct BootstrapResult {
    double p_value = 1.0;
    double z_observed = 0.0;
    std::size_t replicates = 0;  ///< replicates that produced a statistic
    std::size_t failed = 0;
    ARSpec null_fit;
};

/// Residual bootstrap of Z_n* under the OLS-fitted null AR(p).
inline BootstrapResult bootstrap_pvalue(const TimeSeries& series, std::size_t p, std::size_t replicates,
                                        std::uint64_t seed, const ScanOptions& options = {},
                                        std::optional<double> observed = std::nullopt) {
    if (replicates < 99) throw InputError("bootstrap needs at least 99 replicates");
    const std::size_t n = series.size();
    const auto x = series.values();

    BootstrapResult out;
    out.null_fit = fit_ols(x, p, IndexRange{p + 1, n});
    const double modulus = min_root_modulus(out.null_fit.phi);
    if (!(modulus > 1.0))
        throw BootstrapError("fitted null AR model is not stationary (smallest root modulus " +
                                 std::to_string(modulus) + ")",
                             modulus);

    std::vector<double> resid(n - p);
    for (std::size_t t = p + 1; t <= n; ++t) resid[t - p - 1] = detail::residual_at(x, out.null_fit.phi, t);
    double mean = 0.0;
    for (double e : resid) mean += e;
    mean /= static_cast<double>(resid.size());
    for (double& e : resid) e -= mean;

    ScanOptions inner = options;
    inner.jobs = 1;
    out.z_observed = observed ? *observed : trimmed_scan(series, p, inner).z_star;

    std::vector<std::optional<double>> stats(replicates);
    parallel_for(replicates, options.jobs, [&](std::size_t b) {
        Rng rng(derive_seed(seed, 0xB007, b));
        std::uniform_int_distribution<std::size_t> pick(0, resid.size() - 1);
        std::vector<double> y(n);
        for (std::size_t t = 0; t < p; ++t) y[t] = x[t];
        for (std::size_t t = p; t < n; ++t) {
            double v = resid[pick(rng)];
            for (std::size_t r = 1; r <= p; ++r) v += out.null_fit.phi[r - 1] * y[t - r];
            y[t] = v;
        }
        try {
            stats[b] = trimmed_scan(TimeSeries(std::move(y)), p, inner).z_star;
        } catch (const Error&) {
            stats[b].reset();
        }
    });

    std::size_t exceed = 0;
    for (const auto& s : stats) {
        if (!s) {
            ++out.failed;
            continue;
        }
        ++out.replicates;
        if (*s >= out.z_observed) ++exceed;
    }
    if (out.replicates == 0) throw ScanError("every bootstrap replicate failed");
    out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(out.replicates + 1);
    return out;
}

}  // namespace elcp
