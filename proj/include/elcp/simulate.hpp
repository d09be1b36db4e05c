#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "elcp/calibration.hpp"
#include "elcp/errors.hpp"
#include "elcp/parallel.hpp"
#include "elcp/random.hpp"
#include "elcp/scan.hpp"
#include "elcp/time_series.hpp"

namespace elcp {

inline constexpr std::size_t kDefaultBurnIn = 500;

/// AR(p) path with coefficients phi_pre for t <= k and phi_post for t > k. The
/// recursion runs `burn_in` extra steps under phi_pre first; those are discarded.
inline TimeSeries gen_ar_change(std::size_t n, std::size_t k, const std::vector<double>& phi_pre,
                                const std::vector<double>& phi_post, NoiseKind noise, std::size_t burn_in,
                                std::uint64_t seed) {
    if (n < 2) throw InputError("series length must be >= 2");
    const ChangeAlternative alt(phi_pre, phi_post, k, n);
    if (!is_stationary(phi_pre)) throw InputError("pre-change coefficients are not stationary");
    if (!is_stationary(phi_post)) throw InputError("post-change coefficients are not stationary");
    const std::size_t p = alt.order();

    Rng rng(seed);
    NoiseModel eps(noise);
    std::vector<double> path(burn_in + n + p, 0.0);
    for (std::size_t i = p; i < path.size(); ++i) {
        const std::size_t t = i + 1 - p;  // t <= burn_in is warm-up
        const auto& phi = (t <= burn_in + k) ? phi_pre : phi_post;
        double v = eps(rng);
        for (std::size_t r = 1; r <= p; ++r) v += phi[r - 1] * path[i - r];
        path[i] = v;
    }
    return TimeSeries(std::vector<double>(path.end() - static_cast<std::ptrdiff_t>(n), path.end()));
}

inline TimeSeries gen_ar(std::size_t n, const std::vector<double>& phi, NoiseKind noise, std::size_t burn_in,
                         std::uint64_t seed) {
    return gen_ar_change(n, n - 1, phi, phi, noise, burn_in, seed);
}

struct PowerStudyConfig {
    std::vector<std::size_t> n_values;
    std::map<std::size_t, std::vector<std::size_t>> k_values;  ///< change locations per n
    std::vector<double> phi_pre{0.1};
    std::vector<double> phi_post{0.5};
    std::vector<NoiseKind> noises{NoiseKind::Gaussian};
    std::size_t reps = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 20240601;
    std::size_t burn_in = kDefaultBurnIn;
    unsigned jobs = 1;
    SolverSettings solver;

    void validate() const {
        if (reps < 1) throw InputError("reps must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
        if (n_values.empty()) throw InputError("at least one n is required");
        if (noises.empty()) throw InputError("at least one noise model is required");
        if (phi_pre.empty() || phi_pre.size() != phi_post.size())
            throw InputError("phi_pre and phi_post must have equal, nonzero length");
        for (std::size_t n : n_values) {
            const auto it = k_values.find(n);
            if (it == k_values.end() || it->second.empty())
                throw InputError("no change locations given for n = " + std::to_string(n));
            const auto [t1, t2] = default_trim(n);
            for (std::size_t k : it->second)
                if (k < t1 || k > n - t2)
                    throw InputError("k = " + std::to_string(k) + " lies outside the trimmed range [" +
                                     std::to_string(t1) + ", " + std::to_string(n - t2) + "] for n = " +
                                     std::to_string(n));
        }
    }
};

struct PowerCell {
    std::size_t n = 0;
    std::size_t k = 0;
    NoiseKind noise = NoiseKind::Gaussian;
    double power = 0.0;  ///< rejections / completed reps
    std::size_t reps = 0;
    std::size_t failures = 0;
    bool flagged = false;  ///< more than 5% of reps failed
};

struct PowerTable {
    std::vector<PowerCell> cells;
    std::size_t reps = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;

    const PowerCell& at(std::size_t n, std::size_t k, NoiseKind noise) const {
        for (const auto& c : cells)
            if (c.n == n && c.k == k && c.noise == noise) return c;
        throw InputError("no power cell for the requested (n, k, noise)");
    }

    /// CSV with header n,k,noise,power,reps,failures.
    std::string to_csv() const {
        std::ostringstream os;
        os << "n,k,noise,power,reps,failures\n";
        os.precision(6);
        os << std::fixed;
        for (const auto& c : cells)
            os << c.n << ',' << c.k << ',' << to_string(c.noise) << ',' << c.power << ',' << c.reps << ','
               << c.failures << '\n';
        return os.str();
    }
};

/// Fraction of cell failures above which a cell is flagged.
inline constexpr double kMaxCellFailureFraction = 0.05;

/// Stable cell key so each (n, k, noise) has its own stream family.
inline std::uint64_t cell_key(std::size_t n, std::size_t k, NoiseKind noise) {
    return (static_cast<std::uint64_t>(n) << 32) ^ (static_cast<std::uint64_t>(k) << 8) ^
           static_cast<std::uint64_t>(noise);
}

/// Rejection frequency of the asymptotic test at each (n, k, noise).
inline PowerTable power_study(const PowerStudyConfig& config) {
    config.validate();
    struct Item {
        std::size_t cell;
        std::size_t rep;
    };
    std::vector<PowerCell> cells;
    for (std::size_t n : config.n_values)
        for (std::size_t k : config.k_values.at(n))
            for (NoiseKind noise : config.noises) cells.push_back(PowerCell{n, k, noise});

    const double crit = gumbel_quantile(config.alpha);
    // 0 = no reject, 1 = reject, 2 = failed
    std::vector<unsigned char> outcome(cells.size() * config.reps, 2);
    parallel_for(outcome.size(), config.jobs, [&](std::size_t idx) {
        const PowerCell& cell = cells[idx / config.reps];
        const std::size_t rep = idx % config.reps;
        const std::uint64_t s = derive_seed(config.seed, cell_key(cell.n, cell.k, cell.noise), rep);
        try {
            const TimeSeries x = gen_ar_change(cell.n, cell.k, config.phi_pre, config.phi_post, cell.noise,
                                               config.burn_in, s);
            ScanOptions opt;
            opt.alpha = config.alpha;
            opt.solver = config.solver;
            opt.solver.seed = s;
            const ScanResult r = trimmed_scan(x, config.phi_pre.size(), opt);
            outcome[idx] = r.t_normalized > crit ? 1 : 0;
        } catch (const Error&) {
            outcome[idx] = 2;
        }
    });

    PowerTable table;
    table.reps = config.reps;
    table.alpha = config.alpha;
    table.seed = config.seed;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::size_t rejects = 0, failures = 0;
        for (std::size_t r = 0; r < config.reps; ++r) {
            const unsigned char o = outcome[c * config.reps + r];
            if (o == 2) ++failures;
            else rejects += o;
        }
        PowerCell cell = cells[c];
        cell.reps = config.reps;
        cell.failures = failures;
        const std::size_t done = config.reps - failures;
        cell.power = done > 0 ? static_cast<double>(rejects) / static_cast<double>(done) : 0.0;
        cell.flagged = static_cast<double>(failures) > kMaxCellFailureFraction * static_cast<double>(config.reps);
        table.cells.push_back(cell);
    }
    return table;
}

struct CritvalRow {
    double level = 0.05;
    double empirical = 0.0;    ///< upper-level quantile of the normalized statistic
    double theoretical = 0.0;  ///< Gumbel quantile
};

struct CritvalStudy {
    std::size_t n = 0;
    std::size_t reps = 0;
    std::size_t failures = 0;
    std::vector<double> normalized;  ///< completed replicates, in replicate order
    std::vector<CritvalRow> rows;
};

/// Upper-`level` empirical quantile (type-7 interpolation on the sorted sample).
inline double upper_quantile(std::vector<double> sample, double level) {
    if (sample.empty()) throw InputError("empty sample");
    std::sort(sample.begin(), sample.end());
    const double h = (1.0 - level) * static_cast<double>(sample.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sample.size() - 1);
    return sample[lo] + (h - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

/// Null distribution of the normalized statistic by simulation. `phi` is the
/// no-change coefficient vector; its length is the AR order.
inline CritvalStudy empirical_critval_study(std::size_t n, const std::vector<double>& phi, NoiseKind noise,
                                            std::size_t reps, const std::vector<double>& levels,
                                            std::uint64_t seed, unsigned jobs = 1, std::size_t burn_in = kDefaultBurnIn,
                                            const SolverSettings& solver = {}) {
    if (reps < 500) throw InputError("critical-value study needs at least 500 replicates");
    for (double a : levels)
        if (!(a > 0.0 && a < 1.0)) throw InputError("levels must lie in (0, 1)");
    std::vector<std::optional<double>> stats(reps);
    parallel_for(reps, jobs, [&](std::size_t rep) {
        const std::uint64_t s = derive_seed(seed, cell_key(n, 0, noise), rep);
        try {
            const TimeSeries x = gen_ar(n, phi, noise, burn_in, s);
            ScanOptions opt;
            opt.solver = solver;
            opt.solver.seed = s;
            stats[rep] = trimmed_scan(x, phi.size(), opt).t_normalized;
        } catch (const Error&) {
            stats[rep].reset();
        }
    });
    CritvalStudy out;
    out.n = n;
    out.reps = reps;
    for (const auto& s : stats) {
        if (s) out.normalized.push_back(*s);
        else ++out.failures;
    }
    for (double a : levels)
        out.rows.push_back(CritvalRow{a, upper_quantile(out.normalized, a), gumbel_quantile(a)});
    return out;
}

}  // namespace elcp
