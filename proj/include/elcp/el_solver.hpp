#pragma once

// Empirical-likelihood machinery for the AR(p) change-point statistic.
//
// The inner problem maximizes sum_t log(1 + s * lambda' g_t) over lambda for one
// segment (s is the segment's scale 1/theta or 1/(1-theta)). Internally the solver
// works with mu = s * lambda, so the maximized value does not depend on s; the
// reported lambda is mu / s.
//
// The outer problem minimizes the sum of segment dual values over the AR
// parameters (phi, sigma2). Its gradient and Hessian follow from the envelope
// theorem, so the outer Newton iteration needs no finite differences.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "elcp/errors.hpp"
#include "elcp/estimating.hpp"
#include "elcp/time_series.hpp"

namespace elcp {

struct SolverSettings {
    double lambda_tol = 1e-10;  ///< weighted-moment norm accepted as a dual root
    double beta_tol = 1e-8;     ///< outer step size accepted as converged
    int max_inner = 100;
    int max_outer = 200;
    double logstar_eps = 0.0;   ///< pseudo-log threshold; 0 selects 1/m per segment
    bool shared_sigma2 = true;  ///< one sigma2 for both segments under the alternative
    int restarts = 3;           ///< jittered restarts of the outer solve on NonConvergence
    std::uint64_t seed = 0;     ///< drives restart jitter only

    void validate() const {
        if (!(lambda_tol > 0.0) || !(beta_tol > 0.0) || logstar_eps < 0.0)
            throw InputError("solver tolerances must be positive");
        if (max_inner < 1 || max_outer < 1) throw InputError("solver iteration caps must be >= 1");
        if (restarts < 0) throw InputError("restart count must be non-negative");
    }
};

/// Result of one inner (dual) solve.
struct DualSolution {
    Eigen::VectorXd lambda;  ///< multiplier on the caller's scale
    double objective = 0.0;  ///< sum_t log(1 + scale * lambda' g_t), >= 0
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;  ///< norm of sum_t p_t g_t at the returned point

    /// Implied probabilities p_t = 1 / (m (1 + scale * lambda' g_t)).
    Eigen::VectorXd weights(const Eigen::MatrixXd& g, double scale) const {
        const double m = static_cast<double>(g.rows());
        return (m * (1.0 + scale * (g * lambda).array())).inverse().matrix();
    }
};

namespace detail {

/// Owen's pseudo-logarithm: log z above eps, quadratic continuation below.
struct PseudoLog {
    double eps;

    double value(double z) const {
        if (z >= eps) return std::log(z);
        const double r = z / eps;
        return std::log(eps) - 1.5 + 2.0 * r - 0.5 * r * r;
    }
    double d1(double z) const { return z >= eps ? 1.0 / z : (2.0 - z / eps) / eps; }
    /// Negated second derivative (positive).
    double neg_d2(double z) const { return z >= eps ? 1.0 / (z * z) : 1.0 / (eps * eps); }
};

/// Solves (PSD matrix) x = rhs; falls back to a rank-revealing solve when singular.
inline Eigen::MatrixXd psd_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-13 * scale)
        return ldlt.solve(rhs);
    return a.completeOrthogonalDecomposition().solve(rhs);
}

/// Quick certificate that zero is outside the open convex hull: some coordinate never
/// changes sign while being nonzero somewhere.
inline bool coordinate_hull_violation(const Eigen::MatrixXd& g) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        const double lo = g.col(j).minCoeff();
        const double hi = g.col(j).maxCoeff();
        if ((lo >= 0.0 && hi > 0.0) || (hi <= 0.0 && lo < 0.0)) return true;
    }
    return false;
}

}  // namespace detail

/// Maximizes sum_t log(1 + scale * lambda' g_t) over lambda (rows of `g` are g_t).
/// `start`, when given, is a lambda on the same scale used as the initial iterate.
inline DualSolution solve_lambda(const Eigen::MatrixXd& g, double scale, const SolverSettings& settings,
                                 const Eigen::VectorXd* start = nullptr) {
    const Eigen::Index m = g.rows();
    const Eigen::Index d = g.cols();
    if (m == 0 || d == 0) throw InputError("estimating-function frame is empty");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("dual scale must be positive");
    if (!g.allFinite()) throw NumericalError("estimating-function frame has non-finite entries");
    if (detail::coordinate_hull_violation(g))
        throw ConvexHullError("zero is not inside the convex hull of the estimating-function rows");

    const double md = static_cast<double>(m);
    const detail::PseudoLog plog{settings.logstar_eps > 0.0 ? settings.logstar_eps : 1.0 / md};
    const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
    const double tol = settings.lambda_tol * gscale;
    // Average log term beyond this means weights below e^-40: the dual is running off to
    // infinity along a direction that separates the rows from zero.
    const double hull_bound = 40.0 * md;

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    if (start != nullptr && start->size() == d && start->allFinite()) mu = scale * *start;

    Eigen::VectorXd z(m);
    auto objective = [&](const Eigen::VectorXd& v) {
        z.noalias() = g * v;
        double f = 0.0;
        for (Eigen::Index t = 0; t < m; ++t) f += plog.value(1.0 + z(t));
        return f;
    };

    double f = objective(mu);
    if (f < 0.0 && start != nullptr) {  // a poor warm start; zero is always feasible
        mu.setZero();
        f = 0.0;
    }

    DualSolution out;
    Eigen::VectorXd grad(d);
    Eigen::MatrixXd hess(d, d);
    Eigen::VectorXd a(m), w(m);
    int it = 0;
    double gnorm = std::numeric_limits<double>::infinity();
    for (; it <= settings.max_inner; ++it) {
        z.noalias() = g * mu;
        for (Eigen::Index t = 0; t < m; ++t) {
            a(t) = plog.d1(1.0 + z(t));
            w(t) = std::sqrt(plog.neg_d2(1.0 + z(t)));
        }
        grad.noalias() = g.transpose() * a;
        gnorm = grad.norm() / md;
        // At a stationary point sum_t a_t = m exactly; a small gradient with sum_t a_t far
        // below m means every weight is collapsing while lambda runs off to infinity.
        if (gnorm <= tol && std::abs(a.sum() / md - 1.0) <= 1e-6) {
            out.converged = true;
            // One polishing Newton step: quadratic convergence takes the residual far below
            // tol, which keeps the implied weights summing to one at full precision.
            const Eigen::MatrixXd gw = w.asDiagonal() * g;
            hess.noalias() = gw.transpose() * gw;
            const Eigen::VectorXd polished = mu + detail::psd_solve(hess, grad);
            const double f_pol = objective(polished);
            if (f_pol >= f - 1e-12 * (1.0 + std::abs(f)) && (1.0 + z.array()).minCoeff() >= plog.eps) {
                mu = polished;
                f = f_pol;
                z.noalias() = g * mu;
                for (Eigen::Index t = 0; t < m; ++t) a(t) = plog.d1(1.0 + z(t));
                gnorm = (g.transpose() * a).norm() / md;
            }
            break;
        }
        if (it == settings.max_inner) break;
        const Eigen::MatrixXd gw = w.asDiagonal() * g;
        hess.noalias() = gw.transpose() * gw;
        const Eigen::VectorXd step = detail::psd_solve(hess, grad);
        const double decrement = grad.dot(step);
        if (!(decrement > 0.0) || !std::isfinite(decrement)) break;
        if (decrement <= 1e-13 * (1.0 + std::abs(f))) {
            // Inside the quadratic-convergence region the ascent is below the resolution
            // of f, so a line search cannot see it; take the full Newton step.
            mu += step;
            f = objective(mu);
            continue;
        }

        double t = 1.0;
        double f_new = objective(mu + step);
        while (!(f_new >= f + 1e-4 * t * decrement) && t > 1e-12) {
            t *= 0.5;
            f_new = objective(mu + t * step);
        }
        if (!(f_new >= f)) break;  // no ascent possible at working precision
        const bool stalled = (f_new - f) <= 1e-15 * (1.0 + std::abs(f));
        mu += t * step;
        f = f_new;
        if (f > hull_bound)
            throw ConvexHullError("dual objective is unbounded: zero is outside the convex hull");
        if (stalled) {
            ++it;
            z.noalias() = g * mu;
            for (Eigen::Index tt = 0; tt < m; ++tt) a(tt) = plog.d1(1.0 + z(tt));
            gnorm = (g.transpose() * a).norm() / md;
            out.converged = gnorm <= std::max(tol, 1e-8 * gscale) && std::abs(a.sum() / md - 1.0) <= 1e-6;
            break;
        }
    }

    z.noalias() = g * mu;
    const double zmin = (1.0 + z.array()).minCoeff();
    if (!(zmin >= plog.eps * (1.0 - 1e-9)))
        throw ConvexHullError("dual solution leaves the feasible region of the true logarithm");

    out.iterations = it;
    out.grad_norm = gnorm;
    out.lambda = mu / scale;
    out.objective = std::max(0.0, (1.0 + z.array()).log().sum());
    if (!out.converged)
        throw NonConvergence("dual Newton iteration did not converge", it, gnorm);
    return out;
}

/// A block of estimating rows: time indices `rows` of the series `x` (1-based), with
/// lags read from `x` as needed. Two segments may share one series.
struct Segment {
    std::span<const double> x;
    IndexRange rows;
};

/// Minimum number of rows a segment needs for a nondegenerate hull.
inline std::size_t min_segment_rows(std::size_t p) { return 2 * (p + 2); }

/// Result of one profile optimization (outer over parameters, inner over multipliers).
struct ELSolution {
    std::vector<Eigen::VectorXd> lambda;     ///< one multiplier vector per segment
    Eigen::VectorXd beta;                    ///< stacked free parameters
    std::vector<ARSpec> segment_params;      ///< (phi, sigma2) each segment was evaluated at
    double objective = 0.0;                  ///< 2 * sum of segment dual values
    std::vector<Eigen::VectorXd> weights;    ///< implied probabilities per segment
    bool converged = false;
    /// True when every 1 + lambda' g_t stays above the pseudo-log knot, i.e. the value is
    /// a genuine empirical likelihood rather than its quadratic continuation.
    bool interior = true;
    int iterations = 0;
    double grad_norm = 0.0;                  ///< outer gradient norm at the solution
};

namespace detail {

/// One segment inside a profile problem: which entries of the stacked parameter vector
/// are its phi_1..phi_p and sigma2.
struct ProfileTerm {
    Segment segment;
    double scale = 1.0;
    std::vector<Eigen::Index> param_index;  // size p+1, last is sigma2
};

struct ProfileEval {
    double value = 0.0;  // sum of segment dual values (half the Z statistic)
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    std::vector<DualSolution> duals;
};

class ProfileProblem {
public:
    ProfileProblem(std::vector<ProfileTerm> terms, Eigen::Index num_params, std::size_t p,
                   const SolverSettings& settings)
        : terms_(std::move(terms)), q_(num_params), p_(p), settings_(settings) {}

    Eigen::Index num_params() const noexcept { return q_; }
    const std::vector<ProfileTerm>& terms() const noexcept { return terms_; }

    ARSpec local_params(const ProfileTerm& term, const Eigen::VectorXd& beta) const {
        ARSpec s;
        s.phi.resize(p_);
        for (std::size_t r = 0; r < p_; ++r) s.phi[r] = beta(term.param_index[r]);
        s.sigma2 = beta(term.param_index[p_]);
        return s;
    }

    /// Dual value of each term at beta. Throws ConvexHullError when infeasible.
    ProfileEval evaluate(const Eigen::VectorXd& beta, bool derivatives,
                         const std::vector<DualSolution>* warm) const {
        ProfileEval out;
        out.grad = Eigen::VectorXd::Zero(q_);
        if (derivatives) out.hess = Eigen::MatrixXd::Zero(q_, q_);
        const auto d = static_cast<Eigen::Index>(p_ + 2);
        const auto ql = static_cast<Eigen::Index>(p_ + 1);
        Eigen::MatrixXd frame;
        for (std::size_t s = 0; s < terms_.size(); ++s) {
            const ProfileTerm& term = terms_[s];
            const ARSpec local = local_params(term, beta);
            if (!(local.sigma2 > 0.0))
                throw ConvexHullError("non-positive sigma2 places zero outside the hull");
            fill_frame(term.segment.x, local.phi, local.sigma2, term.segment.rows, frame);
            const Eigen::VectorXd* start =
                (warm != nullptr && s < warm->size()) ? &(*warm)[s].lambda : nullptr;
            DualSolution dual = solve_lambda(frame, term.scale, settings_, start);
            out.value += dual.objective;

            const Eigen::VectorXd mu = term.scale * dual.lambda;
            const double eps = settings_.logstar_eps > 0.0 ? settings_.logstar_eps
                                                           : 1.0 / static_cast<double>(frame.rows());
            const PseudoLog plog{eps};
            Eigen::VectorXd gl = Eigen::VectorXd::Zero(ql);
            Eigen::MatrixXd mmm, lmb, lbb;
            if (derivatives) {
                mmm = Eigen::MatrixXd::Zero(d, d);
                lmb = Eigen::MatrixXd::Zero(d, ql);
                lbb = Eigen::MatrixXd::Zero(ql, ql);
            }
            Eigen::MatrixXd jac(d, ql);
            Eigen::VectorXd lags(p_);
            Eigen::VectorXd v(ql);
            const std::span<const double> x = term.segment.x;
            for (std::size_t t = term.segment.rows.first; t <= term.segment.rows.last; ++t) {
                const auto i = static_cast<Eigen::Index>(t - term.segment.rows.first);
                const double e = residual_at(x, local.phi, t);
                for (std::size_t r = 0; r < p_; ++r) lags(static_cast<Eigen::Index>(r)) = x[t - 2 - r];
                const double zt = 1.0 + frame.row(i).dot(mu);
                const double at = plog.d1(zt);
                // v = G_t' mu, with G_t the Jacobian of g_t in (phi, sigma2).
                double c = 2.0 * mu(d - 1) * e;
                for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p_); ++j) c += mu(j + 1) * lags(j);
                v.head(static_cast<Eigen::Index>(p_)) = -c * lags;
                v(ql - 1) = -mu(d - 1);
                gl.noalias() += at * v;
                if (!derivatives) continue;
                const double bt = plog.neg_d2(zt);
                jac.setZero();
                for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p_); ++j)
                    jac.row(j + 1).head(static_cast<Eigen::Index>(p_)) = -lags(j) * lags.transpose();
                jac.row(d - 1).head(static_cast<Eigen::Index>(p_)) = -2.0 * e * lags.transpose();
                jac(d - 1, ql - 1) = -1.0;
                const auto gt = frame.row(i).transpose();
                mmm.noalias() += bt * gt * gt.transpose();
                lmb.noalias() += at * jac - bt * gt * v.transpose();
                lbb.topLeftCorner(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_)).noalias() +=
                    (at * 2.0 * mu(d - 1)) * lags * lags.transpose();
                lbb.noalias() -= bt * v * v.transpose();
            }
            for (Eigen::Index a = 0; a < ql; ++a) out.grad(term.param_index[static_cast<std::size_t>(a)]) += gl(a);
            if (derivatives) {
                const Eigen::MatrixXd h = lbb + lmb.transpose() * psd_solve(mmm, lmb);
                for (Eigen::Index a = 0; a < ql; ++a)
                    for (Eigen::Index b = 0; b < ql; ++b)
                        out.hess(term.param_index[static_cast<std::size_t>(a)],
                                 term.param_index[static_cast<std::size_t>(b)]) += h(a, b);
            }
            out.duals.push_back(std::move(dual));
        }
        if (!std::isfinite(out.value)) throw NumericalError("profile objective is not finite");
        return out;
    }

    /// Evaluates only the value, mapping infeasibility to +inf.
    double value_or_inf(const Eigen::VectorXd& beta, const std::vector<DualSolution>* warm,
                        ProfileEval* keep) const {
        try {
            ProfileEval e = evaluate(beta, false, warm);
            const double v = e.value;
            if (keep != nullptr) *keep = std::move(e);
            return v;
        } catch (const ConvexHullError&) {
            return std::numeric_limits<double>::infinity();
        } catch (const NonConvergence&) {
            return std::numeric_limits<double>::infinity();
        }
    }

    /// Damped Newton on the profile objective from `beta0`.
    ELSolution minimize(Eigen::VectorXd beta0) const {
        Eigen::VectorXd beta = std::move(beta0);
        ProfileEval cur = evaluate(beta, true, nullptr);
        int it = 0;
        bool converged = false;
        for (; it < settings_.max_outer; ++it) {
            // Levenberg-style shift keeps the step a descent direction on nonconvex patches.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cur.hess);
            const Eigen::VectorXd ev = es.eigenvalues();
            const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-12);
            Eigen::VectorXd inv(ev.size());
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                inv(i) = 1.0 / std::max(std::abs(ev(i)), 1e-10 * top);
            const Eigen::VectorXd step =
                -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * cur.grad);
            const double decrement = -cur.grad.dot(step);
            if (decrement <= 1e-15 * (1.0 + cur.value)) {
                converged = true;
                break;
            }
            double t = 1.0;
            ProfileEval trial;
            double fv = value_or_inf(beta + step, &cur.duals, &trial);
            while (!(fv <= cur.value - 1e-4 * t * decrement) && t > 1e-10) {
                t *= 0.5;
                fv = value_or_inf(beta + t * step, &cur.duals, &trial);
            }
            if (!(fv <= cur.value)) {
                // No decrease at working precision: accept the point if the gradient is tiny.
                converged = decrement <= 1e-10 * (1.0 + cur.value);
                break;
            }
            const double step_norm = t * step.norm();
            beta += t * step;
            cur = evaluate(beta, true, &trial.duals);
            if (step_norm <= settings_.beta_tol * (1.0 + beta.norm()) &&
                cur.grad.norm() <= 1e-6 * (1.0 + cur.value)) {
                converged = true;
                ++it;
                break;
            }
        }
        if (!converged)
            throw NonConvergence("outer profile optimization did not converge", it, cur.grad.norm());
        return to_solution(beta, cur, it);
    }

    ELSolution to_solution(const Eigen::VectorXd& beta, const ProfileEval& ev, int iterations) const {
        ELSolution sol;
        sol.beta = beta;
        sol.objective = 2.0 * ev.value;
        sol.converged = true;
        sol.iterations = iterations;
        sol.grad_norm = ev.grad.norm();
        Eigen::MatrixXd frame;
        for (std::size_t s = 0; s < terms_.size(); ++s) {
            const ARSpec local = local_params(terms_[s], beta);
            fill_frame(terms_[s].segment.x, local.phi, local.sigma2, terms_[s].segment.rows, frame);
            const double eps = settings_.logstar_eps > 0.0 ? settings_.logstar_eps
                                                           : 1.0 / static_cast<double>(frame.rows());
            const double zmin = (1.0 + terms_[s].scale * (frame * ev.duals[s].lambda).array()).minCoeff();
            if (!(zmin >= eps)) sol.interior = false;
            sol.lambda.push_back(ev.duals[s].lambda);
            sol.weights.push_back(ev.duals[s].weights(frame, terms_[s].scale));
            sol.segment_params.push_back(local);
        }
        return sol;
    }

    /// Minimize with deterministic jittered restarts on NonConvergence.
    ELSolution minimize_with_restarts(const Eigen::VectorXd& beta0) const {
        std::mt19937_64 rng(settings_.seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int attempt = 0;; ++attempt) {
            Eigen::VectorXd init = beta0;
            if (attempt > 0)
                for (Eigen::Index i = 0; i < init.size(); ++i)
                    init(i) += 1e-2 * unit(rng) * std::max(std::abs(init(i)), 1e-2);
            try {
                return minimize(init);
            } catch (const NumericalError&) {
                if (attempt >= settings_.restarts) throw;
            }
        }
    }

    /// Minimizes from each start and keeps the best optimum, preferring interior ones.
    /// The profile objective can have several basins, so one local search is not enough.
    /// Starts after the first `always` are only tried while no interior optimum has been
    /// found. Rethrows if nothing converged.
    ELSolution minimize_multistart(const std::vector<Eigen::VectorXd>& starts, std::size_t always) const {
        std::optional<ELSolution> best;
        std::exception_ptr last;
        const auto better = [](const ELSolution& a, const ELSolution& b) {
            if (a.interior != b.interior) return a.interior;
            return a.objective < b.objective;
        };
        for (std::size_t i = 0; i < starts.size(); ++i) {
            if (i >= always && best && best->interior) break;
            try {
                ELSolution sol = minimize_with_restarts(starts[i]);
                if (!best || better(sol, *best)) best = std::move(sol);
            } catch (const NumericalError&) {
                last = std::current_exception();
            }
        }
        if (best) return std::move(*best);
        std::rethrow_exception(last);
    }

    /// `base` with every phi entry multiplied by `factor` and every sigma2 entry reset to
    /// the mean squared residual of the segments that share it.
    Eigen::VectorXd shrunk_start(const Eigen::VectorXd& base, double factor) const {
        Eigen::VectorXd out = base;
        for (const auto& term : terms_)
            for (std::size_t r = 0; r < p_; ++r) out(term.param_index[r]) = factor * base(term.param_index[r]);
        Eigen::VectorXd ss = Eigen::VectorXd::Zero(q_), count = Eigen::VectorXd::Zero(q_);
        for (const auto& term : terms_) {
            const ARSpec local = local_params(term, out);
            for (std::size_t t = term.segment.rows.first; t <= term.segment.rows.last; ++t) {
                const double e = residual_at(term.segment.x, local.phi, t);
                ss(term.param_index[p_]) += e * e;
                count(term.param_index[p_]) += 1.0;
            }
        }
        for (Eigen::Index i = 0; i < q_; ++i)
            if (count(i) > 0.0 && ss(i) > 0.0) out(i) = ss(i) / count(i);
        return out;
    }

    /// Local search from the primary start and from the cold start with phi halved, then
    /// (only when neither reached an interior optimum) from the cold start itself and from
    /// phi = 0.
    ELSolution minimize_ladder(const Eigen::VectorXd& primary, const Eigen::VectorXd& cold) const {
        std::vector<Eigen::VectorXd> starts{primary, shrunk_start(cold, 0.5)};
        if (!primary.isApprox(cold)) starts.push_back(cold);
        starts.push_back(shrunk_start(cold, 0.0));
        return minimize_multistart(starts, 2);
    }

private:
    std::vector<ProfileTerm> terms_;
    Eigen::Index q_;
    std::size_t p_;
    SolverSettings settings_;
};

inline void check_segment(const Segment& s, std::size_t p) {
    check_lag_range(s.x.size(), p, s.rows);
    if (s.rows.size() < min_segment_rows(p))
        throw DegenerateSegment("segment [" + std::to_string(s.rows.first) + ", " +
                                std::to_string(s.rows.last) + "] has fewer than " +
                                std::to_string(min_segment_rows(p)) + " usable rows");
}

inline Eigen::VectorXd stack(const ARSpec& s) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(s.phi.size() + 1));
    for (std::size_t r = 0; r < s.phi.size(); ++r) b(static_cast<Eigen::Index>(r)) = s.phi[r];
    b(b.size() - 1) = s.sigma2;
    return b;
}

inline std::vector<Eigen::Index> iota_index(std::size_t count, Eigen::Index offset = 0) {
    std::vector<Eigen::Index> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = offset + static_cast<Eigen::Index>(i);
    return v;
}

/// OLS start pooled over both segments' rows.
inline ARSpec pooled_ols(const Segment& a, const Segment& b, std::size_t p) {
    const auto sa = fit_ols(a.x, p, a.rows);
    if (a.x.data() == b.x.data() && a.x.size() == b.x.size() && b.rows.first == a.rows.last + 1)
        return fit_ols(a.x, p, IndexRange{a.rows.first, b.rows.last});
    const auto sb = fit_ols(b.x, p, b.rows);
    const double wa = static_cast<double>(a.rows.size());
    const double wb = static_cast<double>(b.rows.size());
    ARSpec out;
    out.phi.resize(p);
    for (std::size_t r = 0; r < p; ++r) out.phi[r] = (wa * sa.phi[r] + wb * sb.phi[r]) / (wa + wb);
    out.sigma2 = (wa * sa.sigma2 + wb * sb.sigma2) / (wa + wb);
    return out;
}

}  // namespace detail

/// Dual value sup_lambda sum_t log(1 + scale * lambda' g_t) for one segment at fixed (phi, sigma2).
inline double segment_el(const Segment& segment, const ARSpec& beta, double scale,
                         const SolverSettings& settings) {
    detail::check_lag_range(segment.x.size(), beta.order(), segment.rows);
    if (segment.rows.size() < 2) throw DegenerateSegment("segment needs at least two rows");
    Eigen::MatrixXd frame;
    detail::fill_frame(segment.x, beta.phi, beta.sigma2, segment.rows, frame);
    return solve_lambda(frame, scale, settings).objective;
}

inline double segment_el(const TimeSeries& series, IndexRange range, const ARSpec& beta, double scale,
                         const SolverSettings& settings) {
    return segment_el(Segment{series.values(), range}, beta, scale, settings);
}

/// The two segments {p+1..k} and {k+1..n} of a series split at k (lags of the second
/// segment reach back across k).
inline std::pair<Segment, Segment> split_at(const TimeSeries& series, std::size_t k, std::size_t p) {
    const std::size_t n = series.size();
    if (k < 1 || k >= n) throw InputError("change index must satisfy 1 <= k < n");
    return {Segment{series.values(), IndexRange{p + 1, k}}, Segment{series.values(), IndexRange{k + 1, n}}};
}

/// Fits under the alternative: independent parameters per segment (or a shared sigma2
/// when settings.shared_sigma2). `theta` is k/n; segment scales are 1/theta and 1/(1-theta).
/// Z_{H1,k} is the returned objective.
inline ELSolution fit_h1(const Segment& a, const Segment& b, std::size_t p, double theta,
                         const SolverSettings& settings, const ELSolution* start = nullptr) {
    settings.validate();
    detail::check_segment(a, p);
    detail::check_segment(b, p);
    const double sa = 1.0 / theta, sb = 1.0 / (1.0 - theta);
    const auto q = static_cast<Eigen::Index>(p + 1);

    if (!settings.shared_sigma2) {
        ELSolution out;
        out.converged = true;
        out.beta.resize(2 * q);
        const Segment segs[2] = {a, b};
        const double scales[2] = {sa, sb};
        for (int s = 0; s < 2; ++s) {
            detail::ProfileProblem prob({detail::ProfileTerm{segs[s], scales[s], detail::iota_index(p + 1)}},
                                        q, p, settings);
            const Eigen::VectorXd cold = detail::stack(fit_ols(segs[s].x, p, segs[s].rows));
            const Eigen::VectorXd init = (start != nullptr && start->beta.size() == 2 * q)
                                             ? Eigen::VectorXd(start->beta.segment(s * q, q))
                                             : cold;
            ELSolution one = prob.minimize_ladder(init, cold);
            out.beta.segment(s * q, q) = one.beta;
            out.objective += one.objective;
            out.iterations += one.iterations;
            out.grad_norm = std::hypot(out.grad_norm, one.grad_norm);
            out.interior = out.interior && one.interior;
            out.lambda.push_back(one.lambda[0]);
            out.weights.push_back(one.weights[0]);
            out.segment_params.push_back(one.segment_params[0]);
        }
        return out;
    }

    // Stacked (phi_pre, phi_post, sigma2).
    std::vector<Eigen::Index> ia = detail::iota_index(p), ib = detail::iota_index(p, static_cast<Eigen::Index>(p));
    ia.push_back(static_cast<Eigen::Index>(2 * p));
    ib.push_back(static_cast<Eigen::Index>(2 * p));
    detail::ProfileProblem prob({detail::ProfileTerm{a, sa, ia}, detail::ProfileTerm{b, sb, ib}},
                                static_cast<Eigen::Index>(2 * p + 1), p, settings);
    Eigen::VectorXd cold(static_cast<Eigen::Index>(2 * p + 1));
    const ARSpec fa = fit_ols(a.x, p, a.rows), fb = fit_ols(b.x, p, b.rows);
    for (std::size_t r = 0; r < p; ++r) {
        cold(static_cast<Eigen::Index>(r)) = fa.phi[r];
        cold(static_cast<Eigen::Index>(p + r)) = fb.phi[r];
    }
    const double wa = static_cast<double>(a.rows.size()), wb = static_cast<double>(b.rows.size());
    cold(static_cast<Eigen::Index>(2 * p)) = (wa * fa.sigma2 + wb * fb.sigma2) / (wa + wb);
    const Eigen::VectorXd init = (start != nullptr && start->beta.size() == cold.size()) ? start->beta : cold;
    return prob.minimize_ladder(init, cold);
}

/// Fits under the null: one (phi, sigma2) shared by both segments. Z_{H0,k} is the objective.
inline ELSolution fit_h0(const Segment& a, const Segment& b, std::size_t p, double theta,
                         const SolverSettings& settings, const ELSolution* start = nullptr) {
    settings.validate();
    detail::check_segment(a, p);
    detail::check_segment(b, p);
    const auto q = static_cast<Eigen::Index>(p + 1);
    detail::ProfileProblem prob({detail::ProfileTerm{a, 1.0 / theta, detail::iota_index(p + 1)},
                                 detail::ProfileTerm{b, 1.0 / (1.0 - theta), detail::iota_index(p + 1)}},
                                q, p, settings);
    const Eigen::VectorXd cold = detail::stack(detail::pooled_ols(a, b, p));
    const Eigen::VectorXd init = (start != nullptr && start->beta.size() == q) ? start->beta : cold;
    return prob.minimize_ladder(init, cold);
}

/// Both fits at one change index plus the ratio statistic.
struct ChangeFit {
    ELSolution h0;
    ELSolution h1;
    double z_h0 = 0.0;
    double z_h1 = 0.0;
    double statistic = 0.0;  ///< -2 log Lambda_k after clamping
};

/// Tolerance below zero that is clamped to zero in -2 log Lambda_k.
inline constexpr double kClampTolerance = 1e-6;

/// Starting points carried over from a neighbouring change index.
struct WarmStart {
    const ELSolution* h0 = nullptr;
    const ELSolution* h1 = nullptr;
};

inline ChangeFit fit_change(const Segment& a, const Segment& b, std::size_t p, double theta,
                            const SolverSettings& settings, WarmStart warm = {}) {
    if (!(theta > 0.0 && theta < 1.0)) throw InputError("theta must lie in (0, 1)");
    ChangeFit fit;
    fit.h0 = fit_h0(a, b, p, theta, settings, warm.h0);
    fit.h1 = fit_h1(a, b, p, theta, settings, warm.h1);

    // The alternative nests the null. A local optimum of the alternative above the null
    // value means the alternative solver stopped early; restart it from the null point.
    if (fit.h1.objective > fit.h0.objective) {
        ELSolution seed;
        const auto q = static_cast<Eigen::Index>(p + 1);
        if (settings.shared_sigma2) {
            seed.beta.resize(2 * q - 1);
            seed.beta.head(q - 1) = fit.h0.beta.head(q - 1);
            seed.beta.segment(q - 1, q - 1) = fit.h0.beta.head(q - 1);
            seed.beta(2 * q - 2) = fit.h0.beta(q - 1);
        } else {
            seed.beta.resize(2 * q);
            seed.beta.head(q) = fit.h0.beta;
            seed.beta.tail(q) = fit.h0.beta;
        }
        ELSolution again = fit_h1(a, b, p, theta, settings, &seed);
        if (again.objective < fit.h1.objective) fit.h1 = std::move(again);
    }

    fit.z_h0 = fit.h0.objective;
    fit.z_h1 = fit.h1.objective;
    double stat = fit.z_h0 - fit.z_h1;
    if (stat < 0.0) {
        if (stat < -kClampTolerance)
            throw NumericalError("-2 log Lambda is negative (" + std::to_string(stat) +
                                 "): the null fit did not reach its minimum");
        stat = 0.0;
    }
    fit.statistic = stat;
    return fit;
}

inline ChangeFit fit_change(const TimeSeries& series, std::size_t k, std::size_t p,
                            const SolverSettings& settings, WarmStart warm = {}) {
    const auto [a, b] = split_at(series, k, p);
    return fit_change(a, b, p, static_cast<double>(k) / static_cast<double>(series.size()), settings, warm);
}

/// Z_{H1,k} and the per-segment estimates.
inline std::pair<double, std::vector<ARSpec>> z_h1(const TimeSeries& series, std::size_t k, std::size_t p,
                                                   const SolverSettings& settings) {
    const auto [a, b] = split_at(series, k, p);
    ELSolution s = fit_h1(a, b, p, static_cast<double>(k) / static_cast<double>(series.size()), settings);
    return {s.objective, s.segment_params};
}

/// Z_{H0,k} and the common estimate.
inline std::pair<double, ARSpec> z_h0(const TimeSeries& series, std::size_t k, std::size_t p,
                                      const SolverSettings& settings) {
    const auto [a, b] = split_at(series, k, p);
    ELSolution s = fit_h0(a, b, p, static_cast<double>(k) / static_cast<double>(series.size()), settings);
    return {s.objective, s.segment_params.front()};
}

inline double neg2_log_lambda(const TimeSeries& series, std::size_t k, std::size_t p,
                              const SolverSettings& settings) {
    return fit_change(series, k, p, settings).statistic;
}

/// Score vectors of the null Lagrangian
///   L(beta, lambda) = sum_i log(1 + lambda_1' g_i / theta) + sum_j log(1 + lambda_2' g_j / (1 - theta)),
/// each divided by n = total rows. q1 stacks d/d lambda_1 and d/d lambda_2; q2 is d/d beta.
struct Scores {
    Eigen::VectorXd q1;
    Eigen::VectorXd q2;
};

inline double null_lagrangian(const Segment& a, const Segment& b, double theta, const ARSpec& beta,
                              const Eigen::VectorXd& lambda1, const Eigen::VectorXd& lambda2) {
    Eigen::MatrixXd fa, fb;
    detail::fill_frame(a.x, beta.phi, beta.sigma2, a.rows, fa);
    detail::fill_frame(b.x, beta.phi, beta.sigma2, b.rows, fb);
    return (1.0 + (fa * lambda1).array() / theta).log().sum() +
           (1.0 + (fb * lambda2).array() / (1.0 - theta)).log().sum();
}

inline Scores null_scores(const Segment& a, const Segment& b, double theta, const ARSpec& beta,
                          const Eigen::VectorXd& lambda1, const Eigen::VectorXd& lambda2) {
    const std::size_t p = beta.order();
    const auto d = static_cast<Eigen::Index>(p + 2);
    const auto q = static_cast<Eigen::Index>(p + 1);
    Scores s;
    s.q1 = Eigen::VectorXd::Zero(2 * d);
    s.q2 = Eigen::VectorXd::Zero(q);
    double total = 0.0;
    const Segment segs[2] = {a, b};
    const double inv_theta[2] = {1.0 / theta, 1.0 / (1.0 - theta)};
    const Eigen::VectorXd* lams[2] = {&lambda1, &lambda2};
    Eigen::MatrixXd frame, jac(d, q);
    for (int k = 0; k < 2; ++k) {
        const Segment& seg = segs[k];
        detail::fill_frame(seg.x, beta.phi, beta.sigma2, seg.rows, frame);
        total += static_cast<double>(frame.rows());
        for (std::size_t t = seg.rows.first; t <= seg.rows.last; ++t) {
            const auto i = static_cast<Eigen::Index>(t - seg.rows.first);
            const double e = detail::residual_at(seg.x, beta.phi, t);
            jac.setZero();
            for (std::size_t j = 1; j <= p; ++j)
                for (std::size_t r = 1; r <= p; ++r)
                    jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r - 1)) = -seg.x[t - 1 - j] * seg.x[t - 1 - r];
            for (std::size_t r = 1; r <= p; ++r)
                jac(d - 1, static_cast<Eigen::Index>(r - 1)) = -2.0 * e * seg.x[t - 1 - r];
            jac(d - 1, q - 1) = -1.0;
            const double w = inv_theta[k] / (1.0 + inv_theta[k] * frame.row(i).dot(*lams[k]));
            s.q1.segment(k * d, d) += w * frame.row(i).transpose();
            s.q2 += w * jac.transpose() * *lams[k];
        }
    }
    s.q1 /= total;
    s.q2 /= total;
    return s;
}

}  // namespace elcp
