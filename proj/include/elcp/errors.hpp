#pragma once

#include <stdexcept>
#include <string>

namespace elcp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: bad lengths, orders, levels, non-stationary coefficients.
class InputError : public Error {
public:
    using Error::Error;
};

/// A time index range that reaches outside the series (or before the first lag).
class IndexError : public Error {
public:
    using Error::Error;
};

/// Non-finite intermediate values, or a statistic that is negative beyond tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Zero is not in the interior of the convex hull of the estimating-function rows.
class ConvexHullError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An iterative solver hit its iteration cap.
class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, int iterations, double grad_norm)
        : NumericalError(what), iterations_(iterations), grad_norm_(grad_norm) {}

    int iterations() const noexcept { return iterations_; }
    double grad_norm() const noexcept { return grad_norm_; }

private:
    int iterations_;
    double grad_norm_;
};

/// A segment is too short, or its lagged design matrix is rank-deficient.
class DegenerateSegment : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Too many failed change locations in a scan.
class ScanError : public Error {
public:
    using Error::Error;
};

/// The fitted null model cannot drive a residual bootstrap.
class BootstrapError : public Error {
public:
    BootstrapError(const std::string& what, double root_modulus)
        : Error(what), root_modulus_(root_modulus) {}

    /// Smallest modulus among the roots of the fitted AR polynomial.
    double root_modulus() const noexcept { return root_modulus_; }

private:
    double root_modulus_;
};

}  // namespace elcp
