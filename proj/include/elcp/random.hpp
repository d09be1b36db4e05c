#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "elcp/errors.hpp"

namespace elcp {

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based sub-seed: derive_seed(master, a, b) = splitmix64(splitmix64(master ^ splitmix64(a)) + b).
/// Work items keyed by (a, b) get the same stream regardless of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept {
    return splitmix64(splitmix64(master ^ splitmix64(a)) + b);
}

using Rng = std::mt19937_64;

enum class NoiseKind { Gaussian, CenteredExponential, StandardizedChiSq4, ScaledT4 };

inline constexpr NoiseKind kAllNoiseKinds[] = {NoiseKind::Gaussian, NoiseKind::CenteredExponential,
                                               NoiseKind::StandardizedChiSq4, NoiseKind::ScaledT4};

inline std::string_view to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::CenteredExponential: return "exponential";
        case NoiseKind::StandardizedChiSq4: return "chisq4";
        case NoiseKind::ScaledT4: return "t4";
    }
    return "unknown";
}

inline std::optional<NoiseKind> parse_noise(std::string_view s) {
    if (s == "gaussian" || s == "normal") return NoiseKind::Gaussian;
    if (s == "exponential" || s == "exp") return NoiseKind::CenteredExponential;
    if (s == "chisq4" || s == "chisq") return NoiseKind::StandardizedChiSq4;
    if (s == "t4" || s == "t") return NoiseKind::ScaledT4;
    return std::nullopt;
}

/// Zero-mean, unit-variance innovation law.
class NoiseModel {
public:
    explicit NoiseModel(NoiseKind kind = NoiseKind::Gaussian) : kind_(kind) {}

    NoiseKind kind() const noexcept { return kind_; }

    double operator()(Rng& rng) {
        switch (kind_) {
            case NoiseKind::Gaussian: return normal_(rng);
            case NoiseKind::CenteredExponential: return exponential_(rng) - 1.0;
            case NoiseKind::StandardizedChiSq4: return (chisq_(rng) - 4.0) / (2.0 * std::sqrt(2.0));
            case NoiseKind::ScaledT4: return student_(rng) / std::sqrt(2.0);
        }
        return 0.0;
    }

private:
    NoiseKind kind_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
    std::chi_squared_distribution<double> chisq_{4.0};
    std::student_t_distribution<double> student_{4.0};
};

/// `count` i.i.d. draws; deterministic given `seed`.
inline std::vector<double> sample_noise(NoiseKind kind, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InputError("noise sample count must be >= 1");
    Rng rng(seed);
    NoiseModel noise(kind);
    std::vector<double> out(count);
    for (double& v : out) v = noise(rng);
    return out;
}

}  // namespace elcp
