#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "elcp/calibration.hpp"
#include "elcp/scan.hpp"
#include "elcp/simulate.hpp"
#include "oracles.hpp"

namespace elcp {
namespace {

TEST(DefaultTrim, TwiceFloorSqrt) {
    EXPECT_EQ(default_trim(100), std::make_pair(std::size_t{20}, std::size_t{20}));
    EXPECT_EQ(default_trim(150), std::make_pair(std::size_t{24}, std::size_t{24}));
    EXPECT_EQ(default_trim(587), std::make_pair(std::size_t{48}, std::size_t{48}));
    EXPECT_EQ(default_trim(25), std::make_pair(std::size_t{10}, std::size_t{10}));
    EXPECT_THROW(default_trim(24), InputError);
}

TEST(UOfN, ClosedForm) {
    EXPECT_DOUBLE_EQ(u_of_n(100), 21.0);
    EXPECT_DOUBLE_EQ(u_of_n(25), 4.75);
    EXPECT_NEAR(u_of_n(587), 318697.0 / 2304.0, 1e-12);
    EXPECT_THROW(u_of_n(4), InputError);
}

TEST(Normalize, ZeroStatisticIsMinusD) {
    EXPECT_NEAR(normalize(0.0, 100, 1), -1.708007238785, 1e-10);
    EXPECT_NEAR(normalize(0.0, 100, 1), testing_oracle::minus_d(21.0, 1), 1e-12);
    EXPECT_NEAR(normalize(0.0, 587, 2), testing_oracle::minus_d(318697.0 / 2304.0, 2), 1e-12);
}

TEST(Normalize, StrictlyIncreasing) {
    for (std::size_t n : {50u, 100u, 587u, 5000u})
        for (int r : {1, 2, 3}) EXPECT_LT(normalize(4.0, n, r), normalize(9.0, n, r));
    EXPECT_THROW(normalize(-1.0, 100, 1), InputError);
}

TEST(Normalize, SoybeanSizedSnapshot) {
    EXPECT_NEAR(normalize(16.07426, 587, 1), 4.309698744399, 1e-9);
}

TEST(Normalize, TooShortForCalibration) {
    // u(11) = 91/36 < e, so log u < 1 and log log log u is undefined; u(12) = 3 > e.
    EXPECT_THROW(normalize(1.0, 11, 1), InputError);
    EXPECT_NO_THROW(normalize(1.0, 12, 1));
}

TEST(GumbelQuantile, TableValues) {
    EXPECT_NEAR(gumbel_quantile(0.01), 4.600149, 1e-6);
    EXPECT_NEAR(gumbel_quantile(0.05), 2.970195, 1e-6);
    EXPECT_NEAR(gumbel_quantile(0.10), 2.250367, 1e-6);
    EXPECT_NEAR(gumbel_quantile(0.5), 0.366513, 1e-6);
    for (double a : {0.01, 0.05, 0.1, 0.5, 0.9})
        EXPECT_NEAR(gumbel_quantile(a), testing_oracle::gumbel_upper_quantile(a), 1e-10);
    EXPECT_THROW(gumbel_quantile(0.0), InputError);
    EXPECT_THROW(gumbel_quantile(1.0), InputError);
}

TEST(PValue, InverseOfQuantileAndTails) {
    for (double a : {0.01, 0.05, 0.10, 0.5, 0.9}) EXPECT_NEAR(p_value_asymptotic(gumbel_quantile(a)), a, 1e-10);
    EXPECT_NEAR(p_value_asymptotic(2.970195), 0.05, 1e-6);
    EXPECT_NEAR(p_value_asymptotic(0.0), 0.632121, 1e-6);
    EXPECT_LT(p_value_asymptotic(40.0), 1e-15);
    EXPECT_NEAR(p_value_asymptotic(-10.0), 1.0, 1e-15);
}

TEST(Calibration, RawThresholdIsEquivalentAndDecreasingInAlpha) {
    const auto c = CalibrationConstants::for_length(250, 1);
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {0.01, 0.05, 0.10, 0.2}) {
        const double t = gumbel_quantile(a);
        const double raw = c.raw_threshold(t);
        EXPECT_LT(raw, prev);
        prev = raw;
        EXPECT_NEAR(c.normalize(raw), t, 1e-10);
    }
}

class ScanTest : public ::testing::Test {
protected:
    static TimeSeries change_series() {
        return gen_ar_change(200, 100, {0.1}, {0.9}, NoiseKind::Gaussian, kDefaultBurnIn, 99);
    }
};

TEST_F(ScanTest, ProfileCoversTrimmedRange) {
    const TimeSeries x = gen_ar(120, {0.3}, NoiseKind::Gaussian, kDefaultBurnIn, 3);
    const ScanResult r = trimmed_scan(x, 1);
    EXPECT_EQ(r.trim, default_trim(120));
    EXPECT_EQ(r.profile.size() + r.failed_k.size(), 120 - 2 * r.trim.first + 1);
    EXPECT_EQ(r.profile.front().k, r.trim.first);
    double best = -1.0;
    for (const auto& pt : r.profile) {
        EXPECT_GE(pt.stat, 0.0);
        best = std::max(best, pt.stat);
    }
    EXPECT_DOUBLE_EQ(r.z_star, best);
    EXPECT_GE(r.k_hat, r.trim.first);
    EXPECT_LE(r.k_hat, 120 - r.trim.second);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    EXPECT_EQ(r.r, 1);
    EXPECT_EQ(r.reject, r.t_normalized > r.critical_value);
    const auto c = CalibrationConstants::for_length(120, 1);
    EXPECT_EQ(r.reject, r.z_star > c.raw_threshold(r.critical_value));
}

TEST_F(ScanTest, StrongChangeIsDetected) {
    const ScanResult r = trimmed_scan(change_series(), 1);
    EXPECT_TRUE(r.reject);
    EXPECT_GT(r.z_star, 20.0);
    EXPECT_NEAR(static_cast<double>(r.k_hat), 100.0, 15.0);
}

TEST_F(ScanTest, WarmStartMatchesColdStart) {
    const TimeSeries x = gen_ar_change(160, 70, {0.1}, {0.5}, NoiseKind::Gaussian, kDefaultBurnIn, 41);
    ScanOptions warm, cold;
    cold.warm_start = false;
    const ScanResult a = trimmed_scan(x, 1, warm);
    const ScanResult b = trimmed_scan(x, 1, cold);
    ASSERT_EQ(a.profile.size(), b.profile.size());
    for (std::size_t i = 0; i < a.profile.size(); i += 10) EXPECT_NEAR(a.profile[i].stat, b.profile[i].stat, 1e-6);
}

TEST_F(ScanTest, ParallelEqualsSequential) {
    const TimeSeries x = gen_ar_change(150, 60, {0.1}, {0.5}, NoiseKind::Gaussian, kDefaultBurnIn, 42);
    ScanOptions seq, par;
    par.jobs = 3;
    const ScanResult a = trimmed_scan(x, 1, seq);
    const ScanResult b = trimmed_scan(x, 1, par);
    ASSERT_EQ(a.profile.size(), b.profile.size());
    for (std::size_t i = 0; i < a.profile.size(); ++i) EXPECT_EQ(a.profile[i].stat, b.profile[i].stat);
    EXPECT_EQ(a.k_hat, b.k_hat);
}

TEST_F(ScanTest, CustomTrimAndR) {
    const TimeSeries x = gen_ar(100, {0.3}, NoiseKind::Gaussian, kDefaultBurnIn, 4);
    ScanOptions opt;
    opt.trim = std::make_pair(std::size_t{30}, std::size_t{40});
    opt.r = 2;
    const ScanResult r = trimmed_scan(x, 1, opt);
    EXPECT_EQ(r.profile.front().k, 30u);
    EXPECT_EQ(r.profile.back().k, 60u);
    EXPECT_EQ(r.r, 2);
    opt.trim = std::make_pair(std::size_t{50}, std::size_t{50});
    EXPECT_THROW(trimmed_scan(x, 1, opt), InputError);
}

TEST_F(ScanTest, InputErrors) {
    EXPECT_THROW(trimmed_scan(TimeSeries(std::vector<double>(20, 1.0)), 1), InputError);
    EXPECT_THROW(trimmed_scan(TimeSeries(std::vector<double>(100, 1.0)), 1), DegenerateSegment);
    EXPECT_THROW(trimmed_scan(gen_ar(100, {0.3}, NoiseKind::Gaussian, 10, 1), 0), InputError);
    ScanOptions bad;
    bad.alpha = 1.0;
    EXPECT_THROW(trimmed_scan(gen_ar(100, {0.3}, NoiseKind::Gaussian, 10, 1), 1, bad), InputError);
}

TEST_F(ScanTest, SeriesTooShortToScan) {
    // Below n = 12 the calibration is undefined, and the minimum segment lengths already
    // leave no admissible change index, so the scan refuses the input outright.
    const TimeSeries x = gen_ar(11, {0.3}, NoiseKind::Gaussian, 100, 5);
    ScanOptions opt;
    opt.trim = std::make_pair(std::size_t{4}, std::size_t{4});
    EXPECT_THROW(trimmed_scan(x, 1, opt), InputError);
}

TEST_F(ScanTest, BootstrapStrongChange) {
    // A sign flip keeps the pooled null fit close to white noise. (With a persistent null
    // fit the statistic has a heavy upper tail near the trimming boundaries, and even a
    // clear change no longer beats every replicate.)
    const TimeSeries x = gen_ar_change(200, 100, {0.5}, {-0.5}, NoiseKind::Gaussian, kDefaultBurnIn, 99);
    const BootstrapResult b = bootstrap_pvalue(x, 1, 199, 7);
    EXPECT_EQ(b.replicates + b.failed, 199u);
    EXPECT_DOUBLE_EQ(b.p_value, 1.0 / 200.0);
}

TEST_F(ScanTest, BootstrapDeterministicAndBounded) {
    const TimeSeries x = gen_ar(80, {0.3}, NoiseKind::Gaussian, kDefaultBurnIn, 6);
    const BootstrapResult a = bootstrap_pvalue(x, 1, 99, 123);
    const BootstrapResult b = bootstrap_pvalue(x, 1, 99, 123);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_GT(a.p_value, 0.0);
    EXPECT_LE(a.p_value, 1.0);
    ScanOptions par;
    par.jobs = 2;
    EXPECT_EQ(bootstrap_pvalue(x, 1, 99, 123, par).p_value, a.p_value);
    EXPECT_THROW(bootstrap_pvalue(x, 1, 50, 1), InputError);
}

TEST_F(ScanTest, BootstrapRejectsExplosiveFit) {
    std::vector<double> v(100);
    const auto eps = sample_noise(NoiseKind::Gaussian, 100, 8);
    v[0] = 1.0;
    for (std::size_t t = 1; t < v.size(); ++t) v[t] = 1.08 * v[t - 1] + eps[t];
    try {
        bootstrap_pvalue(TimeSeries(v), 1, 99, 1);
        FAIL() << "expected BootstrapError";
    } catch (const BootstrapError& e) {
        EXPECT_LT(e.root_modulus(), 1.0);
    }
}

}  // namespace
}  // namespace elcp
