#include "cvbias/dgp.hpp"
#include "cvbias/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace cvbias::dgp {
namespace {

DgpSpec ar1(double rho, double sigma2 = 1.0) {
    DgpSpec s;
    s.mean_kind = Ar1{rho};
    s.errors = ErrorSpec::iid_gaussian(sigma2);
    return s;
}

double mean(const Eigen::VectorXd& v) { return v.mean(); }

double variance(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

// Mean and standard error of the lag-k products e_t e_{t-k}, scaled to an
// autocorrelation by the sample variance.
struct Autocorr {
    double value;
    double se;
};

Autocorr autocorrelation(const Eigen::VectorXd& v, int lag) {
    const Eigen::Index n = v.size() - lag;
    const double m = v.mean();
    const double var = (v.array() - m).square().mean();
    Eigen::ArrayXd prod = (v.head(n).array() - m) * (v.tail(n).array() - m);
    const double pm = prod.mean();
    const double psd = std::sqrt((prod - pm).square().sum() / static_cast<double>(n - 1));
    return {pm / var, psd / std::sqrt(static_cast<double>(n)) / var};
}

TEST(Simulate, RhoZeroHasZeroConditionalMean) {
    const auto path = simulate(ar1(0.0), 100, 1, 11);
    ASSERT_EQ(path.T, 100);
    for (int i = 0; i < path.T; ++i) {
        EXPECT_EQ(path.mu_true[i], 0.0);
        EXPECT_EQ(path.y[i], path.eps_true[i]);
    }
}

TEST(Simulate, ZeroNoiseFromRestIsIdenticallyZero) {
    auto spec = ar1(0.9);
    spec.errors.zero_noise = true;
    const auto path = simulate(spec, 50, 3, 5);
    EXPECT_EQ(path.y.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(path.mu_true.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(path.x_full.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, StationaryVarianceMatchesClosedForm) {
    const auto path = simulate(ar1(0.9), 100000, 1, 2024);
    const double expected = 1.0 / (1.0 - 0.81);
    EXPECT_NEAR(variance(path.y), expected, 0.02 * expected);
}

TEST(Simulate, DecompositionStoredExactly) {
    auto spec = ar1(0.7);
    spec.errors = ErrorSpec::arch1(0.3, 0.4);
    const auto path = simulate(spec, 200, 2, 99);
    for (int i = 0; i < path.T; ++i) EXPECT_EQ(path.y[i], path.mu_true[i] + path.eps_true[i]);
}

TEST(Simulate, RegressorRowsHoldOnlyThePast) {
    const auto path = simulate(ar1(0.5), 60, 3, 7);
    ASSERT_EQ(path.x_full.cols(), 3);
    for (int i = 3; i < path.T; ++i)
        for (int l = 1; l <= 3; ++l) EXPECT_EQ(path.x_full(i, l - 1), path.y[i - l]);
    for (int i = 0; i < path.T; ++i) EXPECT_EQ(path.mu_true[i], 0.5 * path.x_full(i, 0));
}

TEST(Simulate, ReproducibleAndSeedSensitive) {
    auto spec = ar1(0.9);
    const auto a = simulate(spec, 80, 2, 123);
    const auto b = simulate(spec, 80, 2, 123);
    const auto c = simulate(spec, 80, 2, 124);
    EXPECT_TRUE(a.y == b.y);
    EXPECT_TRUE(a.x_full == b.x_full);
    EXPECT_TRUE(a.eps_true == b.eps_true);
    EXPECT_FALSE(a.y == c.y);
}

TEST(Simulate, RejectsNonstationaryAndShortSamples) {
    EXPECT_THROW(simulate(ar1(1.0), 50, 1, 1), StationarityError);
    EXPECT_THROW(simulate(ar1(-1.2), 50, 1, 1), StationarityError);
    // needs T >= max_lag + 1 + 2
    EXPECT_THROW(simulate(ar1(0.5), 6, 4, 1), SizeError);
    EXPECT_NO_THROW(simulate(ar1(0.5), 7, 4, 1));

    DgpSpec var;
    VarP v;
    v.k = 2;
    v.coefficients = {(Eigen::MatrixXd(2, 2) << 0.5, 0.6, 0.6, 0.5).finished()};
    var.mean_kind = v;
    EXPECT_THROW(simulate(var, 50, 1, 1), StationarityError);
}

TEST(Simulate, VarPathUsesTargetEquation) {
    DgpSpec spec;
    VarP v;
    v.k = 2;
    v.target = 1;
    v.coefficients = {(Eigen::MatrixXd(2, 2) << 0.5, 0.1, 0.2, 0.3).finished(),
                      (Eigen::MatrixXd(2, 2) << 0.1, 0.0, 0.0, 0.1).finished()};
    spec.mean_kind = v;
    spec.burn_in = 200;
    const auto path = simulate(spec, 40, 2, 3);
    ASSERT_EQ(path.x_full.cols(), 4);
    ASSERT_EQ(path.y_all.cols(), 2);
    for (int i = 2; i < path.T; ++i) {
        EXPECT_EQ(path.x_full(i, 0), path.y_all(i - 1, 0));
        EXPECT_EQ(path.x_full(i, 1), path.y_all(i - 1, 1));
        EXPECT_EQ(path.x_full(i, 2), path.y_all(i - 2, 0));
    }
    for (int i = 0; i < path.T; ++i) {
        const double mu = 0.2 * path.x_full(i, 0) + 0.3 * path.x_full(i, 1) + 0.1 * path.x_full(i, 3);
        EXPECT_NEAR(path.mu_true[i], mu, 1e-12);
        EXPECT_EQ(path.y[i], path.y_all(i, 1));
    }
}

TEST(Simulate, IidRegressionMeanIsLinearInRegressors) {
    DgpSpec spec;
    IidRegression r;
    r.beta = Eigen::Vector2d(1.0, -2.0);
    r.regressor_cov = (Eigen::MatrixXd(2, 2) << 1.0, 0.3, 0.3, 2.0).finished();
    spec.mean_kind = r;
    const auto path = simulate(spec, 30, 0, 8);
    EXPECT_LT((path.mu_true - path.x_full * r.beta).cwiseAbs().maxCoeff(), 1e-14);

    r.fixed_design = true;
    spec.mean_kind = r;
    const auto a = simulate(spec, 30, 0, 1);
    const auto b = simulate(spec, 30, 0, 2);
    EXPECT_TRUE(a.x_full == b.x_full);
    EXPECT_FALSE(a.eps_true == b.eps_true);
}

TEST(Validate, RejectsBadParameters) {
    DgpSpec spec = ar1(0.5);
    spec.errors.sigma2 = 0.0;
    EXPECT_THROW(spec.validate(), ConfigError);

    spec = ar1(0.5);
    spec.errors = ErrorSpec::arch1(0.5, 1.0);
    EXPECT_THROW(spec.validate(), ConfigError);

    spec.errors = ErrorSpec::arch1(0.5, 0.5);
    spec.errors.sigma2 = 2.0;  // inconsistent with omega / (1 - alpha) = 1
    EXPECT_THROW(spec.validate(), ConfigError);

    DgpSpec reg;
    IidRegression r;
    r.beta = Eigen::Vector2d(1.0, 1.0);
    r.regressor_cov = (Eigen::MatrixXd(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
    reg.mean_kind = r;
    EXPECT_THROW(reg.validate(), ConfigError);
}

TEST(ErrorProcess, Arch1MomentsMatchTheory) {
    const auto e = sample_error_process(ErrorSpec::arch1(0.5, 0.5), 1000000, 42);
    const double se_mean = std::sqrt(variance(e) / static_cast<double>(e.size()));
    EXPECT_LT(std::abs(mean(e)), 4.0 * se_mean);
    EXPECT_NEAR(variance(e), 1.0, 0.02);

    for (int lag = 1; lag <= 5; ++lag) {
        const auto ac = autocorrelation(e, lag);
        EXPECT_LT(std::abs(ac.value), 4.0 * ac.se) << "lag " << lag;
    }
    const Eigen::VectorXd sq = e.array().square();
    EXPECT_GT(autocorrelation(sq, 1).value, 0.1);
}

TEST(ErrorProcess, GaussianVariance) {
    const auto e = sample_error_process(ErrorSpec::iid_gaussian(4.0), 1000000, 43);
    EXPECT_NEAR(variance(e), 4.0, 0.08);
}

TEST(ErrorProcess, ZeroNoiseAndReproducible) {
    auto spec = ErrorSpec::arch1(0.2, 0.6);
    EXPECT_TRUE(sample_error_process(spec, 100, 1) == sample_error_process(spec, 100, 1));
    spec.zero_noise = true;
    EXPECT_EQ(sample_error_process(spec, 100, 1).cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace cvbias::dgp
