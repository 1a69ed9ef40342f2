#include "cvbias/errors.hpp"
#include "cvbias/estimators.hpp"

#include <gtest/gtest.h>

#include <random>

namespace cvbias::estimators {
namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = z(rng);
    return m;
}

// Inverse of a 3x3 matrix by cofactors; independent of any Eigen solver.
Eigen::Matrix3d cofactor_inverse(const Eigen::Matrix3d& a) {
    Eigen::Matrix3d c;
    c(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    c(0, 1) = -(a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0));
    c(0, 2) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
    c(1, 0) = -(a(0, 1) * a(2, 2) - a(0, 2) * a(2, 1));
    c(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
    c(1, 2) = -(a(0, 0) * a(2, 1) - a(0, 1) * a(2, 0));
    c(2, 0) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
    c(2, 1) = -(a(0, 0) * a(1, 2) - a(0, 2) * a(1, 0));
    c(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double det = a(0, 0) * c(0, 0) + a(0, 1) * c(0, 1) + a(0, 2) * c(0, 2);
    return c.transpose() / det;
}

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& m, int i) {
    Eigen::MatrixXd out(m.rows() - 1, m.cols());
    out << m.topRows(i), m.bottomRows(m.rows() - i - 1);
    return out;
}

Eigen::VectorXd drop_row(const Eigen::VectorXd& v, int i) {
    Eigen::VectorXd out(v.size() - 1);
    out << v.head(i), v.tail(v.size() - i - 1);
    return out;
}

TEST(OlsFit, InterceptOnlyIsTheMean) {
    const Eigen::VectorXd y = (Eigen::VectorXd(5) << 1.0, 4.0, -2.0, 7.5, 0.25).finished();
    const auto fit = ols_fit(Eigen::MatrixXd::Ones(5, 1), y);
    EXPECT_NEAR(fit.beta[0], y.mean(), 1e-14);
    EXPECT_DOUBLE_EQ(fit.gram_condition, 1.0);
}

TEST(OlsFit, ExactInterpolationHasZeroResiduals) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = random_matrix(30, 4, rng);
    const Eigen::VectorXd y = x * Eigen::Vector4d(1.0, -0.5, 2.0, 0.0);
    const OlsFit fit(x, y);
    EXPECT_LE(fit.residuals().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(OlsFit, MatchesCofactorNormalEquations) {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd x = random_matrix(50, 3, rng);
    const Eigen::VectorXd y = random_matrix(50, 1, rng);
    const Eigen::Matrix3d gram = x.transpose() * x;
    const Eigen::Vector3d oracle = cofactor_inverse(gram) * (x.transpose() * y);
    const auto fit = ols_fit(x, y);
    EXPECT_LE((fit.beta - oracle).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OlsFit, SingularGramNamesTheModel) {
    Eigen::MatrixXd x(10, 2);
    x.col(0).setLinSpaced(10, 1.0, 10.0);
    x.col(1) = 2.0 * x.col(0);
    try {
        ols_fit(x, Eigen::VectorXd::Ones(10), "collinear");
        FAIL() << "expected SingularityError";
    } catch (const SingularityError& e) {
        EXPECT_NE(std::string(e.what()).find("collinear"), std::string::npos);
    }
}

TEST(LooRefit, DuplicateRowEqualsFitWithoutOneCopy) {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd x = random_matrix(12, 2, rng);
    Eigen::VectorXd y = random_matrix(12, 1, rng);
    x.row(7) = x.row(3);
    y[7] = y[3];
    const auto loo = loo_fit_refit(x, y, 3);
    const auto reduced = ols_fit(drop_row(x, 3), drop_row(y, 3));
    EXPECT_LE((loo.beta - reduced.beta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LooRefit, UnderdeterminedAfterDeletion) {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd x = random_matrix(3, 2, rng);
    EXPECT_THROW(loo_fit_refit(x, Eigen::VectorXd::Ones(3), 0), SingularityError);
}

TEST(LooDowndate, MatchesRefitOnRandomSystem) {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd x = random_matrix(40, 2, rng);
    const Eigen::VectorXd y = random_matrix(40, 1, rng);
    const OlsFit full(x, y);
    for (int i = 0; i < 40; ++i) {
        const auto a = loo_fit_downdate(x, y, i, full);
        const auto b = loo_fit_refit(x, y, i);
        EXPECT_LE((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-8) << "i = " << i;
    }
}

TEST(LooDowndate, HandComputedInterceptOnly) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
    const Eigen::VectorXd y = Eigen::Vector3d(1.0, 2.0, 3.0);
    const OlsFit full(x, y);
    const auto fit = loo_fit_downdate(x, y, 0, full);
    EXPECT_NEAR(fit.beta[0], 2.5, 1e-14);
    EXPECT_NEAR(y[0] - fit.beta[0], -1.5, 1e-14);
}

TEST(LooDowndate, PerfectFitGivesZeroResiduals) {
    ModelSpec m;
    m.id = "const";
    m.columns = {0};
    const auto loo = loo_mu(Eigen::MatrixXd::Ones(8, 1), Eigen::VectorXd::Constant(8, 3.25), m);
    EXPECT_LE(loo.eps_tilde.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LooDowndate, LeverageOneIsRejected) {
    // Row 0 is the only row touching column 1, so it fully determines its own fit.
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 2);
    x.col(0).setOnes();
    x(0, 1) = 1.0;
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
    const OlsFit full(x, y);
    EXPECT_THROW(loo_fit_downdate(x, y, 0, full), LeverageError);

    // loo_mu falls back to a refit, which is singular without row 0.
    ModelSpec m;
    m.id = "spike";
    m.columns = {0, 1};
    EXPECT_THROW(loo_mu(x, y, m), SingularityError);
}

TEST(LooMu, NullModelPredictsZero) {
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd x = random_matrix(10, 2, rng);
    const Eigen::VectorXd y = random_matrix(10, 1, rng);
    const auto loo = loo_mu(x, y, ModelSpec{"null", {}, false});
    EXPECT_EQ(loo.mu_tilde.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(loo.eps_tilde == y);
}

TEST(ModelSpecTest, ValidatesColumnsAndBuildsDesign) {
    EXPECT_THROW((ModelSpec{"a", {0, 0}, false}.validate(3)), ConfigError);
    EXPECT_THROW((ModelSpec{"a", {3}, false}.validate(3)), ConfigError);
    Eigen::MatrixXd x(2, 3);
    x << 1, 2, 3, 4, 5, 6;
    const auto d = ModelSpec{"a", {2, 0}, true}.design(x);
    EXPECT_EQ(d.cols(), 3);
    EXPECT_EQ(d(1, 0), 6.0);
    EXPECT_EQ(d(1, 1), 4.0);
    EXPECT_EQ(d(1, 2), 1.0);
    EXPECT_EQ(ar_model(3).columns, (std::vector<int>{0, 1, 2}));
}

// Random designs, including near-duplicate rows and an intercept column.
TEST(Property, DowndateRefitLeverageAndOrthogonality) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> rows(8, 60), cols(1, 5);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 200; ++trial) {
        const int T = rows(rng);
        const int p = std::min(cols(rng), T - 3);
        Eigen::MatrixXd x = random_matrix(T, p, rng);
        if (trial % 3 == 0) x.col(p - 1).setOnes();
        if (trial % 2 == 0 && T > 4) x.row(1) = x.row(0) + 1e-6 * random_matrix(1, p, rng);
        Eigen::VectorXd y = random_matrix(T, 1, rng) + x * Eigen::VectorXd::Constant(p, z(rng));

        const OlsFit full(x, y);
        const double norm_y = y.norm();
        const double norm_x = x.norm();
        EXPECT_LE((x.transpose() * full.residuals()).cwiseAbs().maxCoeff(), 1e-8 * norm_y * norm_x);
        for (int i = 0; i < T; ++i) {
            const auto a = loo_fit_downdate(x, y, i, full);
            const auto b = loo_fit_refit(x, y, i);
            EXPECT_LE((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + b.beta.cwiseAbs().maxCoeff()));
            const double eps_tilde = y[i] - x.row(i).dot(b.beta);
            EXPECT_NEAR(eps_tilde * (1.0 - full.leverage()[i]), full.residuals()[i], 1e-8);
        }
        ModelSpec m;
        m.id = "all";
        for (int c = 0; c < p; ++c) m.columns.push_back(c);
        EXPECT_NO_THROW(loo_mu(x, y, m, {true}));
    }
}

}  // namespace
}  // namespace cvbias::estimators
