#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace cvbias::estimators {

/// Reciprocal condition estimate of the Gram matrix below which a fit is refused.
inline constexpr double kMinReciprocalCondition = 1e-12;

/// Observations with leverage at or above this are treated as self-determined.
inline constexpr double kMaxLeverage = 1.0 - 1e-10;

/**
 * A candidate linear model: selected columns of x_full, optionally with an
 * appended constant column. A model with no columns and no intercept is the
 * null model (predicts zero everywhere).
 */
struct ModelSpec {
    std::string id;
    std::vector<int> columns;
    bool intercept = false;

    int parameter_count() const { return static_cast<int>(columns.size()) + (intercept ? 1 : 0); }

    /// Throws ConfigError if columns repeat or fall outside [0, x_cols).
    void validate(int x_cols) const;

    /// Design matrix: the selected columns in order, then the constant if any.
    Eigen::MatrixXd design(const Eigen::MatrixXd& x_full) const;

    bool operator==(const ModelSpec&) const = default;
};

/// AR(p) candidate on the first p lag columns, no intercept.
ModelSpec ar_model(int p, std::string id = {});

struct FitResult {
    Eigen::VectorXd beta;
    /// lambda_max / lambda_min of the Gram matrix (1 for the empty design).
    double gram_condition = 1.0;
};

/// OLS solution of the normal equations gram * beta = xty.
///
/// `label` and `index` only feed the diagnostic of a SingularityError
/// (index < 0 means "full sample").
FitResult solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                                 std::string_view label = {}, int index = -1);

/// Full-sample OLS fit retaining what the LOO downdate needs.
class OlsFit {
public:
    OlsFit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::string_view label = {});

    const FitResult& result() const { return result_; }
    const Eigen::VectorXd& beta() const { return result_.beta; }
    const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }
    const Eigen::VectorXd& fitted() const { return fitted_; }
    const Eigen::VectorXd& residuals() const { return residuals_; }
    /// h_i = x_i (X'X)^{-1} x_i'
    const Eigen::VectorXd& leverage() const { return leverage_; }

private:
    FitResult result_;
    Eigen::MatrixXd gram_inverse_;
    Eigen::VectorXd fitted_;
    Eigen::VectorXd residuals_;
    Eigen::VectorXd leverage_;
};

FitResult ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::string_view label = {});

/// OLS on every row except `i`, by explicit refit.
FitResult loo_fit_refit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int i,
                        std::string_view label = {});

/// OLS on every row except `i`, by rank-one downdate of `full`. O(p^2).
FitResult loo_fit_downdate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int i,
                           const OlsFit& full, std::string_view label = {});

struct LooOptions {
    /// Recompute every observation by refit and require agreement with the downdate.
    bool crosscheck = false;
};

struct LooResult {
    Eigen::VectorXd mu_tilde;
    Eigen::VectorXd eps_tilde;
};

/// LOO predictions mu~_{-i} = x_i beta~_{-i} and residuals y_i - mu~_{-i} for every i.
LooResult loo_mu(const Eigen::MatrixXd& x_full, const Eigen::VectorXd& y, const ModelSpec& model,
                 const LooOptions& options = {});

}  // namespace cvbias::estimators
