#pragma once

#include "cvbias/dgp.hpp"
#include "cvbias/estimators.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace cvbias::cv {

/**
 * Cross-validation scheme.
 *
 * - loo: train on every j != i.
 * - h_block: train on every j with |j - i| > h. h_block(0) is loo. When h is
 *   unset the block half-width defaults to ceil(T^(1/4)).
 * - k_fold: k folds, either contiguous runs or interleaved (i mod k).
 * - expanding_window: train on 0 .. i - horizon; indices with fewer than
 *   max(min_train, p + 1) training rows are masked out.
 */
struct CvScheme {
    enum class Kind { Loo, HBlock, KFold, ExpandingWindow };

    Kind kind = Kind::Loo;
    std::optional<int> h;
    int k = 2;
    bool contiguous = true;
    int min_train = 0;
    int horizon = 1;

    static CvScheme loo();
    static CvScheme h_block(std::optional<int> h = std::nullopt);
    static CvScheme k_fold(int k, bool contiguous = true);
    static CvScheme expanding_window(int min_train, int horizon = 1);

    static int default_h(int T);
    /// Block half-width in effect for a sample of length T (0 for loo).
    int block_half_width(int T) const;

    void validate() const;
    /// Stable label used in reports, e.g. "loo", "h_block(3)", "h_block(default)".
    std::string label() const;

    bool operator==(const CvScheme&) const = default;
};

struct CvOptions {
    /// Forwarded to the LOO downdate path.
    bool crosscheck = false;
};

/// Held-out predictions and residuals aligned to path indices.
struct CvResiduals {
    Eigen::VectorXd mu_tilde;   // NaN where not evaluated
    Eigen::VectorXd eps_tilde;  // NaN where not evaluated
    std::vector<bool> mask;     // true where evaluated
    int evaluated = 0;
};

CvResiduals cv_residuals(const dgp::SimulatedPath& path, const estimators::ModelSpec& model,
                         const CvScheme& scheme, const CvOptions& options = {});

/// Mean squared residual over the evaluated indices.
double cv_mse(const Eigen::VectorXd& residuals, const std::vector<bool>& mask);

/**
 * The averaged four-term identity
 *   cv_mse = term_eps2 + term_mu_eps - term_muhat_eps + term_ase
 * with every term computed from the stored true mu and eps. Averages run over
 * the `evaluated` indices.
 */
struct CvDecomposition {
    double term_eps2 = 0.0;       // (1/n) sum eps^2
    double term_mu_eps = 0.0;     // (2/n) sum mu eps
    double term_muhat_eps = 0.0;  // (2/n) sum mu~ eps
    double term_ase = 0.0;        // (1/n) sum (mu - mu~)^2
    double cv_mse = 0.0;          // (1/n) sum eps~^2
    int evaluated = 0;
    int T = 0;

    double identity_residual() const;
};

inline constexpr double kIdentityTolerance = 1e-10;

/// Residuals plus their decomposition, so callers need not refit.
struct CvEvaluation {
    CvResiduals residuals;
    CvDecomposition decomposition;
};

/// Throws IdentityError when the identity fails to 1e-10 relative.
CvDecomposition decompose(const dgp::SimulatedPath& path, const Eigen::VectorXd& mu_tilde,
                          const Eigen::VectorXd& eps_tilde, const std::vector<bool>& mask);

CvEvaluation evaluate(const dgp::SimulatedPath& path, const estimators::ModelSpec& model,
                      const CvScheme& scheme, const CvOptions& options = {});

CvDecomposition decompose_cv_mse(const dgp::SimulatedPath& path, const estimators::ModelSpec& model,
                                 const CvScheme& scheme, const CvOptions& options = {});

/// Same identity with the full-sample fit mu^_i in place of mu~_{-i}.
CvDecomposition decompose_full_sample(const dgp::SimulatedPath& path,
                                      const estimators::ModelSpec& model);

struct AseReport {
    double ase_loo = 0.0;   // (1/n) sum (mu - mu~)^2 under the scheme
    double ase_full = 0.0;  // (1/T) sum (mu - mu^)^2
};

/// Full-sample fitted means mu^_i (zeros for the null model).
Eigen::VectorXd full_sample_mu(const dgp::SimulatedPath& path, const estimators::ModelSpec& model);
double ase_full(const dgp::SimulatedPath& path, const estimators::ModelSpec& model);

AseReport ase(const dgp::SimulatedPath& path, const estimators::ModelSpec& model,
              const CvScheme& scheme, const CvOptions& options = {});

struct SelectionRow {
    std::string id;
    int parameters = 0;
    double cv_mse = 0.0;
    bool excluded = false;
    std::string error;
};

struct Selection {
    int selected = -1;  // index into the candidate list
    std::string selected_id;
    std::vector<SelectionRow> table;
};

/**
 * Argmin of `scores` over non-excluded entries. Ties go to fewer parameters,
 * then to the earlier position. Returns -1 if everything is excluded.
 */
int argmin_with_tiebreak(const std::vector<double>& scores, const std::vector<int>& parameters,
                         const std::vector<bool>& excluded);

/// Candidates that fail to fit are excluded and flagged; throws NumericalError if none fit.
Selection select(const std::vector<estimators::ModelSpec>& models, const dgp::SimulatedPath& path,
                 const CvScheme& scheme, const CvOptions& options = {});

}  // namespace cvbias::cv
