#include "cvbias/cv.hpp"

#include "cvbias/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cvbias::cv {

using estimators::ModelSpec;

CvScheme CvScheme::loo() { return CvScheme{}; }

CvScheme CvScheme::h_block(std::optional<int> h) {
    CvScheme s;
    s.kind = Kind::HBlock;
    s.h = h;
    return s;
}

CvScheme CvScheme::k_fold(int k, bool contiguous) {
    CvScheme s;
    s.kind = Kind::KFold;
    s.k = k;
    s.contiguous = contiguous;
    return s;
}

CvScheme CvScheme::expanding_window(int min_train, int horizon) {
    CvScheme s;
    s.kind = Kind::ExpandingWindow;
    s.min_train = min_train;
    s.horizon = horizon;
    return s;
}

int CvScheme::default_h(int T) {
    return static_cast<int>(std::ceil(std::pow(static_cast<double>(T), 0.25) - 1e-12));
}

int CvScheme::block_half_width(int T) const {
    if (kind == Kind::Loo) return 0;
    if (kind == Kind::HBlock) return h ? *h : default_h(T);
    throw ConfigError("block half-width is only defined for loo and h_block");
}

void CvScheme::validate() const {
    switch (kind) {
        case Kind::Loo:
            return;
        case Kind::HBlock:
            if (h && *h < 0) throw ConfigError("h_block.h must be >= 0");
            return;
        case Kind::KFold:
            if (k < 2) throw ConfigError("k_fold.k must be >= 2");
            return;
        case Kind::ExpandingWindow:
            if (min_train < 0) throw ConfigError("expanding_window.min_train must be >= 0");
            if (horizon < 1) throw ConfigError("expanding_window.horizon must be >= 1");
            return;
    }
}

std::string CvScheme::label() const {
    switch (kind) {
        case Kind::Loo:
            return "loo";
        case Kind::HBlock:
            return "h_block(" + (h ? std::to_string(*h) : std::string("default")) + ")";
        case Kind::KFold:
            return "k_fold(" + std::to_string(k) + (contiguous ? ",contiguous)" : ",interleaved)");
        case Kind::ExpandingWindow:
            return "expanding_window(" + std::to_string(min_train) + "," + std::to_string(horizon) +
                   ")";
    }
    return "unknown";
}

namespace {

std::string context(const ModelSpec& model, const CvScheme& scheme) {
    return "model '" + model.id + "' under " + scheme.label();
}

CvResiduals blank(int T) {
    CvResiduals r;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.mu_tilde = Eigen::VectorXd::Constant(T, nan);
    r.eps_tilde = Eigen::VectorXd::Constant(T, nan);
    r.mask.assign(T, false);
    return r;
}

void set_prediction(CvResiduals& r, const Eigen::VectorXd& y, int i, double mu) {
    r.mu_tilde[i] = mu;
    r.eps_tilde[i] = y[i] - mu;
    r.mask[i] = true;
    ++r.evaluated;
}

// Fit on the rows flagged in `train` and return the coefficients.
Eigen::VectorXd fit_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<bool>& train, const std::string& label, int index) {
    const auto p = x.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    int count = 0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        if (!train[j]) continue;
        gram.noalias() += x.row(j).transpose() * x.row(j);
        xty.noalias() += x.row(j).transpose() * y[j];
        ++count;
    }
    if (count == 0)
        throw SingularityError("empty training set for " + label + " at index " +
                               std::to_string(index));
    if (count <= p)
        throw SingularityError("training set of " + std::to_string(count) + " rows for " +
                               std::to_string(p) + " parameters, " + label + " at index " +
                               std::to_string(index));
    return estimators::solve_normal_equations(gram, xty, label, index).beta;
}

CvResiduals loo_residuals(const dgp::SimulatedPath& path, const ModelSpec& model,
                          const CvScheme& scheme, const CvOptions& options) {
    estimators::LooResult loo;
    try {
        loo = estimators::loo_mu(path.x_full, path.y, model, {options.crosscheck});
    } catch (const SingularityError& e) {
        throw SingularityError(scheme.label() + ": " + e.what());
    } catch (const LeverageError& e) {
        throw LeverageError(scheme.label() + ": " + e.what());
    }
    CvResiduals r;
    r.mu_tilde = std::move(loo.mu_tilde);
    r.eps_tilde = std::move(loo.eps_tilde);
    r.mask.assign(path.T, true);
    r.evaluated = path.T;
    return r;
}

CvResiduals h_block_residuals(const dgp::SimulatedPath& path, const ModelSpec& model,
                              const CvScheme& scheme, int h) {
    const int T = path.T;
    const Eigen::MatrixXd x = model.design(path.x_full);
    const std::string label = context(model, scheme);
    CvResiduals r = blank(T);
    std::vector<bool> train(T);
    for (int i = 0; i < T; ++i) {
        for (int j = 0; j < T; ++j) train[j] = std::abs(j - i) > h;
        const Eigen::VectorXd beta = fit_rows(x, path.y, train, label, i);
        set_prediction(r, path.y, i, x.cols() == 0 ? 0.0 : x.row(i).dot(beta));
    }
    return r;
}

CvResiduals k_fold_residuals(const dgp::SimulatedPath& path, const ModelSpec& model,
                             const CvScheme& scheme) {
    const int T = path.T;
    if (scheme.k > T)
        throw ConfigError(scheme.label() + ": k exceeds sample size " + std::to_string(T));
    const Eigen::MatrixXd x = model.design(path.x_full);
    const std::string label = context(model, scheme);

    std::vector<int> fold(T);
    for (int i = 0; i < T; ++i)
        fold[i] = scheme.contiguous ? static_cast<int>((static_cast<long long>(i) * scheme.k) / T)
                                    : i % scheme.k;

    CvResiduals r = blank(T);
    std::vector<bool> train(T);
    for (int f = 0; f < scheme.k; ++f) {
        int first = -1;
        for (int j = 0; j < T; ++j) {
            train[j] = fold[j] != f;
            if (!train[j] && first < 0) first = j;
        }
        const Eigen::VectorXd beta = fit_rows(x, path.y, train, label, first);
        for (int i = 0; i < T; ++i)
            if (fold[i] == f) set_prediction(r, path.y, i, x.cols() == 0 ? 0.0 : x.row(i).dot(beta));
    }
    return r;
}

CvResiduals expanding_residuals(const dgp::SimulatedPath& path, const ModelSpec& model,
                                const CvScheme& scheme) {
    const int T = path.T;
    const Eigen::MatrixXd x = model.design(path.x_full);
    const auto p = x.cols();
    const std::string label = context(model, scheme);
    const int needed = std::max<int>(scheme.min_train, static_cast<int>(p) + 1);

    CvResiduals r = blank(T);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    int used = 0;  // rows 0 .. used-1 are in the running Gram
    for (int i = 0; i < T; ++i) {
        const int train_end = i - scheme.horizon;  // inclusive
        while (used <= train_end) {
            gram.noalias() += x.row(used).transpose() * x.row(used);
            xty.noalias() += x.row(used).transpose() * path.y[used];
            ++used;
        }
        if (train_end + 1 < needed) continue;
        const double mu =
            p == 0 ? 0.0 : x.row(i).dot(estimators::solve_normal_equations(gram, xty, label, i).beta);
        set_prediction(r, path.y, i, mu);
    }
    return r;
}

}  // namespace

CvResiduals cv_residuals(const dgp::SimulatedPath& path, const ModelSpec& model,
                         const CvScheme& scheme, const CvOptions& options) {
    scheme.validate();
    model.validate(static_cast<int>(path.x_full.cols()));
    switch (scheme.kind) {
        case CvScheme::Kind::Loo:
            return loo_residuals(path, model, scheme, options);
        case CvScheme::Kind::HBlock: {
            const int h = scheme.block_half_width(path.T);
            if (h == 0) return loo_residuals(path, model, scheme, options);
            return h_block_residuals(path, model, scheme, h);
        }
        case CvScheme::Kind::KFold:
            return k_fold_residuals(path, model, scheme);
        case CvScheme::Kind::ExpandingWindow:
            return expanding_residuals(path, model, scheme);
    }
    throw ConfigError("unknown scheme");
}

double cv_mse(const Eigen::VectorXd& residuals, const std::vector<bool>& mask) {
    if (static_cast<std::size_t>(residuals.size()) != mask.size())
        throw ConfigError("residual and mask lengths differ");
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        sum += residuals[i] * residuals[i];
        ++n;
    }
    if (n == 0) throw ConfigError("cv_mse over an empty mask");
    return sum / n;
}

double CvDecomposition::identity_residual() const {
    const double rhs = term_eps2 + term_mu_eps - term_muhat_eps + term_ase;
    return std::abs(cv_mse - rhs) / std::max(cv_mse, 1e-300);
}

CvDecomposition decompose(const dgp::SimulatedPath& path, const Eigen::VectorXd& mu_tilde,
                          const Eigen::VectorXd& eps_tilde, const std::vector<bool>& mask) {
    CvDecomposition d;
    d.T = path.T;
    double eps2 = 0.0, mu_eps = 0.0, muhat_eps = 0.0, ase_sum = 0.0, cv = 0.0;
    for (int i = 0; i < path.T; ++i) {
        if (!mask[i]) continue;
        const double mu = path.mu_true[i];
        const double eps = path.eps_true[i];
        const double diff = mu - mu_tilde[i];
        eps2 += eps * eps;
        mu_eps += mu * eps;
        muhat_eps += mu_tilde[i] * eps;
        ase_sum += diff * diff;
        cv += eps_tilde[i] * eps_tilde[i];
        ++d.evaluated;
    }
    if (d.evaluated == 0) throw ConfigError("decomposition over an empty mask");
    const double n = d.evaluated;
    d.term_eps2 = eps2 / n;
    d.term_mu_eps = 2.0 * mu_eps / n;
    d.term_muhat_eps = 2.0 * muhat_eps / n;
    d.term_ase = ase_sum / n;
    d.cv_mse = cv / n;
    if (!(d.identity_residual() < kIdentityTolerance))
        throw IdentityError("CV MSE decomposition identity violated: relative residual " +
                            std::to_string(d.identity_residual()));
    return d;
}

CvEvaluation evaluate(const dgp::SimulatedPath& path, const ModelSpec& model, const CvScheme& scheme,
                      const CvOptions& options) {
    CvEvaluation ev;
    ev.residuals = cv_residuals(path, model, scheme, options);
    ev.decomposition =
        decompose(path, ev.residuals.mu_tilde, ev.residuals.eps_tilde, ev.residuals.mask);
    return ev;
}

CvDecomposition decompose_cv_mse(const dgp::SimulatedPath& path, const ModelSpec& model,
                                 const CvScheme& scheme, const CvOptions& options) {
    return evaluate(path, model, scheme, options).decomposition;
}

Eigen::VectorXd full_sample_mu(const dgp::SimulatedPath& path, const ModelSpec& model) {
    model.validate(static_cast<int>(path.x_full.cols()));
    if (model.parameter_count() == 0) return Eigen::VectorXd::Zero(path.T);
    return estimators::OlsFit(model.design(path.x_full), path.y, model.id).fitted();
}

CvDecomposition decompose_full_sample(const dgp::SimulatedPath& path, const ModelSpec& model) {
    const Eigen::VectorXd mu_hat = full_sample_mu(path, model);
    const Eigen::VectorXd eps_hat = path.y - mu_hat;
    return decompose(path, mu_hat, eps_hat, std::vector<bool>(path.T, true));
}

double ase_full(const dgp::SimulatedPath& path, const ModelSpec& model) {
    return (path.mu_true - full_sample_mu(path, model)).squaredNorm() / path.T;
}

AseReport ase(const dgp::SimulatedPath& path, const ModelSpec& model, const CvScheme& scheme,
              const CvOptions& options) {
    AseReport r;
    r.ase_loo = evaluate(path, model, scheme, options).decomposition.term_ase;
    r.ase_full = ase_full(path, model);
    return r;
}

int argmin_with_tiebreak(const std::vector<double>& scores, const std::vector<int>& parameters,
                         const std::vector<bool>& excluded) {
    int best = -1;
    for (std::size_t m = 0; m < scores.size(); ++m) {
        if (excluded[m]) continue;
        if (best < 0 || scores[m] < scores[best] ||
            (scores[m] == scores[best] && parameters[m] < parameters[best]))
            best = static_cast<int>(m);
    }
    return best;
}

Selection select(const std::vector<ModelSpec>& models, const dgp::SimulatedPath& path,
                 const CvScheme& scheme, const CvOptions& options) {
    if (models.empty()) throw ConfigError("selection needs at least one candidate model");
    Selection s;
    std::vector<double> scores(models.size(), 0.0);
    std::vector<int> params(models.size(), 0);
    std::vector<bool> excluded(models.size(), false);
    for (std::size_t m = 0; m < models.size(); ++m) {
        SelectionRow row;
        row.id = models[m].id;
        row.parameters = models[m].parameter_count();
        try {
            const auto res = cv_residuals(path, models[m], scheme, options);
            row.cv_mse = cv_mse(res.eps_tilde, res.mask);
        } catch (const NumericalError& e) {
            row.excluded = true;
            row.error = e.what();
        }
        scores[m] = row.cv_mse;
        params[m] = row.parameters;
        excluded[m] = row.excluded;
        s.table.push_back(std::move(row));
    }
    s.selected = argmin_with_tiebreak(scores, params, excluded);
    if (s.selected < 0) throw NumericalError("every candidate failed to fit under " + scheme.label());
    s.selected_id = models[s.selected].id;
    return s;
}

}  // namespace cvbias::cv
