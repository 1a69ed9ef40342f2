#include "cvbias/estimators.hpp"

#include "cvbias/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace cvbias::estimators {

namespace {

std::string where(std::string_view label, int index) {
    std::string s = label.empty() ? std::string("model") : "model '" + std::string(label) + "'";
    if (index >= 0) s += " leaving out observation " + std::to_string(index);
    return s;
}

void check_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw ConfigError("design and response lengths differ");
}

}  // namespace

void ModelSpec::validate(int x_cols) const {
    std::set<int> seen;
    for (int c : columns) {
        if (c < 0 || c >= x_cols)
            throw ConfigError("model '" + id + "': column " + std::to_string(c) +
                              " outside x_full with " + std::to_string(x_cols) + " columns");
        if (!seen.insert(c).second)
            throw ConfigError("model '" + id + "': column " + std::to_string(c) + " repeated");
    }
}

Eigen::MatrixXd ModelSpec::design(const Eigen::MatrixXd& x_full) const {
    Eigen::MatrixXd d(x_full.rows(), parameter_count());
    for (std::size_t j = 0; j < columns.size(); ++j) d.col(j) = x_full.col(columns[j]);
    if (intercept) d.col(d.cols() - 1).setOnes();
    return d;
}

ModelSpec ar_model(int p, std::string id) {
    ModelSpec m;
    m.id = id.empty() ? "ar" + std::to_string(p) : std::move(id);
    for (int l = 0; l < p; ++l) m.columns.push_back(l);
    return m;
}

FitResult solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                                 std::string_view label, int index) {
    FitResult fit;
    const auto p = gram.rows();
    if (p == 0) {
        fit.beta.resize(0);
        return fit;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(p - 1);
    if (!(lmax > 0.0) || !(lmin > kMinReciprocalCondition * lmax))
        throw SingularityError("singular Gram matrix for " + where(label, index) +
                               " (reciprocal condition " +
                               std::to_string(lmax > 0.0 ? std::max(lmin, 0.0) / lmax : 0.0) + ")");
    fit.gram_condition = lmax / lmin;
    fit.beta = gram.llt().solve(xty);
    if (!fit.beta.allFinite())
        throw SingularityError("non-finite coefficients for " + where(label, index));
    return fit;
}

OlsFit::OlsFit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::string_view label) {
    check_rows(x, y);
    const auto p = x.cols();
    if (x.rows() <= p)
        throw SingularityError("underdetermined fit for " + where(label, -1) + ": T = " +
                               std::to_string(x.rows()) + ", p = " + std::to_string(p));
    const Eigen::MatrixXd gram = x.transpose() * x;
    result_ = solve_normal_equations(gram, x.transpose() * y, label);
    gram_inverse_ = p == 0 ? Eigen::MatrixXd(0, 0)
                           : Eigen::MatrixXd(gram.llt().solve(Eigen::MatrixXd::Identity(p, p)));
    fitted_ = p == 0 ? Eigen::VectorXd::Zero(x.rows()) : Eigen::VectorXd(x * result_.beta);
    residuals_ = y - fitted_;
    leverage_ = p == 0 ? Eigen::VectorXd::Zero(x.rows())
                       : Eigen::VectorXd((x * gram_inverse_).cwiseProduct(x).rowwise().sum());
}

FitResult ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::string_view label) {
    return OlsFit(x, y, label).result();
}

FitResult loo_fit_refit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int i,
                        std::string_view label) {
    check_rows(x, y);
    const auto T = x.rows();
    const auto p = x.cols();
    if (i < 0 || i >= T) throw ConfigError("leave-out index out of range");
    if (T - 1 <= p)
        throw SingularityError("underdetermined fit for " + where(label, i) + ": " +
                               std::to_string(T - 1) + " rows for " + std::to_string(p) +
                               " parameters");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < T; ++j) {
        if (j == i) continue;
        gram.noalias() += x.row(j).transpose() * x.row(j);
        xty.noalias() += x.row(j).transpose() * y[j];
    }
    return solve_normal_equations(gram, xty, label, i);
}

FitResult loo_fit_downdate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int i,
                           const OlsFit& full, std::string_view label) {
    check_rows(x, y);
    if (i < 0 || i >= x.rows()) throw ConfigError("leave-out index out of range");
    FitResult fit;
    fit.gram_condition = full.result().gram_condition;
    if (x.cols() == 0) {
        fit.beta.resize(0);
        return fit;
    }
    const double h = full.leverage()[i];
    if (!(h < kMaxLeverage))
        throw LeverageError("leverage " + std::to_string(h) + " for " + where(label, i));
    const Eigen::VectorXd g = full.gram_inverse() * x.row(i).transpose();
    fit.beta = full.beta() - g * (full.residuals()[i] / (1.0 - h));
    return fit;
}

LooResult loo_mu(const Eigen::MatrixXd& x_full, const Eigen::VectorXd& y, const ModelSpec& model,
                 const LooOptions& options) {
    check_rows(x_full, y);
    model.validate(static_cast<int>(x_full.cols()));
    const auto T = static_cast<int>(y.size());
    const Eigen::MatrixXd x = model.design(x_full);
    if (T - 1 <= x.cols())
        throw SingularityError("model '" + model.id + "' has " + std::to_string(x.cols()) +
                               " parameters but only " + std::to_string(T - 1) +
                               " observations per leave-one-out fit");

    LooResult out;
    out.mu_tilde.resize(T);
    out.eps_tilde.resize(T);
    if (x.cols() == 0) {
        out.mu_tilde.setZero();
        out.eps_tilde = y;
        return out;
    }

    const OlsFit full(x, y, model.id);
    for (int i = 0; i < T; ++i) {
        FitResult fit;
        try {
            fit = loo_fit_downdate(x, y, i, full, model.id);
        } catch (const LeverageError&) {
            fit = loo_fit_refit(x, y, i, model.id);
        }
        if (options.crosscheck) {
            const FitResult refit = loo_fit_refit(x, y, i, model.id);
            const double tol = 1e-8 * (1.0 + refit.beta.cwiseAbs().maxCoeff());
            if ((fit.beta - refit.beta).cwiseAbs().maxCoeff() > tol)
                throw IdentityError("downdate and refit disagree for model '" + model.id +
                                    "' at observation " + std::to_string(i));
        }
        out.mu_tilde[i] = x.row(i).dot(fit.beta);
        out.eps_tilde[i] = y[i] - out.mu_tilde[i];
    }
    return out;
}

}  // namespace cvbias::estimators
