#include "cvbias/dgp.hpp"

#include "cvbias/errors.hpp"

#include <cmath>
#include <string>

namespace cvbias::dgp {

namespace {

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

ErrorSpec ErrorSpec::iid_gaussian(double sigma2) {
    ErrorSpec e;
    e.kind = Kind::IidGaussian;
    e.sigma2 = sigma2;
    return e;
}

ErrorSpec ErrorSpec::arch1(double omega, double alpha) {
    ErrorSpec e;
    e.kind = Kind::Arch1;
    e.arch_omega = omega;
    e.arch_alpha = alpha;
    e.sigma2 = omega / (1.0 - alpha);
    return e;
}

void ErrorSpec::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw ConfigError("errors.sigma2 must be finite and > 0");
    if (kind == Kind::Arch1) {
        if (!(arch_omega > 0.0)) throw ConfigError("errors.arch_omega must be > 0");
        if (!(arch_alpha >= 0.0 && arch_alpha < 1.0))
            throw ConfigError("errors.arch_alpha must lie in [0, 1)");
        const double implied = arch_omega / (1.0 - arch_alpha);
        if (std::abs(implied - sigma2) > 1e-12 * sigma2)
            throw ConfigError("errors.sigma2 must equal arch_omega / (1 - arch_alpha) = " +
                              std::to_string(implied));
    }
}

Eigen::MatrixXd VarP::companion() const {
    const int kp = k * p();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(kp, kp);
    for (int l = 0; l < p(); ++l) c.block(0, l * k, k, k) = coefficients[l];
    if (p() > 1) c.block(k, 0, k * (p() - 1), k * (p() - 1)).setIdentity();
    return c;
}

bool VarP::operator==(const VarP& o) const {
    if (k != o.k || target != o.target || coefficients.size() != o.coefficients.size())
        return false;
    for (std::size_t l = 0; l < coefficients.size(); ++l)
        if (!same_matrix(coefficients[l], o.coefficients[l])) return false;
    return true;
}

bool IidRegression::operator==(const IidRegression& o) const {
    return fixed_design == o.fixed_design && design_seed == o.design_seed &&
           same_matrix(beta, o.beta) && same_matrix(regressor_cov, o.regressor_cov);
}

int DgpSpec::lag_order() const {
    if (std::holds_alternative<Ar1>(mean_kind)) return 1;
    if (const auto* v = std::get_if<VarP>(&mean_kind)) return v->p();
    return 0;
}

int DgpSpec::regressor_count(int max_lag) const {
    if (std::holds_alternative<Ar1>(mean_kind)) return max_lag;
    if (const auto* v = std::get_if<VarP>(&mean_kind)) return v->k * max_lag;
    return static_cast<int>(std::get<IidRegression>(mean_kind).beta.size());
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

void DgpSpec::validate() const {
    errors.validate();
    if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
    if (!std::isfinite(initial_value)) throw ConfigError("initial_value must be finite");

    if (const auto* a = std::get_if<Ar1>(&mean_kind)) {
        if (!std::isfinite(a->rho) || std::abs(a->rho) >= 1.0)
            throw StationarityError("ar1 requires |rho| < 1, got rho = " + std::to_string(a->rho));
    } else if (const auto* v = std::get_if<VarP>(&mean_kind)) {
        if (v->k < 1) throw ConfigError("var_p.k must be >= 1");
        if (v->p() < 1) throw ConfigError("var_p needs at least one coefficient matrix");
        if (v->target < 0 || v->target >= v->k) throw ConfigError("var_p.target out of range");
        for (const auto& a : v->coefficients)
            if (a.rows() != v->k || a.cols() != v->k)
                throw ConfigError("var_p coefficient matrices must be k x k");
        const double radius = spectral_radius(v->companion());
        if (!(radius < 1.0))
            throw StationarityError("var_p companion spectral radius " + std::to_string(radius) +
                                    " is not < 1");
    } else {
        const auto& r = std::get<IidRegression>(mean_kind);
        const auto p = r.beta.size();
        if (p < 1) throw ConfigError("iid_regression.beta must be non-empty");
        if (r.regressor_cov.rows() != p || r.regressor_cov.cols() != p)
            throw ConfigError("iid_regression.regressor_cov must be p x p");
        if (!r.regressor_cov.isApprox(r.regressor_cov.transpose(), 1e-12))
            throw ConfigError("iid_regression.regressor_cov must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(r.regressor_cov);
        if (llt.info() != Eigen::Success)
            throw ConfigError("iid_regression.regressor_cov must be positive definite");
    }
}

Eigen::VectorXd sample_error_process(const ErrorSpec& spec, int n, rng::Engine& engine) {
    spec.validate();
    if (n < 0) throw ConfigError("error sample size must be >= 0");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    if (spec.zero_noise) return e;

    std::normal_distribution<double> z(0.0, 1.0);
    if (spec.kind == ErrorSpec::Kind::IidGaussian) {
        const double sd = std::sqrt(spec.sigma2);
        for (int i = 0; i < n; ++i) e[i] = sd * z(engine);
        return e;
    }
    // Start the variance recursion as if the previous squared error equalled sigma2.
    double prev_sq = spec.sigma2;
    for (int i = 0; i < n; ++i) {
        const double cond_var = spec.arch_omega + spec.arch_alpha * prev_sq;
        e[i] = std::sqrt(cond_var) * z(engine);
        prev_sq = e[i] * e[i];
    }
    return e;
}

Eigen::VectorXd sample_error_process(const ErrorSpec& spec, int n, std::uint64_t seed) {
    auto engine = rng::make_engine(seed, {static_cast<std::uint64_t>(rng::Stream::Errors)});
    return sample_error_process(spec, n, engine);
}

namespace {

// Univariate or VAR recursion over burn_in + max_lag + T steps; rows of the
// returned path are the last T steps.
SimulatedPath simulate_autoregressive(const DgpSpec& spec, const VarP& var, int T, int max_lag,
                                      std::uint64_t seed) {
    const int k = var.k;
    const int p = var.p();
    const int n = spec.burn_in + max_lag + T;

    Eigen::MatrixXd eps(n, k);
    for (int j = 0; j < k; ++j) {
        auto engine = rng::make_engine(
            seed, {static_cast<std::uint64_t>(rng::Stream::Errors), static_cast<std::uint64_t>(j)});
        eps.col(j) = sample_error_process(spec.errors, n, engine);
    }

    Eigen::MatrixXd y(n, k);
    Eigen::MatrixXd mu(n, k);
    for (int t = 0; t < n; ++t) {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(k);
        for (int l = 1; l <= p; ++l) {
            if (t - l >= 0) {
                m.noalias() += var.coefficients[l - 1] * y.row(t - l).transpose();
            } else {
                m.noalias() += var.coefficients[l - 1] * Eigen::VectorXd::Constant(k, spec.initial_value);
            }
        }
        mu.row(t) = m.transpose();
        for (int j = 0; j < k; ++j) y(t, j) = mu(t, j) + eps(t, j);
    }

    const int first = spec.burn_in + max_lag;
    SimulatedPath path;
    path.T = T;
    path.y = y.col(var.target).segment(first, T);
    path.mu_true = mu.col(var.target).segment(first, T);
    path.eps_true = eps.col(var.target).segment(first, T);
    if (k > 1) path.y_all = y.middleRows(first, T);
    path.x_full.resize(T, k * max_lag);
    for (int i = 0; i < T; ++i)
        for (int l = 1; l <= max_lag; ++l)
            for (int j = 0; j < k; ++j) path.x_full(i, (l - 1) * k + j) = y(first + i - l, j);
    return path;
}

SimulatedPath simulate_iid(const DgpSpec& spec, const IidRegression& reg, int T, std::uint64_t seed) {
    const auto p = reg.beta.size();
    Eigen::LLT<Eigen::MatrixXd> llt(reg.regressor_cov);
    const Eigen::MatrixXd chol = llt.matrixL();

    auto design_engine =
        reg.fixed_design
            ? rng::make_engine(reg.design_seed, {static_cast<std::uint64_t>(rng::Stream::FixedDesign),
                                                 static_cast<std::uint64_t>(T)})
            : rng::make_engine(seed, {static_cast<std::uint64_t>(rng::Stream::Regressors)});
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd std_normal(T, p);
    for (int i = 0; i < T; ++i)
        for (Eigen::Index j = 0; j < p; ++j) std_normal(i, j) = z(design_engine);

    SimulatedPath path;
    path.T = T;
    path.x_full = std_normal * chol.transpose();
    path.mu_true = path.x_full * reg.beta;
    path.eps_true = sample_error_process(spec.errors, T, seed);
    path.y = path.mu_true + path.eps_true;
    return path;
}

}  // namespace

SimulatedPath simulate(const DgpSpec& spec, int T, int max_lag, std::uint64_t seed) {
    spec.validate();
    if (max_lag < 0) throw ConfigError("max_lag must be >= 0");
    const int needed = max_lag + spec.lag_order() + 2;
    if (T < needed)
        throw SizeError("T = " + std::to_string(T) + " is too small; need T >= " +
                        std::to_string(needed));

    if (const auto* a = std::get_if<Ar1>(&spec.mean_kind)) {
        VarP var;
        var.k = 1;
        var.coefficients = {Eigen::MatrixXd::Constant(1, 1, a->rho)};
        return simulate_autoregressive(spec, var, T, max_lag, seed);
    }
    if (const auto* v = std::get_if<VarP>(&spec.mean_kind))
        return simulate_autoregressive(spec, *v, T, max_lag, seed);
    return simulate_iid(spec, std::get<IidRegression>(spec.mean_kind), T, seed);
}

}  // namespace cvbias::dgp
