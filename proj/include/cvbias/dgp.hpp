#pragma once

#include "cvbias/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

namespace cvbias::dgp {

/**
 * Error process driving a DGP.
 *
 * Both kinds are martingale difference sequences with unconditional variance
 * `sigma2`. `arch1` adds dependence through the squares:
 * e_i = s_i z_i, s_i^2 = omega + alpha e_{i-1}^2, with omega / (1 - alpha) = sigma2.
 */
struct ErrorSpec {
    enum class Kind { IidGaussian, Arch1 };

    Kind kind = Kind::IidGaussian;
    double sigma2 = 1.0;
    double arch_omega = 0.0;
    double arch_alpha = 0.0;
    /// Test-only degenerate limit: every error is exactly zero.
    bool zero_noise = false;

    static ErrorSpec iid_gaussian(double sigma2);
    /// sigma2 is derived as omega / (1 - alpha).
    static ErrorSpec arch1(double omega, double alpha);

    void validate() const;

    bool operator==(const ErrorSpec&) const = default;
};

struct Ar1 {
    double rho = 0.0;
    bool operator==(const Ar1&) const = default;
};

/// k-dimensional VAR(p). Only the equation `target` is exposed as y.
struct VarP {
    int k = 1;
    std::vector<Eigen::MatrixXd> coefficients;  // A_1 ... A_p, each k x k
    int target = 0;

    int p() const { return static_cast<int>(coefficients.size()); }
    Eigen::MatrixXd companion() const;
    bool operator==(const VarP& o) const;
};

/// y_i = x_i beta + e_i with x_i ~ N(0, regressor_cov) independent of the errors.
struct IidRegression {
    Eigen::VectorXd beta;
    Eigen::MatrixXd regressor_cov;
    /// Draw the design once (from `design_seed`) and hold it fixed across replications.
    bool fixed_design = false;
    std::uint64_t design_seed = 0;

    bool operator==(const IidRegression& o) const;
};

using MeanKind = std::variant<Ar1, VarP, IidRegression>;

struct DgpSpec {
    MeanKind mean_kind = Ar1{};
    ErrorSpec errors;
    int burn_in = 1000;
    /// Value of every pre-sample lag before burn-in starts.
    double initial_value = 0.0;

    /// Lag order of the true conditional mean (0 for i.i.d. regression).
    int lag_order() const;
    /// Number of columns of x_full for a given max_lag.
    int regressor_count(int max_lag) const;
    bool is_time_series() const { return !std::holds_alternative<IidRegression>(mean_kind); }

    /// Throws ConfigError / StationarityError when an invariant fails.
    void validate() const;

    bool operator==(const DgpSpec&) const = default;
};

/// One realized sample of length T with the true decomposition y = mu + eps.
struct SimulatedPath {
    int T = 0;
    Eigen::VectorXd y;
    /// All k series for VAR DGPs (T x k); empty otherwise.
    Eigen::MatrixXd y_all;
    /// Row i holds every regressor any candidate may use at time i.
    Eigen::MatrixXd x_full;
    Eigen::VectorXd mu_true;
    Eigen::VectorXd eps_true;
};

/// Spectral radius of a square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

Eigen::VectorXd sample_error_process(const ErrorSpec& spec, int n, std::uint64_t seed);
Eigen::VectorXd sample_error_process(const ErrorSpec& spec, int n, rng::Engine& engine);

/// Deterministic in (spec, T, max_lag, seed). Requires T >= max_lag + lag_order + 2.
SimulatedPath simulate(const DgpSpec& spec, int T, int max_lag, std::uint64_t seed);

}  // namespace cvbias::dgp
