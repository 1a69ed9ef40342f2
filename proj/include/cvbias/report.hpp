#pragma once

#include "cvbias/cv.hpp"
#include "cvbias/dgp.hpp"
#include "cvbias/mc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cvbias::report {

/// Decimal form used in every CSV: 17 significant digits, "nan"/"inf" spelled out.
std::string format_double(double v);

/// Column names of x_full for a DGP, e.g. y_lag1 or y2_lag3 or x1.
std::vector<std::string> regressor_names(const dgp::DgpSpec& spec, int max_lag);

/// index,y,mu_true,eps_true,<regressor columns>
std::string path_csv(const dgp::SimulatedPath& path, const std::vector<std::string>& regressor_names);

struct DecompositionRow {
    std::int64_t path = 0;
    std::uint64_t seed = 0;
    int T = 0;
    std::string model;
    std::string scheme;
    cv::CvDecomposition decomposition;
    double ase_loo = 0.0;
    double ase_full = 0.0;
};

/// path,seed,T,model,scheme,evaluated,term_eps2,term_mu_eps,term_muhat_eps,term_ase,cv_mse,identity_residual,ase_loo,ase_full
std::string decomposition_csv(const std::vector<DecompositionRow>& rows);

/// model,scheme,T,index,statistic,estimate,se,n
/// statistics: bias, bias_centered, sq_error, variance, sq_bias (variance/sq_bias carry no se)
std::string bias_by_index_csv(const mc::McReport& report);

/// model,scheme,T,statistic,estimate,se,n
/// statistics: bias_pooled, bias_pooled_excl_last, bias_last, term_muhat_eps,
/// mase_loo, mase_full, cv_mse
std::string bias_pooled_csv(const mc::McReport& report);

/// scheme,T,model,selected,frequency,min_ase_count
std::string selection_freq_csv(const mc::McReport& report);

/// scheme,T,agreement,se,reps_used,reps_failed
std::string agreement_csv(const mc::McReport& report);

struct SweepPoint {
    double rho = 0.0;  // NaN when the sweep does not vary rho
    mc::McReport report;
};

/// rho,T,model,scheme,statistic,estimate,abs_estimate,se,n
std::string sweep_csv(const std::vector<SweepPoint>& points);

/// Per-cell text verdicts against the zero (4 SE) and nonzero (5 SE) bands.
std::string bias_summary_text(const mc::McReport& report);

}  // namespace cvbias::report
