#pragma once

#include "cvbias/cv.hpp"
#include "cvbias/dgp.hpp"
#include "cvbias/estimators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cvbias::mc {

/// Replications per aggregation block. Blocks are reduced in index order, so
/// results do not depend on how many threads processed them.
inline constexpr int kBlockSize = 256;

/// Fraction of failed replications above which a cell is unreliable.
inline constexpr double kMaxFailureRate = 0.01;

/// z-bands for "consistent with zero" and "distinguishable from zero".
inline constexpr double kZeroBand = 4.0;
inline constexpr double kNonzeroBand = 5.0;

struct McConfig {
    dgp::DgpSpec dgp;
    std::vector<estimators::ModelSpec> models;
    std::vector<cv::CvScheme> schemes;
    std::vector<int> T_grid;
    int reps = 1000;
    std::uint64_t seed = 0;
    int max_lag = 1;
    bool allow_unreliable = false;
    bool crosscheck = false;

    void validate() const;
    bool operator==(const McConfig&) const = default;
};

struct RunOptions {
    int threads = 1;
    bool cells = true;
    bool selection = true;
};

/// Streaming mean and centred sum of squares (Welford), mergeable (Chan et al.).
class Moments {
public:
    void push(double x);
    void merge(const Moments& other);

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Centred second moment divided by n.
    double population_variance() const { return n_ > 0 ? m2_ / n_ : 0.0; }
    /// Centred second moment divided by n - 1.
    double sample_variance() const { return n_ > 1 ? m2_ / (n_ - 1) : 0.0; }
    /// sample standard deviation / sqrt(n)
    double standard_error() const;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t n = 0;

    static Estimate from(const Moments& m) { return {m.mean(), m.standard_error(), m.count()}; }
};

struct IndexStats {
    int index = 0;       // 1-based position in the sample
    Estimate bias;       // E[mu~_{-i} eps_i]
    Estimate bias_centered;  // E[(mu~_{-i} - mu_i) eps_i], same target since E[mu_i eps_i] = 0
    Estimate error;      // E[mu~_{-i} - mu_i]
    Estimate sq_error;   // E[(mu~_{-i} - mu_i)^2]
    double variance = 0.0;  // across-rep variance of mu~_{-i} - mu_i (divisor R)
    double sq_bias = 0.0;   // squared across-rep mean of mu~_{-i} - mu_i
};

struct CellReport {
    std::string model_id;
    std::string scheme;
    int T = 0;
    int evaluated = 0;  // indices evaluated per replication
    std::int64_t reps_ok = 0;
    std::int64_t reps_failed = 0;
    bool unreliable = false;
    std::string first_failure;

    std::vector<IndexStats> by_index;
    Estimate bias_pooled;            // mean over i and reps of mu~ eps
    Estimate bias_pooled_excl_last;  // same, excluding i = T
    Estimate bias_last;              // i = T only
    // The same three quantities estimated from (mu~ - mu) eps. E[mu_i eps_i] = 0
    // for every DGP here, so the expectation is unchanged while the replication
    // noise from mu_i eps_i drops out.
    Estimate centered_pooled;
    Estimate centered_pooled_excl_last;
    Estimate centered_last;
    Estimate term_muhat_eps;         // (2/n) sum mu~ eps, averaged over reps
    Estimate mase_loo;
    Estimate mase_full;
    Estimate cv_mse;
};

struct SelectionReport {
    std::string scheme;
    int T = 0;
    std::vector<std::string> model_ids;
    std::vector<std::int64_t> selected_counts;
    std::vector<double> selection_freq;
    std::vector<std::int64_t> min_ase_counts;
    Estimate min_ase_agreement;
    std::int64_t reps_used = 0;
    std::int64_t reps_failed = 0;
    bool unreliable = false;
};

struct McReport {
    std::uint64_t seed = 0;
    int reps = 0;
    std::vector<CellReport> cells;
    std::vector<SelectionReport> selection;

    std::int64_t failures() const;
    const CellReport& cell(const std::string& model_id, const std::string& scheme, int T) const;
};

/// Path seed for replication `rep` of sample size T.
std::uint64_t path_seed(std::uint64_t master, int T, std::int64_t rep);

/**
 * Run every (model, scheme, T) cell and, optionally, the selection tallies.
 *
 * Throws ReliabilityError when a cell exceeds the failure rate and
 * allow_unreliable is off; IdentityError if a sample-moment identity fails.
 */
McReport run(const McConfig& config, const RunOptions& options = {});

McReport mc_bias_estimate(const McConfig& config, int threads = 1);

struct MaseCell {
    std::string model_id;
    std::string scheme;
    int T = 0;
    Estimate mase_loo;
    Estimate mase_full;
};
std::vector<MaseCell> mc_mase(const McConfig& config, int threads = 1);

/// Per-index variance and squared bias of mu~_{-i} for one cell.
std::vector<IndexStats> mc_bias_variance(const McConfig& config, std::size_t model,
                                         std::size_t scheme, int T, int threads = 1);

std::vector<SelectionReport> mc_selection(const McConfig& config, int threads = 1);

}  // namespace cvbias::mc
