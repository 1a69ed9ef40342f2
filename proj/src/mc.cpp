#include "cvbias/mc.hpp"

#include "cvbias/errors.hpp"
#include "cvbias/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace cvbias::mc {

void Moments::push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void Moments::merge(const Moments& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double n = static_cast<double>(n_ + other.n_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * (static_cast<double>(other.n_) / n);
    m2_ += other.m2_ + delta * delta * (static_cast<double>(n_) * static_cast<double>(other.n_) / n);
    n_ += other.n_;
}

double Moments::standard_error() const {
    return n_ > 1 ? std::sqrt(sample_variance() / static_cast<double>(n_)) : 0.0;
}

void McConfig::validate() const {
    dgp.validate();
    if (reps < 2) throw ConfigError("experiment.reps must be >= 2");
    if (models.empty()) throw ConfigError("at least one model is required");
    if (schemes.empty()) throw ConfigError("at least one scheme is required");
    if (T_grid.empty()) throw ConfigError("experiment.T_grid must not be empty");
    if (max_lag < 0) throw ConfigError("experiment.max_lag must be >= 0");
    const int x_cols = dgp.regressor_count(max_lag);
    for (std::size_t a = 0; a < models.size(); ++a) {
        models[a].validate(x_cols);
        for (std::size_t b = 0; b < a; ++b)
            if (models[a].id == models[b].id)
                throw ConfigError("duplicate model id '" + models[a].id + "'");
    }
    for (const auto& s : schemes) s.validate();
    for (int T : T_grid) {
        const int needed = max_lag + dgp.lag_order() + 2;
        if (T < needed)
            throw SizeError("T = " + std::to_string(T) + " in T_grid is below the minimum " +
                            std::to_string(needed));
        for (const auto& m : models)
            if (m.parameter_count() >= T - 1)
                throw SizeError("model '" + m.id + "' has too many parameters for T = " +
                                std::to_string(T));
    }
}

std::int64_t McReport::failures() const {
    std::int64_t f = 0;
    for (const auto& c : cells) f += c.reps_failed;
    for (const auto& s : selection) f += s.reps_failed;
    return f;
}

const CellReport& McReport::cell(const std::string& model_id, const std::string& scheme,
                                 int T) const {
    for (const auto& c : cells)
        if (c.model_id == model_id && c.scheme == scheme && c.T == T) return c;
    throw ConfigError("no cell for model '" + model_id + "', scheme " + scheme + ", T = " +
                      std::to_string(T));
}

std::uint64_t path_seed(std::uint64_t master, int T, std::int64_t rep) {
    return rng::derive_seed(master, {static_cast<std::uint64_t>(rng::Stream::Path),
                                     static_cast<std::uint64_t>(T),
                                     static_cast<std::uint64_t>(rep)});
}

namespace {

struct CellAccum {
    std::vector<Moments> bias;    // mu~ eps per index
    std::vector<Moments> centered;  // (mu~ - mu) eps per index
    std::vector<Moments> error;   // mu~ - mu per index
    std::vector<Moments> error2;  // (mu~ - mu)^2 per index
    Moments pooled, pooled_excl_last, centered_pooled, centered_excl_last;
    Moments term_muhat_eps, ase_loo, ase_full, cv_mse;
    std::int64_t failed = 0;
    std::string first_failure;

    explicit CellAccum(int T) : bias(T), centered(T), error(T), error2(T) {}

    void merge(const CellAccum& o) {
        for (std::size_t i = 0; i < bias.size(); ++i) {
            bias[i].merge(o.bias[i]);
            centered[i].merge(o.centered[i]);
            error[i].merge(o.error[i]);
            error2[i].merge(o.error2[i]);
        }
        pooled.merge(o.pooled);
        pooled_excl_last.merge(o.pooled_excl_last);
        centered_pooled.merge(o.centered_pooled);
        centered_excl_last.merge(o.centered_excl_last);
        term_muhat_eps.merge(o.term_muhat_eps);
        ase_loo.merge(o.ase_loo);
        ase_full.merge(o.ase_full);
        cv_mse.merge(o.cv_mse);
        if (first_failure.empty()) first_failure = o.first_failure;
        failed += o.failed;
    }
};

struct SelectionAccum {
    std::vector<std::int64_t> selected;
    std::vector<std::int64_t> min_ase;
    Moments agreement;
    std::int64_t failed = 0;

    explicit SelectionAccum(std::size_t models) : selected(models, 0), min_ase(models, 0) {}

    void merge(const SelectionAccum& o) {
        for (std::size_t m = 0; m < selected.size(); ++m) {
            selected[m] += o.selected[m];
            min_ase[m] += o.min_ase[m];
        }
        agreement.merge(o.agreement);
        failed += o.failed;
    }
};

struct BlockResult {
    std::vector<CellAccum> cells;  // model-major: m * n_schemes + s
    std::vector<SelectionAccum> selection;
};

bool is_fit_failure(const std::exception& e) {
    return dynamic_cast<const SingularityError*>(&e) != nullptr ||
           dynamic_cast<const LeverageError*>(&e) != nullptr;
}

class CellRunner {
public:
    CellRunner(const McConfig& config, const RunOptions& options, int T)
        : config_(config), options_(options), T_(T) {}

    BlockResult run_block(std::int64_t first_rep, std::int64_t last_rep) const {
        const std::size_t n_models = config_.models.size();
        const std::size_t n_schemes = config_.schemes.size();
        BlockResult block;
        if (options_.cells) block.cells.assign(n_models * n_schemes, CellAccum(T_));
        if (options_.selection) block.selection.assign(n_schemes, SelectionAccum(n_models));

        const cv::CvOptions cv_options{config_.crosscheck};
        std::vector<double> ase_full(n_models);
        std::vector<bool> full_failed(n_models);
        std::vector<std::string> full_error(n_models);
        std::vector<double> scores(n_models);
        std::vector<bool> excluded(n_models);
        std::vector<int> params(n_models);
        for (std::size_t m = 0; m < n_models; ++m) params[m] = config_.models[m].parameter_count();

        for (std::int64_t rep = first_rep; rep < last_rep; ++rep) {
            const auto path =
                dgp::simulate(config_.dgp, T_, config_.max_lag, path_seed(config_.seed, T_, rep));

            for (std::size_t m = 0; m < n_models; ++m) {
                full_failed[m] = false;
                try {
                    ase_full[m] = cv::ase_full(path, config_.models[m]);
                } catch (const NumericalError& e) {
                    if (!is_fit_failure(e)) throw;
                    full_failed[m] = true;
                    full_error[m] = e.what();
                }
            }

            for (std::size_t s = 0; s < n_schemes; ++s) {
                for (std::size_t m = 0; m < n_models; ++m) {
                    excluded[m] = full_failed[m];
                    CellAccum* cell = options_.cells ? &block.cells[m * n_schemes + s] : nullptr;
                    if (full_failed[m]) {
                        if (cell) record_failure(*cell, full_error[m]);
                        continue;
                    }
                    try {
                        const auto ev =
                            cv::evaluate(path, config_.models[m], config_.schemes[s], cv_options);
                        scores[m] = ev.decomposition.cv_mse;
                        if (cell) accumulate(*cell, path, ev, ase_full[m]);
                    } catch (const NumericalError& e) {
                        if (!is_fit_failure(e)) throw;
                        excluded[m] = true;
                        if (cell) record_failure(*cell, e.what());
                    }
                }
                if (options_.selection) tally(block.selection[s], scores, ase_full, params, excluded,
                                              full_failed);
            }
        }
        return block;
    }

private:
    static void record_failure(CellAccum& cell, const std::string& what) {
        ++cell.failed;
        if (cell.first_failure.empty()) cell.first_failure = what;
    }

    void accumulate(CellAccum& cell, const dgp::SimulatedPath& path, const cv::CvEvaluation& ev,
                    double ase_full) const {
        const auto& r = ev.residuals;
        double sum = 0.0, sum_excl = 0.0, csum = 0.0, csum_excl = 0.0;
        int n_excl = 0;
        for (int i = 0; i < T_; ++i) {
            if (!r.mask[i]) continue;
            const double product = r.mu_tilde[i] * path.eps_true[i];
            const double err = r.mu_tilde[i] - path.mu_true[i];
            const double centered = err * path.eps_true[i];
            cell.bias[i].push(product);
            cell.centered[i].push(centered);
            cell.error[i].push(err);
            cell.error2[i].push(err * err);
            sum += product;
            csum += centered;
            if (i != T_ - 1) {
                sum_excl += product;
                csum_excl += centered;
                ++n_excl;
            }
        }
        cell.pooled.push(sum / r.evaluated);
        cell.centered_pooled.push(csum / r.evaluated);
        if (n_excl > 0) {
            cell.pooled_excl_last.push(sum_excl / n_excl);
            cell.centered_excl_last.push(csum_excl / n_excl);
        }
        cell.term_muhat_eps.push(ev.decomposition.term_muhat_eps);
        cell.ase_loo.push(ev.decomposition.term_ase);
        cell.ase_full.push(ase_full);
        cell.cv_mse.push(ev.decomposition.cv_mse);
    }

    static void tally(SelectionAccum& acc, const std::vector<double>& scores,
                      const std::vector<double>& ase_full, const std::vector<int>& params,
                      const std::vector<bool>& excluded, const std::vector<bool>& full_failed) {
        const int pick = cv::argmin_with_tiebreak(scores, params, excluded);
        const int best = cv::argmin_with_tiebreak(ase_full, params, full_failed);
        if (pick < 0 || best < 0) {
            ++acc.failed;
            return;
        }
        ++acc.selected[pick];
        ++acc.min_ase[best];
        acc.agreement.push(pick == best ? 1.0 : 0.0);
    }

    const McConfig& config_;
    const RunOptions& options_;
    int T_;
};

template <typename Fn>
void parallel_for_blocks(std::int64_t n_blocks, int threads, Fn&& fn) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::int64_t>(n_blocks, 1))));
    if (threads == 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (;;) {
                const std::int64_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                try {
                    fn(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n_blocks);
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

CellReport finish_cell(const CellAccum& acc, const std::string& model_id, const std::string& scheme,
                       int T, int reps) {
    CellReport c;
    c.model_id = model_id;
    c.scheme = scheme;
    c.T = T;
    c.reps_failed = acc.failed;
    c.reps_ok = acc.pooled.count();
    c.unreliable = static_cast<double>(acc.failed) > kMaxFailureRate * reps;
    c.first_failure = acc.first_failure;
    int last = -1;
    for (int i = 0; i < T; ++i) {
        if (acc.bias[i].count() == 0) continue;
        last = i;
        ++c.evaluated;
        IndexStats s;
        s.index = i + 1;
        s.bias = Estimate::from(acc.bias[i]);
        s.bias_centered = Estimate::from(acc.centered[i]);
        s.error = Estimate::from(acc.error[i]);
        s.sq_error = Estimate::from(acc.error2[i]);
        s.variance = acc.error[i].population_variance();
        s.sq_bias = acc.error[i].mean() * acc.error[i].mean();
        const double gap = std::abs(s.sq_error.mean - (s.variance + s.sq_bias));
        if (gap > cv::kIdentityTolerance * std::max(s.sq_error.mean, 1e-300))
            throw IdentityError("bias-variance identity violated for model '" + model_id + "', " +
                                scheme + ", T = " + std::to_string(T) + ", index " +
                                std::to_string(i + 1));
        c.by_index.push_back(s);
    }
    c.bias_pooled = Estimate::from(acc.pooled);
    c.bias_pooled_excl_last = Estimate::from(acc.pooled_excl_last);
    c.centered_pooled = Estimate::from(acc.centered_pooled);
    c.centered_pooled_excl_last = Estimate::from(acc.centered_excl_last);
    if (last == T - 1) {
        c.bias_last = Estimate::from(acc.bias[T - 1]);
        c.centered_last = Estimate::from(acc.centered[T - 1]);
    }
    c.term_muhat_eps = Estimate::from(acc.term_muhat_eps);
    c.mase_loo = Estimate::from(acc.ase_loo);
    c.mase_full = Estimate::from(acc.ase_full);
    c.cv_mse = Estimate::from(acc.cv_mse);
    return c;
}

SelectionReport finish_selection(const SelectionAccum& acc, const McConfig& config,
                                 const std::string& scheme, int T) {
    SelectionReport s;
    s.scheme = scheme;
    s.T = T;
    s.reps_failed = acc.failed;
    s.reps_used = acc.agreement.count();
    s.unreliable = static_cast<double>(acc.failed) > kMaxFailureRate * config.reps;
    for (std::size_t m = 0; m < config.models.size(); ++m) {
        s.model_ids.push_back(config.models[m].id);
        s.selected_counts.push_back(acc.selected[m]);
        s.min_ase_counts.push_back(acc.min_ase[m]);
        s.selection_freq.push_back(
            s.reps_used > 0 ? static_cast<double>(acc.selected[m]) / s.reps_used : 0.0);
    }
    s.min_ase_agreement = Estimate::from(acc.agreement);
    return s;
}

}  // namespace

McReport run(const McConfig& config, const RunOptions& options) {
    config.validate();
    McReport report;
    report.seed = config.seed;
    report.reps = config.reps;
    const std::size_t n_models = config.models.size();
    const std::size_t n_schemes = config.schemes.size();
    const std::int64_t n_blocks = (config.reps + kBlockSize - 1) / kBlockSize;

    for (int T : config.T_grid) {
        const CellRunner runner(config, options, T);
        std::vector<BlockResult> blocks(n_blocks);
        parallel_for_blocks(n_blocks, options.threads, [&](std::int64_t b) {
            const std::int64_t first = b * kBlockSize;
            const std::int64_t last = std::min<std::int64_t>(first + kBlockSize, config.reps);
            blocks[b] = runner.run_block(first, last);
        });

        BlockResult total = std::move(blocks[0]);
        for (std::int64_t b = 1; b < n_blocks; ++b) {
            for (std::size_t c = 0; c < total.cells.size(); ++c) total.cells[c].merge(blocks[b].cells[c]);
            for (std::size_t s = 0; s < total.selection.size(); ++s)
                total.selection[s].merge(blocks[b].selection[s]);
            blocks[b] = BlockResult{};
        }

        if (options.cells)
            for (std::size_t m = 0; m < n_models; ++m)
                for (std::size_t s = 0; s < n_schemes; ++s)
                    report.cells.push_back(finish_cell(total.cells[m * n_schemes + s],
                                                       config.models[m].id,
                                                       config.schemes[s].label(), T, config.reps));
        if (options.selection)
            for (std::size_t s = 0; s < n_schemes; ++s)
                report.selection.push_back(
                    finish_selection(total.selection[s], config, config.schemes[s].label(), T));
    }

    if (!config.allow_unreliable) {
        for (const auto& c : report.cells)
            if (c.unreliable)
                throw ReliabilityError("model '" + c.model_id + "', " + c.scheme + ", T = " +
                                       std::to_string(c.T) + ": " + std::to_string(c.reps_failed) +
                                       " of " + std::to_string(config.reps) +
                                       " replications failed (first: " + c.first_failure + ")");
        for (const auto& s : report.selection)
            if (s.unreliable)
                throw ReliabilityError(s.scheme + ", T = " + std::to_string(s.T) + ": " +
                                       std::to_string(s.reps_failed) +
                                       " replications had no fittable candidate");
    }
    return report;
}

McReport mc_bias_estimate(const McConfig& config, int threads) {
    return run(config, {threads, true, false});
}

std::vector<MaseCell> mc_mase(const McConfig& config, int threads) {
    std::vector<MaseCell> out;
    for (const auto& c : run(config, {threads, true, false}).cells)
        out.push_back({c.model_id, c.scheme, c.T, c.mase_loo, c.mase_full});
    return out;
}

std::vector<IndexStats> mc_bias_variance(const McConfig& config, std::size_t model,
                                         std::size_t scheme, int T, int threads) {
    if (model >= config.models.size() || scheme >= config.schemes.size())
        throw ConfigError("mc_bias_variance: model or scheme index out of range");
    McConfig single = config;
    single.models = {config.models[model]};
    single.schemes = {config.schemes[scheme]};
    single.T_grid = {T};
    auto report = run(single, {threads, true, false});
    return std::move(report.cells.front().by_index);
}

std::vector<SelectionReport> mc_selection(const McConfig& config, int threads) {
    return run(config, {threads, false, true}).selection;
}

}  // namespace cvbias::mc
