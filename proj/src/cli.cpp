#include "cvbias/cli.hpp"

#include "cvbias/errors.hpp"
#include "cvbias/report.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>

namespace cvbias::cli {

namespace fs = std::filesystem;
using config::json;

namespace {

using Clock = std::chrono::system_clock;

std::string iso_time(Clock::time_point t) {
    const std::time_t tt = Clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    if (!out) throw ConfigError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

/// Run metadata recorded next to every artifact.
class Manifest {
public:
    Manifest(const config::ExperimentConfig& cfg, const CommonOptions& options, std::string command)
        : cfg_(cfg), options_(options), command_(std::move(command)), start_(Clock::now()),
          steady_start_(std::chrono::steady_clock::now()) {}

    void add_output(const fs::path& p) { outputs_.push_back(p.string()); }

    json finish(std::int64_t failures) const {
        const auto end = Clock::now();
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - steady_start_).count();
        return json{{"tool", "cvbias"},
                    {"tool_version", CVBIAS_VERSION},
                    {"command", command_},
                    {"config_hash", config_hash(cfg_)},
                    {"master_seed", cfg_.mc.seed},
                    {"reps", cfg_.mc.reps},
                    {"threads", options_.threads},
                    {"failures", failures},
                    {"start", iso_time(start_)},
                    {"end", iso_time(end)},
                    {"wall_time_seconds", wall},
                    {"outputs", outputs_},
                    {"config", config::to_json(cfg_)}};
    }

private:
    const config::ExperimentConfig& cfg_;
    const CommonOptions& options_;
    std::string command_;
    Clock::time_point start_;
    std::chrono::steady_clock::time_point steady_start_;
    std::vector<std::string> outputs_;
};

int default_threads() {
    if (const char* env = std::getenv("CVBIAS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
    }
    return 1;
}

void write_selection(const CommonOptions& options, Manifest& manifest, const mc::McReport& report) {
    const fs::path freq = options.out / "selection_freq.csv";
    const fs::path agree = options.out / "agreement.csv";
    write_file(freq, report::selection_freq_csv(report));
    write_file(agree, report::agreement_csv(report));
    manifest.add_output(freq);
    manifest.add_output(agree);
    write_file(options.out / "manifest.json", manifest.finish(report.failures()).dump(2) + "\n");
}

}  // namespace

config::ExperimentConfig resolve_config(const CommonOptions& options) {
    auto cfg = config::load(options.config_path);
    if (options.seed) cfg.mc.seed = *options.seed;
    if (options.reps) cfg.mc.reps = *options.reps;
    if (options.crosscheck) cfg.mc.crosscheck = true;
    if (options.allow_unreliable) cfg.mc.allow_unreliable = true;
    cfg.mc.validate();
    return cfg;
}

std::string config_hash(const config::ExperimentConfig& cfg) {
    const std::string text = config::to_json(cfg).dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

void cmd_simulate(const CommonOptions& options) {
    const auto cfg = resolve_config(options);
    Manifest manifest(cfg, options, "simulate");
    const int T = cfg.mc.T_grid.front();
    const auto path = dgp::simulate(cfg.mc.dgp, T, cfg.mc.max_lag, mc::path_seed(cfg.mc.seed, T, 0));
    write_file(options.out, report::path_csv(path, report::regressor_names(cfg.mc.dgp, cfg.mc.max_lag)));
    manifest.add_output(options.out);
    write_file(fs::path(options.out.string() + ".manifest.json"), manifest.finish(0).dump(2) + "\n");
}

void cmd_decompose(const CommonOptions& options) {
    const auto cfg = resolve_config(options);
    Manifest manifest(cfg, options, "decompose");
    const cv::CvOptions cv_options{cfg.mc.crosscheck};
    std::vector<report::DecompositionRow> rows;
    for (std::int64_t r = 0; r < cfg.mc.reps; ++r) {
        for (int T : cfg.mc.T_grid) {
            const std::uint64_t seed = mc::path_seed(cfg.mc.seed, T, r);
            const auto path = dgp::simulate(cfg.mc.dgp, T, cfg.mc.max_lag, seed);
            for (const auto& model : cfg.mc.models) {
                const double full_ase = cv::ase_full(path, model);
                for (const auto& scheme : cfg.mc.schemes) {
                    const auto d = cv::decompose_cv_mse(path, model, scheme, cv_options);
                    rows.push_back({r, seed, T, model.id, scheme.label(), d, d.term_ase, full_ase});
                }
                const auto full = cv::decompose_full_sample(path, model);
                rows.push_back({r, seed, T, model.id, "full_sample", full, full.term_ase, full_ase});
            }
        }
    }
    write_file(options.out, report::decomposition_csv(rows));
    manifest.add_output(options.out);
    write_file(fs::path(options.out.string() + ".manifest.json"), manifest.finish(0).dump(2) + "\n");
}

void cmd_bias(const CommonOptions& options) {
    const auto cfg = resolve_config(options);
    ensure_dir(options.out);
    Manifest manifest(cfg, options, "bias");
    const auto report = mc::mc_bias_estimate(cfg.mc, options.threads);

    const fs::path by_index = options.out / "bias_by_index.csv";
    const fs::path pooled = options.out / "bias_pooled.csv";
    const fs::path text = options.out / "summary.txt";
    write_file(by_index, report::bias_by_index_csv(report));
    write_file(pooled, report::bias_pooled_csv(report));
    write_file(text, report::bias_summary_text(report));
    manifest.add_output(by_index);
    manifest.add_output(pooled);
    manifest.add_output(text);
    manifest.add_output(options.out / "summary.json");

    json summary = manifest.finish(report.failures());
    summary["cells"] = json::array();
    for (const auto& c : report.cells) {
        auto z = [](const mc::Estimate& e) { return e.se > 0 ? std::abs(e.mean) / e.se : 0.0; };
        summary["cells"].push_back(json{
            {"model", c.model_id},
            {"scheme", c.scheme},
            {"T", c.T},
            {"reps_ok", c.reps_ok},
            {"reps_failed", c.reps_failed},
            {"unreliable", c.unreliable},
            {"bias_pooled", c.bias_pooled.mean},
            {"bias_pooled_se", c.bias_pooled.se},
            {"pooled_zero_band_met", z(c.bias_pooled) <= mc::kZeroBand},
            {"excl_last_nonzero_band_met", z(c.bias_pooled_excl_last) > mc::kNonzeroBand},
            {"last_index_zero_band_met", c.bias_last.n > 0 && z(c.bias_last) <= mc::kZeroBand},
            {"centered_pooled", c.centered_pooled.mean},
            {"centered_pooled_se", c.centered_pooled.se},
            {"centered_pooled_zero_band_met", z(c.centered_pooled) <= mc::kZeroBand},
            {"centered_excl_last_nonzero_band_met", z(c.centered_pooled_excl_last) > mc::kNonzeroBand},
            {"centered_last_index_zero_band_met", c.centered_last.n > 0 && z(c.centered_last) <= mc::kZeroBand},
        });
    }
    write_file(options.out / "summary.json", summary.dump(2) + "\n");
    write_file(options.out / "manifest.json", manifest.finish(report.failures()).dump(2) + "\n");
}

void cmd_select(const CommonOptions& options) {
    const auto cfg = resolve_config(options);
    ensure_dir(options.out);
    Manifest manifest(cfg, options, "select");
    const auto report = mc::run(cfg.mc, {options.threads, false, true});
    write_selection(options, manifest, report);
}

void cmd_sweep(const CommonOptions& options) {
    const auto cfg = resolve_config(options);
    ensure_dir(options.out);
    Manifest manifest(cfg, options, "sweep");
    std::vector<report::SweepPoint> points;
    std::int64_t failures = 0;
    if (cfg.rho_grid.empty()) {
        const auto* ar = std::get_if<dgp::Ar1>(&cfg.mc.dgp.mean_kind);
        points.push_back({ar ? ar->rho : std::numeric_limits<double>::quiet_NaN(),
                          mc::mc_bias_estimate(cfg.mc, options.threads)});
    } else {
        for (double rho : cfg.rho_grid) {
            mc::McConfig point = cfg.mc;
            point.dgp.mean_kind = dgp::Ar1{rho};
            points.push_back({rho, mc::mc_bias_estimate(point, options.threads)});
        }
    }
    for (const auto& p : points) failures += p.report.failures();
    const fs::path sweep = options.out / "sweep.csv";
    write_file(sweep, report::sweep_csv(points));
    manifest.add_output(sweep);
    write_file(options.out / "manifest.json", manifest.finish(failures).dump(2) + "\n");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finite-sample bias of cross-validation on simulated time series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(CVBIAS_VERSION));

    CommonOptions options;
    options.threads = default_threads();
    std::uint64_t seed = 0;
    int reps = 0;

    auto add_common = [&](CLI::App* sub, const char* out_help) {
        sub->add_option("--config", options.config_path, "JSON experiment config")->required();
        sub->add_option("--out", options.out, out_help)->required();
        sub->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
        sub->add_option("--reps", reps, "Replications (overrides experiment.reps)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--threads", options.threads, "Worker threads (default $CVBIAS_THREADS or 1)")
            ->check(CLI::Range(1, 4096));
        sub->add_flag("--crosscheck", options.crosscheck, "Verify every LOO downdate against a refit");
        sub->add_flag("--allow-unreliable", options.allow_unreliable,
                      "Report cells with more than 1% failed replications instead of aborting");
    };

    struct Command {
        const char* name;
        const char* help;
        const char* out_help;
        void (*fn)(const CommonOptions&);
    };
    const Command commands[] = {
        {"simulate", "Write one simulated path as CSV", "Output CSV file", cmd_simulate},
        {"decompose", "Per-path CV MSE decomposition", "Output CSV file", cmd_decompose},
        {"bias", "Monte Carlo bias of the CV cross term", "Output directory", cmd_bias},
        {"select", "Model-selection frequencies across schemes", "Output directory", cmd_select},
        {"sweep", "Bias over T and rho grids", "Output directory", cmd_sweep},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, c.out_help);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        if (subs[i]->count("--seed")) options.seed = seed;
        if (subs[i]->count("--reps")) options.reps = reps;
        try {
            commands[i].fn(options);
            out << commands[i].name << ": wrote " << options.out.string() << '\n';
            return kOk;
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return kConfigError;
        } catch (const ReliabilityError& e) {
            err << "reliability trip wire: " << e.what() << '\n';
            return kReliabilityTrip;
        } catch (const NumericalError& e) {
            err << "numerical failure: " << e.what() << '\n';
            return kNumericalFailure;
        }
    }
    return kConfigError;
}

}  // namespace cvbias::cli
