#include "cvbias/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <variant>

namespace cvbias::report {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
    return buf;
}

std::vector<std::string> regressor_names(const dgp::DgpSpec& spec, int max_lag) {
    std::vector<std::string> names;
    if (std::holds_alternative<dgp::Ar1>(spec.mean_kind)) {
        for (int l = 1; l <= max_lag; ++l) names.push_back("y_lag" + std::to_string(l));
    } else if (const auto* v = std::get_if<dgp::VarP>(&spec.mean_kind)) {
        for (int l = 1; l <= max_lag; ++l)
            for (int j = 1; j <= v->k; ++j)
                names.push_back("y" + std::to_string(j) + "_lag" + std::to_string(l));
    } else {
        const auto p = std::get<dgp::IidRegression>(spec.mean_kind).beta.size();
        for (Eigen::Index j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    }
    return names;
}

std::string path_csv(const dgp::SimulatedPath& path, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "index,y,mu_true,eps_true";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (int i = 0; i < path.T; ++i) {
        out << (i + 1) << ',' << format_double(path.y[i]) << ',' << format_double(path.mu_true[i])
            << ',' << format_double(path.eps_true[i]);
        for (Eigen::Index c = 0; c < path.x_full.cols(); ++c) out << ',' << format_double(path.x_full(i, c));
        out << '\n';
    }
    return out.str();
}

std::string decomposition_csv(const std::vector<DecompositionRow>& rows) {
    std::ostringstream out;
    out << "path,seed,T,model,scheme,evaluated,term_eps2,term_mu_eps,term_muhat_eps,term_ase,cv_mse,"
           "identity_residual,ase_loo,ase_full\n";
    for (const auto& r : rows) {
        const auto& d = r.decomposition;
        out << r.path << ',' << r.seed << ',' << r.T << ',' << r.model << ',' << r.scheme << ','
            << d.evaluated << ',' << format_double(d.term_eps2) << ',' << format_double(d.term_mu_eps)
            << ',' << format_double(d.term_muhat_eps) << ',' << format_double(d.term_ase) << ','
            << format_double(d.cv_mse) << ',' << format_double(d.identity_residual()) << ','
            << format_double(r.ase_loo) << ',' << format_double(r.ase_full) << '\n';
    }
    return out.str();
}

namespace {

// Scheme labels contain commas; quote them for CSV.
std::string quoted(const std::string& s) {
    return s.find(',') == std::string::npos ? s : '"' + s + '"';
}

void estimate_row(std::ostringstream& out, const std::string& prefix, const std::string& statistic,
                  const mc::Estimate& e) {
    out << prefix << statistic << ',' << format_double(e.mean) << ',' << format_double(e.se) << ','
        << e.n << '\n';
}

std::string cell_prefix(const mc::CellReport& c) {
    return quoted(c.model_id) + ',' + quoted(c.scheme) + ',' + std::to_string(c.T) + ',';
}

}  // namespace

std::string bias_by_index_csv(const mc::McReport& report) {
    std::ostringstream out;
    out << "model,scheme,T,index,statistic,estimate,se,n\n";
    for (const auto& c : report.cells) {
        for (const auto& s : c.by_index) {
            const std::string prefix = cell_prefix(c) + std::to_string(s.index) + ',';
            estimate_row(out, prefix, "bias", s.bias);
            estimate_row(out, prefix, "bias_centered", s.bias_centered);
            estimate_row(out, prefix, "sq_error", s.sq_error);
            out << prefix << "variance," << format_double(s.variance) << ",," << s.sq_error.n << '\n';
            out << prefix << "sq_bias," << format_double(s.sq_bias) << ",," << s.sq_error.n << '\n';
        }
    }
    return out.str();
}

std::string bias_pooled_csv(const mc::McReport& report) {
    std::ostringstream out;
    out << "model,scheme,T,statistic,estimate,se,n\n";
    for (const auto& c : report.cells) {
        const std::string prefix = cell_prefix(c);
        estimate_row(out, prefix, "bias_pooled", c.bias_pooled);
        estimate_row(out, prefix, "bias_pooled_excl_last", c.bias_pooled_excl_last);
        estimate_row(out, prefix, "bias_last", c.bias_last);
        estimate_row(out, prefix, "centered_pooled", c.centered_pooled);
        estimate_row(out, prefix, "centered_pooled_excl_last", c.centered_pooled_excl_last);
        estimate_row(out, prefix, "centered_last", c.centered_last);
        estimate_row(out, prefix, "term_muhat_eps", c.term_muhat_eps);
        estimate_row(out, prefix, "mase_loo", c.mase_loo);
        estimate_row(out, prefix, "mase_full", c.mase_full);
        estimate_row(out, prefix, "cv_mse", c.cv_mse);
    }
    return out.str();
}

std::string selection_freq_csv(const mc::McReport& report) {
    std::ostringstream out;
    out << "scheme,T,model,selected,frequency,min_ase_count\n";
    for (const auto& s : report.selection)
        for (std::size_t m = 0; m < s.model_ids.size(); ++m)
            out << quoted(s.scheme) << ',' << s.T << ',' << quoted(s.model_ids[m]) << ','
                << s.selected_counts[m] << ',' << format_double(s.selection_freq[m]) << ','
                << s.min_ase_counts[m] << '\n';
    return out.str();
}

std::string agreement_csv(const mc::McReport& report) {
    std::ostringstream out;
    out << "scheme,T,agreement,se,reps_used,reps_failed\n";
    for (const auto& s : report.selection)
        out << quoted(s.scheme) << ',' << s.T << ',' << format_double(s.min_ase_agreement.mean) << ','
            << format_double(s.min_ase_agreement.se) << ',' << s.reps_used << ',' << s.reps_failed
            << '\n';
    return out.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream out;
    out << "rho,T,model,scheme,statistic,estimate,abs_estimate,se,n\n";
    for (const auto& p : points) {
        for (const auto& c : p.report.cells) {
            auto row = [&](const char* statistic, const mc::Estimate& e) {
                out << format_double(p.rho) << ',' << c.T << ',' << quoted(c.model_id) << ','
                    << quoted(c.scheme) << ',' << statistic << ',' << format_double(e.mean) << ','
                    << format_double(std::abs(e.mean)) << ',' << format_double(e.se) << ',' << e.n
                    << '\n';
            };
            row("bias_pooled", c.bias_pooled);
            row("bias_pooled_excl_last", c.bias_pooled_excl_last);
            row("bias_last", c.bias_last);
            row("centered_pooled", c.centered_pooled);
            row("centered_pooled_excl_last", c.centered_pooled_excl_last);
            row("centered_last", c.centered_last);
            row("mase_loo", c.mase_loo);
            row("mase_full", c.mase_full);
        }
    }
    return out.str();
}

std::string bias_summary_text(const mc::McReport& report) {
    std::ostringstream out;
    auto z = [](const mc::Estimate& e) { return e.se > 0 ? std::abs(e.mean) / e.se : 0.0; };
    auto band = [&](const mc::Estimate& e) {
        if (e.n == 0) return std::string("n/a");
        const double score = z(e);
        char buf[96];
        const char* verdict = score <= mc::kZeroBand      ? "consistent with zero (<= 4 SE)"
                              : score > mc::kNonzeroBand ? "nonzero (> 5 SE)"
                                                         : "inconclusive (4-5 SE)";
        std::snprintf(buf, sizeof buf, "%s, z = %.2f", verdict, score);
        return std::string(buf);
    };
    out << "seed " << report.seed << ", " << report.reps << " replications\n";
    for (const auto& c : report.cells) {
        out << c.model_id << " | " << c.scheme << " | T = " << c.T << " | failed reps " << c.reps_failed
            << (c.unreliable ? " (UNRELIABLE)" : "") << '\n';
        out << "  pooled bias          " << format_double(c.bias_pooled.mean) << " (se "
            << format_double(c.bias_pooled.se) << "): " << band(c.bias_pooled) << '\n';
        out << "  pooled bias, i < T   " << format_double(c.bias_pooled_excl_last.mean) << " (se "
            << format_double(c.bias_pooled_excl_last.se) << "): " << band(c.bias_pooled_excl_last)
            << '\n';
        out << "  bias at i = T        " << format_double(c.bias_last.mean) << " (se "
            << format_double(c.bias_last.se) << "): " << band(c.bias_last) << '\n';
        out << "  centered, pooled     " << format_double(c.centered_pooled.mean) << " (se "
            << format_double(c.centered_pooled.se) << "): " << band(c.centered_pooled) << '\n';
        out << "  centered, i < T      " << format_double(c.centered_pooled_excl_last.mean) << " (se "
            << format_double(c.centered_pooled_excl_last.se) << "): "
            << band(c.centered_pooled_excl_last) << '\n';
        out << "  centered, i = T      " << format_double(c.centered_last.mean) << " (se "
            << format_double(c.centered_last.se) << "): " << band(c.centered_last) << '\n';
        out << "  MASE loo / full      " << format_double(c.mase_loo.mean) << " / "
            << format_double(c.mase_full.mean) << '\n';
    }
    return out.str();
}

}  // namespace cvbias::report
