#include "cvbias/config.hpp"

#include "cvbias/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cvbias::config {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    require_object(j, where);
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) fail(where + "/" + key, "unknown key");
}

const json& required(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) fail(where + "/" + key, "missing required field");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        fail(where, "integer out of range");
    return static_cast<int>(v);
}

std::uint64_t unsigned64(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    fail(where, "expected a non-negative integer");
}

bool boolean(const json& j, const std::string& where) {
    if (!j.is_boolean()) fail(where, "expected true or false");
    return j.get<bool>();
}

std::string string(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

const json& array(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array");
    return j;
}

Eigen::VectorXd vector_from(const json& j, const std::string& where) {
    array(j, where);
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], where + "/" + std::to_string(i));
    return v;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& where) {
    array(j, where);
    const auto rows = j.size();
    const auto cols = rows > 0 && j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rw = where + "/" + std::to_string(r);
        array(j[r], rw);
        if (j[r].size() != cols) fail(rw, "ragged matrix row");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c], rw + "/" + std::to_string(c));
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

// Re-raise validation failures with the location of the section they concern.
template <typename Fn>
void validated(const std::string& where, Fn&& fn) {
    try {
        fn();
    } catch (const StationarityError& e) {
        throw StationarityError(where + ": " + e.what());
    } catch (const SizeError& e) {
        throw SizeError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

dgp::ErrorSpec error_spec_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "sigma2", "arch_omega", "arch_alpha", "zero_noise"});
    dgp::ErrorSpec e;
    const std::string kind = string(required(j, where, "kind"), where + "/kind");
    if (kind == "iid_gaussian") {
        e.kind = dgp::ErrorSpec::Kind::IidGaussian;
        e.sigma2 = number(required(j, where, "sigma2"), where + "/sigma2");
        if (j.contains("arch_omega") || j.contains("arch_alpha"))
            fail(where, "arch_omega/arch_alpha only apply to kind arch1");
    } else if (kind == "arch1") {
        e.kind = dgp::ErrorSpec::Kind::Arch1;
        e.arch_omega = number(required(j, where, "arch_omega"), where + "/arch_omega");
        e.arch_alpha = number(required(j, where, "arch_alpha"), where + "/arch_alpha");
        e.sigma2 = j.contains("sigma2") ? number(j.at("sigma2"), where + "/sigma2")
                                        : e.arch_omega / (1.0 - e.arch_alpha);
    } else {
        fail(where + "/kind", "expected iid_gaussian or arch1, got '" + kind + "'");
    }
    if (j.contains("zero_noise")) e.zero_noise = boolean(j.at("zero_noise"), where + "/zero_noise");
    validated(where, [&] { e.validate(); });
    return e;
}

dgp::DgpSpec dgp_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"mean_kind", "errors", "burn_in", "initial_value"});
    dgp::DgpSpec d;
    const std::string mw = where + "/mean_kind";
    const json& mk = required(j, where, "mean_kind");
    require_object(mk, mw);
    const std::string kind = string(required(mk, mw, "kind"), mw + "/kind");
    if (kind == "ar1") {
        check_keys(mk, mw, {"kind", "rho"});
        d.mean_kind = dgp::Ar1{number(required(mk, mw, "rho"), mw + "/rho")};
    } else if (kind == "var_p") {
        check_keys(mk, mw, {"kind", "k", "p", "coefficients", "target"});
        dgp::VarP v;
        v.k = integer(required(mk, mw, "k"), mw + "/k");
        const json& coeffs = array(required(mk, mw, "coefficients"), mw + "/coefficients");
        for (std::size_t l = 0; l < coeffs.size(); ++l)
            v.coefficients.push_back(matrix_from(coeffs[l], mw + "/coefficients/" + std::to_string(l)));
        if (mk.contains("p") && integer(mk.at("p"), mw + "/p") != v.p())
            fail(mw + "/p", "does not match the number of coefficient matrices");
        if (mk.contains("target")) v.target = integer(mk.at("target"), mw + "/target");
        d.mean_kind = std::move(v);
    } else if (kind == "iid_regression") {
        check_keys(mk, mw, {"kind", "beta", "regressor_cov", "fixed_design", "design_seed"});
        dgp::IidRegression r;
        r.beta = vector_from(required(mk, mw, "beta"), mw + "/beta");
        r.regressor_cov = matrix_from(required(mk, mw, "regressor_cov"), mw + "/regressor_cov");
        if (mk.contains("fixed_design"))
            r.fixed_design = boolean(mk.at("fixed_design"), mw + "/fixed_design");
        if (mk.contains("design_seed"))
            r.design_seed = unsigned64(mk.at("design_seed"), mw + "/design_seed");
        d.mean_kind = std::move(r);
    } else {
        fail(mw + "/kind", "expected ar1, var_p or iid_regression, got '" + kind + "'");
    }
    d.errors = error_spec_from_json(required(j, where, "errors"), where + "/errors");
    if (j.contains("burn_in")) d.burn_in = integer(j.at("burn_in"), where + "/burn_in");
    if (j.contains("initial_value"))
        d.initial_value = number(j.at("initial_value"), where + "/initial_value");
    validated(where, [&] { d.validate(); });
    return d;
}

estimators::ModelSpec model_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"id", "columns", "intercept"});
    estimators::ModelSpec m;
    m.id = string(required(j, where, "id"), where + "/id");
    if (m.id.empty()) fail(where + "/id", "must not be empty");
    const json& cols = array(required(j, where, "columns"), where + "/columns");
    for (std::size_t c = 0; c < cols.size(); ++c)
        m.columns.push_back(integer(cols[c], where + "/columns/" + std::to_string(c)));
    if (j.contains("intercept")) m.intercept = boolean(j.at("intercept"), where + "/intercept");
    return m;
}

cv::CvScheme scheme_from_json(const json& j, const std::string& where) {
    require_object(j, where);
    const std::string kind = string(required(j, where, "kind"), where + "/kind");
    cv::CvScheme s;
    if (kind == "loo") {
        check_keys(j, where, {"kind"});
        s = cv::CvScheme::loo();
    } else if (kind == "h_block") {
        check_keys(j, where, {"kind", "h"});
        std::optional<int> h;
        if (j.contains("h")) {
            const json& hv = j.at("h");
            if (hv.is_string()) {
                if (hv.get<std::string>() != "default") fail(where + "/h", "expected an integer or \"default\"");
            } else {
                h = integer(hv, where + "/h");
            }
        }
        s = cv::CvScheme::h_block(h);
    } else if (kind == "k_fold") {
        check_keys(j, where, {"kind", "k", "contiguous"});
        s = cv::CvScheme::k_fold(integer(required(j, where, "k"), where + "/k"),
                                 j.contains("contiguous") ? boolean(j.at("contiguous"), where + "/contiguous")
                                                          : true);
    } else if (kind == "expanding_window") {
        check_keys(j, where, {"kind", "min_train", "horizon"});
        s = cv::CvScheme::expanding_window(
            integer(required(j, where, "min_train"), where + "/min_train"),
            j.contains("horizon") ? integer(j.at("horizon"), where + "/horizon") : 1);
    } else {
        fail(where + "/kind", "expected loo, h_block, k_fold or expanding_window, got '" + kind + "'");
    }
    validated(where, [&] { s.validate(); });
    return s;
}

ExperimentConfig experiment_from_json(const json& j) {
    check_keys(j, "", {"dgp", "models", "schemes", "experiment"});
    ExperimentConfig c;
    c.mc.dgp = dgp_from_json(required(j, "", "dgp"), "/dgp");

    const json& models = array(required(j, "", "models"), "/models");
    for (std::size_t m = 0; m < models.size(); ++m)
        c.mc.models.push_back(model_from_json(models[m], "/models/" + std::to_string(m)));
    const json& schemes = array(required(j, "", "schemes"), "/schemes");
    for (std::size_t s = 0; s < schemes.size(); ++s)
        c.mc.schemes.push_back(scheme_from_json(schemes[s], "/schemes/" + std::to_string(s)));

    const std::string ew = "/experiment";
    const json& e = required(j, "", "experiment");
    check_keys(e, ew, {"T_grid", "reps", "seed", "max_lag", "rho_grid", "allow_unreliable", "crosscheck"});
    const json& grid = array(required(e, ew, "T_grid"), ew + "/T_grid");
    for (std::size_t t = 0; t < grid.size(); ++t)
        c.mc.T_grid.push_back(integer(grid[t], ew + "/T_grid/" + std::to_string(t)));
    c.mc.reps = integer(required(e, ew, "reps"), ew + "/reps");
    c.mc.seed = unsigned64(required(e, ew, "seed"), ew + "/seed");
    if (e.contains("max_lag")) {
        c.mc.max_lag = integer(e.at("max_lag"), ew + "/max_lag");
    } else if (c.mc.dgp.is_time_series()) {
        // Enough lags for the DGP and for the widest candidate model.
        const int width = c.mc.dgp.regressor_count(1);
        c.mc.max_lag = c.mc.dgp.lag_order();
        for (const auto& m : c.mc.models)
            for (int col : m.columns) c.mc.max_lag = std::max(c.mc.max_lag, col / width + 1);
    } else {
        c.mc.max_lag = 0;
    }
    if (e.contains("rho_grid")) {
        const json& rg = array(e.at("rho_grid"), ew + "/rho_grid");
        for (std::size_t r = 0; r < rg.size(); ++r)
            c.rho_grid.push_back(number(rg[r], ew + "/rho_grid/" + std::to_string(r)));
        if (c.rho_grid.empty()) fail(ew + "/rho_grid", "must not be empty when present");
        if (!std::holds_alternative<dgp::Ar1>(c.mc.dgp.mean_kind))
            fail(ew + "/rho_grid", "only applies to an ar1 dgp");
        for (std::size_t r = 0; r < c.rho_grid.size(); ++r)
            if (!(std::abs(c.rho_grid[r]) < 1.0))
                throw StationarityError(ew + "/rho_grid/" + std::to_string(r) + ": |rho| must be below 1");
    }
    if (e.contains("allow_unreliable"))
        c.mc.allow_unreliable = boolean(e.at("allow_unreliable"), ew + "/allow_unreliable");
    if (e.contains("crosscheck")) c.mc.crosscheck = boolean(e.at("crosscheck"), ew + "/crosscheck");

    validated("config", [&] { c.mc.validate(); });
    return c;
}

json to_json(const dgp::ErrorSpec& e) {
    json j;
    if (e.kind == dgp::ErrorSpec::Kind::IidGaussian) {
        j["kind"] = "iid_gaussian";
        j["sigma2"] = e.sigma2;
    } else {
        j["kind"] = "arch1";
        j["sigma2"] = e.sigma2;
        j["arch_omega"] = e.arch_omega;
        j["arch_alpha"] = e.arch_alpha;
    }
    if (e.zero_noise) j["zero_noise"] = true;
    return j;
}

json to_json(const dgp::DgpSpec& d) {
    json mk;
    if (const auto* a = std::get_if<dgp::Ar1>(&d.mean_kind)) {
        mk["kind"] = "ar1";
        mk["rho"] = a->rho;
    } else if (const auto* v = std::get_if<dgp::VarP>(&d.mean_kind)) {
        mk["kind"] = "var_p";
        mk["k"] = v->k;
        mk["p"] = v->p();
        mk["target"] = v->target;
        mk["coefficients"] = json::array();
        for (const auto& a : v->coefficients) mk["coefficients"].push_back(matrix_to_json(a));
    } else {
        const auto& r = std::get<dgp::IidRegression>(d.mean_kind);
        mk["kind"] = "iid_regression";
        mk["beta"] = vector_to_json(r.beta);
        mk["regressor_cov"] = matrix_to_json(r.regressor_cov);
        mk["fixed_design"] = r.fixed_design;
        mk["design_seed"] = r.design_seed;
    }
    return json{{"mean_kind", mk},
                {"errors", to_json(d.errors)},
                {"burn_in", d.burn_in},
                {"initial_value", d.initial_value}};
}

json to_json(const estimators::ModelSpec& m) {
    return json{{"id", m.id}, {"columns", m.columns}, {"intercept", m.intercept}};
}

json to_json(const cv::CvScheme& s) {
    switch (s.kind) {
        case cv::CvScheme::Kind::Loo:
            return json{{"kind", "loo"}};
        case cv::CvScheme::Kind::HBlock:
            return s.h ? json{{"kind", "h_block"}, {"h", *s.h}} : json{{"kind", "h_block"}, {"h", "default"}};
        case cv::CvScheme::Kind::KFold:
            return json{{"kind", "k_fold"}, {"k", s.k}, {"contiguous", s.contiguous}};
        case cv::CvScheme::Kind::ExpandingWindow:
            return json{{"kind", "expanding_window"}, {"min_train", s.min_train}, {"horizon", s.horizon}};
    }
    return json{};
}

json to_json(const ExperimentConfig& c) {
    json models = json::array();
    for (const auto& m : c.mc.models) models.push_back(to_json(m));
    json schemes = json::array();
    for (const auto& s : c.mc.schemes) schemes.push_back(to_json(s));
    json experiment{{"T_grid", c.mc.T_grid},
                    {"reps", c.mc.reps},
                    {"seed", c.mc.seed},
                    {"max_lag", c.mc.max_lag},
                    {"allow_unreliable", c.mc.allow_unreliable},
                    {"crosscheck", c.mc.crosscheck}};
    if (!c.rho_grid.empty()) experiment["rho_grid"] = c.rho_grid;
    return json{{"dgp", to_json(c.mc.dgp)},
                {"models", models},
                {"schemes", schemes},
                {"experiment", experiment}};
}

json parse_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": JSON syntax error: " + e.what());
    }
}

ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return experiment_from_json(parse_text(buffer.str(), path.string()));
}

}  // namespace cvbias::config
