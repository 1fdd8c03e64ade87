#pragma once

// JSON and CSV plumbing. Extended reals travel as the strings "+inf"/"-inf";
// configuration errors name the offending field.

#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drexp/engine.hpp"
#include "drexp/error.hpp"
#include "drexp/experiments.hpp"
#include "drexp/family.hpp"
#include "drexp/nonparametric.hpp"
#include "drexp/numeric.hpp"
#include "drexp/sample.hpp"

namespace drexp::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0.0";

inline json extended(double v) {
    if (v == kInf) return "+inf";
    if (v == -kInf) return "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

inline std::string field_error(const std::string& path, const std::string& what) {
    return "config field '" + path + "': " + what;
}

inline double read_number(const json& j, const std::string& path, bool allow_inf = false) {
    if (j.is_number()) return j.get<double>();
    if (allow_inf && j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
    }
    throw UsageError(field_error(path, allow_inf ? "expected a number or \"inf\"" : "expected a number"));
}

inline std::size_t read_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw UsageError(field_error(path, "expected a nonnegative integer"));
    return j.get<std::size_t>();
}

inline std::vector<double> read_numbers(const json& j, const std::string& path, bool allow_inf = false) {
    if (!j.is_array()) throw UsageError(field_error(path, "expected an array"));
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(read_number(j[i], path + "[" + std::to_string(i) + "]", allow_inf));
    return v;
}

inline std::string read_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw UsageError(field_error(path, "expected a string"));
    return j.get<std::string>();
}

inline json to_json(const ParameterVector& th) { return json(th.coords()); }

// ---- families --------------------------------------------------------------

inline json family_to_json(const FamilySpec& f) {
    json j;
    j["name"] = family_name(f);
    if (const auto* g = std::get_if<GaussianKnownVar>(&f)) j["sigma2"] = g->sigma2;
    return j;
}

inline FamilySpec family_from_name(const std::string& name, double sigma2 = 1.0) {
    if (name == "bernoulli") return Bernoulli{};
    if (name == "gaussian-kv") return GaussianKnownVar{sigma2};
    if (name == "gaussian-mv") return GaussianMeanVar{};
    if (name == "laplace") return LaplaceLocation{};
    throw UsageError("unknown family '" + name + "' (expected bernoulli, gaussian-kv, gaussian-mv or laplace)");
}

// ---- engine results --------------------------------------------------------

inline json to_json(const DrResult& r) {
    json j;
    j["value"] = extended(r.value);
    j["arg_theta"] = r.arg_theta ? to_json(*r.arg_theta) : json(nullptr);
    j["status"] = to_string(r.status);
    j["diagnostics"] = {{"evaluations", r.evals},
                        {"tolerance_achieved", extended(r.tolerance_achieved)},
                        {"expansions", r.expansions},
                        {"detail", r.detail}};
    return j;
}

inline json to_json(const OptimizerConfig& c) {
    return {{"coarse_grid_points", c.coarse_grid_points},
            {"refine_tolerance", c.refine_tolerance},
            {"blowup_threshold", c.blowup_threshold},
            {"domain_expansion_factor", c.domain_expansion_factor},
            {"max_expansions", c.max_expansions},
            {"threads", c.threads}};
}

inline OptimizerConfig optimizer_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw UsageError(field_error(path, "expected an object"));
    OptimizerConfig c;
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "coarse_grid_points") c.coarse_grid_points = static_cast<int>(read_count(v, p));
        else if (key == "refine_tolerance") c.refine_tolerance = read_number(v, p);
        else if (key == "blowup_threshold") c.blowup_threshold = read_number(v, p);
        else if (key == "domain_expansion_factor") c.domain_expansion_factor = read_number(v, p);
        else if (key == "max_expansions") c.max_expansions = static_cast<int>(read_count(v, p));
        else if (key == "threads") c.threads = static_cast<unsigned>(read_count(v, p));
        else throw UsageError(field_error(p, "unknown field"));
    }
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw UsageError(field_error(path, e.what()));
    }
    return c;
}

// ---- nonparametric ---------------------------------------------------------

inline DiscreteDistribution discrete_from_json(const json& j) {
    if (!j.is_object() || !j.contains("support") || !j.contains("probs"))
        throw UsageError("discrete distribution needs fields 'support' and 'probs'");
    return DiscreteDistribution(read_numbers(j.at("support"), "support"), read_numbers(j.at("probs"), "probs"));
}

inline json to_json(const DiscreteDistribution& d) { return {{"support", d.support()}, {"probs", d.probs()}}; }

// ---- studies ---------------------------------------------------------------

inline json to_json(const StudyConfig& c) {
    json j;
    j["study"] = to_string(c.kind);
    j["seed"] = c.seed;
    j["replications"] = c.replications;
    j["n_grid"] = c.n_grid;
    json fam = family_to_json(c.family);
    fam["theta"] = to_json(c.theta);
    j["family"] = fam;
    j["phi"] = c.phi;
    json gs = json::array();
    for (double g : c.gammas) gs.push_back(extended(g));
    j["gammas"] = gs;
    j["k"] = c.k;
    j["k_schedule"] = {{"coefficient", c.k_coefficient}, {"exponent", c.k_exponent}};
    j["level"] = c.level;
    j["k_override"] = c.k_override ? json(*c.k_override) : json(nullptr);
    j["x1"] = c.x1;
    j["k_values"] = c.k_values;
    j["beta_over_n"] = c.beta_over_n;
    j["contamination"] = c.contamination;
    j["contamination_value"] = c.contamination_value;
    j["epsilon"] = c.epsilon;
    j["threads"] = c.threads;
    j["output"] = c.output;
    j["optimizer"] = to_json(c.optimizer);
    return j;
}

/// Starts from the study's defaults and applies every field present; unknown
/// fields and type errors are reported with their path.
inline StudyConfig study_from_json(const json& j, const std::string& path = "$") {
    if (!j.is_object()) throw UsageError(field_error(path, "expected an object"));
    if (!j.contains("study")) throw UsageError(field_error(path + ".study", "missing"));
    StudyConfig c = default_study_config(parse_study_kind(read_string(j.at("study"), path + ".study")));
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        if (key == "study") continue;
        else if (key == "seed") {
            if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
                throw UsageError(field_error(p, "expected a nonnegative integer"));
            c.seed = v.get<std::uint64_t>();
        } else if (key == "replications") c.replications = read_count(v, p);
        else if (key == "n_grid") {
            if (!v.is_array()) throw UsageError(field_error(p, "expected an array"));
            c.n_grid.clear();
            for (std::size_t i = 0; i < v.size(); ++i) c.n_grid.push_back(read_count(v[i], p + "[" + std::to_string(i) + "]"));
        } else if (key == "family") {
            if (!v.is_object() || !v.contains("name")) throw UsageError(field_error(p, "expected an object with 'name'"));
            double s2 = 1.0;
            for (const auto& [fk, fv] : v.items()) {
                if (fk == "sigma2") s2 = read_number(fv, p + ".sigma2");
                else if (fk != "name" && fk != "theta") throw UsageError(field_error(p + "." + fk, "unknown field"));
            }
            try {
                c.family = family_from_name(read_string(v.at("name"), p + ".name"), s2);
            } catch (const UsageError& e) {
                throw UsageError(field_error(p + ".name", e.what()));
            }
            if (v.contains("theta")) c.theta = ParameterVector(read_numbers(v.at("theta"), p + ".theta"));
        } else if (key == "phi") c.phi = read_string(v, p);
        else if (key == "gammas") c.gammas = read_numbers(v, p, true);
        else if (key == "k") c.k = read_number(v, p);
        else if (key == "k_schedule") {
            if (!v.is_object()) throw UsageError(field_error(p, "expected an object"));
            for (const auto& [sk, sv] : v.items()) {
                if (sk == "coefficient") c.k_coefficient = read_number(sv, p + ".coefficient");
                else if (sk == "exponent") c.k_exponent = read_number(sv, p + ".exponent");
                else throw UsageError(field_error(p + "." + sk, "unknown field"));
            }
        } else if (key == "level") c.level = read_number(v, p);
        else if (key == "k_override") {
            if (v.is_null()) c.k_override.reset();
            else c.k_override = read_number(v, p);
        } else if (key == "x1") c.x1 = read_number(v, p);
        else if (key == "k_values") c.k_values = read_numbers(v, p);
        else if (key == "beta_over_n") c.beta_over_n = read_number(v, p);
        else if (key == "contamination") c.contamination = read_numbers(v, p);
        else if (key == "contamination_value") c.contamination_value = read_number(v, p);
        else if (key == "epsilon") c.epsilon = read_number(v, p);
        else if (key == "threads") c.threads = static_cast<unsigned>(read_count(v, p));
        else if (key == "output") c.output = read_string(v, p);
        else if (key == "optimizer") c.optimizer = optimizer_from_json(v, p);
        else throw UsageError(field_error(p, "unknown field"));
    }
    try {
        c.outcome();
        c.validate();
    } catch (const UsageError& e) {
        throw UsageError(field_error(path, e.what()));
    } catch (const Error& e) {
        throw UsageError(field_error(path, e.what()));
    }
    return c;
}

/// A config file holds one study object, or {"studies": [...]} whose other
/// top-level fields are shared defaults for every study.
inline std::vector<StudyConfig> studies_from_json(const json& j) {
    if (!j.is_object()) throw UsageError(field_error("$", "expected an object"));
    if (!j.contains("studies")) return {study_from_json(j)};
    const json& list = j.at("studies");
    if (!list.is_array() || list.empty()) throw UsageError(field_error("$.studies", "expected a nonempty array"));
    std::vector<StudyConfig> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (!list[i].is_object()) throw UsageError(field_error("$.studies[" + std::to_string(i) + "]", "expected an object"));
        json merged = j;
        merged.erase("studies");
        for (const auto& [k, v] : list[i].items()) merged[k] = v;
        out.push_back(study_from_json(merged, "$.studies[" + std::to_string(i) + "]"));
    }
    return out;
}

inline json to_json(const StudyReport& r) {
    json j;
    j["study"] = r.study;
    json cells = json::array();
    for (const auto& c : r.cells) {
        json m;
        for (const auto& x : c.metrics) m[x.name] = extended(x.value);
        cells.push_back({{"group", c.group}, {"n", c.n}, {"metrics", m}});
    }
    j["cells"] = cells;
    json fits = json::array();
    for (const auto& f : r.fits)
        fits.push_back({{"group", f.group},
                        {"slope", extended(f.slope)},
                        {"slope_se", extended(f.slope_se)},
                        {"intercept", extended(f.intercept)},
                        {"r_squared", extended(f.r_squared)},
                        {"points", f.points},
                        {"conclusive", f.conclusive}});
    j["fits"] = fits;
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = checks;
    j["notes"] = r.notes;
    j["summary"] = r.summary();
    return j;
}

inline std::string csv_number(double v) {
    if (std::isinf(v) || std::isnan(v)) return format_extended(v);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Flat per-cell numbers: study,group,n,metric,value. Fits appear as group
/// "fit:<group>" with n = 0.
inline std::string to_csv(const StudyReport& r) {
    std::ostringstream os;
    os << "study,group,n,metric,value\n";
    for (const auto& c : r.cells)
        for (const auto& m : c.metrics)
            os << r.study << ',' << c.group << ',' << c.n << ',' << m.name << ',' << csv_number(m.value) << '\n';
    for (const auto& f : r.fits) {
        const std::string g = "fit:" + f.group;
        os << r.study << ',' << g << ",0,slope," << csv_number(f.slope) << '\n';
        os << r.study << ',' << g << ",0,slope_se," << csv_number(f.slope_se) << '\n';
        os << r.study << ',' << g << ",0,intercept," << csv_number(f.intercept) << '\n';
        os << r.study << ',' << g << ",0,r_squared," << csv_number(f.r_squared) << '\n';
    }
    return os.str();
}

// ---- data ------------------------------------------------------------------

/// One observation per line; blank lines and lines starting with '#' are
/// skipped. A malformed row is reported with its line number.
inline Sample read_observations(std::istream& in, const std::string& name = "input") {
    std::vector<double> xs;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r,");
        const std::string cell = line.substr(b, e - b + 1);
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(cell, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != cell.size() || cell.empty() || !std::isfinite(v))
            throw UsageError(name + ":" + std::to_string(no) + ": malformed observation '" + cell + "'");
        xs.push_back(v);
    }
    if (xs.empty()) throw UsageError(name + ": no observations");
    return Sample(std::move(xs));
}

inline Sample read_observations(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open data file '" + path + "'");
    return read_observations(f, path);
}

} // namespace drexp::io
