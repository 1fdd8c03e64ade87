// drexp: evaluate DR-expectations, likelihood intervals, oracle cross-checks
// and Monte Carlo studies from the command line.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "drexp/drexp.hpp"
#include "drexp/io.hpp"
#include "drexp/oracle.hpp"
#include "manifest.hpp"

namespace {

using drexp::io::json;
namespace fs = std::filesystem;

constexpr int kUsage = 1;
constexpr int kNumerical = 2;

struct Global {
    std::uint64_t seed = 20240601;
    unsigned threads = 1;
    std::string config;
};

struct ModelFlags {
    std::string data;
    std::string family;
    double sigma2 = 1.0;
    std::vector<std::string> stats;
    std::string log_partition;
    std::string log_base = "0";
    std::vector<double> support_points;
    std::vector<double> support_range;
    std::vector<std::string> theta_domain;
    std::string phi = "x";
    double beta = 1.0;
    std::vector<double> phi_bounds;
    int grid_points = 201;
    double refine_tol = 1e-9;
    double blowup_threshold = 1e8;
    double expansion_factor = 10;
    int max_expansions = 6;
    std::string out;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
    sub->add_option("data", f.data, "Observations, one per line");
    sub->add_option("--family", f.family, "bernoulli | gaussian-kv | gaussian-mv | laplace | custom");
    sub->add_option("--sigma2", f.sigma2, "Known variance for gaussian-kv")->capture_default_str();
    sub->add_option("--stat", f.stats, "Custom family: sufficient statistic in x (repeat per dimension)");
    sub->add_option("--log-partition", f.log_partition, "Custom family: A(theta) in theta1..thetad");
    sub->add_option("--log-base", f.log_base, "Custom family: log h(x)")->capture_default_str();
    sub->add_option("--support-points", f.support_points, "Custom family: discrete support")->delimiter(',');
    sub->add_option("--support-range", f.support_range, "Custom family: support interval lo,hi")
        ->delimiter(',')
        ->expected(2);
    sub->add_option("--theta-domain", f.theta_domain,
                    "Custom family: open interval lo,hi for one natural parameter (repeat per dimension; "
                    "default the real line)");
    sub->add_option("--phi", f.phi, "Outcome as an expression in x")->capture_default_str();
    sub->add_option("--beta", f.beta, "Multiplier applied to phi")->capture_default_str();
    sub->add_option("--phi-bounds", f.phi_bounds, "Declare phi bounded in lo,hi (before --beta)")
        ->delimiter(',')
        ->expected(2);
    sub->add_option("--grid-points", f.grid_points, "Coarse grid points per dimension")->capture_default_str();
    sub->add_option("--refine-tol", f.refine_tol, "Relative refinement tolerance")->capture_default_str();
    sub->add_option("--blowup-threshold", f.blowup_threshold, "Objective level declaring +inf")->capture_default_str();
    sub->add_option("--expansion-factor", f.expansion_factor, "Working box growth factor")->capture_default_str();
    sub->add_option("--max-expansions", f.max_expansions, "Working box expansions")->capture_default_str();
    sub->add_option("--out", f.out, "Write the JSON result here instead of stdout");
}

drexp::FamilySpec build_family(const ModelFlags& f) {
    if (f.family.empty()) throw drexp::UsageError("--family is required");
    if (f.family != "custom") return drexp::io::family_from_name(f.family, f.sigma2);
    if (f.stats.empty() || f.log_partition.empty())
        throw drexp::UsageError("custom family needs --stat and --log-partition");
    drexp::Support s;
    if (!f.support_points.empty()) s.points = f.support_points;
    if (f.support_range.size() == 2) {
        s.lo = f.support_range[0];
        s.hi = f.support_range[1];
    }
    std::optional<drexp::ParameterBox> dom;
    if (!f.theta_domain.empty()) {
        if (f.theta_domain.size() != f.stats.size())
            throw drexp::UsageError("give one --theta-domain per --stat");
        dom = drexp::ParameterBox::real_line(f.stats.size());
        for (std::size_t i = 0; i < f.theta_domain.size(); ++i) {
            const auto& spec = f.theta_domain[i];
            const auto comma = spec.find(',');
            if (comma == std::string::npos)
                throw drexp::UsageError("--theta-domain expects lo,hi, got '" + spec + "'");
            try {
                dom->lo[i] = drexp::parse_extended(spec.substr(0, comma));
                dom->hi[i] = drexp::parse_extended(spec.substr(comma + 1));
            } catch (const drexp::Error&) {
                throw drexp::UsageError("--theta-domain expects numbers or -inf/inf, got '" + spec + "'");
            }
            if (!(dom->lo[i] < dom->hi[i])) throw drexp::UsageError("--theta-domain needs lo < hi");
        }
    }
    return drexp::ExponentialFamily::from_expressions("custom", f.stats, f.log_partition, f.log_base, s, dom);
}

drexp::OutcomeFn build_outcome(const ModelFlags& f) {
    std::optional<drexp::Bounds> b;
    if (f.phi_bounds.size() == 2) {
        if (!(f.phi_bounds[0] <= f.phi_bounds[1])) throw drexp::UsageError("--phi-bounds needs lo <= hi");
        b = drexp::Bounds{f.phi_bounds[0], f.phi_bounds[1]};
    }
    auto phi = drexp::OutcomeFn::expression(f.phi, b);
    return f.beta == 1.0 ? phi : phi.scaled(f.beta);
}

drexp::OptimizerConfig build_optimizer(const ModelFlags& f, const Global& g) {
    drexp::OptimizerConfig c;
    c.coarse_grid_points = f.grid_points;
    c.refine_tolerance = f.refine_tol;
    c.blowup_threshold = f.blowup_threshold;
    c.domain_expansion_factor = f.expansion_factor;
    c.max_expansions = f.max_expansions;
    c.threads = g.threads;
    try {
        c.validate();
    } catch (const drexp::DomainError& e) {
        throw drexp::UsageError(e.what());
    }
    return c;
}

json model_config(const ModelFlags& f, const drexp::FamilySpec& fam, const drexp::OptimizerConfig& opt) {
    json j;
    j["data"] = f.data;
    j["family"] = drexp::io::family_to_json(fam);
    if (f.family == "custom")
        j["family"].update({{"stats", f.stats}, {"log_partition", f.log_partition}, {"log_base", f.log_base},
                            {"support_points", f.support_points}, {"support_range", f.support_range},
                            {"theta_domain", f.theta_domain}});
    j["phi"] = f.phi;
    j["beta"] = f.beta;
    j["phi_bounds"] = f.phi_bounds.empty() ? json(nullptr) : json(f.phi_bounds);
    j["optimizer"] = drexp::io::to_json(opt);
    return j;
}

void emit(const json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw drexp::UsageError("cannot write '" + out + "'");
    f << text;
}

struct Loaded {
    drexp::Sample sample;
    std::string content;
};

Loaded load_data(const std::string& path) {
    if (path.empty()) throw drexp::UsageError("a data file is required");
    std::string content = drexp::cli::read_file(path);
    std::istringstream in(content);
    return {drexp::io::read_observations(in, path), std::move(content)};
}

// ---- commands --------------------------------------------------------------

struct EvaluateFlags {
    std::string k;
    std::string gamma = "1";
    std::string side = "upper";
};

int cmd_evaluate(const ModelFlags& f, const EvaluateFlags& e, const Global& g) {
    if (e.k.empty()) throw drexp::UsageError("--k is required");
    const auto spec = drexp::PenaltySpec::parse(e.k, e.gamma);
    const auto fam = build_family(f);
    const auto phi = build_outcome(f);
    const auto opt = build_optimizer(f, g);
    const auto data = load_data(f.data);
    const drexp::FittedModel model(fam, data.sample);
    const auto r = e.side == "lower" ? drexp::lower_expectation(model, phi, spec, opt)
                                     : drexp::dr_expectation(model, phi, spec, opt);
    json j = drexp::io::to_json(r);
    j["side"] = e.side;
    j["n"] = data.sample.size();
    j["mle"] = drexp::io::to_json(model.mle());
    j["e_mle"] = model.expectation(model.mle(), phi);
    json cfg = model_config(f, fam, opt);
    cfg["k"] = spec.k;
    cfg["gamma"] = drexp::io::extended(spec.gamma);
    cfg["side"] = e.side;
    j["manifest"] = drexp::cli::RunManifest{"evaluate", cfg, {{f.data, data.content}}}.to_json();
    emit(j, f.out);
    return r.status == drexp::DrStatus::NotConverged ? kNumerical : 0;
}

struct IntervalFlags {
    std::optional<double> level;
    std::optional<double> k;
    std::string gamma = "inf";
};

int cmd_interval(const ModelFlags& f, const IntervalFlags& i, const Global& g) {
    if (i.level.has_value() == i.k.has_value()) throw drexp::UsageError("give exactly one of --level and --k");
    const auto fam = build_family(f);
    const auto phi = build_outcome(f);
    const auto opt = build_optimizer(f, g);
    const auto data = load_data(f.data);
    const drexp::FittedModel model(fam, data.sample);
    json calib;
    double k = 0;
    if (i.level) {
        const int d = static_cast<int>(model.dimension());
        if (!(*i.level > 0.0 && *i.level < 1.0)) throw drexp::UsageError("--level must lie in (0, 1)");
        k = drexp::wilks_k(*i.level, d);
        calib = {{"source", "level"},
                 {"level", *i.level},
                 {"dimension", d},
                 {"chi2_quantile", drexp::special::chi2_quantile(*i.level, d)},
                 {"k", k}};
    } else {
        k = *i.k;
        if (!(k > 0.0) || !std::isfinite(k)) throw drexp::UsageError("--k must be a positive finite number");
        calib = {{"source", "k"}, {"k", k}};
    }
    const auto spec = drexp::PenaltySpec::parse(drexp::format_extended(k), i.gamma);
    const auto iv = drexp::dr_interval(model, phi, spec, opt);
    json j;
    j["lower"] = drexp::io::extended(iv.lo());
    j["upper"] = drexp::io::extended(iv.hi());
    j["k"] = k;
    j["gamma"] = drexp::io::extended(spec.gamma);
    j["calibration"] = calib;
    j["n"] = data.sample.size();
    j["mle"] = drexp::io::to_json(model.mle());
    j["e_mle"] = model.expectation(model.mle(), phi);
    j["lower_result"] = drexp::io::to_json(iv.lower);
    j["upper_result"] = drexp::io::to_json(iv.upper);
    json cfg = model_config(f, fam, opt);
    cfg["level"] = i.level ? json(*i.level) : json(nullptr);
    cfg["k"] = i.k ? json(*i.k) : json(nullptr);
    cfg["gamma"] = drexp::io::extended(spec.gamma);
    j["manifest"] = drexp::cli::RunManifest{"interval", cfg, {{f.data, data.content}}}.to_json();
    emit(j, f.out);
    return iv.converged() ? 0 : kNumerical;
}

struct OracleFlags {
    std::vector<std::string> checks;
    bool list = false;
    bool verbose = false;
    std::string out;
};

int cmd_oracle(const OracleFlags& o, const Global& g) {
    if (o.list) {
        for (const auto& name : drexp::oracle_groups()) std::cout << name << "\n";
        return 0;
    }
    drexp::OptimizerConfig opt;
    opt.threads = g.threads;
    const auto checks = drexp::run_oracle(o.checks, opt);
    std::size_t failed = 0, shown = 0;
    json rows = json::array();
    for (const auto& c : checks) {
        const bool fail = c.gating && !c.passed;
        failed += fail;
        json r{{"group", c.group},
               {"name", c.name},
               {"engine", drexp::io::extended(c.engine)},
               {"reference", drexp::io::extended(c.reference)},
               {"as_printed", c.as_printed ? drexp::io::extended(*c.as_printed) : json(nullptr)},
               {"error", drexp::io::extended(c.error)},
               {"tolerance", c.tolerance},
               {"relative", c.relative},
               {"gating", c.gating},
               {"passed", c.passed}};
        rows.push_back(r);
        if (o.verbose || fail || c.as_printed) {
            ++shown;
            std::printf("%-4s %-16s %-48s engine=%-14s ref=%-14s err=%-10s%s\n", fail ? "FAIL" : "pass", c.group.c_str(),
                        c.name.c_str(), drexp::format_short(c.engine).c_str(), drexp::format_short(c.reference).c_str(),
                        drexp::format_short(c.error).c_str(),
                        c.as_printed ? (" as-printed=" + drexp::format_short(*c.as_printed) + " (not gated)").c_str() : "");
        }
    }
    std::printf("%zu checks, %zu failed\n", checks.size(), failed);
    if (!o.out.empty()) {
        json cfg{{"checks", o.checks}, {"threads", g.threads}};
        emit({{"checks", rows},
              {"total", checks.size()},
              {"failed", failed},
              {"manifest", drexp::cli::RunManifest{"oracle", cfg, {}}.to_json()}},
             o.out);
    }
    return failed ? kNumerical : 0;
}

struct SimulateFlags {
    std::string config;
    std::string out_dir = ".";
};

int cmd_simulate(const SimulateFlags& s, const Global& g, bool seed_given, bool threads_given) {
    const std::string path = !s.config.empty() ? s.config : g.config;
    if (path.empty()) throw drexp::UsageError("simulate needs --config <file>");
    const std::string content = drexp::cli::read_file(path);
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw drexp::UsageError(path + ": invalid JSON: " + e.what());
    }
    auto studies = drexp::io::studies_from_json(j);
    fs::create_directories(s.out_dir);
    for (auto& cfg : studies) {
        if (seed_given) cfg.seed = g.seed;
        if (threads_given) cfg.threads = g.threads;
        const auto rep = drexp::run_study(cfg);
        const std::string stem = cfg.output.empty() ? std::string(drexp::to_string(cfg.kind)) : cfg.output;
        const fs::path base = fs::path(s.out_dir) / stem;
        if (base.has_parent_path()) fs::create_directories(base.parent_path());
        json out = drexp::io::to_json(rep);
        out["wall_time_s"] = rep.wall_time_s;
        out["manifest"] = drexp::cli::RunManifest{"simulate", drexp::io::to_json(cfg), {{path, content}}}.to_json();
        emit(out, base.string() + ".json");
        std::ofstream csv(base.string() + ".csv");
        if (!csv) throw drexp::UsageError("cannot write '" + base.string() + ".csv'");
        csv << drexp::io::to_csv(rep);
        std::cout << rep.summary() << " -> " << base.string() << ".{json,csv}\n";
    }
    return 0;
}

/// Values from the global --config file fill options not given on the command
/// line: top-level keys and those under the subcommand's name.
void apply_config_defaults(CLI::App* sub, const std::string& path) {
    const json j = json::parse(drexp::cli::read_file(path));
    if (!j.is_object()) throw drexp::UsageError(path + ": expected a JSON object");
    auto apply = [&](const json& section, const std::string& where) {
        for (const auto& [key, v] : section.items()) {
            if (key == "seed" || key == "threads" || (v.is_object() && where == "$")) continue;
            CLI::Option* opt = sub->get_option_no_throw(key == "data" ? "data" : "--" + key);
            if (!opt) throw drexp::UsageError(path + ": config field '" + where + "." + key + "' is not an option of " + sub->get_name());
            if (opt->count() > 0) continue;
            if (v.is_array()) {
                for (const auto& x : v) opt->add_result(x.is_string() ? x.get<std::string>() : x.dump());
            } else {
                opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
            }
            opt->run_callback();
        }
    };
    apply(j, "$");
    if (j.contains(sub->get_name()) && j.at(sub->get_name()).is_object()) apply(j.at(sub->get_name()), "$." + sub->get_name());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DR-expectations: likelihood-penalized nonlinear expectations"};
    app.set_version_flag("--version", std::string("drexp ") + drexp::cli::kToolVersion);
    app.require_subcommand(1);
    Global g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed for simulations")->capture_default_str();
    auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads")->capture_default_str();
    app.add_option("--config", g.config, "JSON configuration file");

    ModelFlags ef, inf;
    EvaluateFlags ev;
    auto* evaluate = app.add_subcommand("evaluate", "DR-expectation of phi under a fitted family");
    add_model_flags(evaluate, ef);
    evaluate->add_option("--k", ev.k, "Uncertainty aversion k > 0");
    evaluate->add_option("--gamma", ev.gamma, "Exponent in [1, inf]")->capture_default_str();
    evaluate->add_option("--side", ev.side, "upper or lower expectation")
        ->check(CLI::IsMember({"upper", "lower"}))
        ->capture_default_str();

    IntervalFlags iv;
    auto* interval = app.add_subcommand("interval", "Likelihood interval for E[phi]");
    add_model_flags(interval, inf);
    auto* level_opt = interval->add_option("--level", iv.level, "Confidence level; k from Wilks calibration");
    auto* k_opt = interval->add_option("--k", iv.k, "Uncertainty aversion k");
    level_opt->excludes(k_opt);
    interval->add_option("--gamma", iv.gamma, "Exponent in [1, inf]")->capture_default_str();

    OracleFlags of;
    auto* oracle = app.add_subcommand("oracle", "Engine versus closed-form cross-checks");
    oracle->add_option("--check", of.checks, "Check group (repeatable); all when omitted");
    oracle->add_flag("--list", of.list, "List check groups");
    oracle->add_flag("--verbose", of.verbose, "Print every check");
    oracle->add_option("--out", of.out, "Write a JSON table here");

    SimulateFlags sf;
    auto* simulate = app.add_subcommand("simulate", "Run Monte Carlo studies from a JSON config");
    simulate->add_option("--config", sf.config, "Study configuration");
    simulate->add_option("--out-dir", sf.out_dir, "Directory for report files")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "drexp: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (!g.config.empty()) {
            for (auto* sub : {evaluate, interval})
                if (sub->parsed()) apply_config_defaults(sub, g.config);
        }
        if (evaluate->parsed()) return cmd_evaluate(ef, ev, g);
        if (interval->parsed()) return cmd_interval(inf, iv, g);
        if (oracle->parsed()) return cmd_oracle(of, g);
        if (simulate->parsed()) return cmd_simulate(sf, g, seed_opt->count() > 0, threads_opt->count() > 0);
    } catch (const drexp::UsageError& e) {
        std::cerr << "drexp: usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const drexp::DomainError& e) {
        std::cerr << "drexp: usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const CLI::ParseError& e) {
        std::cerr << "drexp: " << e.what() << "\n";
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << "drexp: usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const drexp::Error& e) {
        std::cerr << "drexp: numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "drexp: failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
