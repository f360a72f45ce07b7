// Batch front-end: loads an experiment config, builds fading ensembles,
// dispatches the solvers and sweeps, and writes CSV/JSON artifacts plus a
// manifest. Exit codes: 0 success, 1 oracle deviation above tolerance,
// 2 config/usage error, 3 solver error (partial artifacts are flagged in
// the manifest).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swipt/json_io.hpp"

namespace {

using nlohmann::json;
using namespace swipt;

constexpr const char* kVersion = "0.1.0";

struct ChannelConfig {
    std::string type = "rician";  // rician | distance | mobility
    RicianParams rician{1.0, 1.5848931924611134e-3, 1.5848931924611134e-3};
    DistanceChannelParams dist{0.5, 0.01, 2.4e9};
    MobilityParams mob{15.0, 0.1, 1.0};
};

struct ExperimentConfig {
    NonlinearEhParams eh{6400.0, 0.003, 0.0, 1.0};  // p_s 0 = derive from ensemble
    bool p_s_auto = true;
    SystemParams sys{0.0, 2.0, 2.0, 4.0, 1.0};  // sigma2 0 = derive from snr
    std::optional<double> sigma2_override;
    std::vector<double> snr_db{0.0, 10.0, 20.0};
    ChannelConfig channel;
    std::size_t n_states = 100000;
    std::uint64_t seed = 1;
    std::vector<std::string> schemes{"optimal"};
    std::string case_name = "both";  // csir | csi | both
    int q_points = 20;
    std::string out_dir = "out";
    SolveOptions opt;
};

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw std::runtime_error(std::string("config: missing number '") + key + "'");
    return j[key].get<double>();
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: parse error: ") + e.what());
    }
    if (j.contains("eh")) {
        const json& e = j["eh"];
        if (e.contains("a")) cfg.eh.a = require_number(e, "a");
        if (e.contains("b")) cfg.eh.b = require_number(e, "b");
        if (e.contains("t_block")) cfg.eh.t_block = require_number(e, "t_block");
        if (e.contains("p_s")) {
            if (e["p_s"].is_string() && e["p_s"].get<std::string>() == "auto") {
                cfg.p_s_auto = true;
            } else if (e["p_s"].is_number()) {
                cfg.p_s_auto = false;
                cfg.eh.p_s = e["p_s"].get<double>();
            } else {
                throw std::runtime_error("config: eh.p_s must be a number or \"auto\"");
            }
        }
    }
    if (j.contains("sys")) {
        const json& s = j["sys"];
        if (s.contains("p_fixed")) cfg.sys.p_fixed = require_number(s, "p_fixed");
        if (s.contains("p_avg")) cfg.sys.p_avg = require_number(s, "p_avg");
        if (s.contains("p_max")) cfg.sys.p_max = require_number(s, "p_max");
        if (s.contains("zeta")) cfg.sys.zeta = require_number(s, "zeta");
        if (s.contains("sigma2")) cfg.sigma2_override = require_number(s, "sigma2");
    }
    if (j.contains("snr_db")) {
        cfg.snr_db.clear();
        if (j["snr_db"].is_number()) {
            cfg.snr_db.push_back(j["snr_db"].get<double>());
        } else if (j["snr_db"].is_array()) {
            for (const json& v : j["snr_db"]) {
                if (!v.is_number()) throw std::runtime_error("config: snr_db entries must be numbers");
                cfg.snr_db.push_back(v.get<double>());
            }
        } else {
            throw std::runtime_error("config: snr_db must be a number or array");
        }
        if (cfg.snr_db.empty()) throw std::runtime_error("config: snr_db is empty");
    }
    if (j.contains("channel")) {
        const json& c = j["channel"];
        if (c.contains("type")) cfg.channel.type = c["type"].get<std::string>();
        if (cfg.channel.type == "rician") {
            if (c.contains("alpha")) cfg.channel.rician.alpha = require_number(c, "alpha");
            if (c.contains("los_power")) cfg.channel.rician.los_power = require_number(c, "los_power");
            if (c.contains("scatter_var"))
                cfg.channel.rician.scatter_var = require_number(c, "scatter_var");
        } else if (cfg.channel.type == "distance" || cfg.channel.type == "mobility") {
            if (c.contains("a_t")) cfg.channel.dist.a_t = require_number(c, "a_t");
            if (c.contains("a_r")) cfg.channel.dist.a_r = require_number(c, "a_r");
            if (c.contains("f_c")) cfg.channel.dist.f_c = require_number(c, "f_c");
            if (c.contains("d0")) cfg.channel.mob.d0 = require_number(c, "d0");
            if (c.contains("v_max")) cfg.channel.mob.v_max = require_number(c, "v_max");
            if (c.contains("t_block")) cfg.channel.mob.t_block = require_number(c, "t_block");
        } else {
            throw std::runtime_error("config: unknown channel.type " + cfg.channel.type);
        }
    }
    if (j.contains("n_states")) cfg.n_states = j["n_states"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("schemes")) {
        cfg.schemes.clear();
        for (const json& v : j["schemes"]) cfg.schemes.push_back(v.get<std::string>());
    }
    if (j.contains("case")) cfg.case_name = j["case"].get<std::string>();
    if (j.contains("q_points")) cfg.q_points = j["q_points"].get<int>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("tol")) cfg.opt.tol = require_number(j, "tol");
    if (j.contains("max_iter")) cfg.opt.max_iter = j["max_iter"].get<int>();
    if (j.contains("max_outer")) cfg.opt.max_outer = j["max_outer"].get<int>();
}

void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.eh.a > 0.0) || !(cfg.eh.b > 0.0)) throw std::runtime_error("config: eh.a and eh.b must be > 0");
    if (!(cfg.eh.t_block > 0.0)) throw std::runtime_error("config: eh.t_block must be > 0");
    if (!cfg.p_s_auto && !(cfg.eh.p_s > 0.0)) throw std::runtime_error("config: eh.p_s must be > 0");
    if (!(cfg.sys.p_fixed > 0.0)) throw std::runtime_error("config: sys.p_fixed must be > 0");
    if (!(cfg.sys.p_avg > 0.0)) throw std::runtime_error("config: sys.p_avg must be > 0");
    if (!(cfg.sys.p_max >= cfg.sys.p_avg)) throw std::runtime_error("config: sys.p_max must be >= sys.p_avg");
    if (!(cfg.sys.zeta > 0.0)) throw std::runtime_error("config: sys.zeta must be > 0");
    if (cfg.sigma2_override && !(*cfg.sigma2_override > 0.0))
        throw std::runtime_error("config: sys.sigma2 must be > 0");
    if (cfg.n_states < 1) throw std::runtime_error("config: n_states must be >= 1");
    if (cfg.q_points < 2) throw std::runtime_error("config: q_points must be >= 2");
    if (cfg.case_name != "csir" && cfg.case_name != "csi" && cfg.case_name != "both")
        throw std::runtime_error("config: case must be csir, csi, or both");
    if (cfg.schemes.empty()) throw std::runtime_error("config: schemes is empty");
    for (const std::string& s : cfg.schemes) {
        bool known_somewhere = false;
        for (const char* cn : {"csir", "csi"}) {
            try {
                (void)parse_scheme(s, cn);
                known_somewhere = true;
            } catch (const std::invalid_argument&) {
            }
        }
        if (!known_somewhere) throw std::runtime_error("config: unknown scheme " + s);
    }
    if (cfg.opt.tol <= 0.0) throw std::runtime_error("config: tol must be > 0");
}

FadingEnsemble build_ensemble(const ExperimentConfig& cfg) {
    if (cfg.channel.type == "rician") return gen_rician(cfg.n_states, cfg.channel.rician, cfg.seed);
    if (cfg.channel.type == "distance") {
        FadingEnsemble ens;
        ens.gains.assign(cfg.n_states, distance_gain(cfg.channel.mob.d0, cfg.channel.dist));
        ens.seed = cfg.seed;
        std::ostringstream meta;
        meta << "distance d=" << cfg.channel.mob.d0 << " n=" << cfg.n_states;
        ens.meta = meta.str();
        return ens;
    }
    return mobility_trace(cfg.n_states, cfg.channel.mob, cfg.channel.dist, cfg.seed);
}

// Per-run derived parameters: the sensitivity reference defaults to
// E[h] p_avg from the generated ensemble, and the noise floor realizes the
// requested average SNR through the same mean.
void finalize_params(const FadingEnsemble& ens, double snr_db, ExperimentConfig& cfg) {
    const double mean_gain = ens.mean_gain();
    if (cfg.p_s_auto) cfg.eh.p_s = mean_gain * cfg.sys.p_avg;
    cfg.sys.sigma2 = cfg.sigma2_override
                         ? *cfg.sigma2_override
                         : mean_gain * cfg.sys.p_avg / std::pow(10.0, snr_db / 10.0);
}

std::string snr_tag(double snr_db) {
    std::ostringstream os;
    os << "snr" << snr_db;
    std::string s = os.str();
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::vector<Scheme> schemes_for_case(const ExperimentConfig& cfg, const std::string& case_name) {
    std::vector<Scheme> out;
    for (const std::string& label : cfg.schemes) {
        try {
            out.push_back(parse_scheme(label, case_name));
        } catch (const std::invalid_argument&) {
            // scheme not defined for this case (e.g. modeswitch under csi)
        }
    }
    return out;
}

std::vector<std::string> cases_requested(const ExperimentConfig& cfg) {
    if (cfg.case_name == "both") return {"csir", "csi"};
    return {cfg.case_name};
}

int cmd_region(ExperimentConfig cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const FadingEnsemble ens = build_ensemble(cfg);

    json manifest;
    manifest["tool"] = "swipt_cli";
    manifest["version"] = kVersion;
    manifest["seed"] = cfg.seed;
    manifest["n_states"] = cfg.n_states;
    manifest["channel"] = cfg.channel.type;
    manifest["snr_db"] = cfg.snr_db;
    manifest["schemes"] = cfg.schemes;
    manifest["case"] = cfg.case_name;
    manifest["q_points"] = cfg.q_points;
    json artifacts = json::array();
    bool all_ok = true;

    const std::string gains_path = (fs::path(cfg.out_dir) / "gains.csv").string();
    write_gains_csv(gains_path, ens);
    artifacts.push_back({{"file", "gains.csv"}, {"kind", "ensemble"}});

    for (double snr : cfg.snr_db) {
        finalize_params(ens, snr, cfg);
        for (const std::string& case_name : cases_requested(cfg)) {
            const std::vector<Scheme> schemes = schemes_for_case(cfg, case_name);
            if (schemes.empty()) continue;
            std::vector<RERegion> regions;
            const auto t0 = std::chrono::steady_clock::now();
            std::size_t n_issues = 0;
            for (Scheme sc : schemes) {
                RERegion r = sweep_region(sc, ens, cfg.q_points, cfg.eh, cfg.sys, cfg.opt);
                n_issues += r.issues.size();
                regions.push_back(std::move(r));
            }
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const std::string base = "regions_" + case_name + "_" + snr_tag(snr);
            write_regions_csv((fs::path(cfg.out_dir) / (base + ".csv")).string(), regions);
            {
                std::ofstream js((fs::path(cfg.out_dir) / (base + ".json")).string());
                json jr = to_json(regions);
                jr = json{{"snr_db", snr},
                          {"sigma2", cfg.sys.sigma2},
                          {"p_s", cfg.eh.p_s},
                          {"regions", jr}};
                js << jr.dump(2) << '\n';
            }
            if (n_issues > 0) all_ok = false;
            artifacts.push_back({{"file", base + ".csv"},
                                 {"kind", "regions"},
                                 {"snr_db", snr},
                                 {"case", case_name},
                                 {"runtime_s", secs},
                                 {"issues", n_issues}});
            artifacts.push_back({{"file", base + ".json"},
                                 {"kind", "regions"},
                                 {"snr_db", snr},
                                 {"case", case_name},
                                 {"runtime_s", secs},
                                 {"issues", n_issues}});
            std::cout << base << ": " << schemes.size() << " scheme(s), " << n_issues
                      << " issue(s), " << secs << " s\n";
        }
    }
    manifest["artifacts"] = artifacts;
    manifest["status"] = all_ok ? "ok" : "partial";
    std::ofstream ms((fs::path(cfg.out_dir) / "manifest.json").string());
    ms << manifest.dump(2) << '\n';
    return all_ok ? 0 : 3;
}

int cmd_solve(ExperimentConfig cfg, const std::string& scheme_label, const std::string& case_name,
              double q_frac, std::optional<double> q_target, const std::string& out_file) {
    const FadingEnsemble ens = build_ensemble(cfg);
    finalize_params(ens, cfg.snr_db.front(), cfg);
    const Scheme scheme = parse_scheme(scheme_label, case_name);
    const double cap = sweep_q_cap(scheme, ens, cfg.eh, cfg.sys);
    const double q = q_target ? *q_target : q_frac * cap;

    json j;
    switch (scheme) {
        case Scheme::csir_optimal:
        case Scheme::csir_suboptimal:
            j = to_json(find_lambda(ens, q,
                                    scheme == Scheme::csir_optimal ? CsirMode::optimal
                                                                   : CsirMode::suboptimal,
                                    cfg.eh, cfg.sys, cfg.opt));
            break;
        case Scheme::csi_optimal:
        case Scheme::csi_suboptimal:
        case Scheme::csi_longterm:
            j = to_json(find_duals(ens, q,
                                   scheme == Scheme::csi_optimal      ? CsiMode::optimal
                                   : scheme == Scheme::csi_suboptimal ? CsiMode::suboptimal
                                                                      : CsiMode::longterm_only,
                                   cfg.eh, cfg.sys, cfg.opt));
            break;
        case Scheme::linear_dps_csir:
            j = to_json(linear_dps_csir(ens, q, cfg.eh, cfg.sys, cfg.opt));
            break;
        case Scheme::mode_switch_csir:
            j = to_json(mode_switch_csir(ens, q, cfg.eh, cfg.sys, cfg.opt));
            break;
        case Scheme::linear_dps_csi:
            j = to_json(linear_dps_csi(ens, q, cfg.eh, cfg.sys, cfg.opt));
            break;
        case Scheme::binary_restricted_csi:
            j = to_json(binary_restricted_csi(ens, q, cfg.eh, cfg.sys, cfg.opt));
            break;
    }
    j["q_target"] = q;
    j["scheme"] = scheme_label;
    j["case"] = case_name;
    j["sigma2"] = cfg.sys.sigma2;
    if (out_file.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream os(out_file);
        if (!os) throw std::runtime_error("cannot open for writing: " + out_file);
        os << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_oracle_check(ExperimentConfig cfg, int q_points, double tol_dev) {
    namespace fs = std::filesystem;
    if (cfg.n_states > 256) {
        std::cerr << "oracle-check: n_states must be <= 256 (got " << cfg.n_states << ")\n";
        return 2;
    }
    fs::create_directories(cfg.out_dir);
    const FadingEnsemble ens = build_ensemble(cfg);
    finalize_params(ens, cfg.snr_db.front(), cfg);

    double max_dev = 0.0;
    json artifacts = json::array();
    for (const std::string& case_name : cases_requested(cfg)) {
        const bool csir = case_name == "csir";
        OracleOptions oo;
        const double cap = csir ? q_max_csir(ens, cfg.eh, cfg.sys) : q_max_csi(ens, cfg.eh, cfg.sys);
        std::vector<double> targets;
        for (int i = 0; i < q_points; ++i)
            targets.push_back(cap * (1.0 - 1e-6) * static_cast<double>(i) /
                              static_cast<double>(q_points - 1));
        OracleCurve curve;
        if (csir) {
            curve = oracle_csir_curve(ens, cfg.eh, cfg.sys, oo);
        } else {
            oo.refine_targets = targets;
            curve = oracle_csi_curve(ens, cfg.eh, cfg.sys, oo);
        }
        const std::string report = "oracle_check_" + case_name + ".csv";
        std::ofstream os((fs::path(cfg.out_dir) / report).string());
        os << "q_target,solver_rate,oracle_rate,rel_deviation\n";
        double case_dev = 0.0;
        for (double q : targets) {
            double solver_rate;
            if (csir) {
                solver_rate =
                    find_lambda(ens, q, CsirMode::optimal, cfg.eh, cfg.sys, cfg.opt).achieved_rate;
            } else {
                solver_rate =
                    find_duals(ens, q, CsiMode::optimal, cfg.eh, cfg.sys, cfg.opt).achieved_rate;
            }
            const double oracle_rate = oracle_rate_at(curve, q);
            const double dev = std::abs(solver_rate - oracle_rate) /
                               std::fmax(std::abs(oracle_rate), 1e-300);
            case_dev = std::fmax(case_dev, dev);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", q, solver_rate, oracle_rate,
                          dev);
            os << buf << '\n';
        }
        max_dev = std::fmax(max_dev, case_dev);
        std::cout << case_name << ": max relative rate deviation " << case_dev << " over "
                  << q_points << " targets\n";
        artifacts.push_back({{"file", report}, {"kind", "oracle-report"}, {"case", case_name},
                             {"max_deviation", case_dev}});
    }
    json manifest{{"tool", "swipt_cli"},
                  {"version", kVersion},
                  {"seed", cfg.seed},
                  {"n_states", cfg.n_states},
                  {"artifacts", artifacts},
                  {"max_deviation", max_dev},
                  {"tolerance", tol_dev},
                  {"status", max_dev <= tol_dev ? "ok" : "deviation"}};
    std::ofstream ms((fs::path(cfg.out_dir) / "manifest.json").string());
    ms << manifest.dump(2) << '\n';
    if (max_dev > tol_dev) {
        std::cerr << "oracle-check: deviation " << max_dev << " exceeds " << tol_dev << "\n";
        return 1;
    }
    return 0;
}

int cmd_qmax(ExperimentConfig cfg, const std::string& out_file) {
    const FadingEnsemble ens = build_ensemble(cfg);
    finalize_params(ens, cfg.snr_db.front(), cfg);
    json j{{"n_states", ens.size()},
           {"seed", cfg.seed},
           {"mean_gain", ens.mean_gain()},
           {"p_s", cfg.eh.p_s},
           {"q_max_csir", q_max_csir(ens, cfg.eh, cfg.sys)},
           {"q_max_csi", q_max_csi(ens, cfg.eh, cfg.sys)},
           {"q_max_longterm", q_max_longterm(ens, cfg.eh, cfg.sys)},
           {"q_cap_linear_csir", q_cap_linear_csir(ens, cfg.eh, cfg.sys)},
           {"q_cap_linear_csi", q_cap_linear_csi(ens, cfg.eh, cfg.sys)}};
    if (out_file.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream os(out_file);
        if (!os) throw std::runtime_error("cannot open for writing: " + out_file);
        os << j.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rate-energy region solver for power-splitting receivers"};
    app.require_subcommand(1);

    std::string config_path, out_override, schemes_csv, case_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::size_t> n_states_flag;
    std::optional<int> q_points_flag;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)");
        sub->add_option("--out", out_override, "output directory or file");
        sub->add_option("--seed", seed_flag, "ensemble seed");
        sub->add_option("--schemes", schemes_csv, "comma-separated scheme labels");
        sub->add_option("--case", case_flag, "csir, csi, or both")
            ->check(CLI::IsMember({"csir", "csi", "both"}));
        sub->add_option("--n-states", n_states_flag, "ensemble size");
        sub->add_option("--q-points", q_points_flag, "energy-target grid size");
    };

    CLI::App* sub_region = app.add_subcommand("region", "sweep rate-energy regions");
    add_common(sub_region);

    CLI::App* sub_solve = app.add_subcommand("solve", "solve one scheme at one target");
    add_common(sub_solve);
    std::string solve_scheme = "optimal", solve_case = "csir";
    double q_frac = 0.5;
    std::optional<double> q_target;
    sub_solve->add_option("--scheme", solve_scheme, "scheme label");
    sub_solve->add_option("--q-frac", q_frac, "target as a fraction of the scheme ceiling");
    sub_solve->add_option("--q-target", q_target, "absolute energy target");

    CLI::App* sub_oracle = app.add_subcommand("oracle-check", "compare solvers to the grid oracle");
    add_common(sub_oracle);
    double oracle_tol = 1e-4;
    sub_oracle->add_option("--tolerance", oracle_tol, "max allowed relative deviation");

    CLI::App* sub_qmax = app.add_subcommand("qmax", "print the energy ceilings");
    add_common(sub_qmax);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) load_config_file(config_path, cfg);
        if (seed_flag) cfg.seed = *seed_flag;
        if (n_states_flag) cfg.n_states = *n_states_flag;
        if (q_points_flag) cfg.q_points = *q_points_flag;
        if (!case_flag.empty()) cfg.case_name = case_flag;
        if (!schemes_csv.empty()) {
            cfg.schemes.clear();
            std::size_t start = 0;
            for (std::size_t i = 0; i <= schemes_csv.size(); ++i) {
                if (i == schemes_csv.size() || schemes_csv[i] == ',') {
                    if (i > start) cfg.schemes.push_back(schemes_csv.substr(start, i - start));
                    start = i + 1;
                }
            }
        }
        if (const char* env = std::getenv("SWIPT_OUT_DIR"); env && *env) cfg.out_dir = env;
        if (!out_override.empty() && (sub_region->parsed() || sub_oracle->parsed()))
            cfg.out_dir = out_override;
        validate_config(cfg);
        if (sub_solve->parsed() && q_target && !(*q_target >= 0.0))
            throw std::runtime_error("solve: q-target must be >= 0");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (sub_region->parsed()) return cmd_region(std::move(cfg));
        if (sub_solve->parsed()) {
            const std::string sc = sub_solve->count("--case") || !case_flag.empty()
                                       ? (case_flag.empty() ? solve_case : case_flag)
                                       : solve_case;
            return cmd_solve(std::move(cfg), solve_scheme, sc == "both" ? "csir" : sc, q_frac,
                             q_target, out_override);
        }
        if (sub_oracle->parsed())
            return cmd_oracle_check(std::move(cfg), q_points_flag.value_or(10), oracle_tol);
        if (sub_qmax->parsed()) return cmd_qmax(std::move(cfg), out_override);
    } catch (const InfeasibleTarget& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
