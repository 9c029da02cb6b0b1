#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "blowup/config.hpp"
#include "blowup/dynamics.hpp"
#include "blowup/growth.hpp"
#include "blowup/monotone.hpp"
#include "blowup/optimize.hpp"
#include "blowup/parallel.hpp"
#include "blowup/pmp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blowup;

namespace {

// Exit codes: 0 success, 2 config, 3 numerics, 4 well-posedness.
constexpr int kExitConfig = 2;
constexpr int kExitNumerics = 3;
constexpr int kExitWellPosed = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    double tmax = 10.0;
    double eps_blow = 0.0;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "system definition (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--tmax", args.tmax, "horizon cap");
    cmd->add_option("--eps-blow", args.eps_blow, "compact-chart blowup threshold");
    cmd->add_option("--jobs", args.jobs, "parallelism (default: available cores)");
}

IntegrateOptions make_opts(const CommonArgs& args) {
    IntegrateOptions opts;
    opts.t_max = args.tmax;
    if (args.eps_blow > 0.0) opts.eps_blow = args.eps_blow;
    return opts;
}

json meta() {
    const auto now = std::chrono::system_clock::now();
    return {{"generated_at",
             std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()}};
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

fs::path prepare_out(const CommonArgs& args, const json& config) {
    fs::create_directories(args.out_dir);
    write_json(fs::path(args.out_dir) / "config.json", config);
    return args.out_dir;
}

void write_radius_plot(const fs::path& p, const ControlSystem& sys, const Trajectory& traj) {
    std::ofstream out(p);
    out << "t,radius\n";
    out.precision(17);
    for (const auto& s : traj.samples)
        out << s.t << ',' << outer_radius(sys, s) << "\n";
}

void write_costate_plot(const fs::path& p, const CostatePath& path) {
    std::ofstream out(p);
    out << "t,psi_norm\n";
    out.precision(17);
    for (const auto& s : path.samples) out << s.t << ',' << norm(s.psi) << "\n";
}

Mode parse_mode(const std::string& s) {
    if (s == "ti") return Mode::TI;
    if (s == "ts") return Mode::TS;
    throw ConfigError("--mode must be ti or ts");
}

int cmd_simulate(const CommonArgs& args) {
    const json config = parse_file(args.config_path);
    const ControlSystem sys = system_from_json(config);
    const ControlLaw law = law_from_json(config, sys);
    const fs::path out = prepare_out(args, config);

    const Trajectory traj = integrate(sys, law, make_opts(args));
    json summary = trajectory_summary(traj);
    if (traj.blowup) {
        const auto [T, err] = blowup_time(sys, law, make_opts(args));
        summary["T_hat"] = T;
        summary["err"] = err;
        std::printf("T_hat = %.9f +/- %.2e\n", T, err);
    } else {
        std::printf("no blowup before t_max = %g\n", args.tmax);
    }
    summary["meta"] = meta();
    write_json(out / "summary.json", summary);
    {
        std::ofstream csv(out / "trajectory.csv");
        write_trajectory_csv(csv, traj);
    }
    write_radius_plot(out / "plot_radius.csv", sys, traj);
    return 0;
}

int cmd_optimize(const CommonArgs& args, const std::string& mode_s, const std::string& method,
                 int dirs, bool force) {
    const json config = parse_file(args.config_path);
    const ControlSystem sys = system_from_json(config);
    const Mode mode = parse_mode(mode_s);
    const fs::path out = prepare_out(args, config);
    const IntegrateOptions opts = make_opts(args);

    for (const auto& w : sweep_audit_warnings(sys, mode, args.tmax))
        std::fprintf(stderr, "warning: %s\n", w.c_str());

    if (mode == Mode::TS) {
        const AssumptionReport rep = audit(sys, args.tmax);
        if (!rep.passed("P5")) {
            if (!force) {
                std::fprintf(stderr,
                             "TS not well posed: (P5) zeta audit did not pass "
                             "(use --force to search anyway)\n");
                return kExitWellPosed;
            }
            std::fprintf(stderr, "warning: TS gate overridden by --force\n");
        }
    }

    int k = 6;
    std::vector<Vec> values;
    if (config.contains("optimize")) {
        const json& jo = config.at("optimize");
        if (jo.contains("k")) k = jo.at("k").get<int>();
        if (jo.contains("values"))
            for (const auto& e : jo.at("values")) {
                if (e.is_number())
                    values.push_back({e.get<double>()});
                else {
                    Vec v;
                    for (const auto& c : e) v.push_back(c.get<double>());
                    values.push_back(std::move(v));
                }
            }
    }
    if (values.empty()) values = default_control_values(sys);

    std::ofstream ranked(out / "ranked.jsonl");
    json top_report;
    double top_T = 0.0;

    auto emit_sweep = [&](const std::vector<SweepCandidate>& cands) {
        std::printf("%-6s %-22s %-14s %-10s\n", "rank", "psi0", "T_hat", "gap");
        int rank = 0;
        for (const auto& c : cands) {
            json line;
            line["psi0"] = c.psi0;
            line["T_hat"] = c.blew_up ? json(c.T_hat) : json(nullptr);
            line["err"] = c.err;
            if (c.error.empty()) {
                line["gap"] = c.report.hamiltonian_gap;
                line["verdicts"] = report_json(c.report)["verdicts"];
            } else {
                line["error"] = c.error;
            }
            ranked << line.dump() << "\n";
            std::string dir = "(";
            for (size_t i = 0; i < c.psi0.size(); ++i)
                dir += (i ? "," : "") + std::to_string(c.psi0[i]);
            dir += ")";
            std::printf("%-6d %-22s %-14.9f %-10.3e\n", rank++, dir.c_str(),
                        c.blew_up ? c.T_hat : std::nan(""),
                        c.error.empty() ? c.report.hamiltonian_gap : std::nan(""));
        }
        const auto& best = cands.front();
        top_report = report_json(best.report);
        top_T = best.T_hat;
    };

    if (method == "sweep") {
        emit_sweep(sphere_sweep(sys, mode, dirs, opts, args.jobs));
    } else if (method == "brute") {
        BruteForceOptions bf;
        bf.k = k;
        const BruteForceResult res = brute_force(sys, mode, values, bf, opts);
        for (const auto& c : res.candidates) {
            json line;
            line["law"] = c.assignment;
            line["T_hat"] = c.blew_up ? json(c.T) : json(nullptr);
            ranked << line.dump() << "\n";
        }
        json best;
        best["law"] = {{"breakpoints", res.law.breakpoints}};
        json vals = json::array();
        for (const auto& v : res.law.values) vals.push_back(v);
        best["law"]["values"] = vals;
        best["T_hat"] = res.T;
        best["window"] = res.window;
        ranked << best.dump() << "\n";
        top_T = res.T;
        std::printf("brute force best T = %.9f over %ld laws (window %.6f)\n", res.T,
                    res.evaluated, res.window);
    } else if (method == "cross") {
        const CrossValidation cv = cross_validate(sys, mode, k, values, dirs, opts, args.jobs);
        json line;
        line["T_brute"] = cv.T_brute;
        line["T_sweep"] = cv.T_sweep;
        line["slack"] = cv.slack;
        line["consistent"] = cv.consistent;
        ranked << line.dump() << "\n";
        top_report = report_json(cv.sweep_top.report);
        top_T = cv.T_sweep;
        std::printf("cross-validate: sweep T = %.9f, brute T = %.9f, slack = %.3e -> %s\n",
                    cv.T_sweep, cv.T_brute, cv.slack, cv.consistent ? "consistent" : "FAIL");
    } else {
        throw ConfigError("--method must be sweep|brute|cross");
    }

    json summary;
    summary["mode"] = mode_s;
    summary["method"] = method;
    summary["top_T"] = top_T;
    summary["meta"] = meta();
    write_json(out / "summary.json", summary);
    if (!top_report.is_null()) write_json(out / "report.json", top_report);
    return 0;
}

int cmd_audit(const CommonArgs& args) {
    const json config = parse_file(args.config_path);
    const ControlSystem sys = system_from_json(config);
    const fs::path out = prepare_out(args, config);
    const AssumptionReport rep = audit(sys, args.tmax);
    write_json(out / "report.json", report_json(rep));
    std::printf("%-6s %-14s %s\n", "id", "status", "witness");
    for (const auto& c : rep.checks) {
        const char* st = c.status == CheckStatus::Pass
                             ? "pass"
                             : (c.status == CheckStatus::Fail ? "FAIL" : "not-checkable");
        std::printf("%-6s %-14s %s (t=%g, r=%g, value=%g)\n", c.id.c_str(), st,
                    c.witness.note.c_str(), c.witness.t, c.witness.r, c.witness.value);
    }
    return 0;
}

int cmd_certify(const CommonArgs& args, const std::string& mode_s, const std::string& shoot_dir,
                const std::string& traj_path, const std::string& costate_path) {
    const json config = parse_file(args.config_path);
    const ControlSystem sys = system_from_json(config);
    const Mode mode = parse_mode(mode_s);
    const fs::path out = prepare_out(args, config);
    const IntegrateOptions opts = make_opts(args);

    Trajectory traj;
    CostatePath costate;
    if (!shoot_dir.empty()) {
        Vec psi0;
        std::stringstream ss(shoot_dir);
        std::string cell;
        while (std::getline(ss, cell, ',')) psi0.push_back(std::stod(cell));
        const double m = norm(psi0);
        if (!(m > 0.0)) throw ConfigError("--shoot direction must be nonzero");
        psi0 = scaled(psi0, 1.0 / m);
        ShootResult sr = shoot(sys, psi0, opts, mode);
        traj = std::move(sr.traj);
        costate = std::move(sr.costate);
    } else {
        if (traj_path.empty() || costate_path.empty())
            throw ConfigError("certify needs --shoot or both --traj and --costate");
        std::ifstream tf(traj_path);
        if (!tf) throw ConfigError("cannot open " + traj_path);
        traj = read_trajectory_csv(tf, sys);
        std::ifstream cf(costate_path);
        if (!cf) throw ConfigError("cannot open " + costate_path);
        costate = read_costate_csv(cf);
        const json summary_in = parse_file((fs::path(traj_path).parent_path() /
                                            "summary.json")
                                               .string());
        if (!summary_in.at("T_hat").is_null())
            traj.blowup = BlowupEstimate{summary_in.at("T_hat").get<double>(),
                                         summary_in.at("err").get<double>()};
    }

    const PMPReport rep = certify(traj, costate, sys, mode);
    write_json(out / "report.json", report_json(rep));
    {
        std::ofstream csv(out / "trajectory.csv");
        write_trajectory_csv(csv, traj);
        std::ofstream ccsv(out / "costate.csv");
        write_costate_csv(ccsv, costate);
    }
    write_radius_plot(out / "plot_radius.csv", sys, traj);
    write_costate_plot(out / "plot_costate.csv", costate);
    json summary = trajectory_summary(traj);
    summary["verdicts"] = report_json(rep)["verdicts"];
    summary["meta"] = meta();
    write_json(out / "summary.json", summary);

    std::printf("hamiltonian_gap = %.3e\n", rep.hamiltonian_gap);
    std::printf("verdicts: H_max=%s transversality=%s sign=%s weighted_monotone=%s\n",
                rep.verdicts.h_max ? "pass" : "FAIL",
                (rep.verdicts.tail_decay && rep.verdicts.tail_small) ? "pass"
                : rep.tail_applicable                                ? "FAIL"
                                                                     : "n/a",
                rep.verdicts.sign ? "pass" : "FAIL",
                rep.verdicts.weighted_monotone ? "pass" : "FAIL");
    return 0;
}

int cmd_monotone(const CommonArgs& args, int seeds) {
    const json config = parse_file(args.config_path);
    const ControlSystem sys = system_from_json(config);
    const fs::path out = prepare_out(args, config);

    double M = 1.0, horizon = 1.0;
    if (config.contains("monotone")) {
        const json& jm = config.at("monotone");
        if (jm.contains("M")) M = jm.at("M").get<double>();
        if (jm.contains("horizon")) horizon = jm.at("horizon").get<double>();
    }
    const ThresholdBundle bundle = rho_threshold(sys, horizon, M);
    const std::string kind = config.at("kind").get<std::string>();

    std::vector<MonotoneResult> results(static_cast<size_t>(seeds));
    std::vector<MonotoneInstance> instances(static_cast<size_t>(seeds));
    parallel_for(seeds, args.jobs, [&](int i) {
        const MonotoneInstance inst = random_instance(sys, bundle, static_cast<uint64_t>(i));
        results[static_cast<size_t>(i)] = certify_monotone(
            sys, inst.drift, inst.y_hat0, inst.y_tilde0, inst.t0, inst.T, bundle);
        instances[static_cast<size_t>(i)] = inst;
    });

    std::ofstream jsonl(out / "monotone.jsonl");
    int passed = 0;
    for (int i = 0; i < seeds; ++i) {
        const auto& r = results[static_cast<size_t>(i)];
        const bool pass = r.status == MonotoneResult::Status::Pass;
        passed += pass ? 1 : 0;
        json line;
        line["seed"] = i;
        line["kind"] = kind;
        line["rho"] = bundle.rho;
        line["M"] = bundle.M;
        line["min_increment"] = r.min_increment;
        line["pass"] = pass;
        if (!pass) line["detail"] = r.detail;
        jsonl << line.dump() << "\n";
    }

    // Gap series of the first instance for plotting.
    if (seeds > 0) {
        const MonotoneInstance& inst = instances.front();
        std::ofstream gp(out / "plot_gap.csv");
        gp << "t,gap\n";
        gp.precision(17);
        for (const GapSample& g :
             gap_series(sys, inst.drift, inst.y_hat0, inst.y_tilde0, inst.t0, inst.T, bundle))
            gp << g.t << ',' << g.gap << "\n";
    }

    std::printf("%d/%d instances pass (rho=%.6g, M=%g)\n", passed, seeds, bundle.rho,
                bundle.M);
    return passed == seeds ? 0 : kExitNumerics;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-blowup-time control: simulation, search, certification"};
    app.require_subcommand(1);

    CommonArgs sim_args, opt_args, audit_args, cert_args, mono_args;
    std::string mode = "ti", method = "sweep";
    int dirs = 16, seeds = 50;
    bool force = false;
    std::string shoot_dir, traj_path, costate_path;
    std::string cert_mode = "ti";

    CLI::App* sim = app.add_subcommand("simulate", "integrate and estimate the blowup time");
    add_common(sim, sim_args);

    CLI::App* opt = app.add_subcommand("optimize", "search extremal controls");
    add_common(opt, opt_args);
    opt->add_option("--mode", mode, "ti|ts");
    opt->add_option("--method", method, "sweep|brute|cross");
    opt->add_option("--dirs", dirs, "costate directions for the sweep");
    opt->add_flag("--force", force, "search TS even when the zeta gate fails");

    CLI::App* aud = app.add_subcommand("audit", "assumption audit");
    add_common(aud, audit_args);

    CLI::App* cert = app.add_subcommand("certify", "maximum-principle certification");
    add_common(cert, cert_args);
    cert->add_option("--mode", cert_mode, "ti|ts");
    cert->add_option("--shoot", shoot_dir, "costate direction, e.g. 1 or 0.6,0.8");
    cert->add_option("--traj", traj_path, "trajectory csv (with --costate)");
    cert->add_option("--costate", costate_path, "costate csv (with --traj)");

    CLI::App* mono = app.add_subcommand("monotone", "comparison-gap certification batch");
    add_common(mono, mono_args);
    mono->add_option("--seeds", seeds, "number of randomized instances");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (opt->parsed()) return cmd_optimize(opt_args, mode, method, dirs, force);
        if (aud->parsed()) return cmd_audit(audit_args);
        if (cert->parsed())
            return cmd_certify(cert_args, cert_mode, shoot_dir, traj_path, costate_path);
        if (mono->parsed()) return cmd_monotone(mono_args, seeds);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NotWellPosed& e) {
        std::fprintf(stderr, "not well posed: %s\n", e.what());
        return kExitWellPosed;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerics;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerics;
    }
    return 0;
}
