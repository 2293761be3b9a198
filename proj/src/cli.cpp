#include "neyman/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "neyman/bounds.hpp"
#include "neyman/config.hpp"
#include "neyman/data.hpp"
#include "neyman/montecarlo.hpp"
#include "neyman/oracle.hpp"
#include "neyman/population.hpp"
#include "neyman/service.hpp"

namespace neyman {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct DesignFlags {
    std::string design;
    int M = 0;
    std::int64_t T = 1000;
    std::string schedule;
    std::optional<double> beta;
    std::vector<double> betas;
    std::optional<double> C;
    std::int64_t min_arm_obs = 2;

    void add(CLI::App* app) {
        app->add_option("--design", design, "halfhalf, twostage or mstage");
        app->add_option("--M", M, "number of stages");
        app->add_option("--T", T, "horizon")->capture_default_str();
        app->add_option("--schedule", schedule, "thm3, cor1, cor2, clicks or custom");
        app->add_option("--beta", beta, "two-stage beta");
        app->add_option("--betas", betas, "custom M-stage betas");
        app->add_option("--C", C, "bounded-support constant for cor1/cor2");
        app->add_option("--min-arm-obs", min_arm_obs)->capture_default_str();
    }

    json to_request() const {
        json j = {{"T", T}, {"min_arm_obs", min_arm_obs}};
        if (!design.empty()) j["design"] = design;
        if (M > 0) j["M"] = M;
        if (!schedule.empty()) j["schedule"] = schedule;
        if (beta) j["beta"] = *beta;
        if (!betas.empty()) j["betas"] = betas;
        if (C) j["C"] = *C;
        return j;
    }
};

// "mstage:M=3,schedule=thm3" or "mstage:betas=20/5/1"; T comes from --T unless given.
json design_spec_to_json(const std::string& spec, std::int64_t T) {
    const KindArgs a = parse_kind_args(spec);
    json j = {{"design", a.kind}, {"T", T}};
    for (const auto& [k, v] : a.args) {
        if (k == "M" || k == "T" || k == "min_arm_obs") {
            j[k] = static_cast<std::int64_t>(a.number(k));
        } else if (k == "beta" || k == "C") {
            j[k] = a.number(k);
        } else if (k == "schedule") {
            j[k] = v;
        } else if (k == "betas") {
            std::vector<double> betas;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, '/')) {
                KindArgs one;
                one.kind = "betas";
                one.args["b"] = item;
                betas.push_back(one.number("b"));
            }
            j[k] = betas;
        } else {
            fail(ErrorCode::InvalidArgument, "unknown design parameter '" + k + "'");
        }
    }
    return j;
}

DesignConfig feasible_design(const json& request) {
    const DesignConfig config = design_from_json(request);
    const FeasibilityReport r = check_config(config);
    if (!r.ok) fail(ErrorCode::InfeasibleConfig, "infeasible design: " + r.violation);
    return config;
}

void write_summaries(const std::vector<BatchSummary>& rows, const std::string& format, bool samples,
                     std::ostream& out) {
    if (format == "csv") {
        out << csv_header() << '\n';
        for (const BatchSummary& s : rows) out << csv_row(s) << '\n';
        return;
    }
    if (format == "table") {
        const double base = rows.front().var_tau_hat;
        char line[256];
        std::snprintf(line, sizeof line, "%-10s %3s %8s %10s %16s %12s %12s %10s\n", "design", "M", "T", "n",
                      "var_tau_hat", "mean_ratio", "p95_ratio", "var_vs_1st");
        out << line;
        for (const BatchSummary& s : rows) {
            std::snprintf(line, sizeof line, "%-10s %3d %8lld %10lld %16.6g %12.6f %12.6f %10.4f\n", s.design.c_str(),
                          s.M, static_cast<long long>(s.T), static_cast<long long>(s.n_trajectories), s.var_tau_hat,
                          s.mean_ratio, s.q95_ratio, base > 0.0 ? s.var_tau_hat / base : 0.0);
            out << line;
        }
        return;
    }
    if (rows.size() == 1) {
        out << to_json(rows.front(), samples).dump(2) << '\n';
        return;
    }
    json all = json::array();
    for (const BatchSummary& s : rows) all.push_back(to_json(s, samples));
    out << json{{"schema", kBatchSchema}, {"summaries", all}}.dump(2) << '\n';
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

int advise(const DesignConfig& config, bool assign, std::uint64_t seed, std::istream& in, std::ostream& out,
           std::ostream& err) {
    Started started = init_design(config);
    DesignState state = std::move(started.state);
    const auto prompt = [&](const StageAllocation& a) {
        out << "STAGE " << a.stage_index << " ALLOCATE " << a.t1 << ' ' << a.t0 << '\n';
        if (assign) {
            CounterStream stream(seed, static_cast<std::uint64_t>(a.stage_index), StreamTag::Assignment);
            out << "ASSIGN";
            for (int w : randomize_stage(a, stream)) out << ' ' << w;
            out << '\n';
        }
        out.flush();
    };
    out << "CASE " << to_string(started.first.label) << '\n';
    prompt(started.first);

    std::optional<std::vector<double>> obs[2];
    std::string line;
    while (std::getline(in, line)) {
        const std::vector<std::string> tok = split_ws(line);
        if (tok.empty() || tok[0][0] == '#') continue;
        const StageAllocation pending = state.pending();
        const auto reject = [&](const std::string& reason) {
            out << "ERR " << reason << '\n';
            prompt(pending);
        };
        if (tok[0] != "OBS") {
            reject("expected 'OBS 1 ...' or 'OBS 0 ...', got '" + tok[0] + "'");
            continue;
        }
        if (tok.size() < 2 || (tok[1] != "1" && tok[1] != "0")) {
            reject("OBS needs arm 1 (treated) or 0 (control)");
            continue;
        }
        const int arm = tok[1] == "1" ? 1 : 0;
        const std::int64_t expected = arm == 1 ? pending.t1 : pending.t0;
        std::vector<double> values;
        std::string bad;
        for (std::size_t i = 2; i < tok.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(tok[i].c_str(), &end);
            if (end != tok[i].c_str() + tok[i].size() || !std::isfinite(v)) {
                bad = tok[i];
                break;
            }
            values.push_back(v);
        }
        if (!bad.empty()) {
            reject("not a finite number: '" + bad + "'");
            continue;
        }
        if (static_cast<std::int64_t>(values.size()) != expected) {
            reject("stage " + std::to_string(pending.stage_index) + " expects " + std::to_string(expected) +
                   (arm == 1 ? " treated" : " control") + " observations, got " + std::to_string(values.size()));
            continue;
        }
        if (obs[arm]) {
            reject("OBS " + tok[1] + " already given for stage " + std::to_string(pending.stage_index));
            continue;
        }
        obs[arm] = std::move(values);
        if (!obs[0] || !obs[1]) continue;

        DesignState next_state = state;
        std::optional<StageAllocation> next;
        try {
            next = advance(next_state, *obs[1], *obs[0]);
        } catch (const Error& e) {
            obs[0].reset();
            obs[1].reset();
            reject(e.what());
            continue;
        }
        state = std::move(next_state);
        obs[0].reset();
        obs[1].reset();
        if (!next) {
            const Finalized f = finalize(state);
            out << "DONE tau_hat=" << fmt17(f.tau_hat) << " t1=" << f.totals.t1 << " t0=" << f.totals.t0 << '\n';
            return 0;
        }
        out << "CASE " << to_string(next->label) << '\n';
        prompt(*next);
    }
    err << "input ended before stage " << state.stage << " was complete\n";
    return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adaptive Neyman allocation: designs, simulation, bounds and checks", "neyman"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;

    DesignFlags sim_flags;
    std::string pop_spec = "gaussian:rho=1";
    std::int64_t n = 1000;
    unsigned workers = 0;
    std::string format = "json";
    bool samples = false;
    std::optional<double> bound;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo batch for one design");
    sim_flags.add(simulate);
    simulate->add_option("--pop", pop_spec, "population spec")->capture_default_str();
    simulate->add_option("--n", n, "trajectories")->capture_default_str();
    simulate->add_option("--seed", seed)->capture_default_str();
    simulate->add_option("--workers", workers, "0 = one per hardware thread");
    simulate->add_option("--format", format)->check(CLI::IsMember({"json", "csv", "table"}));
    simulate->add_option("--bound", bound, "report the fraction of ratios above this");
    simulate->add_flag("--samples", samples, "include every trajectory in JSON output");

    std::vector<std::string> design_specs;
    std::int64_t cmp_T = 1000;
    std::string cmp_schedule;
    std::string cmp_pop;
    std::string cmp_format = "csv";
    int max_M = 5;
    auto* compare = app.add_subcommand("compare", "Several designs on common random numbers");
    compare->add_option("--designs", design_specs, "design specs, e.g. halfhalf twostage:beta=1 mstage:M=3");
    compare->add_option("--T", cmp_T)->capture_default_str();
    compare->add_option("--schedule", cmp_schedule, "schedule for the default M sweep");
    compare->add_option("--max-M", max_M, "largest M in the default sweep")->capture_default_str();
    compare->add_option("--pop", cmp_pop, "population spec");
    compare->add_option("--n", n)->capture_default_str();
    compare->add_option("--seed", seed)->capture_default_str();
    compare->add_option("--workers", workers);
    compare->add_option("--format", cmp_format)->check(CLI::IsMember({"json", "csv", "table"}));

    auto* report = app.add_subcommand("report", "Variance table over M on the click-data population");
    report->add_option("--T", cmp_T)->capture_default_str();
    report->add_option("--schedule", cmp_schedule, "default clicks");
    report->add_option("--max-M", max_M)->capture_default_str();
    report->add_option("--pop", cmp_pop, "default table1");
    report->add_option("--n", n)->capture_default_str();
    report->add_option("--seed", seed)->capture_default_str();
    report->add_option("--workers", workers);
    report->add_option("--format", cmp_format)->check(CLI::IsMember({"json", "csv", "table"}));

    int thm = 0;
    int cor = 0;
    int b_M = 3;
    std::int64_t b_T = 1000;
    double eps = 0.01;
    std::vector<double> kappa = {3.0, 3.0};
    double b_C = 1.0;
    auto* bounds = app.add_subcommand("bounds", "Competitive-ratio guarantees");
    auto* thm_opt = bounds->add_option("--thm", thm, "1, 2, 3 or 4")->check(CLI::Range(1, 4));
    auto* cor_opt = bounds->add_option("--cor", cor, "1 or 2")->check(CLI::Range(1, 2));
    thm_opt->excludes(cor_opt);
    bounds->add_option("--M", b_M)->capture_default_str();
    bounds->add_option("--T", b_T)->capture_default_str();
    bounds->add_option("--eps", eps)->capture_default_str();
    bounds->add_option("--kappa", kappa, "kurtosis of treated and control")->expected(2);
    bounds->add_option("--C", b_C)->capture_default_str();

    std::int64_t lb_T = 16;
    auto* lowerbound = app.add_subcommand("lowerbound", "Three-point lower-bound instance");
    lowerbound->add_option("--T", lb_T)->required();

    bool all_lemmas = false;
    std::vector<std::string> lemma_list;
    std::int64_t points = 0;
    bool tail = false;
    std::int64_t mc_n = 100000;
    std::string lemma_format = "table";
    auto* lemmas = app.add_subcommand("lemmas", "Grid and Monte Carlo checks of the supporting inequalities");
    lemmas->add_flag("--all", all_lemmas);
    lemmas->add_option("--lemma", lemma_list);
    lemmas->add_option("--points", points, "grid points for the primary variable");
    lemmas->add_flag("--tail", tail, "also run the variance tail checks");
    lemmas->add_option("--mc-n", mc_n)->capture_default_str();
    lemmas->add_option("--seed", seed)->capture_default_str();
    lemmas->add_option("--format", lemma_format)->check(CLI::IsMember({"json", "table"}));

    std::string csv_path;
    bool table1 = false;
    std::int64_t synth_n = kTable1ArmSize;
    bool arrays = false;
    auto* ingest = app.add_subcommand("ingest", "Summarize click data (CSV arm,impressions,clicks)");
    auto* csv_opt = ingest->add_option("--csv", csv_path);
    auto* t1_opt = ingest->add_flag("--table1", table1, "use the synthetic click-data arrays");
    csv_opt->excludes(t1_opt);
    ingest->add_option("--n", synth_n, "synthetic arm size")->capture_default_str();
    ingest->add_option("--seed", seed)->capture_default_str();
    ingest->add_flag("--arrays", arrays, "include the per-arm values");

    DesignFlags adv_flags;
    bool assign = false;
    auto* advise_cmd = app.add_subcommand("advise", "Interactive stage-by-stage advice over stdin/stdout");
    adv_flags.add(advise_cmd);
    advise_cmd->add_flag("--assign", assign, "print a randomized 1/0 assignment order for each stage");
    advise_cmd->add_option("--seed", seed)->capture_default_str();

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "neyman-data";
    auto* serve = app.add_subcommand("serve", "HTTP service");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("--data-dir", data_dir)->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "neyman: " << e.what() << '\n';
        return 2;
    }

    if (const char* env = std::getenv("NEYMAN_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') {
            err << "neyman: NEYMAN_SEED must be an unsigned integer\n";
            return 2;
        }
        seed = v;
    }

    try {
        if (simulate->parsed()) {
            const DesignConfig config = feasible_design(sim_flags.to_request());
            BatchOptions opts;
            opts.workers = workers;
            opts.bound = bound;
            const BatchSummary s = run_batch(config, parse_population(pop_spec), seed, n, opts);
            write_summaries({s}, format, samples, out);
            return 0;
        }
        if (compare->parsed() || report->parsed()) {
            const bool is_report = report->parsed();
            const std::string schedule = cmp_schedule.empty() ? (is_report ? "clicks" : "thm3") : cmp_schedule;
            const std::string pop = cmp_pop.empty() ? (is_report ? "table1" : "gaussian:rho=2") : cmp_pop;
            std::vector<DesignConfig> designs;
            if (!design_specs.empty()) {
                for (const std::string& spec : design_specs) designs.push_back(feasible_design(design_spec_to_json(spec, cmp_T)));
            } else {
                if (max_M < 2) fail(ErrorCode::BadM, "--max-M must be >= 2");
                designs.push_back(half_half_config(cmp_T));
                for (int M = 2; M <= max_M; ++M) {
                    json j = {{"M", M}, {"T", cmp_T}, {"schedule", schedule}};
                    if (M == 2 && schedule == "thm3") j = {{"M", 2}, {"T", cmp_T}, {"beta", 1.0}};
                    designs.push_back(feasible_design(j));
                }
            }
            BatchOptions opts;
            opts.workers = workers;
            write_summaries(compare_designs(designs, parse_population(pop), seed, n, opts), cmp_format, false, out);
            return 0;
        }
        if (bounds->parsed()) {
            json j;
            if (thm == 4) {
                j = {{"source", "thm4"}, {"T", b_T}, {"ratio_bound", thm4_bound(b_T)}};
            } else {
                BoundReport r;
                if (cor != 0) {
                    r = cor_bounds(cor == 1 ? BoundSource::Cor1 : BoundSource::Cor2, b_M, b_T, b_C);
                } else if (thm == 2) {
                    r = thm2_bound(b_T, eps, kappa[0], kappa[1]);
                } else if (thm == 3) {
                    r = thm3_bound(b_M, b_T, eps, kappa[0], kappa[1]);
                } else {
                    r = thm1_bound();
                }
                j = to_json(r);
                j["T"] = b_T;
                if (thm == 3 || cor == 2) j["M"] = b_M;
            }
            out << j.dump(2) << '\n';
            return 0;
        }
        if (lowerbound->parsed()) {
            const LowerBoundInstance inst = lower_bound_instance(lb_T);
            const json j = {{"T", lb_T},
                            {"eps", inst.eps},
                            {"nu", to_json(inst.nu)},
                            {"nu_prime", to_json(inst.nu_prime)},
                            {"kl_nu_nu_prime", kl_three_point(inst.nu, inst.nu_prime)},
                            {"kl_nu_prime_nu", kl_three_point(inst.nu_prime, inst.nu)},
                            {"ratio_bound", thm4_bound(lb_T)}};
            out << j.dump(2) << '\n';
            return 0;
        }
        if (lemmas->parsed()) {
            if (!all_lemmas && lemma_list.empty() && !tail) {
                err << "neyman: lemmas needs --all, --lemma ID or --tail\n";
                return 2;
            }
            const std::vector<std::string> ids = all_lemmas ? lemma_ids() : lemma_list;
            bool ok = true;
            json rows = json::array();
            for (const std::string& id : ids) {
                GridSpec grid = default_grid(id);
                if (points > 0) grid.points = points;
                const LemmaReport r = lemma_grid_check(id, grid);
                ok = ok && r.passed();
                rows.push_back(to_json(r));
                if (lemma_format == "table") {
                    char line[160];
                    std::snprintf(line, sizeof line, "%-26s %-22s %10lld checked %8lld skipped\n", id.c_str(),
                                  std::string(to_string(r.status)).c_str(), static_cast<long long>(r.points_checked),
                                  static_cast<long long>(r.points_skipped));
                    out << line;
                }
            }
            if (tail) {
                const ThreePointDist d = symmetric_three_point(0.25);
                for (TailAssumption a : {TailAssumption::Kurtosis, TailAssumption::Bounded}) {
                    for (double delta : {0.2, 0.5}) {
                        const TailReport r = tail_bound_check(a, d, 30, delta, mc_n, seed);
                        ok = ok && r.pass;
                        rows.push_back(to_json(r));
                        if (lemma_format == "table") {
                            out << (a == TailAssumption::Kurtosis ? "LightTail" : "ExponentialTail")
                                << " delta=" << delta << ' ' << (r.pass ? "pass" : "fail")
                                << " empirical=" << fmt17(r.empirical) << " bound=" << fmt17(r.bound) << '\n';
                        }
                    }
                }
            }
            if (lemma_format == "json") out << rows.dump(2) << '\n';
            return ok ? 0 : 1;
        }
        if (ingest->parsed()) {
            ArmArrays data;
            if (!csv_path.empty()) {
                data = ingest_csv_file(csv_path);
            } else if (table1) {
                data = synthetic_table1(synth_n, seed);
            } else {
                err << "neyman: ingest needs --csv FILE or --table1\n";
                return 2;
            }
            const ArmSummary s = summarize(data);
            json j = {{"schema", "neyman.ingest/1"}, {"treated", to_json(s.treated)}, {"control", to_json(s.control)}};
            if (arrays) j["arrays"] = to_json(data);
            out << j.dump(2) << '\n';
            return 0;
        }
        if (advise_cmd->parsed()) {
            return advise(feasible_design(adv_flags.to_request()), assign, seed, in, out, err);
        }
        if (serve->parsed()) {
            Service service(ServiceOptions{data_dir});
            HttpServer server(service);
            const int bound_port = server.bind(host, port);
            if (bound_port < 0) {
                err << "neyman: cannot bind " << host << ':' << port << '\n';
                return 1;
            }
            out << "listening on http://" << host << ':' << bound_port << '\n';
            out.flush();
            return server.listen() ? 0 : 1;
        }
    } catch (const Error& e) {
        err << "neyman: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace neyman
