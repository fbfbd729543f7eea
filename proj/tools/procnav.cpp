// procnav: command-line entry point. Each subcommand reads files, delegates
// to one library operation and writes JSON (or TSV) to stdout or --out.

#include <signal.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "procnav/api_service.hpp"
#include "procnav/deviation.hpp"
#include "procnav/error.hpp"
#include "procnav/executor.hpp"
#include "procnav/report.hpp"
#include "procnav/stats.hpp"

using namespace procnav;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        std::cout.flush();
    } else {
        write_file(out, text);
    }
}

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

IeGraph layout_from(const std::string& path) { return load_graph(read_file(path)); }

// A procedure file is either plain text or the JSON written by `parse`.
ProcedureDoc procedure_from(const std::string& path, const std::string& scenario) {
    auto text = read_file(path);
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        auto doc = procedure_from_json(parse_json_text(text, path));
        if (!scenario.empty()) doc.scenario_id = scenario;
        validate_procedure(doc);
        return doc;
    }
    return parse_procedure(text, scenario.empty() ? fs::path(path).stem().string() : scenario);
}

HraConfig hra_from(const std::string& path) { return path.empty() ? HraConfig{} : parse_hra_config(read_file(path)); }

// Sample file: one number per line, optionally preceded by a scenario label
// and a tab or space. Blank lines and '#' comments are skipped.
std::vector<std::pair<std::string, double>> read_samples(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::pair<std::string, double>> out;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string f; fields >> f;) parts.push_back(f);
        if (parts.empty()) continue;
        if (parts.size() > 2) throw Error(ErrorCode::malformed_line, path + " line " + std::to_string(n) + ": too many fields");
        try {
            std::size_t used = 0;
            double v = std::stod(parts.back(), &used);
            if (used != parts.back().size()) throw std::invalid_argument("trailing text");
            out.emplace_back(parts.size() == 2 ? parts[0] : "", v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::malformed_line, path + " line " + std::to_string(n) + ": '" + parts.back() + "' is not a number");
        }
    }
    return out;
}

Json summary_json(const Summary& s) {
    return Json{{"n", s.n}, {"mean", s.mean}, {"median", s.median}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}};
}

Json compare_json(const std::vector<double>& a, const std::vector<double>& b, std::size_t threshold) {
    auto r = mann_whitney(a, b, threshold);
    return Json{{"a", summary_json(summarize(a))},
                {"b", summary_json(summarize(b))},
                {"u_a", r.u_a},
                {"u_b", r.u_b},
                {"method", to_string(r.method)},
                {"p_two_sided", r.p_two_sided},
                {"effect", r.effect}};
}

OperatorPolicy operator_policy(const std::string& kind, std::int64_t dwell, std::uint64_t seed, double noise,
                               const HraSettings& hra) {
    if (kind == "machine") return MachinePolicy{dwell};
    HumanPolicy h;
    h.fitts = hra.fitts;
    h.reading_s = hra.reading_s;
    h.noise_sigma = noise;
    h.seed = seed;
    return h;
}

// Scripts from the plan file, or recompiled when a policy is forced.
std::vector<ActionScript> scripts_for(const LoadedPlan& loaded, const IeGraph& graph, const std::string& policy) {
    if (!policy.empty() || loaded.scripts.empty())
        return compile_plan(loaded.plan, graph, parse_policy(policy.empty() ? "fixed:100" : policy));
    return loaded.scripts;
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
}

void demo(const std::string& data, const std::string& out_dir, std::uint64_t seed, int subjects) {
    fs::create_directories(out_dir);
    const fs::path d(data), o(out_dir);
    auto graph = load_graph(read_file((d / "fixture_layout.json").string()));
    auto hra = parse_hra_config(read_file((d / "hra_config.json").string()));
    std::vector<std::string> texts;
    for (int i = 1; i <= 5; ++i) texts.push_back(read_file((d / "scenarios" / ("S" + std::to_string(i) + ".txt")).string()));
    auto docs = parse_all_scenarios(texts);

    std::vector<ProcedurePlan> plans;
    for (const auto& doc : docs) {
        plans.push_back(plan_procedure(doc, graph));
        write_file(o / (doc.scenario_id + ".plan.json"), save_plan(plans.back(), compile_plan(plans.back(), graph, FixedDwell{100})));
    }
    auto batch = run_batch(plans, graph, FixedDwell{100});

    std::vector<double> machine, human;
    std::ostringstream times, table;
    times << "scenario\tsource\tsubject\ttime_s\n";
    table << "scenario\tsteps\tclicks\tmachine_s\thuman_median_s\tdeviations\trecommended\n";
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const auto& plan = plans[i];
        const auto& sc = plan.scenario_id;
        const auto& settings = hra.for_scenario(sc);
        write_file(o / (sc + ".machine.jsonl"), save_trace(batch.runs[i].trace));
        machine.push_back(batch.runs[i].total_time_s);
        times << sc << "\tmachine\t-\t" << fmt(batch.runs[i].total_time_s) << "\n";

        std::vector<DeviationReport> reports;
        std::vector<double> here;
        for (int s = 0; s < subjects; ++s) {
            HumanPolicy h;
            h.fitts = settings.fitts;
            h.reading_s = settings.reading_s;
            h.seed = seed * 1000 + std::uint64_t(s) * 10 + i;
            TraceMeta meta{"demo-" + sc + "-p" + std::to_string(s + 1), "p" + std::to_string(s + 1), "1970-01-01T00:00:00Z"};
            auto trace = synthesize_trace(plan, graph, h, {}, meta);
            here.push_back(double(trace.events.back().t - trace.events.front().t) / 1000.0);
            times << sc << "\thuman\t" << meta.subject_id << "\t" << fmt(here.back()) << "\n";
            write_file(o / (meta.session_id + ".jsonl"), save_trace(trace));
            reports.push_back(analyze_session(trace, plan, graph));
        }
        // Error-prone replays for the risk table.
        for (int s = 0; s < subjects; ++s) {
            const int step = plan.steps[std::size_t(s) % plan.steps.size()].path_set.step.index;
            FaultSpec spec;
            spec.faults.push_back({step, s % 2 ? FaultKind::extra_click : FaultKind::omission, std::nullopt});
            TraceMeta meta{"demo-" + sc + "-f" + std::to_string(s + 1), "f" + std::to_string(s + 1), "1970-01-01T00:00:00Z"};
            reports.push_back(analyze_session(synthesize_trace(plan, graph, MachinePolicy{}, spec, meta), plan, graph));
        }
        auto risk = aggregate_risk(reports, plan);
        write_file(o / (sc + ".risk.tsv"), risk_table_tsv(risk));
        std::size_t devs = 0;
        for (const auto& r : reports) devs += r.total_deviations();
        human.insert(human.end(), here.begin(), here.end());
        std::string rec;
        for (int r : risk.recommendations) rec += (rec.empty() ? "" : ",") + std::to_string(r);
        table << sc << "\t" << plan.steps.size() << "\t" << plan.total_clicks() << "\t" << fmt(machine.back()) << "\t"
              << fmt(summarize(here).median) << "\t" << devs << "\t" << (rec.empty() ? "-" : rec) << "\n";
    }
    write_file(o / "times.tsv", times.str());
    auto cmp = compare_json(human, machine, kDefaultExactThreshold);
    write_file(o / "stats.json", pretty(cmp));
    std::cout << table.str() << "human vs machine: U=" << cmp["u_a"].get<double>() << " p=" << cmp["p_two_sided"].get<double>()
              << " (" << cmp["method"].get<std::string>() << ")\n"
              << "outputs in " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Procedure navigation planning, execution and deviation analysis"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", "procnav 0.1.0");

    std::string out;
    auto add_out = [&](CLI::App* c) { c->add_option("-o,--out", out, "Output file (default stdout)"); };

    // graph
    auto* graph_cmd = app.add_subcommand("graph", "Validate or summarize a layout file");
    graph_cmd->require_subcommand(1, 1);
    std::string graph_file;
    auto* gv = graph_cmd->add_subcommand("validate", "Check a layout; exit 1 with the violation list");
    gv->add_option("layout", graph_file)->required()->check(CLI::ExistingFile);
    auto* gs = graph_cmd->add_subcommand("stats", "Element, edge and path counts");
    gs->add_option("layout", graph_file)->required()->check(CLI::ExistingFile);
    add_out(gs);

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "Parse a procedure text into task steps");
    std::string procedure, scenario;
    parse_cmd->add_option("--procedure", procedure)->required()->check(CLI::ExistingFile);
    parse_cmd->add_option("--scenario", scenario, "Scenario id (default: file stem)");
    add_out(parse_cmd);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "Map task steps to navigation paths and compile scripts");
    std::string layout, policy;
    bool chaining = false, partial = false;
    std::size_t path_limit = kDefaultPathLimit;
    plan_cmd->add_option("--layout", layout)->required()->check(CLI::ExistingFile);
    plan_cmd->add_option("--procedure", procedure)->required()->check(CLI::ExistingFile);
    plan_cmd->add_option("--scenario", scenario);
    plan_cmd->add_flag("--chaining", chaining, "Start each step from the previous step's panel");
    plan_cmd->add_flag("--partial", partial, "Record unplannable steps instead of failing");
    plan_cmd->add_option("--path-limit", path_limit)->check(CLI::PositiveNumber);
    plan_cmd->add_option("--policy", policy, "Script timing: fixed:MS, fitts or fitts:A,B")->default_str("fixed:100");
    add_out(plan_cmd);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize a session trace from a plan");
    std::string plan_file, operator_kind = "human", faults, hra_config, session = "synthetic", subject = "synthetic";
    std::int64_t dwell = 100;
    std::uint64_t seed = 0;
    double noise = 0.15;
    synth_cmd->add_option("--layout", layout)->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--operator", operator_kind)->check(CLI::IsMember({"human", "machine"}))->capture_default_str();
    synth_cmd->add_option("--dwell-ms", dwell, "Machine dwell per click")->check(CLI::PositiveNumber)->capture_default_str();
    synth_cmd->add_option("--seed", seed)->capture_default_str();
    synth_cmd->add_option("--noise", noise, "Lognormal timing sigma")->check(CLI::NonNegativeNumber)->capture_default_str();
    synth_cmd->add_option("--faults", faults, "e.g. omission@3,wrong_panel@5:0MKADW001");
    synth_cmd->add_option("--hra-config", hra_config, "Fitts and reading parameters")->check(CLI::ExistingFile);
    synth_cmd->add_option("--session", session)->capture_default_str();
    synth_cmd->add_option("--subject", subject)->capture_default_str();
    add_out(synth_cmd);

    // exec-sim
    auto* sim_cmd = app.add_subcommand("exec-sim", "Execute a plan's scripts against the layout");
    std::string outcome_file;
    sim_cmd->add_option("--layout", layout)->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--policy", policy, "Recompile scripts with this timing");
    sim_cmd->add_option("--outcome", outcome_file, "Write the execution outcome JSON here");
    add_out(sim_cmd);

    // exec-live
    auto* live_cmd = app.add_subcommand("exec-live", "Drive an attached panel UI through the service");
    std::string driver = "127.0.0.1:8080";
    int step_only = 0, driver_timeout = 30;
    live_cmd->add_option("--layout", layout)->required()->check(CLI::ExistingFile);
    live_cmd->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    live_cmd->add_option("--driver", driver, "Service address")->capture_default_str();
    live_cmd->add_option("--step", step_only, "Run only this step");
    live_cmd->add_option("--timeout", driver_timeout, "Seconds per command")->capture_default_str();
    live_cmd->add_option("--policy", policy);
    add_out(live_cmd);

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Deviation report for a trace");
    std::string trace_file;
    analyze_cmd->add_option("--layout", layout)->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--trace", trace_file)->required()->check(CLI::ExistingFile);
    add_out(analyze_cmd);

    // risk
    auto* risk_cmd = app.add_subcommand("risk", "Aggregate deviation reports into a risk table");
    std::vector<std::string> report_files;
    std::string format = "tsv";
    std::size_t automation_threshold = 1;
    risk_cmd->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    risk_cmd->add_option("reports", report_files, "Reports written by analyze")->required()->check(CLI::ExistingFile);
    risk_cmd->add_option("--format", format)->check(CLI::IsMember({"tsv", "json"}))->capture_default_str();
    risk_cmd->add_option("--threshold", automation_threshold, "Errors needed to flag a multi-action step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_out(risk_cmd);

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Statistics on completion-time samples");
    stats_cmd->require_subcommand(1, 1);
    auto* cmp_cmd = stats_cmd->add_subcommand("compare", "Mann-Whitney U of sample A against sample B");
    std::string sample_a, sample_b;
    bool per_scenario = false;
    std::size_t exact_threshold = kDefaultExactThreshold;
    cmp_cmd->add_option("a", sample_a)->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("b", sample_b)->required()->check(CLI::ExistingFile);
    cmp_cmd->add_flag("--per-scenario", per_scenario, "Also test each scenario label separately");
    cmp_cmd->add_option("--exact-threshold", exact_threshold)->capture_default_str();
    add_out(cmp_cmd);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::string scenarios_dir, store_dir, listen = "127.0.0.1:8080", port_file;
    serve_cmd->add_option("--layout", layout)->envname("PROCNAV_LAYOUT")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--scenarios", scenarios_dir)->envname("PROCNAV_SCENARIOS")->required()->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--store", store_dir)->envname("PROCNAV_STORE")->required();
    serve_cmd->add_option("--hra-config", hra_config)->envname("PROCNAV_HRA_CONFIG")->check(CLI::ExistingFile);
    serve_cmd->add_option("--listen", listen)->envname("PROCNAV_LISTEN")->capture_default_str();
    serve_cmd->add_option("--port-file", port_file, "Write the bound port here once listening");
    serve_cmd->add_flag("--chaining", chaining);

    // report
    auto* report_cmd = app.add_subcommand("report", "Deviation, timing, HEP and TLX report for a session");
    std::string tlx_file;
    report_cmd->add_option("--layout", layout)->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--plan", plan_file)->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--trace", trace_file)->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--hra-config", hra_config)->check(CLI::ExistingFile);
    report_cmd->add_option("--tlx", tlx_file, "TLX response JSON")->check(CLI::ExistingFile);
    add_out(report_cmd);

    // demo
    auto* demo_cmd = app.add_subcommand("demo", "Run the fixture pipeline end to end");
    std::string data_dir = PROCNAV_DATA_DIR, demo_out = "procnav-demo";
    int subjects = 6;
    std::uint64_t demo_seed = 1;
    demo_cmd->add_option("--data", data_dir)->check(CLI::ExistingDirectory)->capture_default_str();
    demo_cmd->add_option("--out", demo_out)->capture_default_str();
    demo_cmd->add_option("--seed", demo_seed)->capture_default_str();
    demo_cmd->add_option("--subjects", subjects)->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gv->parsed()) {
            auto g = layout_from(graph_file);
            auto violations = g.validate();
            for (const auto& v : violations) {
                std::string subjects_text;
                for (const auto& s : v.subjects) subjects_text += (subjects_text.empty() ? "" : ",") + s;
                std::cout << to_string(v.kind) << "\t" << subjects_text << "\t" << v.message << "\n";
            }
            if (!violations.empty()) {
                std::cerr << graph_file << ": " << violations.size() << " violation(s)\n";
                return 1;
            }
            std::cout << "ok\t" << g.elements().size() << " elements\t" << g.edge_count() << " edges\n";
        } else if (gs->parsed()) {
            auto g = layout_from(graph_file);
            Json kinds = Json::object();
            std::size_t multi = 0, max_paths = 0, depth = 0;
            for (const auto& [id, e] : g.elements()) {
                kinds[std::string(to_string(e.kind))] = kinds.value(std::string(to_string(e.kind)), 0) + 1;
                if (e.kind != ElementKind::parameter) continue;
                auto paths = g.enumerate_paths(id, kDefaultPathLimit).paths;
                multi += paths.size() > 1;
                max_paths = std::max(max_paths, paths.size());
                if (!paths.empty()) depth = std::max(depth, paths.front().size() - 1);
            }
            emit(out, pretty(Json{{"elements", g.elements().size()},
                                  {"edges", g.edge_count()},
                                  {"by_kind", kinds},
                                  {"top_level", g.visible_elements(g.initial_state()).size()},
                                  {"max_clicks_to_parameter", depth},
                                  {"parameters_with_alternatives", multi},
                                  {"max_paths_per_parameter", max_paths},
                                  {"violations", g.validate().size()}}));
        } else if (parse_cmd->parsed()) {
            emit(out, pretty(to_json(procedure_from(procedure, scenario))));
        } else if (plan_cmd->parsed()) {
            auto g = layout_from(layout);
            auto doc = procedure_from(procedure, scenario);
            auto plan = plan_procedure(doc, g, PlanOptions{chaining, partial, path_limit});
            for (const auto& f : plan.failures) std::cerr << "step " << f.step << ": " << f.message << "\n";
            emit(out, save_plan(plan, compile_plan(plan, g, parse_policy(policy.empty() ? "fixed:100" : policy))));
        } else if (synth_cmd->parsed()) {
            auto g = layout_from(layout);
            auto loaded = load_plan(read_file(plan_file));
            auto hra = hra_from(hra_config);
            auto op = operator_policy(operator_kind, dwell, seed, noise, hra.for_scenario(loaded.plan.scenario_id));
            auto trace = synthesize_trace(loaded.plan, g, op, parse_fault_spec(faults),
                                          TraceMeta{session, subject, "1970-01-01T00:00:00Z"});
            emit(out, save_trace(trace));
        } else if (sim_cmd->parsed()) {
            auto g = layout_from(layout);
            auto loaded = load_plan(read_file(plan_file));
            auto run = execute_plan_sim(loaded.plan, scripts_for(loaded, g, policy), g);
            if (!outcome_file.empty()) write_file(outcome_file, pretty(to_json(run)));
            if (!run.ok()) {
                std::cerr << "error: " << run.message << "\n";
                return 1;
            }
            emit(out, save_trace(run.trace));
        } else if (live_cmd->parsed()) {
            ServiceConfig addr;
            parse_listen(driver, addr);
            auto g = layout_from(layout);
            auto loaded = load_plan(read_file(plan_file));
            HttpLiveDriver http(addr.host, addr.port, driver_timeout);
            Json outcomes = Json::array();
            ExecStart at;
            bool ok = true;
            for (const auto& script : scripts_for(loaded, g, policy)) {
                if (step_only && script.step != step_only) continue;
                auto o = execute_live(script, g, http, at);
                at.state = o.final_state;
                outcomes.push_back(to_json(o));
                if (!o.ok()) {
                    std::cerr << "error: step " << o.step << ", " << o.message << "\n";
                    ok = false;
                    break;
                }
            }
            emit(out, pretty(outcomes));
            if (!ok) return 1;
        } else if (analyze_cmd->parsed()) {
            auto g = layout_from(layout);
            auto loaded = load_plan(read_file(plan_file));
            auto report = analyze_session(load_trace(read_file(trace_file)), loaded.plan, g);
            emit(out, pretty(to_json(report)));
        } else if (risk_cmd->parsed()) {
            auto loaded = load_plan(read_file(plan_file));
            std::vector<DeviationReport> reports;
            for (const auto& f : report_files)
                reports.push_back(deviation_report_from_json(parse_json_text(read_file(f), f)));
            RiskOptions opt;
            opt.automation_threshold = automation_threshold;
            auto risk = aggregate_risk(reports, loaded.plan, opt);
            emit(out, format == "json" ? pretty(to_json(risk)) : risk_table_tsv(risk));
        } else if (cmp_cmd->parsed()) {
            auto a = read_samples(sample_a), b = read_samples(sample_b);
            auto values = [](const std::vector<std::pair<std::string, double>>& s, const std::string* label) {
                std::vector<double> v;
                for (const auto& [l, x] : s)
                    if (!label || l == *label) v.push_back(x);
                return v;
            };
            Json result = compare_json(values(a, nullptr), values(b, nullptr), exact_threshold);
            if (per_scenario) {
                std::set<std::string> labels;
                for (const auto& [l, x] : a) labels.insert(l);
                Json per = Json::object();
                for (const auto& l : labels) {
                    auto va = values(a, &l), vb = values(b, &l);
                    if (vb.empty()) throw Error(ErrorCode::empty_sample, "scenario '" + l + "' has no values in " + sample_b);
                    Json r = compare_json(va, vb, exact_threshold);
                    r["a_max_below_b_min"] = *std::max_element(va.begin(), va.end()) < *std::min_element(vb.begin(), vb.end());
                    per[l.empty() ? "-" : l] = std::move(r);
                }
                result = Json{{"pooled", std::move(result)}, {"per_scenario", std::move(per)}};
            }
            emit(out, pretty(result));
        } else if (serve_cmd->parsed()) {
            ServiceConfig cfg;
            cfg.layout = layout;
            cfg.scenarios = scenarios_dir;
            cfg.store = store_dir;
            if (!hra_config.empty()) cfg.hra_config = hra_config;
            cfg.chaining = chaining;
            parse_listen(listen, cfg);

            sigset_t stop_signals;
            sigemptyset(&stop_signals);
            sigaddset(&stop_signals, SIGINT);
            sigaddset(&stop_signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

            ApiService svc(cfg);
            int port = svc.start();
            if (!port_file.empty()) {
                write_file(port_file + ".tmp", std::to_string(port) + "\n");
                fs::rename(port_file + ".tmp", port_file);
            }
            std::cerr << "procnav: listening on " << cfg.host << ":" << port << "\n";
            int sig = 0;
            sigwait(&stop_signals, &sig);
            svc.stop();
        } else if (report_cmd->parsed()) {
            auto g = layout_from(layout);
            auto loaded = load_plan(read_file(plan_file));
            auto hra = hra_from(hra_config);
            auto report = analyze_session(load_trace(read_file(trace_file)), loaded.plan, g);
            std::optional<TlxScore> tlx;
            if (!tlx_file.empty()) tlx = tlx_score(tlx_response_from_json(parse_json_text(read_file(tlx_file), tlx_file)));
            emit(out, pretty(compose_report(report, loaded.plan, g, hra.for_scenario(loaded.plan.scenario_id), tlx)));
        } else if (demo_cmd->parsed()) {
            demo(data_dir, demo_out, demo_seed, subjects);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
