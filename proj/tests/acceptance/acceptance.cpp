// Acceptance gate. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <httplib.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "procnav/deviation.hpp"
#include "procnav/executor.hpp"
#include "procnav/hra_models.hpp"
#include "procnav/planner.hpp"
#include "procnav/procedures.hpp"
#include "procnav/sessions.hpp"
#include "procnav/stats.hpp"
#include "../support/faults.hpp"
#include "../support/fixture.hpp"
#include "../support/oracles.hpp"
#include "../support/tempdir.hpp"

#ifndef PROCNAV_CLI
#error "PROCNAV_CLI must name the procnav binary"
#endif

using namespace procnav;
using Clock = std::chrono::steady_clock;

namespace tol {
constexpr double parse_budget_s = 1.0;
constexpr double fault_free_budget_s = 30.0;
constexpr double mann_whitney_budget_s = 60.0;
constexpr double p_abs = 1e-12;
constexpr double u_sum_abs = 1e-9;
constexpr double human_vs_machine_alpha = 1e-3;
constexpr double hra_rel = 1e-12;
constexpr int server_start_ms = 15000;
}  // namespace tol

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

const ProcedurePlan& plan_for(const std::string& scenario) {
    for (const auto& p : fixture::plans())
        if (p.scenario_id == scenario) return p;
    throw std::runtime_error("no plan " + scenario);
}

HumanPolicy human(std::uint64_t seed) {
    HumanPolicy h;
    h.seed = seed;
    return h;
}

// --- procedures and planning ---------------------------------------------------

Outcome parse_counts() {
    const auto texts = fixture::scenario_texts();
    auto t0 = Clock::now();
    auto docs = parse_all_scenarios(texts);
    const double dt = seconds_since(t0);
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    for (const auto& d : docs) {
        counts.push_back(d.steps.size());
        total += d.steps.size();
    }
    const std::vector<std::size_t> want{7, 7, 6, 5, 4};
    std::string got;
    for (auto c : counts) got += (got.empty() ? "" : ",") + std::to_string(c);
    if (counts != want || total != 29) return fail("step counts " + got);
    if (dt >= tol::parse_budget_s) return fail("took " + fmt(dt) + " s");
    return {true, "29 steps (" + got + ") in " + fmt(dt * 1000) + " ms"};
}

Outcome s1_step1_path() {
    const auto& step = plan_for("S1").steps.front().path_set;
    const Path want{"initial", "Flowchart", "Nuclear Island System", "2LABDW001", "2LBA10CP801C"};
    if (step.paths.size() != 1) return fail(std::to_string(step.paths.size()) + " paths");
    if (step.paths[0] != want) return fail("unexpected path");
    return {true, "single path of 4 clicks"};
}

Outcome classification_labels() {
    std::istringstream in(fixture::read("step_labels.tsv"));
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0, agree = 0;
    std::string why;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string sc, step, target, clicks, label;
        std::getline(row, sc, '\t');
        std::getline(row, step, '\t');
        std::getline(row, target, '\t');
        std::getline(row, clicks, '\t');
        std::getline(row, label, '\t');
        ++rows;
        const auto& plan = plan_for(sc);
        const auto it = std::find_if(plan.steps.begin(), plan.steps.end(),
                                     [&](const PlannedStep& s) { return s.path_set.step.index == std::stoi(step); });
        if (it == plan.steps.end()) {
            why += sc + "/" + step + " unplanned; ";
            continue;
        }
        const auto& ps = it->path_set;
        if (ps.target == target && ps.min_clicks == std::stoul(clicks) && to_string(ps.classification) == label)
            ++agree;
        else
            why += sc + "/" + step + " disagrees; ";
    }
    if (rows != 29 || agree != rows) return fail(std::to_string(agree) + "/" + std::to_string(rows) + ": " + why);
    return {true, "29/29 labels"};
}

// --- deviation analysis ------------------------------------------------------------

Outcome fault_free_sessions() {
    std::mt19937_64 rng(20240601);
    const auto& plans = fixture::plans();
    auto t0 = Clock::now();
    for (int i = 0; i < 200; ++i) {
        const auto& plan = plans[rng() % plans.size()];
        const auto seed = rng();
        auto trace = synthesize_trace(plan, fixture::layout(), human(seed));
        auto report = analyze_session(trace, plan, fixture::layout());
        if (report.total_deviations() != 0)
            return fail(plan.scenario_id + " seed " + std::to_string(seed) + ": " +
                        std::to_string(report.total_deviations()) + " deviations");
    }
    const double dt = seconds_since(t0);
    if (dt >= tol::fault_free_budget_s) return fail("took " + fmt(dt) + " s");
    return {true, "200 sessions, 0 deviations, " + fmt(dt) + " s"};
}

Outcome fault_recall() {
    std::mt19937_64 rng(77);
    const auto& plans = fixture::plans();
    std::map<std::string, int> injected;
    for (int i = 0; i < 200; ++i) {
        const auto& plan = plans[rng() % plans.size()];
        auto spec = faults::random_spec(rng, plan, fixture::layout());
        for (const auto& f : spec.faults) ++injected[std::string(to_string(f.kind))];
        OperatorPolicy policy = rng() % 2 ? OperatorPolicy(human(rng())) : OperatorPolicy(MachinePolicy{});
        auto trace = synthesize_trace(plan, fixture::layout(), policy, spec);
        auto v = faults::check_recall(spec, analyze_session(trace, plan, fixture::layout()));
        if (!v.ok) return fail(plan.scenario_id + " " + format_fault_spec(spec) + ": " + v.why);
    }
    std::string kinds;
    for (const auto& [k, n] : injected) kinds += (kinds.empty() ? "" : " ") + k + "=" + std::to_string(n);
    return {true, "200 specs recalled (" + kinds + ")"};
}

// --- graph -----------------------------------------------------------------------

Outcome dag_paths() {
    std::mt19937_64 rng(4242);
    std::size_t targets = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 12)(rng);
        auto g = oracle::random_dag(rng, n, trial % 3 != 0);
        for (const auto& [id, el] : g.elements()) {
            ++targets;
            if (g.enumerate_paths(id, 100000).paths != oracle::all_paths(g, id))
                return fail("trial " + std::to_string(trial) + " target " + id);
        }
    }
    return {true, "500 DAGs, " + std::to_string(targets) + " targets"};
}

// --- statistics -------------------------------------------------------------------

Outcome mann_whitney_exact() {
    std::mt19937_64 rng(9001);
    auto t0 = Clock::now();
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 8;
        std::vector<double> pool(n + m);
        for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = double(k) * 1.5 + 0.25;
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<double> a(pool.begin(), pool.begin() + std::ptrdiff_t(n)), b(pool.begin() + std::ptrdiff_t(n), pool.end());
        auto r = mann_whitney(a, b);
        if (r.method != UTestMethod::exact) return fail("case " + std::to_string(i) + " not exact");
        if (std::abs(r.u_a + r.u_b - double(n * m)) > tol::u_sum_abs) return fail("u_a + u_b != nm");
        const double want = oracle::mann_whitney_enumerated_p(a, b);
        worst = std::max(worst, std::abs(r.p_two_sided - want));
        if (std::abs(r.p_two_sided - want) > tol::p_abs)
            return fail("case " + std::to_string(i) + ": p " + fmt(r.p_two_sided) + " vs " + fmt(want));
    }
    const double dt = seconds_since(t0);
    if (dt >= tol::mann_whitney_budget_s) return fail("took " + fmt(dt) + " s");
    return {true, "1000 cases, max |dp| " + fmt(worst) + ", " + fmt(dt) + " s"};
}

Outcome machine_vs_human() {
    const auto& plans = fixture::plans();
    auto batch = run_batch(plans, fixture::layout(), FixedDwell{100});
    if (batch.failures() != 0) return fail(std::to_string(batch.failures()) + " machine runs failed");
    std::vector<double> machine = batch.samples(), pooled;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        for (std::uint64_t s = 0; s < 6; ++s) {
            auto trace = synthesize_trace(plans[i], fixture::layout(), human(1000 + s * 10 + i));
            const double t = double(trace.events.back().t - trace.events.front().t) / 1000.0;
            if (!(machine[i] < t))
                return fail(plans[i].scenario_id + ": machine " + fmt(machine[i]) + " s vs human " + fmt(t) + " s");
            pooled.push_back(t);
        }
    }
    auto r = mann_whitney(pooled, machine);
    if (!(r.p_two_sided < tol::human_vs_machine_alpha)) return fail("p = " + fmt(r.p_two_sided));
    return {true, "30 human vs 5 machine runs, p = " + fmt(r.p_two_sided) + " (" + std::string(to_string(r.method)) + ")"};
}

// --- HRA -----------------------------------------------------------------------------

Outcome hra_properties() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> dist(0, 2000), width(1, 400), coef(0.01, 1.0);
    for (int i = 0; i < 1000; ++i) {
        FittsParams p{coef(rng), coef(rng)};
        double d1 = dist(rng), d2 = dist(rng), w1 = width(rng), w2 = width(rng);
        if (d1 > d2) std::swap(d1, d2);
        if (w1 > w2) std::swap(w1, w2);
        if (fitts_time(d1, w1, p) > fitts_time(d2, w1, p) * (1 + tol::hra_rel)) return fail("Fitts not monotone in D");
        if (fitts_time(d1, w2, p) > fitts_time(d1, w1, p) * (1 + tol::hra_rel)) return fail("Fitts not antitone in W");
    }
    std::uniform_real_distribution<double> treq(0.5, 60), factor(0.2, 5);
    for (int i = 0; i < 1000; ++i) {
        TimingEstimate t;
        t.t_reqd_s = treq(rng);
        const double base = std::pow(10.0, -1 - 4 * std::uniform_real_distribution<double>(0, 1)(rng));
        HepParams p{base, 1.5 + 4 * std::uniform_real_distribution<double>(0, 1)(rng), t.t_reqd_s * factor(rng)};
        const std::size_t n = 1 + rng() % 40;
        auto h = estimate_hep(t, p, n);
        if (!(h.hep > 0 && h.hep < 1)) return fail("HEP " + fmt(h.hep) + " outside (0,1)");
        auto more_time = p;
        more_time.t_avail_s *= 1.5;
        if (estimate_hep(t, more_time, n).hep > h.hep * (1 + tol::hra_rel)) return fail("HEP rises with t_avail");
        if (estimate_hep(t, p, n + 1).hep < h.hep * (1 - tol::hra_rel)) return fail("HEP falls with n_actions");
    }
    for (int i = 0; i < 1000; ++i) {
        TlxResponse r;
        for (auto& v : r.ratings) v = int(rng() % 21) * 5;
        std::vector<TlxPairChoice> pairs;
        for (std::size_t a = 0; a < kTlxScales; ++a)
            for (std::size_t b = a + 1; b < kTlxScales; ++b)
                pairs.push_back({TlxScale(a), TlxScale(b), rng() % 2 ? TlxScale(a) : TlxScale(b)});
        r.pairs = pairs;
        auto s = tlx_score(r);
        if (s.raw < 0 || s.raw > 100 || !s.weighted || *s.weighted < 0 || *s.weighted > 100)
            return fail("TLX score out of range");
        int sum = 0;
        for (int w : *s.weights) sum += w;
        if (sum != int(kTlxPairs)) return fail("TLX weights sum to " + std::to_string(sum));
    }
    return {true, "Fitts, HEP and TLX properties over 1000 draws each"};
}

// --- service -------------------------------------------------------------------------

class Server {
  public:
    Server(const std::filesystem::path& store, const std::filesystem::path& port_file) {
        std::filesystem::remove(port_file);
        const std::string data = PROCNAV_DATA_DIR;
        std::vector<std::string> args{PROCNAV_CLI,
                                      "serve",
                                      "--layout", data + "/fixture_layout.json",
                                      "--scenarios", data + "/scenarios",
                                      "--hra-config", data + "/hra_config.json",
                                      "--store", store.string(),
                                      "--listen", "127.0.0.1:0",
                                      "--port-file", port_file.string()};
        pid_ = ::fork();
        if (pid_ == 0) {
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            argv.push_back(nullptr);
            ::execv(argv[0], argv.data());
            ::_exit(127);
        }
        auto t0 = Clock::now();
        while (seconds_since(t0) * 1000 < tol::server_start_ms) {
            if (std::filesystem::exists(port_file)) {
                std::ifstream in(port_file);
                in >> port_;
                if (port_ > 0) return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        kill(SIGKILL);
        throw std::runtime_error("server did not start");
    }
    ~Server() {
        if (pid_ > 0) kill(SIGKILL);
    }
    int port() const { return port_; }
    // Returns the wait status.
    int kill(int sig) {
        ::kill(pid_, sig);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
        return status;
    }

  private:
    pid_t pid_ = -1;
    int port_ = 0;
};

struct Reply {
    int status = 0;
    Json body;
};

struct Api {
    httplib::Client http;
    explicit Api(int port) : http("127.0.0.1", port) {
        http.set_read_timeout(10);
        http.set_connection_timeout(2);
    }
    std::optional<Reply> wrap(const httplib::Result& r) {
        if (!r) return std::nullopt;
        Reply out{r->status, nullptr};
        if (!r->body.empty() && r->get_header_value("Content-Type") == "application/json") out.body = Json::parse(r->body);
        return out;
    }
    std::optional<Reply> get(const std::string& path) { return wrap(http.Get(path)); }
    std::optional<Reply> post(const std::string& path, const Json& body) {
        return wrap(http.Post(path, body.dump(), "application/json"));
    }
    std::optional<Reply> send(const std::string& id, std::span<const InteractionEvent> events) {
        Json batch = Json::array();
        for (const auto& e : events) batch.push_back(to_json(e));
        return post("/sessions/" + id + "/events", batch);
    }
    std::string open(const std::string& scenario, const std::string& subject) {
        auto r = post("/sessions", Json{{"subject", subject}, {"scenario", scenario}});
        if (!r || r->status != 201) throw std::runtime_error("cannot open session");
        return r->body["session_id"].get<std::string>();
    }
};

using DevKey = std::tuple<int, std::string, std::vector<std::string>>;
std::multiset<DevKey> keys(const Json& devs) {
    std::multiset<DevKey> out;
    for (const auto& d : devs)
        out.insert({d["step"].get<int>(), d["kind"].get<std::string>(), d["elements"].get<std::vector<std::string>>()});
    return out;
}
bool includes(const std::multiset<DevKey>& big, const std::multiset<DevKey>& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// Acknowledged events survive a hard kill; the restarted service finishes
// the sessions with zero deviations and a matching incremental analysis.
Outcome crash_durability(const std::filesystem::path& store, const std::filesystem::path& port_file) {
    constexpr std::size_t kBatch = 3;
    struct Sess {
        std::string id;
        const ProcedurePlan* plan;
        SessionTrace trace;
        std::size_t acked = 0;
    };
    std::vector<Sess> sessions;
    std::size_t total_batches = 0;
    {
        Server server(store, port_file);
        Api api(server.port());
        for (int i = 0; i < 10; ++i) {
            const auto& plan = fixture::plans()[std::size_t(i) % 5];
            auto id = api.open(plan.scenario_id, "p" + std::to_string(i));
            auto trace = synthesize_trace(plan, fixture::layout(), human(500 + std::uint64_t(i)));
            total_batches += (trace.events.size() + kBatch - 1) / kBatch;
            sessions.push_back({id, &plan, std::move(trace), 0});
        }
        std::atomic<std::size_t> acked_batches{0};
        std::vector<std::thread> workers;
        for (int w = 0; w < 4; ++w)
            workers.emplace_back([&, w] {
                Api client(server.port());
                for (std::size_t k = std::size_t(w); k < sessions.size(); k += 4) {
                    auto& s = sessions[k];
                    const auto& ev = s.trace.events;
                    while (s.acked < ev.size()) {
                        const std::size_t len = std::min(kBatch, ev.size() - s.acked);
                        auto r = client.send(s.id, std::span(ev).subspan(s.acked, len));
                        if (!r || r->status != 200) return;
                        s.acked += len;
                        ++acked_batches;
                    }
                }
            });
        while (acked_batches < total_batches / 2) std::this_thread::sleep_for(std::chrono::milliseconds(1));
        server.kill(SIGKILL);
        for (auto& t : workers) t.join();
    }

    std::size_t acked = 0, stored = 0;
    {
        SessionStore check(store);
        for (auto& s : sessions) {
            auto got = check.get_trace(s.id);
            const auto n = got.events.size();
            if (n < s.acked) return fail(s.id + ": " + std::to_string(s.acked - n) + " acknowledged events lost");
            if (n > std::min(s.trace.events.size(), s.acked + kBatch)) return fail(s.id + ": unexpected extra events");
            if (!std::equal(got.events.begin(), got.events.end(), s.trace.events.begin()))
                return fail(s.id + ": stored events differ from those sent");
            acked += s.acked;
            stored += n;
            s.acked = n;
        }
    }
    if (acked == 0) return fail("no events acknowledged before the kill");

    Server server(store, port_file);
    Api api(server.port());
    for (auto& s : sessions) {
        const auto& ev = s.trace.events;
        for (std::size_t at = s.acked; at < ev.size(); at += kBatch) {
            auto r = api.send(s.id, std::span(ev).subspan(at, std::min(kBatch, ev.size() - at)));
            if (!r || r->status != 200) return fail(s.id + ": resend refused");
        }
        auto done = api.post("/sessions/" + s.id + "/complete", Json::object());
        if (!done || done->status != 200) return fail(s.id + ": complete failed");
        if (done->body["deviations"] != 0) return fail(s.id + ": deviations after restart");
        auto rep = api.get("/sessions/" + s.id + "/report");
        if (!rep || rep->status != 200 || rep->body["incremental_match"] != true)
            return fail(s.id + ": incremental analysis mismatch after restart");
    }
    const int status = server.kill(SIGTERM);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return fail("server did not exit cleanly on SIGTERM");
    return {true, std::to_string(acked) + " acked events kept (" + std::to_string(stored) + " stored) across kill -9"};
}

// Scripted faulty sessions through the spawned service: live deviations
// only grow, and the final report agrees with the batch analysis.
Outcome live_sessions(const std::filesystem::path& store, const std::filesystem::path& port_file) {
    std::mt19937_64 rng(555);
    Server server(store, port_file);
    Api api(server.port());
    const auto& graph = fixture::layout();
    std::size_t live_total = 0;
    for (int i = 0; i < 50; ++i) {
        const auto& plan = fixture::plans()[rng() % 5];
        auto spec = faults::random_spec(rng, plan, graph);
        auto trace = synthesize_trace(plan, graph, human(rng()), spec);
        auto id = api.open(plan.scenario_id, "s" + std::to_string(i));
        const std::string tag = id + " " + format_fault_spec(spec);

        std::multiset<DevKey> last;
        const auto& ev = trace.events;
        for (std::size_t at = 0; at < ev.size();) {
            const std::size_t len = std::min<std::size_t>(1 + rng() % 6, ev.size() - at);
            auto r = api.send(id, std::span(ev).subspan(at, len));
            if (!r || r->status != 200) return fail(tag + ": events refused");
            at += len;
            auto live = api.get("/sessions/" + id + "/live");
            if (!live || live->status != 200) return fail(tag + ": live view unavailable");
            auto now = keys(live->body["deviations"]);
            if (!includes(now, last)) return fail(tag + ": a live deviation disappeared");
            last = std::move(now);
        }
        live_total += last.size();
        auto done = api.post("/sessions/" + id + "/complete", Json::object());
        if (!done || done->status != 200) return fail(tag + ": complete failed");
        auto rep = api.get("/sessions/" + id + "/report");
        if (!rep || rep->status != 200) return fail(tag + ": no report");
        if (rep->body["incremental_match"] != true) return fail(tag + ": incremental_match false");
        auto report = deviation_report_from_json(rep->body["deviations"]);
        Json final_devs = Json::array();
        for (const auto& s : report.steps)
            for (const auto& d : s.deviations) final_devs.push_back(to_json(d));
        if (!includes(keys(final_devs), last)) return fail(tag + ": live deviation missing from the final report");
        auto v = faults::check_recall(spec, report);
        if (!v.ok) return fail(tag + ": " + v.why);

        trace.session_id = id;
        LiveAnalyzer local(plan, graph, id);
        for (const auto& e : trace.events) local.feed(e);
        if (to_json(local.finalize()) != to_json(analyze_session(trace, plan, graph)))
            return fail(tag + ": in-process live analysis differs from batch");
    }
    server.kill(SIGTERM);
    return {true, "50 faulty sessions, " + std::to_string(live_total) + " live deviations, all reports consistent"};
}

}  // namespace

int main() {
    fixture::TempDir dir;
    const auto store = dir.path / "store";
    const auto port_file = dir.path / "port";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"procedure parsing: 29 steps in 5 scenarios", parse_counts},
        {"S1 step 1 maps to its single navigation path", s1_step1_path},
        {"step classification matches the labelled table", classification_labels},
        {"fault-free sessions yield no deviations", fault_free_sessions},
        {"injected faults are recalled with the mapped kind", fault_recall},
        {"path enumeration matches exhaustive search", dag_paths},
        {"exact Mann-Whitney p matches enumeration", mann_whitney_exact},
        {"automated execution beats every simulated human", machine_vs_human},
        {"HRA models: Fitts, HEP and TLX invariants", hra_properties},
        {"service keeps acknowledged events across kill -9",
         [&] { return crash_durability(store, port_file); }},
        {"service live deviations agree with batch analysis",
         [&] { return live_sessions(store, port_file); }},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << (o.detail.empty() ? "" : " -- " + o.detail) << std::endl;
    }
    std::cout << (criteria.size() - std::size_t(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
