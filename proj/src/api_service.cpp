#include "procnav/api_service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "procnav/deviation.hpp"
#include "procnav/error.hpp"
#include "procnav/executor.hpp"
#include "procnav/report.hpp"

namespace procnav {

void parse_listen(std::string_view text, ServiceConfig& config) {
    std::string host = config.host;
    std::string_view port = text;
    if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
        if (colon > 0) host = std::string(text.substr(0, colon));
        port = text.substr(colon + 1);
    }
    int p = -1;
    try {
        std::size_t used = 0;
        p = std::stoi(std::string(port), &used);
        if (used != port.size()) p = -1;
    } catch (const std::exception&) {
    }
    if (p < 0 || p > 65535) throw Error(ErrorCode::invalid_params, "bad listen address '" + std::string(text) + "'");
    config.host = host;
    config.port = p;
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr const char* kJson = "application/json";
const std::string kReportArtifact = std::string("report-v") + kAnalysisVersion;
const std::string kTlxArtifact = "tlx";

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::optional<std::string>& field = std::nullopt, Json extra = Json::object()) {
    Json j{{"error", code}, {"message", message}};
    if (field) j["field"] = *field;
    for (auto& [k, v] : extra.items()) j[k] = v;
    send_json(res, status, j);
}

int status_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::unknown_session: return 404;
        case ErrorCode::session_closed: return 409;
        case ErrorCode::io_error: return 500;
        default: return 422;
    }
}

// Name of the request field an error refers to.
std::optional<std::string> field_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::time_regression: return "t";
        case ErrorCode::duplicate_marker:
        case ErrorCode::invalid_marker: return "step";
        case ErrorCode::invalid_event: {
            // "invalid_event: field: message"
            std::string_view w = e.what();
            auto first = w.find(": ");
            if (first == std::string_view::npos) return std::nullopt;
            auto rest = w.substr(first + 2);
            auto second = rest.find(':');
            if (second == std::string_view::npos) return std::nullopt;
            return std::string(rest.substr(0, second));
        }
        default: return std::nullopt;
    }
}

void send_domain_error(httplib::Response& res, const Error& e, Json extra = Json::object()) {
    send_error(res, status_for(e.code()), code_name(e.code()), e.what(), field_for(e), std::move(extra));
}

std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) h = (h ^ c) * 16777619u;
    return h;
}

std::string report_url(const std::string& id) { return "/sessions/" + id + "/report"; }

}  // namespace

struct ApiService::Impl {
    struct Scenario {
        ProcedurePlan plan;
        std::string plan_body;
    };

    // Runtime state of one session. `m` serializes its writers.
    struct Runtime {
        std::mutex m;
        std::unique_ptr<LiveAnalyzer> live;
    };

    struct Driver {
        std::mutex send;  // one command in flight
        std::mutex m;
        std::condition_variable cv;
        std::optional<DriverCommand> pending;  // queued, not yet fetched by the UI
        std::optional<std::uint64_t> inflight;
        std::optional<DriverAck> ack;
        std::optional<std::string> failure;
        int polling = 0;
        std::optional<Clock::time_point> last_poll;
        std::uint64_t next_id = 0;
    };

    ServiceConfig cfg;
    std::string layout_body;
    IeGraph graph{InterfaceElement{"root", "root", {}, ElementKind::container, {0, 0, 1, 1}}};
    HraConfig hra;
    std::map<std::string, Scenario> scenarios;
    std::vector<std::string> scenario_ids;
    std::unique_ptr<SessionStore> store;

    std::mutex runtimes_m;
    std::map<std::string, std::unique_ptr<Runtime>> runtimes;
    std::mutex reports_m;
    std::map<std::string, DeviationReport> reports;  // closed sessions, computed once

    Driver driver;
    std::atomic<bool> stopping{false};
    httplib::Server server;
    std::optional<int> bound_port;
    std::thread thread;

    explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
        layout_body = read_file(cfg.layout);
        graph = load_graph(layout_body);
        if (auto v = graph.validate(); !v.empty())
            throw Error(ErrorCode::malformed_format, cfg.layout.string() + ": " + v.front().message);
        if (cfg.hra_config) hra = parse_hra_config(read_file(*cfg.hra_config));

        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(cfg.scenarios))
            if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw Error(ErrorCode::empty_input, "no procedures in " + cfg.scenarios.string());
        for (const auto& f : files) {
            const std::string id = f.stem().string();
            auto doc = parse_procedure(read_file(f), id);
            Scenario s;
            s.plan = plan_procedure(doc, graph, PlanOptions{cfg.chaining, false, kDefaultPathLimit});
            s.plan_body = save_plan(s.plan, compile_plan(s.plan, graph, FixedDwell{100}));
            scenario_ids.push_back(id);
            scenarios.emplace(id, std::move(s));
        }
        store = std::make_unique<SessionStore>(cfg.store);
        routes();
    }

    const Scenario* scenario(const std::string& id) const {
        auto it = scenarios.find(id);
        return it == scenarios.end() ? nullptr : &it->second;
    }

    // The runtime for an existing session; open sessions get their live
    // analyzer rebuilt from the stored trace on first use.
    Runtime& runtime(const std::string& id) {
        auto meta = store->meta(id);  // throws unknown_session
        std::lock_guard lock(runtimes_m);
        auto& slot = runtimes[id];
        if (!slot) {
            slot = std::make_unique<Runtime>();
            if (const auto* s = scenario(meta.scenario_id); s && meta.state == SessionState::open) {
                slot->live = std::make_unique<LiveAnalyzer>(s->plan, graph, id);
                for (const auto& e : store->get_trace(id).events) slot->live->feed(e);
            }
        }
        return *slot;
    }

    const Scenario& scenario_of(const SessionMeta& meta) const {
        const auto* s = scenario(meta.scenario_id);
        if (!s) throw Error(ErrorCode::scenario_mismatch, "session scenario '" + meta.scenario_id + "' is not loaded");
        return *s;
    }

    // Deviation report of a closed session. Reports are a function of the
    // stored trace, so a missing cache entry is recomputed.
    DeviationReport closed_report(const SessionMeta& meta) {
        {
            std::lock_guard lock(reports_m);
            if (auto it = reports.find(meta.session_id); it != reports.end()) return it->second;
        }
        auto report = analyze_session(store->get_trace(meta.session_id), scenario_of(meta).plan, graph);
        std::lock_guard lock(reports_m);
        return reports.emplace(meta.session_id, std::move(report)).first->second;
    }

    Json full_report(const SessionMeta& meta) {
        const auto& sc = scenario_of(meta);
        Json body;
        if (auto cached = store->get_artifact(meta.session_id, kReportArtifact)) {
            body = Json::parse(*cached);
        } else {
            body = compose_report(closed_report(meta), sc.plan, graph, hra.for_scenario(meta.scenario_id));
            body["incremental_match"] = nullptr;
            store->put_artifact(meta.session_id, kReportArtifact, body.dump());
        }
        if (auto tlx = store->get_artifact(meta.session_id, kTlxArtifact)) body["tlx"] = Json::parse(*tlx)["score"];
        return body;
    }

    static std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
        try {
            return Json::parse(req.body);
        } catch (const Json::parse_error& e) {
            send_error(res, 422, "malformed-format", std::string("body is not valid JSON: ") + e.what(), "body");
            return std::nullopt;
        }
    }

    // --- handlers -----------------------------------------------------------

    void post_session(const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req, res);
        if (!body) return;
        if (!body->is_object()) return send_error(res, 422, "invalid-event", "expected an object", "body");
        for (const char* key : {"subject", "scenario"})
            if (!body->contains(key) || !(*body)[key].is_string() || (*body)[key].get<std::string>().empty())
                return send_error(res, 422, "invalid-params", std::string(key) + " must be a non-empty string", key);
        const auto subject = (*body)["subject"].get<std::string>();
        const auto sc = (*body)["scenario"].get<std::string>();
        if (!scenario(sc)) return send_error(res, 422, "invalid-params", "unknown scenario '" + sc + "'", "scenario");
        auto id = store->open_session(subject, sc);
        send_json(res, 201, Json{{"session_id", id}, {"scenario", sc}, {"plan_url", "/scenarios/" + sc + "/plan"}});
    }

    void post_events(const std::string& id, const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req, res);
        if (!body) return;
        std::vector<InteractionEvent> events;
        const Json items = body->is_array() ? *body : Json::array({*body});
        for (std::size_t i = 0; i < items.size(); ++i) {
            try {
                events.push_back(event_from_json(items[i]));
            } catch (const Error& e) {
                return send_domain_error(res, e, Json{{"index", i}});
            }
        }
        auto& rt = runtime(id);
        std::lock_guard lock(rt.m);
        if (store->meta(id).state == SessionState::closed || !rt.live)
            return send_error(res, 409, "session-closed", "session " + id + " is closed", std::nullopt,
                              Json{{"report_url", report_url(id)}});
        auto next = std::make_unique<LiveAnalyzer>(*rt.live);
        for (std::size_t i = 0; i < events.size(); ++i) {
            try {
                next->feed(events[i]);
            } catch (const Error& e) {
                return send_domain_error(res, e, Json{{"index", i}});
            }
        }
        store->append_events(id, events);  // durable before the 2xx
        rt.live = std::move(next);
        send_json(res, 200, Json{{"accepted", events.size()}});
    }

    void post_complete(const std::string& id, httplib::Response& res) {
        auto& rt = runtime(id);
        std::lock_guard lock(rt.m);
        auto meta = store->meta(id);
        if (meta.state == SessionState::closed || !rt.live)
            return send_error(res, 409, "session-closed", "session " + id + " is already complete", std::nullopt,
                              Json{{"report_url", report_url(id)}});
        const auto& sc = scenario_of(meta);
        auto batch = analyze_session(store->get_trace(id), sc.plan, graph);
        const bool match = to_json(rt.live->finalize()) == to_json(batch);
        if (!match) std::cerr << "procnav: incremental analysis of " << id << " differs from the batch report\n";
        auto body = compose_report(batch, sc.plan, graph, hra.for_scenario(meta.scenario_id));
        body["incremental_match"] = match;
        store->close_session(id);
        store->put_artifact(id, kReportArtifact, body.dump());
        {
            std::lock_guard rl(reports_m);
            reports[id] = batch;
        }
        rt.live.reset();
        send_json(res, 200, Json{{"report_url", report_url(id)}, {"deviations", batch.total_deviations()}});
    }

    void get_live(const std::string& id, httplib::Response& res) {
        auto& rt = runtime(id);
        std::lock_guard lock(rt.m);
        if (!rt.live)
            return send_error(res, 404, "session-closed", "session " + id + " is complete", std::nullopt,
                              Json{{"report_url", report_url(id)}});
        Json devs = Json::array();
        for (const auto& d : rt.live->deviations()) devs.push_back(to_json(d));
        Json last = nullptr;
        if (const auto& c = rt.live->last_click()) last = c->element ? Json(*c->element) : Json("");
        send_json(res, 200,
                  Json{{"session", id},
                       {"current_step", rt.live->current_step().value_or(0)},
                       {"last_element", last},
                       {"deviation_count", devs.size()},
                       {"deviations", std::move(devs)}});
    }

    void post_tlx(const std::string& id, const httplib::Request& req, httplib::Response& res) {
        auto meta = store->meta(id);
        if (meta.state != SessionState::closed)
            return send_error(res, 409, "session-open", "complete the session before submitting TLX");
        if (store->get_artifact(id, kTlxArtifact))
            return send_error(res, 409, "duplicate-tlx", "TLX already submitted for " + id);
        auto body = parse_body(req, res);
        if (!body) return;
        TlxResponse response;
        TlxScore score;
        try {
            response = tlx_response_from_json(*body);
            score = tlx_score(response);
        } catch (const Error& e) {
            return send_domain_error(res, e);
        }
        Json stored{{"response", to_json(response)}, {"score", to_json(score)}};
        if (!store->put_artifact(id, kTlxArtifact, stored.dump()))
            return send_error(res, 409, "duplicate-tlx", "TLX already submitted for " + id);
        send_json(res, 201, stored["score"]);
    }

    void get_tlx_form(const std::string& id, httplib::Response& res) {
        auto meta = store->meta(id);
        TlxTaskMeta tm{id, meta.scenario_id, "Scenario " + meta.scenario_id + " workload", fnv1a(id)};
        Json j = to_json(tlx_generate(tm));
        j["submitted"] = store->get_artifact(id, kTlxArtifact).has_value();
        send_json(res, 200, j);
    }

    void get_report(const std::string& id, httplib::Response& res) {
        auto meta = store->meta(id);
        if (meta.state != SessionState::closed)
            return send_error(res, 409, "session-open", "session " + id + " is still open");
        send_json(res, 200, full_report(meta));
    }

    void get_risk(const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("scenario")) return send_error(res, 422, "invalid-params", "scenario is required", "scenario");
        const auto sc = req.get_param_value("scenario");
        const auto* s = scenario(sc);
        if (!s) return send_error(res, 404, "unknown-scenario", "unknown scenario '" + sc + "'");
        std::vector<DeviationReport> closed;
        for (const auto& m : store->list_sessions(SessionFilter{sc, std::nullopt}))
            if (m.state == SessionState::closed) closed.push_back(closed_report(m));
        if (closed.empty()) return send_error(res, 404, "empty-input", "no completed sessions for " + sc);
        auto risk = aggregate_risk(closed, s->plan);
        if (req.get_param_value("format") == "tsv") {
            res.status = 200;
            res.set_content(risk_table_tsv(risk), "text/tab-separated-values");
            return;
        }
        send_json(res, 200, to_json(risk));
    }

    // --- driver channel -------------------------------------------------------

    bool ui_attached() const {
        if (driver.polling > 0) return true;
        return driver.last_poll && Clock::now() - *driver.last_poll < std::chrono::milliseconds(cfg.attach_window_ms);
    }

    void post_command(const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req, res);
        if (!body) return;
        DriverCommand cmd;
        try {
            cmd = driver_command_from_json(*body);
        } catch (const Error& e) {
            return send_domain_error(res, e);
        }
        std::lock_guard one(driver.send);
        std::unique_lock lock(driver.m);
        if (!ui_attached()) return send_error(res, 503, "no-ui-attached", "no UI is polling the driver channel");
        if (cmd.id == 0) cmd.id = ++driver.next_id;
        driver.pending = cmd;
        driver.inflight = cmd.id;
        driver.ack.reset();
        driver.failure.reset();
        driver.cv.notify_all();
        bool done = driver.cv.wait_for(lock, std::chrono::milliseconds(cfg.driver_timeout_ms), [&] {
            return driver.ack || driver.failure || stopping;
        });
        driver.pending.reset();
        driver.inflight.reset();
        if (driver.failure) return send_error(res, 502, "protocol-error", *driver.failure);
        if (!done || !driver.ack) return send_error(res, 504, "timeout", "UI did not acknowledge command " + std::to_string(cmd.id));
        send_json(res, 200, to_json(*driver.ack));
    }

    void get_next(const httplib::Request& req, httplib::Response& res) {
        int wait = cfg.poll_wait_ms;
        if (req.has_param("wait_ms")) {
            try {
                wait = std::clamp(std::stoi(req.get_param_value("wait_ms")), 0, cfg.poll_wait_ms);
            } catch (const std::exception&) {
                return send_error(res, 422, "invalid-params", "wait_ms must be an integer", "wait_ms");
            }
        }
        std::unique_lock lock(driver.m);
        ++driver.polling;
        driver.last_poll = Clock::now();
        driver.cv.wait_for(lock, std::chrono::milliseconds(wait), [&] { return driver.pending || stopping; });
        --driver.polling;
        driver.last_poll = Clock::now();
        if (!driver.pending) {
            res.status = 204;
            return;
        }
        auto cmd = *driver.pending;
        driver.pending.reset();
        send_json(res, 200, to_json(cmd));
    }

    void post_ack(const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req, res);
        if (!body) return;
        DriverAck ack;
        try {
            ack = driver_ack_from_json(*body);
        } catch (const Error& e) {
            return send_domain_error(res, e);
        }
        std::lock_guard lock(driver.m);
        driver.last_poll = Clock::now();
        if (!driver.inflight) {
            std::cerr << "procnav: protocol error: ack " << ack.id << " with no command in flight\n";
            return send_error(res, 409, "protocol-error", "no command in flight");
        }
        if (ack.id != *driver.inflight) {
            std::string why = "ack id " + std::to_string(ack.id) + " does not match command " + std::to_string(*driver.inflight);
            std::cerr << "procnav: protocol error: " << why << "\n";
            driver.failure = why;
            driver.cv.notify_all();
            return send_error(res, 409, "protocol-error", why);
        }
        driver.ack = ack;
        driver.cv.notify_all();
        send_json(res, 200, Json::object());
    }

    // --- routing ------------------------------------------------------------

    template <class F>
    auto guarded(F f) {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_domain_error(res, e);
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        };
    }

    void routes() {
        server.new_task_queue = [] { return new httplib::ThreadPool(16); };
        server.Get("/layout", guarded([this](const httplib::Request&, httplib::Response& res) {
            res.set_content(layout_body, kJson);
        }));
        server.Get("/scenarios", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, Json(scenario_ids));
        }));
        server.Get(R"(/scenarios/([^/]+)/plan)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto* s = scenario(req.matches[1]);
            if (!s) return send_error(res, 404, "unknown-scenario", "unknown scenario '" + std::string(req.matches[1]) + "'");
            res.set_content(s->plan_body, kJson);
        }));
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) { post_session(req, res); }));
        server.Post(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            post_events(req.matches[1], req, res);
        }));
        server.Post(R"(/sessions/([^/]+)/complete)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            post_complete(req.matches[1], res);
        }));
        server.Get(R"(/sessions/([^/]+)/live)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            get_live(req.matches[1], res);
        }));
        server.Post(R"(/sessions/([^/]+)/tlx)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            post_tlx(req.matches[1], req, res);
        }));
        server.Get(R"(/sessions/([^/]+)/tlx)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            get_tlx_form(req.matches[1], res);
        }));
        server.Get(R"(/sessions/([^/]+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            get_report(req.matches[1], res);
        }));
        server.Get("/risk", guarded([this](const httplib::Request& req, httplib::Response& res) { get_risk(req, res); }));
        server.Post("/driver/commands", guarded([this](const httplib::Request& req, httplib::Response& res) {
            post_command(req, res);
        }));
        server.Get("/driver/next", guarded([this](const httplib::Request& req, httplib::Response& res) { get_next(req, res); }));
        server.Post("/driver/ack", guarded([this](const httplib::Request& req, httplib::Response& res) { post_ack(req, res); }));
    }
};

ApiService::ApiService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

ApiService::~ApiService() {
    stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiService::bind() {
    if (impl_->bound_port) return *impl_->bound_port;
    int port = impl_->cfg.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->cfg.host);
    } else if (!impl_->server.bind_to_port(impl_->cfg.host, port)) {
        port = -1;
    }
    if (port <= 0)
        throw Error(ErrorCode::io_error, "cannot listen on " + impl_->cfg.host + ":" + std::to_string(impl_->cfg.port));
    impl_->bound_port = port;
    return port;
}

void ApiService::serve() {
    bind();
    impl_->server.listen_after_bind();
}

int ApiService::start() {
    int port = bind();
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void ApiService::stop() {
    impl_->stopping = true;
    {
        std::lock_guard lock(impl_->driver.m);
        impl_->driver.cv.notify_all();
    }
    impl_->server.stop();
}

}  // namespace procnav
