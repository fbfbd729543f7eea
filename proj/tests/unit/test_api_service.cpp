#include <httplib.h>

#include "doctest.h"
#include "procnav/api_service.hpp"
#include "procnav/deviation.hpp"
#include "procnav/error.hpp"
#include "procnav/executor.hpp"
#include "../support/fake_ui.hpp"
#include "../support/fixture.hpp"
#include "../support/tempdir.hpp"

using namespace procnav;

namespace {

ServiceConfig config_for(const std::filesystem::path& store) {
    ServiceConfig c;
    c.layout = std::string(PROCNAV_DATA_DIR) + "/fixture_layout.json";
    c.scenarios = std::string(PROCNAV_DATA_DIR) + "/scenarios";
    c.hra_config = std::string(PROCNAV_DATA_DIR) + "/hra_config.json";
    c.store = store;
    c.port = 0;
    c.attach_window_ms = 1000;
    c.driver_timeout_ms = 2000;
    c.poll_wait_ms = 500;
    return c;
}

struct Reply {
    int status = 0;
    Json body;
    std::string raw;
};

struct Api {
    httplib::Client http;
    explicit Api(int port) : http("127.0.0.1", port) { http.set_read_timeout(10); }
    static Reply wrap(const httplib::Result& r) {
        REQUIRE(r);
        Reply out{r->status, nullptr, r->body};
        if (!r->body.empty() && r->get_header_value("Content-Type") == "application/json") out.body = Json::parse(r->body);
        return out;
    }
    Reply get(const std::string& path) { return wrap(http.Get(path)); }
    Reply post(const std::string& path, const Json& body) { return wrap(http.Post(path, body.dump(), "application/json")); }

    std::string open(const std::string& scenario, const std::string& subject = "p01") {
        auto r = post("/sessions", Json{{"subject", subject}, {"scenario", scenario}});
        REQUIRE(r.status == 201);
        return r.body["session_id"].get<std::string>();
    }
    Reply send(const std::string& id, const std::vector<InteractionEvent>& events) {
        Json batch = Json::array();
        for (const auto& e : events) batch.push_back(to_json(e));
        return post("/sessions/" + id + "/events", batch);
    }
};

const ProcedurePlan& plan_for(const std::string& scenario) {
    for (const auto& p : fixture::plans())
        if (p.scenario_id == scenario) return p;
    throw std::runtime_error("no plan " + scenario);
}

}  // namespace

TEST_CASE("artifact endpoints") {
    fixture::TempDir dir;
    ApiService svc(config_for(dir.path));
    Api api(svc.start());
    auto s = api.get("/scenarios");
    CHECK(s.status == 200);
    CHECK(s.body == Json::array({"S1", "S2", "S3", "S4", "S5"}));
    auto l1 = api.get("/layout"), l2 = api.get("/layout");
    CHECK(l1.raw == l2.raw);
    CHECK(l1.raw == fixture::read("fixture_layout.json"));
    auto plan = api.get("/scenarios/S1/plan");
    CHECK(plan.status == 200);
    auto loaded = load_plan(plan.raw);
    CHECK(loaded.plan.steps.size() == 7);
    CHECK(loaded.scripts.size() == 7);
    CHECK(api.get("/scenarios/S9/plan").status == 404);
}

TEST_CASE("session lifecycle") {
    fixture::TempDir dir;
    ApiService svc(config_for(dir.path));
    Api api(svc.start());
    const auto& g = fixture::layout();
    const auto& plan = plan_for("S1");

    CHECK(api.post("/sessions", Json{{"subject", "p01"}, {"scenario", "S9"}}).status == 422);
    CHECK(api.post("/sessions", Json{{"scenario", "S1"}}).body["field"] == "subject");

    auto id = api.open("S1");
    auto fresh = api.get("/sessions/" + id + "/live");
    CHECK(fresh.status == 200);
    CHECK(fresh.body["current_step"] == 0);
    CHECK(fresh.body["deviations"].empty());

    auto trace = synthesize_trace(plan, g, HumanPolicy{});
    std::vector<InteractionEvent> first(trace.events.begin(), trace.events.begin() + 10);
    std::vector<InteractionEvent> rest(trace.events.begin() + 10, trace.events.end());
    auto r1 = api.send(id, first);
    CHECK(r1.status == 200);
    CHECK(r1.body["accepted"] == 10);

    auto back = api.send(id, {click_at(0, 1, 1)});
    CHECK(back.status == 422);
    CHECK(back.body["field"] == "t");
    auto bad = api.post("/sessions/" + id + "/events", Json::array({Json{{"t", 99999}, {"kind", "click"}, {"x", 1}}}));
    CHECK(bad.status == 422);
    CHECK(bad.body["field"] == "y");
    auto dupmark = api.send(id, {marker(trace.events[9].t, 1)});
    CHECK(dupmark.status == 422);
    CHECK(dupmark.body["field"] == "step");

    CHECK(api.send(id, rest).status == 200);
    CHECK(api.get("/sessions/" + id + "/report").status == 409);
    CHECK(api.post("/sessions/" + id + "/tlx", Json{{"ratings", {50, 50, 50, 50, 50, 50}}}).status == 409);

    auto done = api.post("/sessions/" + id + "/complete", Json::object());
    CHECK(done.status == 200);
    CHECK(done.body["report_url"] == "/sessions/" + id + "/report");
    CHECK(done.body["deviations"] == 0);
    CHECK(api.send(id, {click_at(999999, 1, 1)}).status == 409);
    CHECK(api.post("/sessions/" + id + "/complete", Json::object()).status == 409);
    auto closed_live = api.get("/sessions/" + id + "/live");
    CHECK(closed_live.status == 404);
    CHECK(closed_live.body["report_url"] == "/sessions/" + id + "/report");

    auto report = api.get("/sessions/" + id + "/report");
    CHECK(report.status == 200);
    CHECK(report.body["deviations"]["totals"]["deviations"] == 0);
    CHECK(report.body["incremental_match"] == true);
    CHECK(report.body["timing"]["steps"].size() == 7);
    CHECK(report.body["hra"]["hep"]["hep"].get<double>() > 0);
    CHECK(report.body["hra"]["t_avail_s"] == 150.0);
    CHECK(report.body["tlx"].is_null());

    auto form = api.get("/sessions/" + id + "/tlx");
    CHECK(form.status == 200);
    CHECK(form.body["scales"].size() == 6);
    CHECK(form.body["pairs"].size() == 15);
    auto tlx = api.post("/sessions/" + id + "/tlx", Json{{"ratings", {50, 50, 50, 50, 50, 50}}});
    CHECK(tlx.status == 201);
    CHECK(tlx.body["raw"] == 50.0);
    CHECK(api.post("/sessions/" + id + "/tlx", Json{{"ratings", {10, 10, 10, 10, 10, 10}}}).status == 409);
    CHECK(api.get("/sessions/" + id + "/report").body["tlx"]["raw"] == 50.0);
    CHECK(api.post("/sessions/" + id + "/tlx", Json{{"ratings", {1}}}).status == 409);

    CHECK(api.get("/sessions/sess-999999/live").status == 404);
    CHECK(api.send("sess-999999", {click_at(1, 1, 1)}).status == 404);
}

TEST_CASE("TLX validation") {
    fixture::TempDir dir;
    ApiService svc(config_for(dir.path));
    Api api(svc.start());
    auto id = api.open("S5");
    api.send(id, synthesize_trace(plan_for("S5"), fixture::layout(), MachinePolicy{}).events);
    api.post("/sessions/" + id + "/complete", Json::object());
    CHECK(api.post("/sessions/" + id + "/tlx", Json{{"ratings", {50, 50, 50, 50, 50, 51}}}).status == 422);
    CHECK(api.post("/sessions/" + id + "/tlx", Json{{"ratings", {50, 50}}}).status == 422);
    Json pairs = Json::array();
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            pairs.push_back({{"first", to_string(TlxScale(i))}, {"second", to_string(TlxScale(j))}, {"winner", to_string(TlxScale(i))}});
    auto ok = api.post("/sessions/" + id + "/tlx", Json{{"ratings", {100, 80, 60, 40, 20, 0}}, {"pairs", pairs}});
    CHECK(ok.status == 201);
    // Weights 5,4,3,2,1,0.
    CHECK(ok.body["weighted"].get<double>() == doctest::Approx((500 + 320 + 180 + 80 + 20) / 15.0));
}

TEST_CASE("live feedback on a wrong-panel click") {
    fixture::TempDir dir;
    ApiService svc(config_for(dir.path));
    Api api(svc.start());
    const auto& g = fixture::layout();
    auto id = api.open("S1");
    auto c = [&](std::int64_t t, const char* el) {
        auto p = g.element(el).bbox.center();
        return click_at(t, std::int64_t(p.x), std::int64_t(p.y));
    };
    api.send(id, {marker(0, 1), c(100, "Flowchart"), c(200, "Nuclear Island System"), c(300, "2KLADW001")});
    auto live = api.get("/sessions/" + id + "/live");
    CHECK(live.body["current_step"] == 1);
    CHECK(live.body["last_element"] == "2KLADW001");
    REQUIRE(live.body["deviations"].size() == 1);
    CHECK(live.body["deviations"][0]["kind"] == "commission");
}

TEST_CASE("risk over completed sessions") {
    fixture::TempDir dir;
    ApiService svc(config_for(dir.path));
    Api api(svc.start());
    const auto& g = fixture::layout();
    const auto& plan = plan_for("S1");
    CHECK(api.get("/risk").status == 422);
    CHECK(api.get("/risk?scenario=S1").status == 404);
    for (const char* spec : {"", "", "omission@3", "extra_click@3,omission@6"}) {
        auto id = api.open("S1");
        api.send(id, synthesize_trace(plan, g, MachinePolicy{}, parse_fault_spec(spec)).events);
        CHECK(api.post("/sessions/" + id + "/complete", Json::object()).status == 200);
    }
    api.open("S1");  // open sessions are not aggregated
    auto risk = api.get("/risk?scenario=S1");
    CHECK(risk.status == 200);
    CHECK(risk.body["sessions"] == 4);
    CHECK(risk.body["pathways"][0]["step"] == 3);
    auto tsv = api.http.Get("/risk?scenario=S1&format=tsv");
    CHECK(tsv->body.rfind("rank\t", 0) == 0);
}

TEST_CASE("restart keeps acked events and rebuilds live state") {
    fixture::TempDir dir;
    const auto& g = fixture::layout();
    auto trace = synthesize_trace(plan_for("S2"), g, MachinePolicy{});
    std::string id;
    std::size_t half = trace.events.size() / 2;
    {
        ApiService svc(config_for(dir.path));
        Api api(svc.start());
        id = api.open("S2");
        std::vector<InteractionEvent> a(trace.events.begin(), trace.events.begin() + std::ptrdiff_t(half));
        CHECK(api.send(id, a).status == 200);
    }
    ApiService svc(config_for(dir.path));
    Api api(svc.start());
    auto live = api.get("/sessions/" + id + "/live");
    CHECK(live.status == 200);
    CHECK(live.body["current_step"].get<int>() > 0);
    std::vector<InteractionEvent> b(trace.events.begin() + std::ptrdiff_t(half), trace.events.end());
    CHECK(api.send(id, b).status == 200);
    auto done = api.post("/sessions/" + id + "/complete", Json::object());
    CHECK(done.body["deviations"] == 0);
    CHECK(api.get("/sessions/" + id + "/report").body["incremental_match"] == true);
}

TEST_CASE("driver channel") {
    fixture::TempDir dir;
    ApiService svc(config_for(dir.path));
    int port = svc.start();
    Api api(port);
    const auto& g = fixture::layout();
    auto script = compile_script(plan_for("S1").steps[0].path_set, g, FixedDwell{100});

    auto none = api.post("/driver/commands", to_json(DriverCommand{1, "Flowchart", {80, 20}, 0}));
    CHECK(none.status == 503);
    HttpLiveDriver http("127.0.0.1", port, 5);
    auto lost = execute_live(script, g, http);
    CHECK(lost.error == ErrorCode::transport_failure);
    CHECK(lost.dispatched() == 1);

    {
        fixture::FakeUi ui(g, port);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        auto out = execute_live(script, g, http);
        CHECK(out.ok());
        CHECK(out.confirmed() == 4);
        CHECK(ui.state().current_panel() == "2LABDW001");
        CHECK(ui.handled() == 4);
    }
    CHECK(api.post("/driver/ack", Json{{"id", 5}, {"open_panel", "x"}}).status == 409);
    {
        fixture::FakeUi liar(g, port, 1000);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        auto out = execute_live(script, g, http);
        CHECK(out.error == ErrorCode::transport_failure);
        CHECK(out.message.find("does not match") != std::string::npos);
        CHECK(out.confirmed() == 0);
    }
}

TEST_CASE("listen address parsing") {
    ServiceConfig c;
    parse_listen("0.0.0.0:9000", c);
    CHECK(c.host == "0.0.0.0");
    CHECK(c.port == 9000);
    parse_listen(":0", c);
    CHECK(c.port == 0);
    parse_listen("8081", c);
    CHECK(c.port == 8081);
    CHECK_THROWS_AS(parse_listen("host:abc", c), Error);
}
