#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "procnav/api_service.hpp"
#include "procnav/deviation.hpp"
#include "procnav/error.hpp"
#include "procnav/executor.hpp"
#include "procnav/hra_models.hpp"
#include "procnav/planner.hpp"
#include "procnav/procedures.hpp"
#include "procnav/report.hpp"
#include "procnav/serialization.hpp"
#include "procnav/sessions.hpp"
#include "procnav/stats.hpp"

namespace py = pybind11;
using namespace procnav;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::handle& obj) {
    return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

ProcedureDoc procedure_of(const std::string& text, const std::string& scenario) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        auto doc = procedure_from_json(parse_json_text(text, "procedure"));
        if (!scenario.empty()) doc.scenario_id = scenario;
        validate_procedure(doc);
        return doc;
    }
    return parse_procedure(text, scenario);
}

class Service {
  public:
    explicit Service(ServiceConfig cfg) : svc_(std::move(cfg)) {}
    int start() { return svc_.start(); }
    void stop() { svc_.stop(); }

  private:
    ApiService svc_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Procedure navigation planning and deviation analysis";

    // The module keeps the type alive.
    static py::handle error_type = py::exception<Error>(m, "ProcnavError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object inst = error_type(py::str(e.what()));
            inst.attr("code") = std::string(code_name(e.code()));
            PyErr_SetObject(error_type.ptr(), inst.ptr());
        }
    });

    py::class_<IeGraph>(m, "Layout")
        .def(py::init([](const std::string& text) { return load_graph(text); }), py::arg("text"))
        .def_property_readonly("root", &IeGraph::root)
        .def_property_readonly("element_count", [](const IeGraph& g) { return g.elements().size(); })
        .def_property_readonly("edge_count", &IeGraph::edge_count)
        .def("element", [](const IeGraph& g, const std::string& id) {
            const auto& e = g.element(id);
            return py::dict(py::arg("id") = e.id, py::arg("name") = e.name, py::arg("aliases") = e.aliases,
                            py::arg("kind") = std::string(to_string(e.kind)),
                            py::arg("bbox") = py::make_tuple(e.bbox.x, e.bbox.y, e.bbox.width, e.bbox.height));
        })
        .def("find", &IeGraph::find_elements, py::arg("query"))
        .def("paths", [](const IeGraph& g, const std::string& target, std::size_t limit) {
            auto e = g.enumerate_paths(target, limit);
            return py::make_tuple(e.paths, e.limit_exceeded);
        }, py::arg("target"), py::arg("limit") = kDefaultPathLimit)
        .def("validate", [](const IeGraph& g) {
            py::list out;
            for (const auto& v : g.validate())
                out.append(py::dict(py::arg("kind") = std::string(to_string(v.kind)), py::arg("subjects") = v.subjects,
                                    py::arg("message") = v.message));
            return out;
        })
        .def("to_json", &save_graph);

    m.def("parse_procedure", [](const std::string& text, const std::string& scenario) {
        return to_py(to_json(procedure_of(text, scenario)));
    }, py::arg("text"), py::arg("scenario") = "");

    m.def("plan_procedure", [](const IeGraph& g, const std::string& procedure, const std::string& scenario,
                               bool chaining, const std::string& policy) {
        PlanOptions opt;
        opt.chaining = chaining;
        auto plan = plan_procedure(procedure_of(procedure, scenario), g, opt);
        return save_plan(plan, compile_plan(plan, g, parse_policy(policy)));
    }, py::arg("layout"), py::arg("procedure"), py::arg("scenario") = "", py::arg("chaining") = false,
       py::arg("policy") = "fixed:100", "Plan file text for a procedure (plain text or parsed JSON).");

    m.def("synthesize", [](const IeGraph& g, const std::string& plan_text, const std::string& op, std::uint64_t seed,
                           const std::string& faults, std::int64_t dwell_ms, const std::string& session,
                           const std::string& subject) {
        auto plan = load_plan(plan_text).plan;
        OperatorPolicy policy = MachinePolicy{dwell_ms};
        if (op == "human") {
            HumanPolicy h;
            h.seed = seed;
            policy = h;
        } else if (op != "machine") {
            throw Error(ErrorCode::invalid_params, "operator must be 'human' or 'machine'");
        }
        TraceMeta meta{session, subject, "1970-01-01T00:00:00Z"};
        return save_trace(synthesize_trace(plan, g, policy, faults.empty() ? FaultSpec{} : parse_fault_spec(faults), meta));
    }, py::arg("layout"), py::arg("plan"), py::arg("operator") = "human", py::arg("seed") = 0, py::arg("faults") = "",
       py::arg("dwell_ms") = 100, py::arg("session") = "synthetic", py::arg("subject") = "synthetic");

    m.def("execute_sim", [](const IeGraph& g, const std::string& plan_text, const std::string& policy) {
        auto loaded = load_plan(plan_text);
        auto scripts = policy.empty() && !loaded.scripts.empty() ? loaded.scripts
                                                                 : compile_plan(loaded.plan, g, parse_policy(policy.empty() ? "fixed:100" : policy));
        auto run = execute_plan_sim(loaded.plan, scripts, g);
        py::dict out = to_py(to_json(run));
        out["trace_text"] = save_trace(run.trace);
        return out;
    }, py::arg("layout"), py::arg("plan"), py::arg("policy") = "");

    m.def("analyze", [](const IeGraph& g, const std::string& plan_text, const std::string& trace_text) {
        return to_py(to_json(analyze_session(load_trace(trace_text), load_plan(plan_text).plan, g)));
    }, py::arg("layout"), py::arg("plan"), py::arg("trace"));

    auto risk_of = [](const std::string& plan_text, const py::list& reports, std::size_t threshold) {
        std::vector<DeviationReport> rs;
        for (const auto& r : reports) rs.push_back(deviation_report_from_json(from_py(r)));
        RiskOptions opt;
        opt.automation_threshold = threshold;
        return aggregate_risk(rs, load_plan(plan_text).plan, opt);
    };
    m.def("aggregate_risk", [risk_of](const std::string& plan, const py::list& reports, std::size_t threshold) {
        return to_py(to_json(risk_of(plan, reports, threshold)));
    }, py::arg("plan"), py::arg("reports"), py::arg("threshold") = 1);
    m.def("risk_table", [risk_of](const std::string& plan, const py::list& reports, std::size_t threshold) {
        return risk_table_tsv(risk_of(plan, reports, threshold));
    }, py::arg("plan"), py::arg("reports"), py::arg("threshold") = 1);

    m.def("mann_whitney", [](const std::vector<double>& a, const std::vector<double>& b, std::size_t threshold) {
        auto r = mann_whitney(a, b, threshold);
        return py::dict(py::arg("u_a") = r.u_a, py::arg("u_b") = r.u_b,
                        py::arg("method") = std::string(to_string(r.method)), py::arg("p_two_sided") = r.p_two_sided,
                        py::arg("effect") = r.effect);
    }, py::arg("a"), py::arg("b"), py::arg("exact_threshold") = kDefaultExactThreshold);

    m.def("fitts_time", [](double d, double w, double a, double b) { return fitts_time(d, w, FittsParams{a, b}); },
          py::arg("distance"), py::arg("width"), py::arg("a") = 0.1, py::arg("b") = 0.15);

    m.def("estimate_hep", [](double t_reqd_s, std::size_t n_actions, double t_avail_s, double base_hep, double error_factor) {
        TimingEstimate t;
        t.t_reqd_s = t_reqd_s;
        auto h = estimate_hep(t, HepParams{base_hep, error_factor, t_avail_s}, n_actions);
        return py::dict(py::arg("action_term") = h.action_term, py::arg("time_term") = h.time_term, py::arg("hep") = h.hep);
    }, py::arg("t_reqd_s"), py::arg("n_actions"), py::arg("t_avail_s"), py::arg("base_hep") = 1e-3,
       py::arg("error_factor") = 3.0);

    m.def("tlx_score", [](const py::object& response) {
        return to_py(to_json(tlx_score(tlx_response_from_json(from_py(response)))));
    }, py::arg("response"));

    py::class_<Service>(m, "Service")
        .def(py::init([](const std::string& layout, const std::string& scenarios, const std::string& store,
                         std::optional<std::string> hra_config, const std::string& host, int port) {
            ServiceConfig c;
            c.layout = layout;
            c.scenarios = scenarios;
            c.store = store;
            if (hra_config) c.hra_config = *hra_config;
            c.host = host;
            c.port = port;
            return std::make_unique<Service>(std::move(c));
        }), py::arg("layout"), py::arg("scenarios"), py::arg("store"), py::arg("hra_config") = py::none(),
             py::arg("host") = "127.0.0.1", py::arg("port") = 0)
        .def("start", &Service::start, py::call_guard<py::gil_scoped_release>(), "Serve in the background; returns the port.")
        .def("stop", &Service::stop, py::call_guard<py::gil_scoped_release>());
}
