#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "procnav/ie_kg.hpp"
#include "procnav/planner.hpp"
#include "procnav/procedures.hpp"

#ifndef PROCNAV_DATA_DIR
#error "PROCNAV_DATA_DIR must be defined"
#endif

namespace fixture {

inline std::string read(const std::string& rel) {
    std::ifstream in(std::string(PROCNAV_DATA_DIR) + "/" + rel, std::ios::binary);
    if (!in) throw std::runtime_error("missing fixture file " + rel);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const procnav::IeGraph& layout() {
    static const procnav::IeGraph g = procnav::load_graph(read("fixture_layout.json"));
    return g;
}

inline std::vector<std::string> scenario_texts() {
    std::vector<std::string> out;
    for (int i = 1; i <= 5; ++i) out.push_back(read("scenarios/S" + std::to_string(i) + ".txt"));
    return out;
}

inline const std::vector<procnav::ProcedureDoc>& procedures() {
    static const auto docs = procnav::parse_all_scenarios(scenario_texts());
    return docs;
}

inline const std::vector<procnav::ProcedurePlan>& plans(bool chaining = false) {
    static const auto make = [](bool chain) {
        std::vector<procnav::ProcedurePlan> out;
        procnav::PlanOptions opt;
        opt.chaining = chain;
        for (const auto& d : procedures()) out.push_back(procnav::plan_procedure(d, layout(), opt));
        return out;
    };
    static const auto plain = make(false);
    static const auto chained = make(true);
    return chaining ? chained : plain;
}

}  // namespace fixture
