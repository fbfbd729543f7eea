#include <random>

#include "doctest.h"
#include "procnav/error.hpp"
#include "procnav/ie_kg.hpp"
#include "../support/fixture.hpp"
#include "../support/oracles.hpp"

using namespace procnav;

namespace {

InterfaceElement container(const std::string& id, BBox b = {0, 0, 10, 10}) {
    return {id, id, {}, ElementKind::container, b};
}
InterfaceElement parameter(const std::string& id, BBox b = {0, 0, 10, 10}) {
    return {id, id, {}, ElementKind::parameter, b};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::io_error;
}

const Path paper_path{"initial", "Flowchart", "Nuclear Island System", "2LABDW001", "2LBA10CP801C"};

}  // namespace

TEST_CASE("add_element and add_containment enforce their preconditions") {
    IeGraph g(container("root", {0, 0, 100, 100}));
    g.add_element(parameter("2LBA10CP801C", {0, 0, 5, 5}));
    CHECK(g.elements().size() == 2);
    CHECK(code_of([&] { g.add_element(container("root")); }) == ErrorCode::duplicate_id);
    CHECK(code_of([&] { g.add_element(container("flat", {0, 0, 0, 10})); }) == ErrorCode::invalid_bbox);
    CHECK(code_of([&] { g.add_element(container("")); }) == ErrorCode::invalid_element);

    g.add_element(container("panel"));
    g.add_containment("root", "panel");
    g.add_containment("panel", "2LBA10CP801C");
    CHECK(code_of([&] { g.add_containment("panel", "panel"); }) == ErrorCode::cycle_introduced);
    CHECK(code_of([&] { g.add_containment("panel", "root"); }) == ErrorCode::cycle_introduced);
    CHECK(code_of([&] { g.add_containment("2LBA10CP801C", "panel"); }) == ErrorCode::parent_not_container);
    CHECK(code_of([&] { g.add_containment("panel", "ghost"); }) == ErrorCode::unknown_id);
    g.add_containment("root", "panel");  // existing edge: no-op
    CHECK(g.edge_count() == 2);
}

TEST_CASE("root must be a container") {
    CHECK(code_of([] { IeGraph g(parameter("r")); }) == ErrorCode::invalid_element);
}

TEST_CASE("fixture layout validates cleanly") {
    const auto& g = fixture::layout();
    auto report = g.validate();
    for (const auto& v : report) MESSAGE(v.message);
    CHECK(report.empty());
}

TEST_CASE("validate reports orphans, cycles and overlaps") {
    SUBCASE("orphan") {
        IeGraph g(container("root", {0, 0, 100, 100}));
        g.add_element(container("orphan"));
        auto r = g.validate();
        REQUIRE(r.size() == 1);
        CHECK(r[0].kind == ViolationKind::unreachable_node);
        CHECK(r[0].subjects == std::vector<ElementId>{"orphan"});
    }
    SUBCASE("three-cycle loaded from parts") {
        auto g = IeGraph::from_parts("root",
                                     {container("root", {0, 0, 100, 100}), container("a", {0, 0, 5, 5}),
                                      container("b", {10, 0, 5, 5}), container("c", {20, 0, 5, 5})},
                                     {{"root", "a"}, {"a", "b"}, {"b", "c"}, {"c", "a"}});
        auto r = g.validate();
        REQUIRE(r.size() == 1);
        CHECK(r[0].kind == ViolationKind::cycle);
        CHECK(r[0].subjects.size() == 3);
    }
    SUBCASE("overlapping siblings") {
        IeGraph g(container("root", {0, 0, 100, 100}));
        g.add_element(container("a", {0, 0, 10, 10}));
        g.add_element(container("b", {5, 5, 10, 10}));
        g.add_containment("root", "a");
        g.add_containment("root", "b");
        auto r = g.validate();
        REQUIRE(r.size() == 1);
        CHECK(r[0].kind == ViolationKind::bbox_overlap);
    }
    SUBCASE("leaf with children") {
        auto g = IeGraph::from_parts("root", {container("root"), parameter("p"), container("c")},
                                     {{"root", "p"}, {"p", "c"}});
        auto r = g.validate();
        REQUIRE(r.size() == 1);
        CHECK(r[0].kind == ViolationKind::kind_constraint);
    }
}

TEST_CASE("find_elements normalizes and ranks") {
    const auto& g = fixture::layout();
    auto hits = g.find_elements("2 LAB DW001");
    REQUIRE(!hits.empty());
    CHECK(hits.front() == "2LABDW001");
    auto by_alias = g.find_elements("#1 steam generator outlet pressure");
    REQUIRE(by_alias.size() == 1);
    CHECK(by_alias.front() == "1LBA10CP701B");
    CHECK(g.find_elements("1LBA10CP701B").front() == "1LBA10CP701B");
    CHECK(g.find_elements("ZZZ-NO-SUCH").empty());
    // Idempotence under normalization.
    for (const auto& [id, el] : g.elements()) CHECK(g.find_elements(normalize_label(el.name)).front() == id);
}

TEST_CASE("paths on the fixture") {
    const auto& g = fixture::layout();
    auto e = g.enumerate_paths("2LBA10CP801C", 64);
    REQUIRE(e.paths.size() == 1);
    CHECK(e.paths[0] == paper_path);
    CHECK_FALSE(e.limit_exceeded);
    CHECK(click_sequence(e.paths[0]).size() == 4);

    auto tab = g.enumerate_paths("Flowchart", 64);
    REQUIRE(tab.paths.size() == 1);
    CHECK(tab.paths[0].size() == 2);
    CHECK(click_sequence(tab.paths[0]) == Path{"Flowchart"});

    CHECK(code_of([&] { (void)g.enumerate_paths("nope", 4); }) == ErrorCode::unknown_id);

    // Electrical System hangs under two tabs.
    auto two = g.enumerate_paths("0ELEDW002", 64);
    REQUIRE(two.paths.size() == 2);
    CHECK(two.paths[0][1] == "Flowchart");
    CHECK(two.paths[1][1] == "Trends");
}

TEST_CASE("diamond graph yields the brute-force path set") {
    IeGraph g(container("r", {0, 0, 100, 100}));
    for (auto id : {"a", "b", "c", "d"}) g.add_element(container(id));
    g.add_element(parameter("t"));
    g.add_containment("r", "a");
    g.add_containment("r", "b");
    g.add_containment("a", "c");
    g.add_containment("b", "c");
    g.add_containment("c", "d");
    g.add_containment("d", "t");
    auto e = g.enumerate_paths("t", 64);
    CHECK(e.paths.size() == 2);
    CHECK(e.paths == oracle::all_paths(g, "t"));
    auto cut = g.enumerate_paths("t", 1);
    CHECK(cut.paths.size() == 1);
    CHECK(cut.limit_exceeded);
}

TEST_CASE("enumerate_paths matches brute force on random DAGs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 150; ++trial) {
        int n = std::uniform_int_distribution<int>(2, 12)(rng);
        auto g = oracle::random_dag(rng, n, trial % 3 != 0);
        for (const auto& [id, el] : g.elements()) {
            auto expected = oracle::all_paths(g, id);
            auto got = g.enumerate_paths(id, 100000);
            REQUIRE(got.paths == expected);
            CHECK_FALSE(got.limit_exceeded);
            if (expected.size() > 1) {
                auto lim = g.enumerate_paths(id, expected.size() - 1);
                CHECK(lim.limit_exceeded);
                CHECK(std::equal(lim.paths.begin(), lim.paths.end(), expected.begin()));
            }
        }
    }
}

TEST_CASE("random insertions keep the graph acyclic and rooted") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        IeGraph g(container("n00", {0, 0, 100, 100}));
        std::vector<std::string> ids{"n00"};
        for (int i = 1; i < 10; ++i) {
            std::string id = "n" + std::to_string(10 + i);
            g.add_element(container(id));
            g.add_containment(ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)], id);
            ids.push_back(id);
        }
        for (int k = 0; k < 30; ++k) {
            auto& p = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
            auto& c = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
            try {
                g.add_containment(p, c);
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::cycle_introduced);
            }
            for (const auto& v : g.validate()) {
                CHECK(v.kind != ViolationKind::cycle);
                CHECK(v.kind != ViolationKind::unreachable_node);
            }
        }
    }
}

TEST_CASE("navigation state machine") {
    const auto& g = fixture::layout();
    NavState s = g.initial_state();
    s = g.apply_click(s, "Flowchart");
    CHECK(s.open == std::vector<ElementId>{"initial", "Flowchart"});
    s = g.apply_click(s, "Nuclear Island System");
    CHECK(g.hit_test(s, g.element("2LABDW001").bbox.center()) == std::optional<ElementId>("2LABDW001"));
    s = g.apply_click(s, "2LABDW001");
    auto leaf = g.apply_click(s, "2LBA10CP801C");
    CHECK(leaf == s);
    CHECK(s.current_panel() == "2LABDW001");

    // Root tabs stay hit-testable from deep states, and reset the view.
    CHECK(g.hit_test(s, g.element("Alarms").bbox.center()) == std::optional<ElementId>("Alarms"));
    auto reset = g.apply_click(s, "Trends");
    CHECK(reset.open == std::vector<ElementId>{"initial", "Trends"});

    CHECK_FALSE(g.hit_test(s, Point{5000, 5000}).has_value());
    CHECK(code_of([&] { (void)g.apply_click(g.initial_state(), "2LABDW001"); }) == ErrorCode::element_not_visible);
}

TEST_CASE("every fixture path replays through apply_click") {
    const auto& g = fixture::layout();
    for (const auto& [id, el] : g.elements()) {
        for (const auto& path : g.enumerate_paths(id, 64).paths) {
            NavState s = g.initial_state();
            for (const auto& c : click_sequence(path)) {
                REQUIRE(g.is_visible(s, c));
                CHECK(g.hit_test(s, g.element(c).bbox.center()) == std::optional<ElementId>(c));
                s = g.apply_click(s, c);
            }
        }
    }
}

TEST_CASE("layout file round trip and diagnostics") {
    const auto& g = fixture::layout();
    auto text = save_graph(g);
    CHECK(load_graph(text) == g);
    CHECK(save_graph(load_graph(text)) == text);

    CHECK(code_of([&] { load_graph(text.substr(0, text.size() / 2)); }) == ErrorCode::malformed_format);
    try {
        load_graph(std::string_view(text).substr(0, 200));
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }

    const std::string dup = R"({"version":1,"root":"r","nodes":[
      {"id":"r","name":"r","kind":"container","bbox":[0,0,1,1]},
      {"id":"X1","name":"x","kind":"container","bbox":[0,0,1,1]},
      {"id":"X1","name":"y","kind":"container","bbox":[0,0,1,1]}],"edges":[]})";
    try {
        load_graph(dup);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed_format);
        CHECK(std::string(e.what()).find("X1") != std::string::npos);
    }
    const std::string unknown = R"({"version":1,"root":"r","color":"red","nodes":[
      {"id":"r","name":"r","kind":"container","bbox":[0,0,1,1]}],"edges":[]})";
    CHECK(code_of([&] { load_graph(unknown); }) == ErrorCode::malformed_format);
}
