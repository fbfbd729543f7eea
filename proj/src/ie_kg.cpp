#include "procnav/ie_kg.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "procnav/error.hpp"

namespace procnav {

namespace {

const std::set<ElementId>& empty_set() {
    static const std::set<ElementId> empty;
    return empty;
}

bool valid_bbox(const BBox& b) { return b.width > 0 && b.height > 0; }

std::string describe_bbox(const BBox& b) {
    std::ostringstream out;
    out << "[" << b.x << "," << b.y << "," << b.width << "," << b.height << "]";
    return out.str();
}

}  // namespace

std::string_view to_string(ElementKind kind) noexcept {
    switch (kind) {
        case ElementKind::container: return "container";
        case ElementKind::parameter: return "parameter";
        case ElementKind::control: return "control";
    }
    return "container";
}

std::optional<ElementKind> element_kind_from_string(std::string_view text) noexcept {
    if (text == "container") return ElementKind::container;
    if (text == "parameter") return ElementKind::parameter;
    if (text == "control") return ElementKind::control;
    return std::nullopt;
}

std::string_view to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::cycle: return "cycle";
        case ViolationKind::unreachable_node: return "unreachable-node";
        case ViolationKind::kind_constraint: return "kind-constraint";
        case ViolationKind::bbox_overlap: return "bbox-overlap";
        case ViolationKind::invalid_bbox: return "invalid-bbox";
        case ViolationKind::root_not_container: return "root-not-container";
    }
    return "cycle";
}

std::string normalize_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    for (unsigned char c : label) {
        if (std::isspace(c)) continue;
        out.push_back(char(std::toupper(c)));
    }
    return out;
}

IeGraph::IeGraph(InterfaceElement root) {
    if (root.kind != ElementKind::container)
        throw Error(ErrorCode::invalid_element, "root '" + root.id + "' must be a container");
    root_ = root.id;
    add_element(std::move(root));
}

IeGraph IeGraph::from_parts(ElementId root, std::vector<InterfaceElement> nodes,
                            std::vector<std::pair<ElementId, ElementId>> edges) {
    IeGraph g;
    g.root_ = std::move(root);
    for (auto& n : nodes) {
        if (g.nodes_.count(n.id))
            throw Error(ErrorCode::malformed_format, "duplicate node id '" + n.id + "'");
        ElementId id = n.id;
        g.nodes_.emplace(id, std::move(n));
    }
    if (!g.nodes_.count(g.root_))
        throw Error(ErrorCode::malformed_format, "root '" + g.root_ + "' is not a node");
    for (auto& [p, c] : edges) {
        if (!g.nodes_.count(p) || !g.nodes_.count(c))
            throw Error(ErrorCode::malformed_format, "edge " + p + " -> " + c + " names an unknown node");
        g.children_[p].insert(c);
        g.parents_[c].insert(p);
    }
    return g;
}

void IeGraph::add_element(InterfaceElement element) {
    if (element.id.empty() || element.name.empty())
        throw Error(ErrorCode::invalid_element, "element id and name must be non-empty");
    if (nodes_.count(element.id))
        throw Error(ErrorCode::duplicate_id, "element '" + element.id + "' already exists");
    if (!valid_bbox(element.bbox))
        throw Error(ErrorCode::invalid_bbox,
                    "element '" + element.id + "' has degenerate bbox " + describe_bbox(element.bbox));
    ElementId id = element.id;
    nodes_.emplace(std::move(id), std::move(element));
}

void IeGraph::add_containment(const ElementId& parent, const ElementId& child) {
    if (!contains(parent)) throw Error(ErrorCode::unknown_id, "unknown element '" + parent + "'");
    if (!contains(child)) throw Error(ErrorCode::unknown_id, "unknown element '" + child + "'");
    if (nodes_.at(parent).kind != ElementKind::container)
        throw Error(ErrorCode::parent_not_container, "'" + parent + "' is not a container");
    if (parent == child || is_descendant(child, parent))
        throw Error(ErrorCode::cycle_introduced, parent + " -> " + child + " would close a cycle");
    children_[parent].insert(child);
    parents_[child].insert(parent);
}

const InterfaceElement& IeGraph::element(const ElementId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::unknown_id, "unknown element '" + id + "'");
    return it->second;
}

const std::set<ElementId>& IeGraph::children(const ElementId& id) const {
    auto it = children_.find(id);
    return it == children_.end() ? empty_set() : it->second;
}

const std::set<ElementId>& IeGraph::parents(const ElementId& id) const {
    auto it = parents_.find(id);
    return it == parents_.end() ? empty_set() : it->second;
}

std::vector<std::pair<ElementId, ElementId>> IeGraph::edges() const {
    std::vector<std::pair<ElementId, ElementId>> out;
    for (const auto& [p, cs] : children_)
        for (const auto& c : cs) out.emplace_back(p, c);
    return out;
}

std::size_t IeGraph::edge_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [p, cs] : children_) n += cs.size();
    return n;
}

bool IeGraph::is_descendant(const ElementId& ancestor, const ElementId& node) const {
    std::set<ElementId> seen;
    std::vector<ElementId> stack(children(ancestor).begin(), children(ancestor).end());
    while (!stack.empty()) {
        ElementId cur = std::move(stack.back());
        stack.pop_back();
        if (cur == node) return true;
        if (!seen.insert(cur).second) continue;
        for (const auto& c : children(cur)) stack.push_back(c);
    }
    return false;
}

std::vector<Violation> IeGraph::validate() const {
    std::vector<Violation> out;

    if (nodes_.at(root_).kind != ElementKind::container)
        out.push_back({ViolationKind::root_not_container, {root_}, "root must be a container"});

    for (const auto& [id, n] : nodes_) {
        if (!valid_bbox(n.bbox))
            out.push_back({ViolationKind::invalid_bbox, {id}, "degenerate bbox " + describe_bbox(n.bbox)});
        if (n.kind != ElementKind::container && !children(id).empty())
            out.push_back({ViolationKind::kind_constraint, {id},
                           std::string(to_string(n.kind)) + " node has containment children"});
    }

    // Tarjan SCC; every non-trivial component is one cycle violation.
    {
        std::map<ElementId, int> index, low;
        std::set<ElementId> on_stack;
        std::vector<ElementId> stack;
        int counter = 0;
        std::function<void(const ElementId&)> strong = [&](const ElementId& v) {
            index[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack.insert(v);
            for (const auto& w : children(v)) {
                if (!index.count(w)) {
                    strong(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack.count(w)) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
            if (low[v] == index[v]) {
                std::vector<ElementId> comp;
                ElementId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack.erase(w);
                    comp.push_back(w);
                } while (w != v);
                bool self_loop = children(v).count(v) != 0;
                if (comp.size() > 1 || self_loop) {
                    std::sort(comp.begin(), comp.end());
                    std::string msg = "containment cycle through";
                    for (const auto& c : comp) msg += " " + c;
                    out.push_back({ViolationKind::cycle, comp, msg});
                }
            }
        };
        for (const auto& [id, n] : nodes_)
            if (!index.count(id)) strong(id);
    }

    {
        std::set<ElementId> reached{root_};
        std::queue<ElementId> q;
        q.push(root_);
        while (!q.empty()) {
            auto cur = q.front();
            q.pop();
            for (const auto& c : children(cur))
                if (reached.insert(c).second) q.push(c);
        }
        for (const auto& [id, n] : nodes_)
            if (!reached.count(id))
                out.push_back({ViolationKind::unreachable_node, {id}, "not reachable from root " + root_});
    }

    // Siblings on one panel view must not overlap. Top-level tabs are drawn on
    // every view, so they count as siblings of every panel's children.
    {
        std::set<std::pair<ElementId, ElementId>> reported;
        auto check = [&](const std::vector<ElementId>& view) {
            for (std::size_t i = 0; i < view.size(); ++i)
                for (std::size_t j = i + 1; j < view.size(); ++j) {
                    const auto& a = view[i];
                    const auto& b = view[j];
                    if (a == b) continue;
                    auto key = std::minmax(a, b);
                    if (reported.count({key.first, key.second})) continue;
                    if (nodes_.at(a).bbox.intersects(nodes_.at(b).bbox)) {
                        reported.insert({key.first, key.second});
                        out.push_back({ViolationKind::bbox_overlap, {key.first, key.second},
                                       "bboxes of " + key.first + " and " + key.second + " overlap"});
                    }
                }
        };
        const auto& tabs = children(root_);
        check(std::vector<ElementId>(tabs.begin(), tabs.end()));
        for (const auto& [id, n] : nodes_) {
            if (id == root_ || n.kind != ElementKind::container) continue;
            std::vector<ElementId> view(children(id).begin(), children(id).end());
            for (const auto& t : tabs)
                if (!children(id).count(t)) view.push_back(t);
            check(view);
        }
    }
    return out;
}

std::vector<ElementId> IeGraph::find_elements(std::string_view query) const {
    const std::string q = normalize_label(query);
    if (q.empty()) return {};
    std::vector<std::pair<int, ElementId>> hits;
    for (const auto& [id, n] : nodes_) {
        int rank = -1;
        auto consider = [&](const std::string& label) {
            auto norm = normalize_label(label);
            if (norm == q) rank = 0;
            else if (rank != 0 && norm.find(q) != std::string::npos) rank = 1;
        };
        consider(n.name);
        for (const auto& a : n.aliases) consider(a);
        if (rank >= 0) hits.emplace_back(rank, id);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<ElementId> out;
    for (auto& h : hits) out.push_back(std::move(h.second));
    return out;
}

PathEnumeration IeGraph::enumerate_paths(const ElementId& target, std::size_t limit) const {
    if (!contains(target)) throw Error(ErrorCode::unknown_id, "unknown element '" + target + "'");
    PathEnumeration result;

    // Shortest edge distance from each node to the target; absent = cannot reach.
    std::map<ElementId, std::size_t> dist{{target, 0}};
    std::queue<ElementId> q;
    q.push(target);
    while (!q.empty()) {
        auto cur = q.front();
        q.pop();
        for (const auto& p : parents(cur))
            if (!dist.count(p)) {
                dist[p] = dist[cur] + 1;
                q.push(p);
            }
    }
    if (!dist.count(root_)) return result;

    // Paths are produced one length at a time; children are visited in id
    // order, so each length batch is already lexicographic.
    const std::size_t max_nodes = nodes_.size();
    std::set<ElementId> on_path;
    Path current;
    bool stop = false;
    std::size_t pruned_longer = 0;  // branches that could only finish longer than the bound

    std::function<void(const ElementId&, std::size_t)> walk = [&](const ElementId& node, std::size_t length) {
        if (stop) return;
        current.push_back(node);
        on_path.insert(node);
        if (node == target) {
            if (current.size() == length) {
                if (result.paths.size() == limit) {
                    result.limit_exceeded = true;
                    stop = true;
                } else {
                    result.paths.push_back(current);
                }
            }
        } else {
            for (const auto& c : children(node)) {
                auto d = dist.find(c);
                if (d == dist.end() || on_path.count(c)) continue;
                if (current.size() + 1 + d->second > length) {
                    ++pruned_longer;
                    continue;
                }
                walk(c, length);
                if (stop) break;
            }
        }
        on_path.erase(node);
        current.pop_back();
    };

    for (std::size_t length = dist[root_] + 1; length <= max_nodes && !stop; ++length) {
        pruned_longer = 0;
        walk(root_, length);
        // Nothing was cut for being too long: no longer path exists.
        if (pruned_longer == 0) break;
    }
    return result;
}

std::vector<ElementId> IeGraph::visible_elements(const NavState& state) const {
    std::vector<ElementId> out;
    const auto& panel = state.current_panel();
    if (panel != root_)
        for (const auto& c : children(panel)) out.push_back(c);
    for (const auto& t : children(root_))
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return out;
}

std::optional<ElementId> IeGraph::hit_test(const NavState& state, Point point) const {
    for (const auto& id : visible_elements(state))
        if (nodes_.at(id).bbox.contains(point)) return id;
    return std::nullopt;
}

bool IeGraph::is_visible(const NavState& state, const ElementId& id) const {
    const auto& panel = state.current_panel();
    return children(panel).count(id) != 0 || children(root_).count(id) != 0;
}

NavState IeGraph::apply_click(const NavState& state, const ElementId& id) const {
    if (!contains(id) || !is_visible(state, id))
        throw Error(ErrorCode::element_not_visible, "'" + id + "' is not visible from panel " + state.current_panel());
    if (nodes_.at(id).kind != ElementKind::container) return state;
    const auto& panel = state.current_panel();
    if (panel != root_ && children(panel).count(id)) {
        NavState next = state;
        next.open.push_back(id);
        return next;
    }
    return NavState{{root_, id}};
}

// --- layout file ---------------------------------------------------------

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::malformed_format, where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            malformed(where + "/" + it.key(), "unknown field");
    }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) malformed(where + "/" + key, "missing field");
    return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string()) malformed(where + "/" + key, "expected string");
    return v.get<std::string>();
}

}  // namespace

std::string save_graph(const IeGraph& graph) {
    ordered_json doc;
    doc["version"] = 1;
    doc["root"] = graph.root();
    ordered_json nodes = ordered_json::array();
    for (const auto& [id, n] : graph.elements()) {
        ordered_json node;
        node["id"] = n.id;
        node["name"] = n.name;
        node["aliases"] = n.aliases;
        node["kind"] = std::string(to_string(n.kind));
        node["bbox"] = {n.bbox.x, n.bbox.y, n.bbox.width, n.bbox.height};
        nodes.push_back(std::move(node));
    }
    doc["nodes"] = std::move(nodes);
    ordered_json edges = ordered_json::array();
    for (const auto& [p, c] : graph.edges()) edges.push_back(ordered_json{{"parent", p}, {"child", c}});
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

IeGraph load_graph(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1 + std::size_t(std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
        malformed("line " + std::to_string(line), e.what());
    }
    if (!doc.is_object()) malformed("/", "expected an object");
    reject_unknown(doc, "", {"version", "root", "nodes", "edges"});
    const auto& version = require(doc, "version", "");
    if (!version.is_number_integer() || version.get<int>() != 1) malformed("/version", "unsupported version");
    ElementId root = require_string(doc, "root", "");

    const auto& nodes_json = require(doc, "nodes", "");
    if (!nodes_json.is_array()) malformed("/nodes", "expected array");
    std::vector<InterfaceElement> nodes;
    std::set<ElementId> seen;
    for (std::size_t i = 0; i < nodes_json.size(); ++i) {
        const std::string where = "/nodes/" + std::to_string(i);
        const auto& nj = nodes_json[i];
        if (!nj.is_object()) malformed(where, "expected object");
        reject_unknown(nj, where, {"id", "name", "aliases", "kind", "bbox"});
        InterfaceElement el;
        el.id = require_string(nj, "id", where);
        el.name = require_string(nj, "name", where);
        if (el.id.empty()) malformed(where + "/id", "empty id");
        if (el.name.empty()) malformed(where + "/name", "empty name");
        if (!seen.insert(el.id).second) malformed(where + "/id", "duplicate node id '" + el.id + "'");
        if (auto a = nj.find("aliases"); a != nj.end()) {
            if (!a->is_array()) malformed(where + "/aliases", "expected array");
            for (const auto& s : *a) {
                if (!s.is_string()) malformed(where + "/aliases", "expected strings");
                el.aliases.push_back(s.get<std::string>());
            }
        }
        auto kind = element_kind_from_string(require_string(nj, "kind", where));
        if (!kind) malformed(where + "/kind", "expected container|parameter|control");
        el.kind = *kind;
        const auto& bb = require(nj, "bbox", where);
        if (!bb.is_array() || bb.size() != 4) malformed(where + "/bbox", "expected [x,y,w,h]");
        for (const auto& v : bb)
            if (!v.is_number_integer()) malformed(where + "/bbox", "expected integer pixels");
        el.bbox = {bb[0].get<std::int64_t>(), bb[1].get<std::int64_t>(), bb[2].get<std::int64_t>(),
                   bb[3].get<std::int64_t>()};
        nodes.push_back(std::move(el));
    }
    if (!seen.count(root)) malformed("/root", "root '" + root + "' is not a node");

    const auto& edges_json = require(doc, "edges", "");
    if (!edges_json.is_array()) malformed("/edges", "expected array");
    std::vector<std::pair<ElementId, ElementId>> edges;
    for (std::size_t i = 0; i < edges_json.size(); ++i) {
        const std::string where = "/edges/" + std::to_string(i);
        const auto& ej = edges_json[i];
        if (!ej.is_object()) malformed(where, "expected object");
        reject_unknown(ej, where, {"parent", "child"});
        auto p = require_string(ej, "parent", where);
        auto c = require_string(ej, "child", where);
        if (!seen.count(p)) malformed(where + "/parent", "unknown node '" + p + "'");
        if (!seen.count(c)) malformed(where + "/child", "unknown node '" + c + "'");
        edges.emplace_back(std::move(p), std::move(c));
    }
    return IeGraph::from_parts(std::move(root), std::move(nodes), std::move(edges));
}

}  // namespace procnav
