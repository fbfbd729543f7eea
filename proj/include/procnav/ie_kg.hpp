#pragma once

// Interface-element knowledge graph: UI elements with geometry, joined by
// directed containment edges into a rooted DAG, plus the navigation state
// machine used to replay clicks against it.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace procnav {

using ElementId = std::string;
using Path = std::vector<ElementId>;

enum class ElementKind { container, parameter, control };

std::string_view to_string(ElementKind kind) noexcept;
std::optional<ElementKind> element_kind_from_string(std::string_view text) noexcept;

struct Point {
    double x = 0;
    double y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

// Screen rectangle in integer pixels, relative to the parent's panel view.
struct BBox {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t width = 0;
    std::int64_t height = 0;

    bool contains(Point p) const noexcept {
        return p.x >= double(x) && p.x < double(x + width) && p.y >= double(y) &&
               p.y < double(y + height);
    }
    bool intersects(const BBox& o) const noexcept {
        return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
    }
    Point center() const noexcept { return {double(x) + double(width) / 2.0, double(y) + double(height) / 2.0}; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct InterfaceElement {
    ElementId id;
    std::string name;
    std::vector<std::string> aliases;
    ElementKind kind = ElementKind::container;
    BBox bbox;
    friend bool operator==(const InterfaceElement&, const InterfaceElement&) = default;
};

// Uppercase + all whitespace removed. "2 LAB DW001" and "2LABDW001" collide.
std::string normalize_label(std::string_view label);

enum class ViolationKind {
    cycle,
    unreachable_node,
    kind_constraint,
    bbox_overlap,
    invalid_bbox,
    root_not_container,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::vector<ElementId> subjects;  // node ids, or parent/child for an edge
    std::string message;
};

struct PathEnumeration {
    std::vector<Path> paths;
    bool limit_exceeded = false;
};

struct NavState {
    std::vector<ElementId> open;  // root first, then the containment chain
    friend bool operator==(const NavState&, const NavState&) = default;

    const ElementId& current_panel() const { return open.back(); }
};

class IeGraph {
  public:
    // Creates a graph holding only the root. The root must be a container.
    explicit IeGraph(InterfaceElement root);

    // Assembles a graph without semantic checks (cycles, kinds, geometry) so
    // that files describing invalid graphs can still be loaded and reported
    // on by validate(). Throws malformed_format on duplicate ids or edges
    // naming unknown nodes.
    static IeGraph from_parts(ElementId root, std::vector<InterfaceElement> nodes,
                              std::vector<std::pair<ElementId, ElementId>> edges);

    // Throws duplicate_id, invalid_bbox or invalid_element (empty id/name).
    void add_element(InterfaceElement element);

    // Throws unknown_id, parent_not_container or cycle_introduced. Adding an
    // existing edge is a no-op.
    void add_containment(const ElementId& parent, const ElementId& child);

    const ElementId& root() const noexcept { return root_; }
    bool contains(const ElementId& id) const { return nodes_.count(id) != 0; }
    const InterfaceElement& element(const ElementId& id) const;
    const std::map<ElementId, InterfaceElement>& elements() const noexcept { return nodes_; }
    const std::set<ElementId>& children(const ElementId& id) const;
    const std::set<ElementId>& parents(const ElementId& id) const;
    std::vector<std::pair<ElementId, ElementId>> edges() const;
    std::size_t edge_count() const noexcept;

    std::vector<Violation> validate() const;

    // Exact normalized name/alias matches first, then substring matches;
    // ids break ties.
    std::vector<ElementId> find_elements(std::string_view query) const;

    // Root-to-target paths ordered by (length, lexicographic ids). Stops after
    // `limit` paths and sets limit_exceeded if more exist.
    PathEnumeration enumerate_paths(const ElementId& target, std::size_t limit) const;

    bool is_descendant(const ElementId& ancestor, const ElementId& node) const;

    NavState initial_state() const { return NavState{{root_}}; }
    // The elements clickable in `state`: the open panel's children followed
    // by the top-level tabs.
    std::vector<ElementId> visible_elements(const NavState& state) const;
    std::optional<ElementId> hit_test(const NavState& state, Point point) const;
    bool is_visible(const NavState& state, const ElementId& id) const;
    // Throws element_not_visible.
    NavState apply_click(const NavState& state, const ElementId& id) const;

    friend bool operator==(const IeGraph& a, const IeGraph& b) {
        return a.root_ == b.root_ && a.nodes_ == b.nodes_ && a.children_ == b.children_;
    }

  private:
    IeGraph() = default;

    ElementId root_;
    std::map<ElementId, InterfaceElement> nodes_;
    std::map<ElementId, std::set<ElementId>> children_;
    std::map<ElementId, std::set<ElementId>> parents_;
};

// Layout file (version 1). save is deterministic: nodes by id, edges sorted.
std::string save_graph(const IeGraph& graph);
// Throws malformed_format with the offending line or JSON field path.
IeGraph load_graph(std::string_view text);

// Returns `path` minus the root: the clicks needed from the initial view.
inline Path click_sequence(const Path& path) {
    return path.empty() ? Path{} : Path(path.begin() + 1, path.end());
}

}  // namespace procnav
