#include "procnav/sessions.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "procnav/error.hpp"

namespace procnav {

namespace fs = std::filesystem;

InteractionEvent click_at(std::int64_t t, std::int64_t x, std::int64_t y, MouseButton b) {
    return {t, ClickEvent{x, y, b}};
}
InteractionEvent key_press(std::int64_t t, std::string key) { return {t, KeyEvent{std::move(key)}}; }
InteractionEvent marker(std::int64_t t, int step) { return {t, MarkerEvent{step}}; }

Json to_json(const InteractionEvent& e) {
    Json j;
    j["t"] = e.t;
    if (const auto* c = std::get_if<ClickEvent>(&e.data)) {
        j["kind"] = "click";
        j["x"] = c->x;
        j["y"] = c->y;
        j["button"] = c->button == MouseButton::left ? "left" : "right";
    } else if (const auto* k = std::get_if<KeyEvent>(&e.data)) {
        j["kind"] = "key";
        j["key"] = k->key;
    } else {
        j["kind"] = "marker";
        j["step"] = std::get<MarkerEvent>(e.data).step;
    }
    return j;
}

namespace {

[[noreturn]] void bad_event(const std::string& field, const std::string& what) {
    throw Error(ErrorCode::invalid_event, field + ": " + what);
}

std::int64_t event_int(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad_event(key, "missing");
    if (!it->is_number_integer()) bad_event(key, "expected an integer");
    return it->get<std::int64_t>();
}

void only_keys(const Json& j, std::initializer_list<std::string_view> keys) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) bad_event(it.key(), "unknown field");
}

bool is_header(const Json& j) { return j.is_object() && !j.contains("kind") && j.contains("session"); }

}  // namespace

InteractionEvent event_from_json(const Json& j) {
    if (!j.is_object()) bad_event("event", "expected an object");
    InteractionEvent e;
    e.t = event_int(j, "t");
    if (e.t < 0) bad_event("t", "must be non-negative");
    auto kind = j.find("kind");
    if (kind == j.end()) bad_event("kind", "missing");
    if (!kind->is_string()) bad_event("kind", "expected a string");
    const auto k = kind->get<std::string>();
    if (k == "click") {
        only_keys(j, {"t", "kind", "x", "y", "button"});
        ClickEvent c;
        c.x = event_int(j, "x");
        c.y = event_int(j, "y");
        auto b = j.find("button");
        if (b != j.end()) {
            if (*b == "left")
                c.button = MouseButton::left;
            else if (*b == "right")
                c.button = MouseButton::right;
            else
                bad_event("button", "expected \"left\" or \"right\"");
        }
        e.data = c;
    } else if (k == "key") {
        only_keys(j, {"t", "kind", "key"});
        auto key = j.find("key");
        if (key == j.end() || !key->is_string() || key->get<std::string>().empty())
            bad_event("key", "expected a non-empty string");
        e.data = KeyEvent{key->get<std::string>()};
    } else if (k == "marker") {
        only_keys(j, {"t", "kind", "step"});
        auto step = event_int(j, "step");
        if (step < 1) bad_event("step", "must be >= 1");
        e.data = MarkerEvent{int(step)};
    } else {
        bad_event("kind", "unknown kind '" + k + "'");
    }
    return e;
}

std::string event_line(const InteractionEvent& e) { return to_json(e).dump(); }

std::string save_trace(const SessionTrace& trace) {
    Json header;
    header["session"] = trace.session_id;
    header["subject"] = trace.subject_id;
    header["scenario"] = trace.scenario_id;
    header["started_at"] = trace.started_at;
    std::string out = header.dump() + "\n";
    for (const auto& e : trace.events) out += event_line(e) + "\n";
    return out;
}

namespace {

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::malformed_line, "line " + std::to_string(line) + ": " + what);
}

void read_header(const Json& j, SessionTrace& trace, std::size_t line) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        if (key != "session" && key != "subject" && key != "scenario" && key != "started_at")
            bad_line(line, "unknown header field '" + key + "'");
        if (!it->is_string()) bad_line(line, "header field '" + key + "' must be a string");
    }
    trace.session_id = j.value("session", "");
    trace.subject_id = j.value("subject", "");
    trace.scenario_id = j.value("scenario", "");
    trace.started_at = j.value("started_at", "");
}

// With `tolerate_tail`, a last line lacking its newline is a torn write and
// is dropped; `*kept` receives the byte length of the accepted prefix.
SessionTrace parse_trace(std::string_view text, bool tolerate_tail, std::size_t* kept) {
    SessionTrace trace;
    std::size_t pos = 0, line_no = 0;
    std::int64_t last_t = 0;
    bool seen_content = false;
    if (kept) *kept = 0;
    while (pos < text.size()) {
        ++line_no;
        auto nl = text.find('\n', pos);
        const bool terminated = nl != std::string_view::npos;
        auto line = text.substr(pos, terminated ? nl - pos : std::string_view::npos);
        const std::size_t next = terminated ? nl + 1 : text.size();
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            pos = next;
            if (kept) *kept = pos;
            continue;
        }
        // An unterminated line was never acknowledged.
        if (tolerate_tail && !terminated) break;
        {
            Json j;
            try {
                j = Json::parse(line.begin(), line.end());
            } catch (const Json::parse_error&) {
                bad_line(line_no, "not valid JSON");
            }
            const bool header = is_header(j);
            if (header) {
                if (seen_content) bad_line(line_no, "header must be the first line");
                read_header(j, trace, line_no);
            } else {
                InteractionEvent e;
                try {
                    e = event_from_json(j);
                } catch (const Error& err) {
                    bad_line(line_no, err.what());
                }
                if (e.t < last_t) bad_line(line_no, "time regression");
                last_t = e.t;
                trace.events.push_back(std::move(e));
            }
            seen_content = true;
        }
        pos = next;
        if (kept) *kept = pos;
    }
    return trace;
}

}  // namespace

SessionTrace load_trace(std::string_view text) { return parse_trace(text, false, nullptr); }

// --- store ----------------------------------------------------------------

std::string_view to_string(SessionState s) noexcept { return s == SessionState::open ? "open" : "closed"; }

std::string utc_timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct SessionStore::Session {
    SessionMeta meta;  // state guarded by the store's index mutex
    std::atomic<bool> closed{false};
    std::mutex m;
    std::vector<InteractionEvent> events;
    int fd = -1;
};

namespace {

void io_fail(const std::string& what, const fs::path& p) {
    throw Error(ErrorCode::io_error, what + " " + p.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const fs::path& p) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("write", p);
        }
        data.remove_prefix(std::size_t(n));
    }
}

void fsync_dir(const fs::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

// Write to a temp file, fsync, rename over the target.
void write_atomic(const fs::path& target, std::string_view data) {
    fs::path tmp = target;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("open", tmp);
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) io_fail("fsync", tmp);
    ::close(fd);
    if (::rename(tmp.c_str(), target.c_str()) != 0) io_fail("rename", tmp);
    fsync_dir(target.parent_path());
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool session_id_safe(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

}  // namespace

SessionStore::SessionStore(fs::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {
    if (!clock_) clock_ = utc_timestamp_now;
    fs::create_directories(dir_ / "traces");
    fs::create_directories(dir_ / "artifacts");
    const auto index = dir_ / "index.json";
    if (!fs::exists(index)) return;
    Json j = parse_json_text(read_file(index), "index.json");
    for (const auto& s : json_field(j, "sessions", "index.json")) {
        auto sess = std::make_unique<Session>();
        sess->meta.session_id = json_string(s, "id", "index.json");
        sess->meta.subject_id = json_string(s, "subject", "index.json");
        sess->meta.scenario_id = json_string(s, "scenario", "index.json");
        sess->meta.created_at = json_string(s, "created_at", "index.json");
        sess->meta.state = json_string(s, "state", "index.json") == "closed" ? SessionState::closed : SessionState::open;
        sess->closed = sess->meta.state == SessionState::closed;

        const auto trace_path = dir_ / "traces" / (sess->meta.session_id + ".jsonl");
        if (fs::exists(trace_path)) {
            std::string text = read_file(trace_path);
            std::size_t kept = 0;
            auto trace = parse_trace(text, true, &kept);
            sess->events = std::move(trace.events);
            if (kept < text.size()) fs::resize_file(trace_path, kept);
        }
        if (!sess->closed) {
            sess->fd = ::open(trace_path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
            if (sess->fd < 0) io_fail("open", trace_path);
        }
        auto id = sess->meta.session_id;
        sessions_.emplace(std::move(id), std::move(sess));
    }
}

SessionStore::~SessionStore() {
    for (auto& [id, s] : sessions_)
        if (s->fd >= 0) ::close(s->fd);
}

void SessionStore::write_index_locked() const {
    Json j;
    j["version"] = 1;
    Json list = Json::array();
    for (const auto& [id, s] : sessions_) {
        Json e;
        e["id"] = id;
        e["subject"] = s->meta.subject_id;
        e["scenario"] = s->meta.scenario_id;
        e["state"] = std::string(to_string(s->meta.state));
        e["created_at"] = s->meta.created_at;
        list.push_back(std::move(e));
    }
    j["sessions"] = std::move(list);
    write_atomic(dir_ / "index.json", j.dump(1) + "\n");
}

SessionStore::Session& SessionStore::find(const std::string& id) const {
    std::lock_guard lock(index_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::unknown_session, "no session '" + id + "'");
    return *it->second;
}

std::string SessionStore::open_session(const std::string& subject_id, const std::string& scenario_id) {
    if (subject_id.empty()) throw Error(ErrorCode::invalid_event, "subject: must be non-empty");
    if (scenario_id.empty()) throw Error(ErrorCode::invalid_event, "scenario: must be non-empty");
    std::lock_guard lock(index_mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "sess-%06zu", sessions_.size() + 1);
    std::string id = buf;
    while (sessions_.count(id)) id += "x";

    auto sess = std::make_unique<Session>();
    sess->meta = {id, subject_id, scenario_id, SessionState::open, clock_()};
    const auto trace_path = dir_ / "traces" / (id + ".jsonl");
    sess->fd = ::open(trace_path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (sess->fd < 0) io_fail("open", trace_path);
    Json header;
    header["session"] = id;
    header["subject"] = subject_id;
    header["scenario"] = scenario_id;
    header["started_at"] = sess->meta.created_at;
    write_all(sess->fd, header.dump() + "\n", trace_path);
    if (::fsync(sess->fd) != 0) io_fail("fsync", trace_path);
    sessions_.emplace(id, std::move(sess));
    write_index_locked();
    return id;
}

void SessionStore::append_event(const std::string& id, const InteractionEvent& event) {
    append_events(id, std::span<const InteractionEvent>(&event, 1));
}

void SessionStore::append_events(const std::string& id, std::span<const InteractionEvent> events) {
    Session& s = find(id);
    std::lock_guard lock(s.m);
    if (s.closed) throw Error(ErrorCode::session_closed, "session '" + id + "' is closed");
    std::int64_t last = s.events.empty() ? 0 : s.events.back().t;
    std::string data;
    for (const auto& e : events) {
        if (e.t < last)
            throw Error(ErrorCode::time_regression,
                        "t=" + std::to_string(e.t) + " is before the last event at t=" + std::to_string(last));
        last = e.t;
        data += event_line(e);
        data += '\n';
    }
    const auto trace_path = dir_ / "traces" / (id + ".jsonl");
    write_all(s.fd, data, trace_path);
    if (::fdatasync(s.fd) != 0) io_fail("fsync", trace_path);
    s.events.insert(s.events.end(), events.begin(), events.end());
}

void SessionStore::close_session(const std::string& id) {
    Session& s = find(id);
    std::lock_guard lock(s.m);
    if (s.closed) throw Error(ErrorCode::session_closed, "session '" + id + "' is already closed");
    s.closed = true;
    ::close(s.fd);
    s.fd = -1;
    std::lock_guard index_lock(index_mutex_);
    s.meta.state = SessionState::closed;
    write_index_locked();
}

SessionMeta SessionStore::meta(const std::string& id) const {
    Session& s = find(id);
    std::lock_guard lock(index_mutex_);
    return s.meta;
}

SessionTrace SessionStore::get_trace(const std::string& id) const {
    Session& s = find(id);
    SessionTrace t;
    {
        std::lock_guard lock(index_mutex_);
        t.session_id = s.meta.session_id;
        t.subject_id = s.meta.subject_id;
        t.scenario_id = s.meta.scenario_id;
        t.started_at = s.meta.created_at;
    }
    std::lock_guard lock(s.m);
    t.events = s.events;
    return t;
}

std::vector<SessionMeta> SessionStore::list_sessions(const SessionFilter& filter) const {
    std::lock_guard lock(index_mutex_);
    std::vector<SessionMeta> out;
    for (const auto& [id, s] : sessions_) {
        if (filter.scenario_id && s->meta.scenario_id != *filter.scenario_id) continue;
        if (filter.subject_id && s->meta.subject_id != *filter.subject_id) continue;
        out.push_back(s->meta);
    }
    return out;
}

bool SessionStore::put_artifact(const std::string& id, const std::string& name, const std::string& body) {
    Session& s = find(id);
    if (!session_id_safe(name)) throw Error(ErrorCode::invalid_params, "bad artifact name '" + name + "'");
    std::lock_guard lock(s.m);
    const auto dir = dir_ / "artifacts" / id;
    fs::create_directories(dir);
    const auto path = dir / (name + ".json");
    if (fs::exists(path)) return false;
    write_atomic(path, body);
    return true;
}

std::optional<std::string> SessionStore::get_artifact(const std::string& id, const std::string& name) const {
    Session& s = find(id);
    if (!session_id_safe(name)) return std::nullopt;
    std::lock_guard lock(s.m);
    const auto path = dir_ / "artifacts" / id / (name + ".json");
    if (!fs::exists(path)) return std::nullopt;
    return read_file(path);
}

// --- synthesis ----------------------------------------------------------------

std::string_view to_string(FaultKind k) noexcept {
    switch (k) {
        case FaultKind::omission: return "omission";
        case FaultKind::wrong_panel: return "wrong_panel";
        case FaultKind::extra_click: return "extra_click";
        case FaultKind::swap_order: return "swap_order";
    }
    return "?";
}

std::optional<FaultKind> fault_kind_from_string(std::string_view s) noexcept {
    for (auto k : {FaultKind::omission, FaultKind::wrong_panel, FaultKind::extra_click, FaultKind::swap_order})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

FaultSpec parse_fault_spec(std::string_view text) {
    FaultSpec spec;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        pos = comma == std::string_view::npos ? text.size() : comma + 1;
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        auto at = item.find('@');
        if (at == std::string_view::npos)
            throw Error(ErrorCode::fault_invalid, "'" + std::string(item) + "': expected kind@step");
        auto kind = fault_kind_from_string(item.substr(0, at));
        if (!kind) throw Error(ErrorCode::fault_invalid, "unknown fault kind '" + std::string(item.substr(0, at)) + "'");
        auto rest = item.substr(at + 1);
        auto colon = rest.find(':');
        auto num = rest.substr(0, colon);
        Fault f;
        f.kind = *kind;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), f.step);
        if (ec != std::errc() || p != num.data() + num.size())
            throw Error(ErrorCode::fault_invalid, "'" + std::string(item) + "': bad step number");
        if (colon != std::string_view::npos) f.element = std::string(rest.substr(colon + 1));
        spec.faults.push_back(std::move(f));
    }
    return spec;
}

std::string format_fault_spec(const FaultSpec& spec) {
    std::string out;
    for (const auto& f : spec.faults) {
        if (!out.empty()) out += ',';
        out += std::string(to_string(f.kind)) + "@" + std::to_string(f.step);
        if (f.element) out += ":" + *f.element;
    }
    return out;
}

std::vector<ElementId> off_path_containers(const ProcedurePlan& plan, const IeGraph& graph) {
    std::set<ElementId> on_path;
    for (const auto& s : plan.steps)
        for (const auto& p : s.path_set.paths) on_path.insert(p.begin(), p.end());
    std::vector<ElementId> out;
    for (const auto& [id, el] : graph.elements())
        if (el.kind == ElementKind::container && id != graph.root() && !on_path.count(id)) out.push_back(id);
    return out;
}

namespace {

struct Operator {
    const IeGraph& graph;
    const OperatorPolicy& policy;
    std::mt19937_64 rng;
    Point cursor;

    double noise() {
        const auto& h = std::get<HumanPolicy>(policy);
        if (h.noise_sigma <= 0) return 1.0;
        std::normal_distribution<double> n(0.0, h.noise_sigma);
        return std::exp(n(rng));
    }

    // Bbox center, rounded down to a pixel (still inside the box).
    std::pair<std::int64_t, std::int64_t> aim(const ElementId& id) const {
        auto c = graph.element(id).bbox.center();
        return {std::int64_t(std::floor(c.x)), std::int64_t(std::floor(c.y))};
    }

    // Delay before clicking at `target`, in ms.
    std::int64_t delay(const ElementId& id, Point target) {
        if (const auto* m = std::get_if<MachinePolicy>(&policy)) return m->dwell_ms;
        const auto& h = std::get<HumanPolicy>(policy);
        const auto& b = graph.element(id).bbox;
        double d = std::hypot(target.x - cursor.x, target.y - cursor.y);
        double mt = fitts_time(d, double(b.width), h.fitts) * noise();
        return std::max<std::int64_t>(1, std::llround(mt * 1000.0));
    }

    std::int64_t reading() {
        if (std::holds_alternative<MachinePolicy>(policy)) return 0;
        const auto& h = std::get<HumanPolicy>(policy);
        return std::llround(h.reading_s * 1000.0 * noise());
    }
};

}  // namespace

SessionTrace synthesize_trace(const ProcedurePlan& plan, const IeGraph& graph, const OperatorPolicy& policy,
                              const FaultSpec& faults, const TraceMeta& meta) {
    std::map<int, std::size_t> by_index;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) by_index[plan.steps[i].path_set.step.index] = i;

    std::map<int, const Fault*> fault_at;
    std::vector<std::size_t> order(plan.steps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto off_path = off_path_containers(plan, graph);
    auto claim = [&](int step, const Fault& f) {
        if (!fault_at.emplace(step, &f).second)
            throw Error(ErrorCode::fault_invalid, "more than one fault touches step " + std::to_string(step));
    };
    for (const auto& f : faults.faults) {
        if (!by_index.count(f.step))
            throw Error(ErrorCode::fault_missing_step, std::string(to_string(f.kind)) + "@" + std::to_string(f.step));
        claim(f.step, f);
        if (f.kind == FaultKind::swap_order) {
            auto it = by_index.find(f.step);
            auto next = std::next(it);
            if (next == by_index.end() || next->second != it->second + 1)
                throw Error(ErrorCode::fault_missing_step,
                            "swap_order@" + std::to_string(f.step) + " has no following step");
            claim(next->first, f);
            std::swap(order[it->second], order[next->second]);
        } else if (f.kind == FaultKind::wrong_panel) {
            if (!f.element || !std::binary_search(off_path.begin(), off_path.end(), *f.element))
                throw Error(ErrorCode::fault_invalid, "wrong_panel@" + std::to_string(f.step) +
                                                          " needs an off-path container, got '" +
                                                          f.element.value_or("") + "'");
        } else if (f.element) {
            throw Error(ErrorCode::fault_invalid, std::string(to_string(f.kind)) + " takes no element");
        }
    }

    std::uint64_t seed = 0;
    if (const auto* h = std::get_if<HumanPolicy>(&policy)) seed = h->seed;
    Operator op{graph, policy, std::mt19937_64(seed), graph.element(graph.root()).bbox.center()};

    SessionTrace trace;
    trace.session_id = meta.session_id;
    trace.subject_id = meta.subject_id;
    trace.scenario_id = plan.scenario_id;
    trace.started_at = meta.started_at;

    NavState state = graph.initial_state();
    std::int64_t t = 0;
    for (std::size_t pos : order) {
        const auto& step = plan.steps[pos];
        const int index = step.path_set.step.index;
        const Path& chosen = step.path_set.chosen_path();
        trace.events.push_back(marker(t, index));
        t += op.reading();

        Path clicks = plan.chaining ? clicks_from_state(chosen, state) : click_sequence(chosen);
        auto f = fault_at.find(index);
        if (f != fault_at.end()) {
            const Fault& fault = *f->second;
            switch (fault.kind) {
                case FaultKind::omission: clicks.pop_back(); break;
                case FaultKind::extra_click: clicks.push_back(clicks.back()); break;
                case FaultKind::wrong_panel: {
                    NavState probe = state;
                    std::optional<std::size_t> at;
                    for (std::size_t i = 0; i < clicks.size(); ++i) {
                        if (graph.is_visible(probe, *fault.element)) {
                            at = i;
                            break;
                        }
                        probe = graph.apply_click(probe, clicks[i]);
                    }
                    if (!at)
                        throw Error(ErrorCode::fault_invalid,
                                    "'" + *fault.element + "' is never visible during step " + std::to_string(index));
                    Path faulty(clicks.begin(), clicks.begin() + std::ptrdiff_t(*at));
                    faulty.push_back(*fault.element);
                    auto full = click_sequence(chosen);
                    faulty.insert(faulty.end(), full.begin(), full.end());
                    clicks = std::move(faulty);
                    break;
                }
                case FaultKind::swap_order: break;
            }
        }

        for (const auto& id : clicks) {
            auto [x, y] = op.aim(id);
            Point p{double(x), double(y)};
            t += op.delay(id, p);
            trace.events.push_back(click_at(t, x, y));
            state = graph.apply_click(state, id);
            op.cursor = p;
        }
    }
    return trace;
}

}  // namespace procnav
