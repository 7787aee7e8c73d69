#include "debugger/session.hpp"

#include <fstream>
#include <sstream>

#include "bench/bench.hpp"
#include "common/error.hpp"
#include "debugger/jsonio.hpp"
#include "revgen/revgen.hpp"

namespace retro::debugger {

namespace {

Error bad_request(const std::string& msg)
{
    return Error(ErrorKind::request, "bad-request", msg);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::request, "file-not-found", "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json changed_cells(const interp::Executable& exe, const interp::MachineState& before,
                   const interp::MachineState& after)
{
    json out = json::array();
    for (std::size_t i = 0; i < before.cells.size(); ++i) {
        if (before.cells[i] != after.cells[i]) {
            out.push_back({{"location", exe.location_name(exe.location_of(i))},
                           {"before", before.cells[i]},
                           {"after", after.cells[i]}});
        }
    }
    return out;
}

std::uint64_t count_arg(const json& args, const char* name)
{
    if (!args.contains(name)) {
        return 1;
    }
    const auto& v = args.at(name);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw bad_request(std::string("'") + name + "' must be a positive integer");
    }
    return v.get<std::uint64_t>();
}

} // namespace

engines::Backtracker& Session::bt()
{
    if (!bt_) {
        throw Error(ErrorKind::request, "not-loaded", "no program loaded");
    }
    return *bt_;
}

const engines::Backtracker& Session::bt() const
{
    if (!bt_) {
        throw Error(ErrorKind::request, "not-loaded", "no program loaded");
    }
    return *bt_;
}

json Session::execute(const json& request, std::vector<json>& events)
{
    json id = nullptr;
    try {
        if (!request.is_object()) {
            throw bad_request("request must be a JSON object");
        }
        if (request.contains("id")) {
            id = request.at("id");
        }
        if (!request.contains("cmd") || !request.at("cmd").is_string()) {
            throw bad_request("missing 'cmd'");
        }
        const auto cmd = request.at("cmd").get<std::string>();
        json args = request.value("args", json::object());
        if (!args.is_object()) {
            throw bad_request("'args' must be an object");
        }

        json payload;
        if (cmd == "load") {
            payload = cmd_load(args);
        } else if (cmd == "step") {
            payload = cmd_step(args, events);
        } else if (cmd == "back") {
            payload = cmd_back(args);
        } else if (cmd == "state") {
            payload = cmd_state();
        } else if (cmd == "enabled") {
            payload = cmd_enabled();
        } else if (cmd == "revcode") {
            payload = cmd_revcode(args);
        } else if (cmd == "mem") {
            payload = cmd_mem();
        } else if (cmd == "path") {
            payload = cmd_path(args);
        } else if (cmd == "break") {
            payload = cmd_break(args);
        } else if (cmd == "continue") {
            payload = cmd_continue(args, events);
        } else if (cmd == "reset") {
            payload = cmd_reset();
        } else {
            throw Error(ErrorKind::request, "unknown-command", "unknown command '" + cmd + "'");
        }

        if (check_ && bt_ && !bt_->consistent()) {
            throw Error(ErrorKind::internal, "inconsistent-session",
                        "replay of the log does not reproduce the session state");
        }
        return {{"id", id}, {"ok", true}, {"payload", std::move(payload)}};
    } catch (const Error& e) {
        return {{"id", id}, {"ok", false}, {"error", {{"code", e.code()}, {"message", e.what()}}}};
    } catch (const json::exception& e) {
        return {{"id", id}, {"ok", false}, {"error", {{"code", "bad-request"}, {"message", e.what()}}}};
    } catch (const std::exception& e) {
        return {{"id", id}, {"ok", false}, {"error", {{"code", "internal"}, {"message", e.what()}}}};
    }
}

std::string Session::handle_line(const std::string& line, std::vector<std::string>& out_events)
{
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error& e) {
        json r = {{"id", nullptr}, {"ok", false}, {"error", {{"code", "parse-error"}, {"message", e.what()}}}};
        return r.dump();
    }
    std::vector<json> events;
    const json response = execute(request, events);
    for (const auto& ev : events) {
        out_events.push_back(ev.dump());
    }
    return response.dump();
}

json Session::cmd_load(const json& args)
{
    interp::Constants constants = defaults_.constants;
    if (args.contains("constants")) {
        for (const auto& [k, v] : args.at("constants").items()) {
            constants[k] = v.get<std::int64_t>();
        }
    }

    std::string source;
    std::string origin;
    if (args.contains("fixture")) {
        origin = args.at("fixture").get<std::string>();
        if (origin != "bounded-buffer") {
            throw Error(ErrorKind::request, "unknown-fixture", "unknown fixture '" + origin + "'");
        }
        constants.try_emplace("M", 3);
        constants.try_emplace("N", 5);
        const auto src = args.contains("src") ? args.at("src").get<std::vector<std::int64_t>>()
                                              : bench::default_source_values(constants.at("N"));
        source = bench::bounded_buffer_source(src);
    } else if (args.contains("source")) {
        source = args.at("source").get<std::string>();
        origin = "<source>";
    } else if (args.contains("file")) {
        origin = args.at("file").get<std::string>();
        source = read_file(origin);
    } else if (!defaults_.source.empty()) {
        source = defaults_.source;
        origin = defaults_.origin;
    } else {
        throw bad_request("load needs 'fixture', 'source' or 'file'");
    }

    auto exe = interp::load_source(source, constants);

    std::vector<engines::EngineKind> kinds;
    if (args.contains("engines") && args.at("engines").is_array()) {
        for (const auto& n : args.at("engines")) {
            const auto t = engines::parse_engine_type(n.get<std::string>());
            if (!t) {
                throw Error(ErrorKind::request, "unknown-engine", "unknown engine '" + n.get<std::string>() + "'");
            }
            kinds.push_back({*t, {}, {}, revgen::kDefaultBudget});
        }
    } else {
        kinds = engines::all_engine_kinds();
    }
    if (kinds.empty()) {
        throw bad_request("at least one engine is required");
    }
    engines::EngineType active = engines::EngineType::dynamic_rcg;
    if (args.contains("engine")) {
        const auto name = args.at("engine").get<std::string>();
        const auto t = engines::parse_engine_type(name);
        if (!t) {
            throw Error(ErrorKind::request, "unknown-engine", "unknown engine '" + name + "'");
        }
        active = *t;
    }
    auto it = std::find_if(kinds.begin(), kinds.end(), [&](const auto& k) { return k.type == active; });
    if (it == kinds.end()) {
        kinds.insert(kinds.begin(), engines::EngineKind{active, {}, {}, revgen::kDefaultBudget});
    } else {
        std::rotate(kinds.begin(), it, it + 1);
    }
    for (auto& k : kinds) {
        if (k.type == engines::EngineType::checkpointing && args.contains("checkpoints")) {
            k.checkpoints = engines::checkpoints_at_lines(*exe, args.at("checkpoints").get<std::vector<int>>());
        }
        if (k.type == engines::EngineType::dynamic_rcg && args.contains("retention")) {
            k.retention = args.at("retention").get<std::size_t>();
        }
    }

    auto schedule = interp::Schedule::interactive();
    if (args.contains("schedule")) {
        schedule = schedule_from_json(args.at("schedule"), constants);
    }

    bt_.emplace(exe, kinds);
    kinds_ = std::move(kinds);
    schedule_ = std::move(schedule);
    breakpoints_.clear();
    defaults_.source = source;
    defaults_.origin = origin;
    defaults_.constants = constants;

    json threads = json::array();
    for (std::size_t t = 0; t < exe->thread_count(); ++t) {
        threads.push_back(exe->thread_name(static_cast<int>(t)));
    }
    json engine_names = json::array();
    for (const auto& e : bt_->engines()) {
        engine_names.push_back(e->name());
    }
    json consts = json::object();
    for (const auto& [k, v] : exe->constants()) {
        consts[k] = v;
    }
    return {{"program", origin},
            {"threads", threads},
            {"cells", exe->cell_count()},
            {"constants", consts},
            {"engines", engine_names},
            {"active", engine_names.front()},
            {"schedule", schedule_kind_name(schedule_)},
            {"threads_status", threads_json()}};
}

int Session::resolve_thread(const json& args) const
{
    const auto& exe = bt().exe();
    if (args.contains("thread")) {
        const auto name = args.at("thread").get<std::string>();
        const int t = exe.program().thread_index(name);
        if (t < 0) {
            throw Error(ErrorKind::schedule, "unknown-thread", "no thread '" + name + "'");
        }
        return t;
    }
    const auto enabled = interp::enabled_threads(exe, bt().state());
    if (enabled.empty()) {
        throw Error(ErrorKind::schedule, "no-runnable-thread",
                    interp::all_finished(exe, bt().state()) ? "program terminated" : "deadlock");
    }
    if (schedule_.kind() != interp::Schedule::Kind::interactive) {
        return schedule_.choose(exe, bt().state().steps, enabled);
    }
    if (enabled.size() > 1) {
        throw Error(ErrorKind::schedule, "ambiguous-thread",
                    "several threads are enabled; name one");
    }
    return enabled.front();
}

json Session::do_step(int thread, std::vector<json>& events)
{
    const auto r = bt().step(thread);
    for (const auto& ev : r.events) {
        events.push_back(event_json(ev));
    }
    return entry_json(r.entry);
}

json Session::cmd_step(const json& args, std::vector<json>& events)
{
    const auto count = count_arg(args, "count");
    const auto before = bt().state();
    json entry;
    std::uint64_t taken = 0;
    for (; taken < count; ++taken) {
        try {
            entry = do_step(resolve_thread(args), events);
        } catch (const Error&) {
            // a partial step run reports how far it got
            if (taken == 0) {
                throw;
            }
            break;
        }
    }
    return {{"seq", bt().path().size()},
            {"taken", taken},
            {"entry", entry},
            {"changed", changed_cells(bt().exe(), before, bt().state())},
            {"threads", threads_json()}};
}

json Session::cmd_back(const json& args)
{
    const auto count = count_arg(args, "count");
    if (bt().path().size() < count) {
        throw Error(ErrorKind::engine, "at-origin",
                    "cannot go back " + std::to_string(count) + " from position " +
                        std::to_string(bt().path().size()));
    }
    const auto before = bt().state();
    for (std::uint64_t i = 0; i < count; ++i) {
        bt().back();
    }
    return {{"seq", bt().path().size()},
            {"changed", changed_cells(bt().exe(), before, bt().state())},
            {"threads", threads_json()}};
}

json Session::cmd_state() const
{
    return state_json(bt().exe(), bt().state());
}

json Session::cmd_enabled() const
{
    json out = json::array();
    for (int t : interp::enabled_threads(bt().exe(), bt().state())) {
        out.push_back(bt().exe().thread_name(t));
    }
    return out;
}

json Session::cmd_revcode(const json& args) const
{
    if (!args.contains("seq") || !args.at("seq").is_number_integer()) {
        throw bad_request("revcode needs an integer 'seq'");
    }
    const auto seq = args.at("seq").get<long long>();
    const auto& path = bt().path();
    if (seq < 1 || static_cast<std::size_t>(seq) > path.size()) {
        throw Error(ErrorKind::request, "seq-out-of-range",
                    "seq " + std::to_string(seq) + " is outside 1.." + std::to_string(path.size()));
    }
    const auto& exe = bt().exe();
    const auto n = static_cast<interp::Seq>(seq);
    const auto& e = path.at(n);
    json out = {{"seq", n},
                {"line", e.line},
                {"thread", exe.thread_name(e.thread)},
                {"target", exe.location_name(e.lhs)}};
    const auto code = revgen::gen_reverse(exe, path, n, kinds_.front().budget);
    if (!code) {
        out["status"] = "needs-state-saving";
        out["code"] = "needs-state-saving";
        out["steps"] = json::array();
        return out;
    }
    out["status"] = "generated";
    out["code"] = revgen::render(exe, *code);
    json steps = json::array();
    for (const auto& s : code->steps) {
        steps.push_back({{"lhs", exe.location_name(s.lhs)},
                         {"rhs", revgen::render_expr(exe, *s.rhs)},
                         {"provenance", provenance_json(exe, s.provenance)}});
    }
    out["steps"] = steps;
    return out;
}

json Session::cmd_mem() const
{
    json ledgers = json::array();
    for (const auto& l : bt().ledgers()) {
        ledgers.push_back(ledger_json(l));
    }
    return {{"active", bt().engines().front()->name()}, {"ledgers", ledgers}};
}

json Session::cmd_path(const json& args) const
{
    const auto& path = bt().path();
    const auto from = args.value("from", std::uint64_t{1});
    const auto to = args.value("to", static_cast<std::uint64_t>(path.size()));
    json entries = json::array();
    for (auto k = std::max<std::uint64_t>(from, 1); k <= std::min<std::uint64_t>(to, path.size()); ++k) {
        entries.push_back(entry_json(path.at(k)));
    }
    json out = {{"length", path.size()}, {"entries", entries}};
    const auto log = log_json(bt().exe(), bt().log());
    out["switches"] = log.at("switches");
    if (args.value("log", false)) {
        out["block_entries"] = log.at("block_entries");
    }
    return out;
}

json Session::cmd_break(const json& args)
{
    const auto& exe = bt().exe();
    if (args.contains("thread") || args.contains("line")) {
        const auto name = args.at("thread").get<std::string>();
        const int line = args.at("line").get<int>();
        const int t = exe.program().thread_index(name);
        if (t < 0) {
            throw Error(ErrorKind::request, "unknown-thread", "no thread '" + name + "'");
        }
        bool found = false;
        for (auto id : exe.program().commands_at_line(line)) {
            found = found || exe.program().command(id).thread == t;
        }
        if (!found) {
            throw Error(ErrorKind::request, "unknown-line",
                        "thread '" + name + "' has no state-changing command on line " +
                            std::to_string(line));
        }
        if (args.value("clear", false)) {
            breakpoints_.erase({t, line});
        } else {
            breakpoints_.insert({t, line});
        }
    } else if (args.value("clear", false)) {
        breakpoints_.clear();
    }
    return breakpoints_json();
}

json Session::cmd_continue(const json& args, std::vector<json>& events)
{
    const auto limit = args.contains("max_steps") ? count_arg(args, "max_steps") : std::uint64_t{1000000};
    const auto& exe = bt().exe();
    const auto before = bt().state();
    std::uint64_t taken = 0;
    std::string reason;
    json hit = nullptr;
    while (true) {
        const auto enabled = interp::enabled_threads(exe, bt().state());
        if (enabled.empty()) {
            reason = interp::all_finished(exe, bt().state()) ? "terminated" : "deadlock";
            break;
        }
        if (taken == limit) {
            reason = "step-limit";
            break;
        }
        int t = -1;
        if (schedule_.kind() != interp::Schedule::Kind::interactive) {
            try {
                t = schedule_.choose(exe, bt().state().steps, enabled);
            } catch (const Error& e) {
                if (taken == 0) {
                    throw;
                }
                reason = e.code();
                break;
            }
        } else if (enabled.size() == 1) {
            t = enabled.front();
        } else {
            if (taken == 0) {
                throw Error(ErrorKind::schedule, "ambiguous-thread",
                            "several threads are enabled and no schedule is loaded");
            }
            reason = "choice-required";
            break;
        }
        const int line = interp::thread_view(exe, bt().state(), t).line;
        if (taken > 0 && breakpoints_.count({t, line})) {
            reason = "breakpoint";
            hit = {{"thread", exe.thread_name(t)}, {"line", line}};
            break;
        }
        do_step(t, events);
        ++taken;
    }
    return {{"reason", reason},
            {"breakpoint", hit},
            {"taken", taken},
            {"seq", bt().path().size()},
            {"changed", changed_cells(exe, before, bt().state())},
            {"threads", threads_json()}};
}

json Session::cmd_reset()
{
    bt().reset();
    return cmd_state();
}

json Session::threads_json() const
{
    return state_json(bt().exe(), bt().state()).at("threads");
}

json Session::entry_json(const interp::PathEntry& e) const
{
    return path_entry_json(bt().exe(), e);
}

json Session::event_json(const interp::Event& ev) const
{
    const auto& exe = bt().exe();
    json data;
    switch (ev.kind) {
    case interp::Event::Kind::context_switch:
        data = switch_json(exe, ev.sw);
        break;
    case interp::Event::Kind::block_entry:
        data = block_entry_json(exe, ev.block);
        break;
    case interp::Event::Kind::terminated:
        data = {{"seq", bt().path().size()}};
        break;
    case interp::Event::Kind::deadlock: {
        json blocked = json::array();
        for (std::size_t t = 0; t < exe.thread_count(); ++t) {
            const auto v = interp::thread_view(exe, bt().state(), static_cast<int>(t));
            if (v.status == interp::ThreadStatus::blocked) {
                blocked.push_back(exe.thread_name(static_cast<int>(t)));
            }
        }
        data = {{"seq", bt().path().size()}, {"blocked", blocked}};
        break;
    }
    }
    return {{"event", interp::to_string(ev.kind)}, {"data", data}};
}

json Session::breakpoints_json() const
{
    json out = json::array();
    for (const auto& [t, line] : breakpoints_) {
        out.push_back({{"thread", bt().exe().thread_name(t)}, {"line", line}});
    }
    return out;
}

// ---- REPL ----

std::optional<json> repl_translate(const std::string& line, long long id)
{
    std::istringstream in(line);
    std::vector<std::string> words;
    for (std::string w; in >> w;) {
        words.push_back(w);
    }
    if (words.empty()) {
        return std::nullopt;
    }
    auto is_int = [](const std::string& s) {
        return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
    };
    std::string cmd = words[0];
    if (cmd == "s") cmd = "step";
    if (cmd == "b") cmd = "back";
    if (cmd == "c") cmd = "continue";
    json args = json::object();

    if (cmd == "load") {
        for (std::size_t i = 1; i < words.size(); ++i) {
            const auto& w = words[i];
            const auto eq = w.find('=');
            if (eq == std::string::npos) {
                args[w == "bounded-buffer" ? "fixture" : "file"] = w;
                continue;
            }
            const auto key = w.substr(0, eq);
            const auto val = w.substr(eq + 1);
            if (key == "engine" || key == "schedule") {
                args[key] = val;
            } else if (key == "retention") {
                args[key] = std::stoll(val);
            } else {
                args["constants"][key] = std::stoll(val);
            }
        }
    } else if (cmd == "step") {
        for (std::size_t i = 1; i < words.size(); ++i) {
            if (is_int(words[i])) {
                args["count"] = std::stoll(words[i]);
            } else {
                args["thread"] = words[i];
            }
        }
    } else if (cmd == "back") {
        if (words.size() > 1 && is_int(words[1])) {
            args["count"] = std::stoll(words[1]);
        }
    } else if (cmd == "revcode") {
        if (words.size() > 1 && is_int(words[1])) {
            args["seq"] = std::stoll(words[1]);
        }
    } else if (cmd == "break") {
        std::size_t i = 1;
        if (i < words.size() && words[i] == "clear") {
            args["clear"] = true;
            ++i;
        }
        if (i + 1 < words.size()) {
            args["thread"] = words[i];
            args["line"] = is_int(words[i + 1]) ? json(std::stoll(words[i + 1])) : json(words[i + 1]);
        }
    } else if (cmd == "path") {
        if (words.size() > 1 && words[1] == "log") {
            args["log"] = true;
        }
    } else if (cmd == "continue") {
        if (words.size() > 1 && is_int(words[1])) {
            args["max_steps"] = std::stoll(words[1]);
        }
    }
    return json{{"id", id}, {"cmd", cmd}, {"args", args}};
}

static void render_changes(std::ostringstream& out, const json& payload)
{
    for (const auto& c : payload.at("changed")) {
        out << "  " << c.at("location").get<std::string>() << ": " << c.at("before").dump() << " -> "
            << c.at("after").dump() << "\n";
    }
}

static void render_threads(std::ostringstream& out, const json& payload)
{
    out << "  threads:";
    for (const auto& t : payload.at("threads")) {
        out << " " << t.at("name").get<std::string>() << "(" << t.at("status").get<std::string>();
        if (!t.at("line").is_null()) {
            out << " @" << t.at("line").dump();
        }
        out << ")";
    }
}

std::string repl_render(const json& response)
{
    if (!response.value("ok", false)) {
        const auto& err = response.at("error");
        return "error [" + err.value("code", std::string("?")) + "]: " +
               err.value("message", std::string());
    }
    const auto& payload = response.at("payload");
    if (!payload.is_object()) {
        return payload.dump();
    }
    std::ostringstream out;
    if (payload.contains("status") && payload.contains("code")) {
        auto code = payload.at("code").get<std::string>();
        while (!code.empty() && code.back() == '\n') {
            code.pop_back();
        }
        return code;
    }
    if (payload.contains("entry") && payload.contains("changed")) {
        const auto& e = payload.at("entry");
        out << "#" << e.at("seq").dump() << " " << e.at("thread").get<std::string>() << " line "
            << e.at("line").dump() << ": " << e.at("lhs").get<std::string>() << " := "
            << e.at("rhs").get<std::string>() << "\n";
        render_changes(out, payload);
        render_threads(out, payload);
        return out.str();
    }
    if (payload.contains("reason")) {
        out << "stopped: " << payload.at("reason").get<std::string>() << " after "
            << payload.at("taken").dump() << " step(s), at #" << payload.at("seq").dump() << "\n";
        render_changes(out, payload);
        render_threads(out, payload);
        return out.str();
    }
    if (payload.contains("changed")) {
        out << "back at #" << payload.at("seq").dump() << "\n";
        render_changes(out, payload);
        render_threads(out, payload);
        return out.str();
    }
    if (payload.contains("locations")) {
        out << "at #" << payload.at("seq").dump() << "\n";
        for (const auto& [name, value] : payload.at("locations").items()) {
            out << "  " << name << " = " << value.dump() << "\n";
        }
        render_threads(out, payload);
        return out.str();
    }
    return payload.dump(2);
}

} // namespace retro::debugger
