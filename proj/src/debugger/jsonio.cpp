#include "debugger/jsonio.hpp"

#include "bench/bench.hpp"
#include "common/error.hpp"

namespace retro::debugger {

namespace {

Error bad_schedule(const std::string& msg)
{
    return Error(ErrorKind::request, "bad-schedule", msg);
}

std::optional<interp::BlockEdge> parse_edge(const std::string& s)
{
    for (auto e : {interp::BlockEdge::enter, interp::BlockEdge::exit, interp::BlockEdge::after}) {
        if (s == interp::to_string(e)) {
            return e;
        }
    }
    return std::nullopt;
}

int thread_of(const interp::Executable& exe, const json& j)
{
    if (j.is_null()) {
        return -1;
    }
    const auto name = j.get<std::string>();
    const int t = exe.program().thread_index(name);
    if (t < 0) {
        throw Error(ErrorKind::replay, "unknown-thread", "log names unknown thread '" + name + "'");
    }
    return t;
}

} // namespace

interp::Schedule schedule_from_json(const json& j, const interp::Constants& constants)
{
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "interactive") {
            return interp::Schedule::interactive();
        }
        const auto shape = bench::parse_schedule_shape(name);
        if (!shape) {
            throw bad_schedule("unknown schedule '" + name + "'");
        }
        const auto n = constants.find("N");
        if (n == constants.end()) {
            throw bad_schedule("schedule '" + name + "' needs the constant N");
        }
        return interp::Schedule::scripted(*shape == bench::ScheduleShape::s_seq
                                              ? bench::s_seq_choices(n->second)
                                              : bench::s_opt_choices(n->second));
    }
    if (!j.is_object() || !j.contains("kind")) {
        throw bad_schedule("schedule must be an object with 'kind'");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "scripted") {
        return interp::Schedule::scripted(j.at("choices").get<std::vector<std::string>>());
    }
    if (kind == "seeded") {
        return interp::Schedule::seeded(j.at("seed").get<std::uint64_t>());
    }
    if (kind == "interactive") {
        return interp::Schedule::interactive();
    }
    throw bad_schedule("unknown schedule kind '" + kind + "'");
}

const char* schedule_kind_name(const interp::Schedule& s)
{
    switch (s.kind()) {
    case interp::Schedule::Kind::scripted: return "scripted";
    case interp::Schedule::Kind::seeded: return "seeded";
    case interp::Schedule::Kind::interactive: return "interactive";
    }
    return "?";
}

json schedule_to_json(const interp::Schedule& s)
{
    json j = {{"kind", schedule_kind_name(s)}};
    if (s.kind() == interp::Schedule::Kind::scripted) {
        j["choices"] = s.choices();
    } else if (s.kind() == interp::Schedule::Kind::seeded) {
        j["seed"] = s.seed();
    }
    return j;
}

json path_entry_json(const interp::Executable& exe, const interp::PathEntry& e)
{
    return {{"seq", e.seq},
            {"thread", exe.thread_name(e.thread)},
            {"command_id", e.command},
            {"line", e.line},
            {"lhs", exe.location_name(e.lhs)},
            {"rhs", revgen::render_expr(exe, *e.rhs)},
            {"kind", interp::to_string(e.kind)}};
}

json switch_json(const interp::Executable& exe, const interp::SwitchRecord& s)
{
    return {{"seq", s.seq},
            {"from", s.from < 0 ? json(nullptr) : json(exe.thread_name(s.from))},
            {"to", exe.thread_name(s.to)}};
}

json block_entry_json(const interp::Executable& exe, const interp::BlockEntry& b)
{
    return {{"seq", b.seq},
            {"thread", exe.thread_name(b.thread)},
            {"block", b.block},
            {"line", exe.program().command(b.block).line},
            {"edge", interp::to_string(b.edge)}};
}

json log_json(const interp::Executable& exe, const interp::ExecutionLog& log)
{
    json blocks = json::array();
    for (const auto& b : log.block_entries) {
        blocks.push_back(block_entry_json(exe, b));
    }
    json switches = json::array();
    for (const auto& s : log.switches) {
        switches.push_back(switch_json(exe, s));
    }
    return {{"block_entries", blocks}, {"switches", switches}};
}

interp::ExecutionLog log_from_json(const interp::Executable& exe, const json& j)
{
    interp::ExecutionLog log;
    for (const auto& b : j.at("block_entries")) {
        interp::BlockEntry e;
        e.seq = b.at("seq").get<interp::Seq>();
        e.thread = thread_of(exe, b.at("thread"));
        e.block = b.at("block").get<lang::CommandId>();
        const auto edge = parse_edge(b.at("edge").get<std::string>());
        if (!edge) {
            throw Error(ErrorKind::replay, "bad-log", "unknown block edge");
        }
        e.edge = *edge;
        log.block_entries.push_back(e);
    }
    for (const auto& s : j.at("switches")) {
        log.switches.push_back({s.at("seq").get<interp::Seq>(), thread_of(exe, s.at("from")),
                                thread_of(exe, s.at("to"))});
    }
    return log;
}

json ledger_json(const engines::MemoryLedger& l)
{
    return {{"engine", l.engine},
            {"saved_ints", l.saved_ints},
            {"aux_log_ints", l.aux_log_ints},
            {"retained_revcode_cmds", l.retained_revcode_cmds}};
}

json provenance_json(const interp::Executable& exe, const revgen::Provenance& p)
{
    json children = json::array();
    for (const auto& c : p.children) {
        children.push_back(provenance_json(exe, c));
    }
    return {{"technique", revgen::to_string(p.technique)},
            {"location", exe.location_name(p.location)},
            {"time", p.time},
            {"used_seq", p.used_seq},
            {"children", children}};
}

json state_json(const interp::Executable& exe, const interp::MachineState& s)
{
    json locs = json::object();
    for (std::size_t i = 0; i < exe.cell_count(); ++i) {
        locs[exe.location_name(exe.location_of(i))] = s.cells[i];
    }
    json threads = json::array();
    for (std::size_t i = 0; i < exe.thread_count(); ++i) {
        const int t = static_cast<int>(i);
        const auto v = interp::thread_view(exe, s, t);
        threads.push_back({{"name", exe.thread_name(t)},
                           {"status", interp::to_string(v.status)},
                           {"line", v.status == interp::ThreadStatus::finished ? json(nullptr) : json(v.line)}});
    }
    return {{"seq", s.steps}, {"locations", locs}, {"threads", threads}};
}

} // namespace retro::debugger
