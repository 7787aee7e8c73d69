#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "engines/backtracker.hpp"
#include "interp/machine.hpp"

namespace retro::debugger {

using json = nlohmann::ordered_json;

// Preset used when a session is opened on a file: `load` without a source
// argument reloads it.
struct LoadDefaults {
    std::string source;
    std::string origin; // file name or fixture name, for display
    interp::Constants constants;
};

// The debuggee plus its recorded run. Every request produces exactly one
// response; events produced while handling it are appended to `events`.
class Session {
public:
    Session() = default;
    explicit Session(LoadDefaults defaults) : defaults_(std::move(defaults)) {}

    json execute(const json& request, std::vector<json>& events);

    // Parses one protocol line. Malformed input yields a response with id null.
    std::string handle_line(const std::string& line, std::vector<std::string>& out_events);

    // Replay comparison after every command. On by default in debug builds.
    void set_consistency_checks(bool on) { check_ = on; }

    bool loaded() const { return bt_.has_value(); }
    const engines::Backtracker& tracker() const { return *bt_; }

private:
    json cmd_load(const json& args);
    json cmd_step(const json& args, std::vector<json>& events);
    json cmd_back(const json& args);
    json cmd_state() const;
    json cmd_enabled() const;
    json cmd_revcode(const json& args) const;
    json cmd_mem() const;
    json cmd_path(const json& args) const;
    json cmd_break(const json& args);
    json cmd_continue(const json& args, std::vector<json>& events);
    json cmd_reset();

    engines::Backtracker& bt();
    const engines::Backtracker& bt() const;
    int resolve_thread(const json& args) const;
    json do_step(int thread, std::vector<json>& events);
    json threads_json() const;
    json entry_json(const interp::PathEntry& e) const;
    json event_json(const interp::Event& ev) const;
    json breakpoints_json() const;

    LoadDefaults defaults_;
    std::optional<engines::Backtracker> bt_;
    std::vector<engines::EngineKind> kinds_;
    interp::Schedule schedule_ = interp::Schedule::interactive();
    std::set<std::pair<int, int>> breakpoints_; // (thread, line)
#ifdef NDEBUG
    bool check_ = false;
#else
    bool check_ = true;
#endif
};

// Translates one REPL line ("step Producer", "back 2", "revcode 7") into a
// protocol request. Returns nullopt for blank lines.
std::optional<json> repl_translate(const std::string& line, long long id);

// Human-readable rendering of a response payload for the REPL.
std::string repl_render(const json& response);

} // namespace retro::debugger
