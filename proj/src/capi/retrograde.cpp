#include "retrograde/retrograde.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <stdexcept>
#include <string>

#include "bench/bench.hpp"
#include "common/error.hpp"
#include "debugger/jsonio.hpp"
#include "debugger/server.hpp"
#include "debugger/session.hpp"

struct rg_session {
    retro::debugger::Session session;
};

namespace {

using retro::debugger::json;

thread_local std::string g_error;
thread_local std::string g_code;

rg_status status_of(retro::ErrorKind k)
{
    using retro::ErrorKind;
    switch (k) {
    case ErrorKind::parse: return RG_ERR_PARSE;
    case ErrorKind::load: return RG_ERR_LOAD;
    case ErrorKind::runtime: return RG_ERR_RUNTIME;
    case ErrorKind::schedule: return RG_ERR_SCHEDULE;
    case ErrorKind::replay: return RG_ERR_REPLAY;
    case ErrorKind::engine: return RG_ERR_ENGINE;
    case ErrorKind::request: return RG_ERR_REQUEST;
    case ErrorKind::internal: return RG_ERR_INTERNAL;
    }
    return RG_ERR_INTERNAL;
}

rg_status fail(rg_status st, std::string code, std::string msg)
{
    g_code = std::move(code);
    g_error = std::move(msg);
    return st;
}

struct NullArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

template <class F>
rg_status guarded(F&& f)
{
    g_error.clear();
    g_code.clear();
    try {
        f();
        return RG_OK;
    } catch (const NullArgument& e) {
        return fail(RG_ERR_INVALID_ARGUMENT, "invalid-argument", e.what());
    } catch (const retro::Error& e) {
        return fail(status_of(e.kind()), e.code(), e.what());
    } catch (const json::exception& e) {
        return fail(RG_ERR_INVALID_ARGUMENT, "bad-json", e.what());
    } catch (const std::exception& e) {
        return fail(RG_ERR_INTERNAL, "internal", e.what());
    }
}

char* dup(const std::string& s)
{
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) {
        throw std::bad_alloc();
    }
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void require(const void* p, const char* what)
{
    if (!p) {
        throw NullArgument(std::string(what) + " is NULL");
    }
}

retro::interp::Constants constants_of(const char* text)
{
    retro::interp::Constants c;
    if (text && *text) {
        const auto j = json::parse(text);
        for (const auto& [k, v] : j.items()) {
            c[k] = v.get<std::int64_t>();
        }
    }
    return c;
}

json run_json(const retro::interp::Executable& exe, const retro::interp::MachineState& state,
              const retro::interp::ExecutionPath& path, const retro::interp::ExecutionLog& log)
{
    using namespace retro::debugger;
    json entries = json::array();
    for (const auto& e : path.entries()) {
        entries.push_back(path_entry_json(exe, e));
    }
    return {{"state", state_json(exe, state)}, {"path", entries}, {"log", log_json(exe, log)}};
}

} // namespace

extern "C" {

void rg_free(char* p)
{
    std::free(p);
}

const char* rg_version(void)
{
    return "0.1.0";
}

const char* rg_last_error(void)
{
    return g_error.c_str();
}

const char* rg_last_error_code(void)
{
    return g_code.c_str();
}

rg_status rg_session_open(const char* source, const char* constants_json, rg_session** out)
{
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        retro::debugger::LoadDefaults d;
        if (source) {
            d.source = source;
            d.origin = "<source>";
        }
        d.constants = constants_of(constants_json);
        *out = new rg_session{retro::debugger::Session(std::move(d))};
    });
}

void rg_session_close(rg_session* s)
{
    delete s;
}

rg_status rg_session_set_checks(rg_session* s, int on)
{
    return guarded([&] {
        require(s, "session");
        s->session.set_consistency_checks(on != 0);
    });
}

rg_status rg_session_request(rg_session* s, const char* line, char** response, char** events)
{
    bool shutdown = false;
    const auto st = guarded([&] {
        require(s, "session");
        require(line, "line");
        require(response, "response");
        std::string evs;
        std::string resp;
        shutdown = !retro::debugger::serve_line(s->session, line, [&](const std::string& text) {
            if (!resp.empty()) {
                evs += resp;
            }
            resp = text;
        });
        if (!resp.empty() && resp.back() == '\n') {
            resp.pop_back();
        }
        *response = dup(resp);
        if (events) {
            *events = dup(evs);
        }
    });
    if (st == RG_OK && shutdown) {
        return fail(RG_ERR_REQUEST, "shutdown", "session shut down");
    }
    return st;
}

rg_status rg_serve_stdio(rg_session* s)
{
    return guarded([&] {
        require(s, "session");
        retro::debugger::serve_stream(s->session, std::cin, std::cout);
    });
}

rg_status rg_serve_tcp(rg_session* s, int port)
{
    return guarded([&] {
        require(s, "session");
        retro::debugger::serve_tcp(s->session, port, [](int p) {
            std::cerr << "listening on 127.0.0.1:" << p << std::endl;
        });
    });
}

rg_status rg_run(const char* source, const char* constants_json, const char* schedule_json,
                 char** out_json)
{
    return guarded([&] {
        require(source, "source");
        require(schedule_json, "schedule");
        require(out_json, "out");
        const auto constants = constants_of(constants_json);
        const auto exe = retro::interp::load_source(source, constants);
        const auto schedule = retro::debugger::schedule_from_json(json::parse(schedule_json), constants);
        if (schedule.kind() == retro::interp::Schedule::Kind::interactive) {
            throw retro::Error(retro::ErrorKind::schedule, "interactive-schedule",
                               "run needs a scripted or seeded schedule");
        }
        const auto r = retro::interp::run(*exe, schedule);
        json out = {{"outcome", retro::interp::to_string(r.outcome)}};
        out.update(run_json(*exe, r.state, r.path, r.log));
        out["schedule"] = retro::debugger::schedule_to_json(schedule);
        *out_json = dup(out.dump(2));
    });
}

rg_status rg_replay(const char* source, const char* constants_json, const char* log_json,
                    uint64_t upto, char** out_json)
{
    return guarded([&] {
        require(source, "source");
        require(log_json, "log");
        require(out_json, "out");
        const auto exe = retro::interp::load_source(source, constants_of(constants_json));
        auto lj = json::parse(log_json);
        if (lj.contains("log")) {
            lj = lj.at("log");
        }
        const auto log = retro::debugger::log_from_json(*exe, lj);
        const auto r = retro::interp::replay(*exe, log, upto);
        *out_json = dup(run_json(*exe, r.state, r.path, r.log).dump(2));
    });
}

rg_status rg_revcode(const char* source, const char* constants_json, const char* schedule_json,
                     uint64_t seq, char** out_json)
{
    return guarded([&] {
        require(source, "source");
        require(schedule_json, "schedule");
        require(out_json, "out");
        const auto constants = constants_of(constants_json);
        const auto exe = retro::interp::load_source(source, constants);
        const auto schedule = retro::debugger::schedule_from_json(json::parse(schedule_json), constants);
        const auto r = retro::interp::run(*exe, schedule);
        if (seq > r.path.size()) {
            throw retro::Error(retro::ErrorKind::request, "seq-out-of-range",
                               "seq " + std::to_string(seq) + " is outside 1.." +
                                   std::to_string(r.path.size()));
        }
        json entries = json::array();
        const auto first = seq == 0 ? 1 : seq;
        const auto last = seq == 0 ? r.path.size() : seq;
        for (auto n = first; n <= last; ++n) {
            auto e = retro::debugger::path_entry_json(*exe, r.path.at(n));
            const auto code = retro::revgen::gen_reverse(*exe, r.path, n);
            e["revcode"] = code ? json(retro::revgen::render(*exe, *code)) : json("needs-state-saving");
            entries.push_back(std::move(e));
        }
        *out_json = dup(json{{"length", r.path.size()}, {"entries", entries}}.dump(2));
    });
}

rg_status rg_bench(const char* config_json, char** out_csv, char** out_json)
{
    return guarded([&] {
        require(out_csv, "out_csv");
        const json cfg = config_json && *config_json ? json::parse(config_json) : json::object();
        retro::bench::BenchConfig c;
        c.m = cfg.value("M", std::int64_t{3});
        c.n = cfg.value("N", std::int64_t{5});
        if (cfg.contains("src")) {
            c.src = cfg.at("src").get<std::vector<std::int64_t>>();
        }
        const auto sched = cfg.value("schedule", json("s-opt"));
        const auto shape = sched.is_string() ? retro::bench::parse_schedule_shape(sched.get<std::string>())
                                             : std::nullopt;
        if (shape) {
            c.shape = *shape;
        } else {
            c.shape = retro::bench::ScheduleShape::other;
            c.schedule = retro::debugger::schedule_from_json(sched, {{"N", c.n}});
        }
        const auto exe = retro::bench::bounded_buffer(c.m, c.n, c.src.empty() ? retro::bench::default_source_values(c.n) : c.src);
        const auto engines = cfg.value("engines", json("all"));
        if (!(engines.is_string() && engines.get<std::string>() == "all")) {
            c.engines.clear();
            const auto names = engines.is_string() ? std::vector<std::string>{engines.get<std::string>()}
                                                   : engines.get<std::vector<std::string>>();
            for (const auto& n : names) {
                const auto t = retro::engines::parse_engine_type(n);
                if (!t) {
                    throw retro::Error(retro::ErrorKind::request, "unknown-engine", "unknown engine '" + n + "'");
                }
                c.engines.push_back({*t, {}, {}, retro::revgen::kDefaultBudget});
            }
        }
        for (auto& k : c.engines) {
            if (k.type == retro::engines::EngineType::checkpointing && cfg.contains("checkpoints")) {
                k.checkpoints = retro::engines::checkpoints_at_lines(*exe, cfg.at("checkpoints").get<std::vector<int>>());
            }
            if (k.type == retro::engines::EngineType::dynamic_rcg && cfg.contains("retention")) {
                k.retention = cfg.at("retention").get<std::size_t>();
            }
        }
        c.check_back = cfg.value("check_back", false);
        const auto report = retro::bench::run_benchmark(c);
        *out_csv = dup(report.to_csv());
        if (out_json) {
            *out_json = dup(report.to_json());
        }
    });
}

rg_status rg_fixture_source(const char* name, int64_t n, const char* values_json, char** out)
{
    return guarded([&] {
        require(name, "name");
        require(out, "out");
        if (std::string(name) != "bounded-buffer") {
            throw retro::Error(retro::ErrorKind::request, "unknown-fixture",
                               std::string("unknown fixture '") + name + "'");
        }
        const auto values = values_json ? json::parse(values_json).get<std::vector<std::int64_t>>()
                                        : retro::bench::default_source_values(n);
        *out = dup(retro::bench::bounded_buffer_source(values));
    });
}

rg_status rg_repl_translate(const char* line, int64_t id, char** out_json)
{
    return guarded([&] {
        require(line, "line");
        require(out_json, "out");
        const auto r = retro::debugger::repl_translate(line, id);
        *out_json = r ? dup(r->dump()) : nullptr;
    });
}

rg_status rg_repl_render(const char* response_json, char** out_text)
{
    return guarded([&] {
        require(response_json, "response");
        require(out_text, "out");
        *out_text = dup(retro::debugger::repl_render(json::parse(response_json)));
    });
}

} // extern "C"
