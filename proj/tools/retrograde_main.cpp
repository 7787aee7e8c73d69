#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "retrograde/retrograde.h"

namespace {

using json = nlohmann::ordered_json;

struct Owned {
    char* p = nullptr;
    ~Owned() { rg_free(p); }
    std::string str() const { return p ? p : ""; }
};

int report(rg_status st)
{
    std::cerr << "retrograde: " << rg_last_error_code() << ": " << rg_last_error() << "\n";
    return static_cast<int>(st) + 1;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "bounded-buffer" names the built-in fixture; anything else is a file.
std::string program_text(const std::string& arg, json& constants)
{
    if (arg == "bounded-buffer" && !std::filesystem::exists(arg)) {
        if (!constants.contains("M")) constants["M"] = 3;
        if (!constants.contains("N")) constants["N"] = 5;
        Owned src;
        const auto st = rg_fixture_source("bounded-buffer", constants["N"].get<std::int64_t>(), nullptr, &src.p);
        if (st != RG_OK) {
            throw std::runtime_error(rg_last_error());
        }
        return src.str();
    }
    return slurp(arg);
}

json parse_constants(const std::vector<std::string>& defs)
{
    json c = json::object();
    for (const auto& d : defs) {
        const auto eq = d.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw CLI::ValidationError("--const", "expected NAME=VALUE, got '" + d + "'");
        }
        c[d.substr(0, eq)] = std::stoll(d.substr(eq + 1));
    }
    return c;
}

// Inline JSON, a file containing JSON, or a shorthand name (s-seq, s-opt).
std::string schedule_text(const std::string& arg)
{
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '"')) {
        return arg;
    }
    if (std::filesystem::exists(arg)) {
        return slurp(arg);
    }
    return json(arg).dump();
}

void write_out(const std::string& text, const std::string& path)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') {
            std::cout << '\n';
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << text;
}

struct SessionHandle {
    rg_session* s = nullptr;
    ~SessionHandle() { rg_session_close(s); }
};

// Opens a session and loads the program into it.
int open_session(SessionHandle& h, const std::string& source, const json& constants, const json& load_args)
{
    auto st = rg_session_open(source.c_str(), constants.dump().c_str(), &h.s);
    if (st != RG_OK) {
        return report(st);
    }
    const json req = {{"id", 0}, {"cmd", "load"}, {"args", load_args}};
    Owned resp;
    st = rg_session_request(h.s, req.dump().c_str(), &resp.p, nullptr);
    if (st != RG_OK) {
        return report(st);
    }
    const auto r = json::parse(resp.str());
    if (!r.value("ok", false)) {
        std::cerr << "retrograde: " << r["error"]["code"].get<std::string>() << ": "
                  << r["error"]["message"].get<std::string>() << "\n";
        return 2;
    }
    return 0;
}

int repl(rg_session* s)
{
    std::int64_t id = 1;
    std::string line;
    while (true) {
        std::cout << "(retro) " << std::flush;
        if (!std::getline(std::cin, line)) {
            std::cout << "\n";
            return 0;
        }
        if (line == "quit" || line == "exit" || line == "q") {
            return 0;
        }
        if (line == "help") {
            std::cout << "commands: step [thread] [count], back [count], state, enabled, revcode <seq>,\n"
                         "          mem, path [log], break [clear] <thread> <line>, continue, reset,\n"
                         "          load [file|bounded-buffer] [NAME=VALUE...], quit\n";
            continue;
        }
        Owned req;
        if (rg_repl_translate(line.c_str(), id++, &req.p) != RG_OK) {
            std::cout << "error: " << rg_last_error() << "\n";
            continue;
        }
        if (!req.p) {
            continue;
        }
        Owned resp;
        Owned events;
        if (rg_session_request(s, req.p, &resp.p, &events.p) != RG_OK) {
            std::cout << "error: " << rg_last_error() << "\n";
            continue;
        }
        std::istringstream evs(events.str());
        for (std::string ev; std::getline(evs, ev);) {
            const auto e = json::parse(ev);
            if (e["event"] != "block-entry") {
                std::cout << "* " << e["event"].get<std::string>() << " " << e["data"].dump() << "\n";
            }
        }
        Owned text;
        rg_repl_render(resp.p, &text.p);
        std::cout << text.str() << "\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"retrograde: reverse-execution debugger for a small concurrent language"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rg_version()));

    std::vector<std::string> consts;
    std::string file;
    std::string schedule;
    std::string out_path;
    std::string engine = "dynamic-rcg";

    auto* run = app.add_subcommand("run", "run a program to completion under a schedule");
    run->add_option("file", file, "program file or 'bounded-buffer'")->required();
    run->add_option("--schedule", schedule, "schedule JSON, file, or s-seq/s-opt")->required();
    run->add_option("--const", consts, "constant binding NAME=VALUE");
    run->add_option("--out", out_path, "write the result here instead of stdout");

    std::string log_path;
    std::uint64_t upto = 0;
    bool upto_set = false;
    auto* rep = app.add_subcommand("replay", "re-execute a recorded log");
    rep->add_option("file", file, "program file or 'bounded-buffer'")->required();
    rep->add_option("--log", log_path, "log JSON (as written by run)")->required();
    rep->add_option("--upto", upto, "number of entries to replay")->each([&](const std::string&) { upto_set = true; });
    rep->add_option("--const", consts, "constant binding NAME=VALUE");
    rep->add_option("--out", out_path, "write the result here instead of stdout");

    auto* dbg = app.add_subcommand("debug", "interactive debugger");
    dbg->add_option("file", file, "program file or 'bounded-buffer'")->required();
    dbg->add_option("--engine", engine, "active backtracking engine");
    dbg->add_option("--schedule", schedule, "schedule consulted by step/continue");
    dbg->add_option("--const", consts, "constant binding NAME=VALUE");

    int port = -1;
    bool use_stdio = false;
    auto* srv = app.add_subcommand("serve", "JSON debug protocol server");
    srv->add_option("file", file, "program file or 'bounded-buffer'; omit to wait for a load request");
    auto* port_opt = srv->add_option("--port", port, "TCP port on 127.0.0.1");
    auto* stdio_opt = srv->add_flag("--stdio", use_stdio, "serve over stdin/stdout");
    port_opt->excludes(stdio_opt);
    srv->add_option("--engine", engine, "active backtracking engine");
    srv->add_option("--schedule", schedule, "schedule consulted by step/continue");
    srv->add_option("--const", consts, "constant binding NAME=VALUE");

    std::string fixture = "bounded-buffer";
    std::int64_t m = 3;
    std::int64_t n = 5;
    std::string bench_schedule = "s-opt";
    std::string engines = "all";
    std::string json_out;
    std::vector<int> checkpoints;
    int retention = -1;
    bool check_back = false;
    auto* bn = app.add_subcommand("bench", "memory-cost benchmark on the bounded buffer");
    bn->add_option("--fixture", fixture, "fixture name")->check(CLI::IsMember({"bounded-buffer"}));
    bn->add_option("--M", m, "buffer size")->check(CLI::PositiveNumber);
    bn->add_option("--N", n, "items produced")->check(CLI::PositiveNumber);
    bn->add_option("--schedule", bench_schedule, "s-seq, s-opt, schedule JSON or file");
    bn->add_option("--engines", engines, "'all' or comma-separated engine names");
    bn->add_option("--out", out_path, "CSV report path");
    bn->add_option("--json", json_out, "JSON report path");
    bn->add_option("--checkpoints", checkpoints, "checkpoint source lines")->delimiter(',');
    bn->add_option("--retention", retention, "dynamic engine retention window");
    bn->add_flag("--check-back", check_back, "back out the whole run and verify every state");

    std::uint64_t seq = 0;
    auto* rc = app.add_subcommand("revcode", "generate reverse code for a recorded run");
    rc->add_option("file", file, "program file or 'bounded-buffer'")->required();
    rc->add_option("--schedule", schedule, "schedule JSON, file, or s-seq/s-opt")->required();
    rc->add_option("--seq", seq, "path entry (default: all)");
    rc->add_option("--const", consts, "constant binding NAME=VALUE");

    auto* fx = app.add_subcommand("fixture", "print a built-in fixture's source");
    fx->add_option("name", fixture, "fixture name")->check(CLI::IsMember({"bounded-buffer"}));
    fx->add_option("--N", n, "source array length")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        json constants = parse_constants(consts);

        if (*run) {
            const auto src = program_text(file, constants);
            Owned out;
            const auto st = rg_run(src.c_str(), constants.dump().c_str(), schedule_text(schedule).c_str(), &out.p);
            if (st != RG_OK) {
                return report(st);
            }
            write_out(out.str(), out_path);
            return json::parse(out.str())["outcome"] == "terminated" ? 0 : 3;
        }
        if (*rep) {
            const auto src = program_text(file, constants);
            const auto log = slurp(log_path);
            if (!upto_set) {
                // the log alone does not record its length; take it from run output
                const auto lj = json::parse(log);
                if (!lj.contains("path")) {
                    throw CLI::ValidationError("--upto", "required when the log has no 'path'");
                }
                upto = lj["path"].size();
            }
            Owned out;
            const auto st = rg_replay(src.c_str(), constants.dump().c_str(), log.c_str(), upto, &out.p);
            if (st != RG_OK) {
                return report(st);
            }
            write_out(out.str(), out_path);
            return 0;
        }
        if (*srv && file.empty()) {
            SessionHandle h;
            if (const auto st = rg_session_open(nullptr, constants.dump().c_str(), &h.s); st != RG_OK) {
                return report(st);
            }
            if (!use_stdio && port < 0) {
                throw CLI::ValidationError("serve", "one of --port or --stdio is required");
            }
            const auto st = use_stdio ? rg_serve_stdio(h.s) : rg_serve_tcp(h.s, port);
            return st == RG_OK ? 0 : report(st);
        }
        if (*dbg || *srv) {
            const auto src = program_text(file, constants);
            json load = {{"engine", engine}};
            if (!schedule.empty()) {
                load["schedule"] = json::parse(schedule_text(schedule));
            }
            SessionHandle h;
            if (const int rc_ = open_session(h, src, constants, load); rc_ != 0) {
                return rc_;
            }
            if (*dbg) {
                return repl(h.s);
            }
            if (!use_stdio && port < 0) {
                throw CLI::ValidationError("serve", "one of --port or --stdio is required");
            }
            const auto st = use_stdio ? rg_serve_stdio(h.s) : rg_serve_tcp(h.s, port);
            return st == RG_OK ? 0 : report(st);
        }
        if (*bn) {
            json cfg = {{"M", m}, {"N", n}, {"check_back", check_back}};
            if (bench_schedule == "s-seq" || bench_schedule == "s-opt") {
                cfg["schedule"] = bench_schedule;
            } else {
                cfg["schedule"] = json::parse(schedule_text(bench_schedule));
            }
            if (engines == "all") {
                cfg["engines"] = "all";
            } else {
                json names = json::array();
                std::stringstream ss(engines);
                for (std::string e; std::getline(ss, e, ',');) {
                    names.push_back(e);
                }
                cfg["engines"] = names;
            }
            if (!checkpoints.empty()) {
                cfg["checkpoints"] = checkpoints;
            }
            if (retention >= 0) {
                cfg["retention"] = retention;
            }
            Owned csv;
            Owned js;
            const auto st = rg_bench(cfg.dump().c_str(), &csv.p, &js.p);
            if (st != RG_OK) {
                return report(st);
            }
            write_out(csv.str(), out_path);
            if (!json_out.empty()) {
                write_out(js.str(), json_out);
            }
            const auto r = json::parse(js.str());
            bool ok = r["functional_ok"].get<bool>() && r["same_run"].get<bool>() && r["back_ok"].get<bool>();
            for (const auto& e : r["engines"]) {
                ok = ok && e["match"] != false;
            }
            return ok ? 0 : 4;
        }
        if (*rc) {
            const auto src = program_text(file, constants);
            Owned out;
            const auto st = rg_revcode(src.c_str(), constants.dump().c_str(), schedule_text(schedule).c_str(), seq, &out.p);
            if (st != RG_OK) {
                return report(st);
            }
            const auto r = json::parse(out.str());
            for (const auto& e : r["entries"]) {
                std::cout << "#" << e["seq"].get<std::uint64_t>() << " " << e["thread"].get<std::string>() << " line "
                          << e["line"].get<int>() << ": " << e["lhs"].get<std::string>() << " := "
                          << e["rhs"].get<std::string>() << "\n";
                std::istringstream code(e["revcode"].get<std::string>());
                for (std::string l; std::getline(code, l);) {
                    std::cout << "    " << l << "\n";
                }
            }
            return 0;
        }
        if (*fx) {
            Owned out;
            const auto st = rg_fixture_source(fixture.c_str(), n, nullptr, &out.p);
            if (st != RG_OK) {
                return report(st);
            }
            std::cout << out.str();
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "retrograde: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
