#include "doctest.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "debugger/server.hpp"
#include "debugger/session.hpp"
#include "oracle/support.hpp"

using namespace retro;
using debugger::json;
using debugger::Session;

namespace {

struct Client {
    Session session;
    long long next_id = 1;
    std::vector<json> events;

    json send(const std::string& cmd, json args = json::object())
    {
        events.clear();
        return session.execute(json{{"id", next_id++}, {"cmd", cmd}, {"args", std::move(args)}}, events);
    }

    json ok(const std::string& cmd, json args = json::object())
    {
        auto r = send(cmd, std::move(args));
        INFO(cmd << " -> " << r.dump());
        REQUIRE(r.at("ok").get<bool>());
        return r.at("payload");
    }

    std::string fails(const std::string& cmd, json args = json::object())
    {
        const auto r = send(cmd, std::move(args));
        if (r.at("ok").get<bool>()) {
            return "succeeded";
        }
        return r.at("error").at("code").get<std::string>();
    }

    void load_bounded(json extra = json::object())
    {
        json args = {{"fixture", "bounded-buffer"}};
        args.update(extra);
        ok("load", args);
    }
};

json find_change(const json& changed, const std::string& location)
{
    for (const auto& c : changed) {
        if (c.at("location") == location) {
            return c;
        }
    }
    return nullptr;
}

json thread_entry(const json& threads, const std::string& name)
{
    for (const auto& t : threads) {
        if (t.at("name") == name) {
            return t;
        }
    }
    return nullptr;
}

// Newline-delimited exchange with a TCP server.
class Conn {
public:
    explicit Conn(int port) : fd_(::socket(AF_INET, SOCK_STREAM, 0))
    {
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    }
    ~Conn() { ::close(fd_); }

    void send(const std::string& line)
    {
        const auto data = line + "\n";
        REQUIRE(::send(fd_, data.data(), data.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(data.size()));
    }

    std::string line()
    {
        while (true) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                auto out = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return out;
            }
            char chunk[4096];
            const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
            REQUIRE(n > 0);
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    // Skips event lines and returns the response.
    json response()
    {
        while (true) {
            auto j = json::parse(line());
            if (!j.contains("event")) {
                return j;
            }
        }
    }

private:
    int fd_;
    std::string buffer_;
};

} // namespace

TEST_CASE("enabled at start")
{
    Client c;
    c.load_bounded();
    std::vector<std::string> events;
    CHECK(c.session.handle_line(R"({"id":1,"cmd":"enabled"})", events) ==
          R"({"id":1,"ok":true,"payload":["Producer"]})");
    CHECK(events.empty());
}

TEST_CASE("unknown commands and malformed input")
{
    Client c;
    std::vector<std::string> events;
    const auto r = json::parse(c.session.handle_line(R"({"id":2,"cmd":"nope"})", events));
    CHECK(r.at("id") == 2);
    CHECK(r.at("ok") == false);
    CHECK(r.at("error").at("code") == "unknown-command");

    const auto bad = json::parse(c.session.handle_line("{not json", events));
    CHECK(bad.at("id").is_null());
    CHECK(bad.at("error").at("code") == "parse-error");

    CHECK(c.fails("state") == "not-loaded");
    CHECK(c.fails("load", {{"fixture", "elsewhere"}}) == "unknown-fixture");
    CHECK(c.fails("load", {{"fixture", "bounded-buffer"}, {"engine", "quantum"}}) == "unknown-engine");
}

TEST_CASE("first producer step")
{
    Client c;
    c.load_bounded();
    const auto p = c.ok("step", {{"thread", "Producer"}});
    CHECK(p.at("seq") == 1);
    CHECK(p.at("entry").at("line") == 15);
    const auto empty = find_change(p.at("changed"), "empty");
    REQUIRE(!empty.is_null());
    CHECK(empty.at("before") == 3);
    CHECK(empty.at("after") == 2);
    CHECK(p.at("changed").size() == 1);
    CHECK(thread_entry(p.at("threads"), "Producer").at("line") == 16);
    CHECK(thread_entry(p.at("threads"), "Consumer").at("status") == "blocked");

    // the first step switches in the producer
    REQUIRE(!c.events.empty());
    CHECK(c.events.front().at("event") == "switch");
    CHECK(c.events.front().at("data").at("from").is_null());
    CHECK(c.events.front().at("data").at("to") == "Producer");
}

TEST_CASE("stepping errors")
{
    Client c;
    c.load_bounded();
    CHECK(c.fails("back") == "at-origin");
    CHECK(c.fails("step", {{"thread", "Consumer"}}) == "not-enabled");
    CHECK(c.fails("step", {{"thread", "Nobody"}}) == "unknown-thread");
    c.ok("step", {{"count", 6}});
    CHECK(c.fails("step") == "ambiguous-thread");
    CHECK(c.fails("back", {{"count", 7}}) == "at-origin");
    CHECK(c.fails("revcode", {{"seq", 7}}) == "seq-out-of-range");
    CHECK(c.fails("revcode", {{"seq", 0}}) == "seq-out-of-range");
    CHECK(c.fails("break", {{"thread", "Producer"}, {"line", 31}}) == "unknown-line");
    CHECK(c.fails("break", {{"thread", "Nobody"}, {"line", 15}}) == "unknown-thread");

    // a counted step stops early when its thread blocks
    Client d;
    d.load_bounded({{"constants", {{"M", 1}, {"N", 2}}}});
    const auto p = d.ok("step", {{"thread", "Producer"}, {"count", 12}});
    CHECK(p.at("taken") == 8);
    CHECK(thread_entry(p.at("threads"), "Producer").at("status") == "blocked");
}

TEST_CASE("scenario (b) by hand, then revcode and back")
{
    Client c;
    c.load_bounded();
    c.ok("step", {{"thread", "Producer"}, {"count", 6}});
    c.ok("step", {{"thread", "Consumer"}, {"count", 6}});
    c.ok("step", {{"thread", "Producer"}});
    c.ok("step", {{"thread", "Consumer"}, {"count", 2}});
    const auto before = c.ok("state");
    const auto last = c.ok("step", {{"thread", "Producer"}});
    CHECK(last.at("entry").at("line") == 22);
    const auto seq = last.at("seq").get<int>();

    const auto rc = c.ok("revcode", {{"seq", seq}});
    CHECK(rc.at("status") == "generated");
    CHECK(rc.at("target") == "d");
    CHECK(!rc.at("steps").empty());

    // the reference agrees with the session; back (dynamic-rcg, no saved d)
    // must land on the earlier snapshot
    const auto exe = oracle::bounded(3, 5);
    oracle::Reference ref(*exe);
    const auto path = c.ok("path");
    for (const auto& e : path.at("entries")) {
        ref.step(exe->program().thread_index(e.at("thread").get<std::string>()));
    }
    CHECK(ref.cell("d") == c.ok("state").at("locations").at("d"));

    c.ok("back");
    CHECK(c.ok("state") == before);
    CHECK(c.ok("state").at("locations").at("d") == before.at("locations").at("d"));

    c.ok("step", {{"thread", "Producer"}, {"count", 4}});
    CHECK(c.ok("revcode", {{"seq", 5}}).at("status") == "needs-state-saving");
}

TEST_CASE("breakpoints and continue")
{
    Client c;
    c.load_bounded({{"schedule", "s-opt"}});
    const auto bps = c.ok("break", {{"thread", "Consumer"}, {"line", 32}});
    CHECK(bps.size() == 1);

    auto p = c.ok("continue");
    CHECK(p.at("reason") == "breakpoint");
    CHECK(p.at("breakpoint").at("line") == 32);
    CHECK(thread_entry(p.at("threads"), "Consumer").at("line") == 32);
    const auto first = p.at("seq").get<int>();
    CHECK(first == 7);

    p = c.ok("continue");
    CHECK(p.at("reason") == "breakpoint");
    CHECK(p.at("seq").get<int>() == first + 16);

    c.ok("break", {{"clear", true}});
    p = c.ok("continue", {{"max_steps", 5}});
    CHECK(p.at("reason") == "step-limit");
    CHECK(p.at("taken") == 5);
    p = c.ok("continue");
    CHECK(p.at("reason") == "terminated");
    CHECK(p.at("seq") == 80);
    bool terminated = false;
    for (const auto& e : c.events) {
        terminated = terminated || e.at("event") == "terminated";
    }
    CHECK(terminated);

    const auto dst = c.ok("state").at("locations");
    CHECK(dst.at("dst[0]") == 11);
    CHECK(dst.at("dst[4]") == 51);

    c.ok("reset");
    CHECK(c.ok("state").at("seq") == 0);

    Client h;
    h.load_bounded();
    p = h.ok("continue");
    CHECK(p.at("reason") == "choice-required");
    CHECK(p.at("taken") == 6);
    CHECK(h.fails("continue") == "ambiguous-thread");
}

TEST_CASE("deadlock is reported by continue")
{
    Client c;
    c.ok("load", {{"source", "int a := 1; int b := 1;"
                             "thread P { wait(a); wait(b); signal(b); signal(a) }"
                             "thread Q { wait(b); wait(a); signal(a); signal(b) }"}});
    c.ok("step", {{"thread", "P"}});
    const auto p = c.ok("step", {{"thread", "Q"}});
    bool deadlock = false;
    for (const auto& e : c.events) {
        deadlock = deadlock || e.at("event") == "deadlock";
    }
    CHECK(deadlock);
    CHECK(c.ok("continue").at("reason") == "deadlock");
    CHECK(c.fails("step") == "no-runnable-thread");
    (void)p;
}

TEST_CASE("mem and path payloads")
{
    Client c;
    c.load_bounded({{"schedule", "s-opt"}});
    c.ok("continue");
    const auto mem = c.ok("mem");
    CHECK(mem.at("active") == "dynamic-rcg");
    std::map<std::string, std::uint64_t> saved;
    for (const auto& l : mem.at("ledgers")) {
        saved[l.at("engine").get<std::string>()] = l.at("saved_ints").get<std::uint64_t>();
    }
    CHECK(saved == std::map<std::string, std::uint64_t>{{"basic-ss", 1760},
                                                         {"incremental-ss", 80},
                                                         {"checkpointing", 65},
                                                         {"static-rcg", 40},
                                                         {"dynamic-rcg", 10}});
    const auto path = c.ok("path", {{"from", 79}, {"log", true}});
    CHECK(path.at("length") == 80);
    CHECK(path.at("entries").size() == 2);
    CHECK(path.at("switches").size() == 20);
    CHECK(path.contains("block_entries"));
    CHECK(!c.ok("path").contains("block_entries"));
}

TEST_CASE("the REPL and the protocol produce the same payloads")
{
    const std::vector<std::string> lines = {
        "load bounded-buffer M=2 N=3", "step Producer 6", "s Consumer", "state", "b 1",
        "step Producer", "break Consumer 33", "revcode 3", "path log", "mem", "enabled",
        "step Consumer 3", "back 2", "continue 4", "reset", "state",
    };
    const std::vector<json> requests = {
        {{"cmd", "load"}, {"args", {{"fixture", "bounded-buffer"}, {"constants", {{"M", 2}, {"N", 3}}}}}},
        {{"cmd", "step"}, {"args", {{"thread", "Producer"}, {"count", 6}}}},
        {{"cmd", "step"}, {"args", {{"thread", "Consumer"}}}},
        {{"cmd", "state"}, {"args", json::object()}},
        {{"cmd", "back"}, {"args", {{"count", 1}}}},
        {{"cmd", "step"}, {"args", {{"thread", "Producer"}}}},
        {{"cmd", "break"}, {"args", {{"thread", "Consumer"}, {"line", 33}}}},
        {{"cmd", "revcode"}, {"args", {{"seq", 3}}}},
        {{"cmd", "path"}, {"args", {{"log", true}}}},
        {{"cmd", "mem"}, {"args", json::object()}},
        {{"cmd", "enabled"}, {"args", json::object()}},
        {{"cmd", "step"}, {"args", {{"thread", "Consumer"}, {"count", 3}}}},
        {{"cmd", "back"}, {"args", {{"count", 2}}}},
        {{"cmd", "continue"}, {"args", {{"max_steps", 4}}}},
        {{"cmd", "reset"}, {"args", json::object()}},
        {{"cmd", "state"}, {"args", json::object()}},
    };
    REQUIRE(lines.size() == requests.size());
    Session repl;
    Session proto;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto id = static_cast<long long>(i + 1);
        const auto translated = debugger::repl_translate(lines[i], id);
        REQUIRE(translated.has_value());
        auto request = requests[i];
        request["id"] = id;
        std::vector<json> ea;
        std::vector<json> eb;
        const auto a = repl.execute(*translated, ea);
        const auto b = proto.execute(request, eb);
        INFO(lines[i]);
        CHECK(a.dump() == b.dump());
        CHECK(json(ea).dump() == json(eb).dump());
        CHECK(!debugger::repl_render(a).empty());
    }
    CHECK(!debugger::repl_translate("   ", 1).has_value());
}

TEST_CASE("REPL rendering")
{
    Client c;
    c.load_bounded();
    const auto step = c.send("step", {{"thread", "Producer"}});
    const auto text = debugger::repl_render(step);
    CHECK(text.find("line 15") != std::string::npos);
    CHECK(text.find("empty: 3 -> 2") != std::string::npos);
    CHECK(debugger::repl_render(c.send("back", {{"count", 5}})).find("at-origin") != std::string::npos);
}

TEST_CASE("stream server writes events before the response and stops on shutdown")
{
    Session s;
    std::istringstream in(R"({"id":1,"cmd":"load","args":{"fixture":"bounded-buffer"}})"
                          "\n"
                          R"({"id":2,"cmd":"step","args":{"thread":"Producer"}})"
                          "\n\n"
                          R"({"id":3,"cmd":"shutdown"})"
                          "\n"
                          R"({"id":4,"cmd":"state"})"
                          "\n");
    std::ostringstream out;
    CHECK(debugger::serve_stream(s, in, out));
    std::vector<json> msgs;
    std::istringstream lines(out.str());
    for (std::string l; std::getline(lines, l);) {
        msgs.push_back(json::parse(l));
    }
    REQUIRE(msgs.size() >= 4);
    CHECK(msgs[0].at("id") == 1);
    CHECK(msgs[1].contains("event"));
    CHECK(msgs[msgs.size() - 2].at("id") == 2);
    CHECK(msgs.back().at("id") == 3);
    CHECK(msgs.back().at("ok") == true);

    std::istringstream eof(R"({"id":1,"cmd":"enabled"})");
    std::ostringstream o2;
    CHECK(!debugger::serve_stream(s, eof, o2));
}

TEST_CASE("tcp clients can detach and reattach")
{
    Session s;
    std::promise<int> port_promise;
    auto port_future = port_promise.get_future();
    std::thread server([&] { debugger::serve_tcp(s, 0, [&](int p) { port_promise.set_value(p); }); });
    const int port = port_future.get();
    {
        Conn a(port);
        a.send(R"({"id":1,"cmd":"load","args":{"fixture":"bounded-buffer"}})");
        CHECK(a.response().at("ok") == true);
        a.send(R"({"id":2,"cmd":"step","args":{"thread":"Producer","count":3}})");
        CHECK(a.response().at("payload").at("seq") == 3);
    }
    {
        Conn b(port);
        b.send(R"({"id":3,"cmd":"state"})");
        const auto r = b.response();
        CHECK(r.at("payload").at("seq") == 3);
        b.send(R"({"id":4,"cmd":"shutdown"})");
        CHECK(b.response().at("id") == 4);
    }
    server.join();
}

TEST_CASE("consistency checks hold through a long session")
{
    Client c;
    c.session.set_consistency_checks(true);
    c.load_bounded({{"constants", {{"M", 2}, {"N", 4}}}, {"schedule", json{{"kind", "seeded"}, {"seed", 5}}}});
    for (int i = 0; i < 20; ++i) {
        c.ok("step", {{"count", 3}});
        c.ok("back", {{"count", 2}});
    }
    CHECK(c.ok("state").at("seq") == 20);
}

TEST_CASE("the recorded protocol script replays identically")
{
    const std::string dir = RETRO_DATA_DIR;
    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        REQUIRE(in);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const auto script = slurp(dir + "/protocol_script.jsonl");
    const auto expected = slurp(dir + "/protocol_expected.jsonl");
    std::size_t requests = 0;
    for (char ch : script) {
        requests += ch == '\n';
    }
    CHECK(requests == 200);
    for (int round = 0; round < 2; ++round) {
        Session s;
        std::istringstream in(script);
        std::ostringstream out;
        debugger::serve_stream(s, in, out);
        CHECK(out.str() == expected);
    }
}
