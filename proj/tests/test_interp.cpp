#include "doctest.h"

#include <functional>
#include <random>
#include <set>

#include "common/error.hpp"
#include "oracle/support.hpp"

using namespace retro;
using interp::MachineState;

namespace {

std::vector<std::string> names(const interp::Executable& exe, const std::vector<int>& ts)
{
    std::vector<std::string> out;
    for (int t : ts) {
        out.push_back(exe.thread_name(t));
    }
    return out;
}

std::string error_code(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return {};
}

lang::VarId var_id(const interp::Executable& exe, const std::string& name)
{
    const auto& vars = exe.program().vars;
    for (std::size_t v = 0; v < vars.size(); ++v) {
        if (vars[v].name == name) {
            return static_cast<lang::VarId>(v);
        }
    }
    throw std::runtime_error("no variable " + name);
}

bool same_path(const interp::ExecutionPath& a, const interp::ExecutionPath& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    for (interp::Seq k = 1; k <= a.size(); ++k) {
        const auto& x = a.at(k);
        const auto& y = b.at(k);
        if (x.seq != y.seq || x.thread != y.thread || x.command != y.command || x.line != y.line ||
            x.lhs != y.lhs || x.kind != y.kind || !lang::structurally_equal(*x.rhs, *y.rhs)) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("only the producer can start")
{
    const auto exe = oracle::bounded(3, 5);
    const auto s = interp::init_machine(*exe);
    oracle::Reference ref(*exe);
    CHECK(names(*exe, interp::enabled_threads(*exe, s)) == std::vector<std::string>{"Producer"});
    CHECK(names(*exe, ref.enabled()) == std::vector<std::string>{"Producer"});
    CHECK(interp::thread_view(*exe, s, 1).status == interp::ThreadStatus::blocked);
    CHECK(interp::thread_view(*exe, s, 1).line == 31);
}

TEST_CASE("first producer step takes the empty semaphore")
{
    const auto exe = oracle::bounded(3, 5);
    auto s = interp::init_machine(*exe);
    interp::ExecutionPath path;
    interp::ExecutionLog log;
    const auto r = interp::step(*exe, s, path, log, 0);
    CHECK(r.entry.line == 15);
    CHECK(r.entry.kind == interp::EntryKind::wait_decrement);
    CHECK(exe->location_name(r.entry.lhs) == "empty");
    CHECK(s.cells[exe->slot(r.entry.lhs)] == 2);
    CHECK(interp::thread_view(*exe, s, 0).line == 16);
    REQUIRE(!r.events.empty());
    CHECK(r.events.front().kind == interp::Event::Kind::context_switch);
    CHECK(r.events.front().sw.from == -1);
    CHECK(r.events.front().sw.to == 0);
}

TEST_CASE("both threads become enabled once an item is signalled")
{
    const auto exe = oracle::bounded(3, 5);
    auto s = interp::init_machine(*exe);
    interp::ExecutionPath path;
    interp::ExecutionLog log;
    oracle::Reference ref(*exe);
    for (int i = 0; i < 6; ++i) {
        interp::step(*exe, s, path, log, 0);
        ref.step(0);
    }
    CHECK(names(*exe, ref.enabled()) == std::vector<std::string>{"Producer", "Consumer"});
    CHECK(names(*exe, interp::enabled_threads(*exe, s)) == std::vector<std::string>{"Producer", "Consumer"});
}

TEST_CASE("scheduling errors leave the state untouched")
{
    const auto exe = oracle::bounded(3, 2);
    auto s = interp::init_machine(*exe);
    interp::ExecutionPath path;
    interp::ExecutionLog log;
    const auto before = s;
    CHECK(error_code([&] { interp::step(*exe, s, path, log, 1); }) == "not-enabled");
    CHECK(error_code([&] { interp::step(*exe, s, path, log, 7); }) == "unknown-thread");
    CHECK(s == before);
    CHECK(path.empty());
    CHECK(log.block_entries.empty());

    const auto scripted = interp::Schedule::scripted({"Producer", "Consumer"});
    CHECK(error_code([&] { interp::run(*exe, scripted); }) == "not-enabled");
    CHECK(error_code([&] { interp::run(*exe, interp::Schedule::scripted({"Producer"})); }) == "schedule-exhausted");
    CHECK(error_code([&] { interp::run(*exe, interp::Schedule::scripted({"Ghost"})); }) == "unknown-thread");
}

TEST_CASE("runtime errors")
{
    SUBCASE("division by zero")
    {
        const auto exe = interp::load_source("int x := 5; int z := 0; thread T { x := x / z }", {});
        CHECK(error_code([&] { interp::run(*exe, interp::Schedule::seeded(1)); }) == "division-by-zero");
    }
    SUBCASE("overflow")
    {
        const auto exe = interp::load_source("int x := 9223372036854775807; thread T { x := x + 1 }", {});
        CHECK(error_code([&] { interp::run(*exe, interp::Schedule::seeded(1)); }) == "overflow");
    }
    SUBCASE("array bounds")
    {
        const auto exe = interp::load_source("int a[2]; int i := 2; thread T { a[i] := 1 }", {});
        CHECK(error_code([&] { interp::run(*exe, interp::Schedule::seeded(1)); }) == "index-out-of-bounds");
    }
}

TEST_CASE("deadlock is reported")
{
    const auto exe = interp::load_source(
        "int a := 1; int b := 1;"
        "thread P { wait(a); wait(b); signal(b); signal(a) }"
        "thread Q { wait(b); wait(a); signal(a); signal(b) }",
        {});
    const auto r = interp::run(*exe, interp::Schedule::scripted({"P", "Q"}));
    CHECK(r.outcome == interp::Outcome::deadlock);
    CHECK(r.path.size() == 2);
    CHECK(interp::enabled_threads(*exe, r.state).empty());

    auto s = interp::init_machine(*exe);
    interp::ExecutionPath path;
    interp::ExecutionLog log;
    interp::step(*exe, s, path, log, 0);
    const auto last = interp::step(*exe, s, path, log, 1);
    CHECK(last.events.back().kind == interp::Event::Kind::deadlock);
}

TEST_CASE("interpreter agrees with the reference on random schedules")
{
    std::vector<oracle::Program> programs = oracle::auxiliary_programs();
    for (std::int64_t m = 1; m <= 3; ++m) {
        for (std::int64_t n = 1; n <= 4; ++n) {
            programs.push_back({"bounded-buffer", oracle::bounded(m, n)});
        }
    }
    std::mt19937_64 rng(20240611);
    std::size_t steps = 0;
    for (const auto& prog : programs) {
        for (int trial = 0; trial < 60; ++trial) {
            const auto& exe = *prog.exe;
            auto s = interp::init_machine(exe);
            interp::ExecutionPath path;
            interp::ExecutionLog log;
            oracle::Reference ref(exe);
            while (true) {
                const auto enabled = interp::enabled_threads(exe, s);
                REQUIRE(enabled == ref.enabled());
                if (enabled.empty()) {
                    CHECK(interp::all_finished(exe, s) == ref.finished());
                    break;
                }
                const int t = oracle::pick(enabled, rng);
                const auto r = interp::step(exe, s, path, log, t);
                CHECK(r.entry.line == ref.step(t));
                ++steps;
                const auto diff = oracle::mismatch(exe, s, ref);
                INFO(prog.name << " step " << path.size());
                REQUIRE(diff.empty());
            }
        }
    }
    CHECK(steps > 10000);
}

TEST_CASE("bounded buffer terminates with dst = src + 1 on every interleaving")
{
    // Exhaustive search over reachable configurations for small sizes.
    // g, d and e only feed each other, so they are left out of the key.
    for (std::int64_t m = 1; m <= 2; ++m) {
        for (std::int64_t n = 1; n <= 3; ++n) {
            const auto exe = oracle::bounded(m, n);
            std::vector<std::size_t> ignored;
            for (const char* v : {"g", "d", "e"}) {
                ignored.push_back(exe->slot({var_id(*exe, v), 0}));
            }
            std::set<std::vector<std::int64_t>> seen;
            std::size_t leaves = 0;
            bool all_ok = true;
            std::vector<oracle::Reference> todo{oracle::Reference(*exe)};
            while (!todo.empty()) {
                auto r = std::move(todo.back());
                todo.pop_back();
                auto key = r.key();
                for (auto i : ignored) {
                    key[i] = 0;
                }
                if (!seen.insert(std::move(key)).second) {
                    continue;
                }
                const auto enabled = r.enabled();
                if (enabled.empty()) {
                    ++leaves;
                    all_ok = all_ok && r.finished();
                    for (std::int64_t i = 0; i < n; ++i) {
                        all_ok = all_ok && r.cell("dst", i) == r.cell("src", i) + 1;
                    }
                    continue;
                }
                for (int t : enabled) {
                    auto next = r;
                    next.step(t);
                    todo.push_back(std::move(next));
                }
            }
            INFO("M=" << m << " N=" << n);
            CHECK(all_ok);
            CHECK(leaves > 0);
        }
    }
}

TEST_CASE("replay reconstructs every prefix of the S-opt run")
{
    const auto exe = oracle::bounded(3, 5);
    const auto choices = bench::s_opt_choices(5);
    const auto run = interp::run(*exe, interp::Schedule::scripted(choices));
    REQUIRE(run.outcome == interp::Outcome::terminated);
    REQUIRE(run.path.size() == 80);

    oracle::Reference ref(*exe);
    for (interp::Seq k = 0; k <= run.path.size(); ++k) {
        if (k > 0) {
            ref.step(exe->program().thread_index(choices[k - 1]));
        }
        const auto r = interp::replay(*exe, run.log, k);
        INFO("k = " << k);
        CHECK(oracle::mismatch(*exe, r.state, ref).empty());
        CHECK(r.state.steps == k);
    }
    CHECK(interp::replay(*exe, run.log, 0).state == interp::init_machine(*exe));
    CHECK(interp::replay(*exe, run.log, 80).state == run.state);
}

TEST_CASE("logs are sufficient to rebuild the path")
{
    std::mt19937_64 rng(77);
    int runs = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = std::uniform_int_distribution<std::int64_t>(1, 4)(rng);
        const auto n = std::uniform_int_distribution<std::int64_t>(1, 6)(rng);
        const auto exe = oracle::bounded(m, n);
        const auto r = interp::run(*exe, interp::Schedule::seeded(rng()));
        REQUIRE(r.outcome == interp::Outcome::terminated);
        const auto back = interp::replay(*exe, r.log, r.path.size());
        REQUIRE(same_path(back.path, r.path));
        REQUIRE(back.state == r.state);
        REQUIRE(back.log == r.log);
        ++runs;
    }
    CHECK(runs == 1000);
}

TEST_CASE("tampered logs are detected")
{
    const auto exe = oracle::bounded(2, 3);
    const auto r = interp::run(*exe, interp::Schedule::scripted(bench::s_opt_choices(3)));

    auto bad_switch = r.log;
    bad_switch.switches.front().to = 1; // Consumer cannot start
    CHECK(error_code([&] { interp::replay(*exe, bad_switch, r.path.size()); }) == "divergence");

    auto bad_block = r.log;
    bad_block.block_entries.at(1).edge = interp::BlockEdge::exit;
    CHECK(error_code([&] { interp::replay(*exe, bad_block, r.path.size()); }) == "divergence");

    interp::ExecutionLog empty;
    CHECK(error_code([&] { interp::replay(*exe, empty, 1); }) == "divergence");
}

TEST_CASE("log size and control rollback")
{
    const auto exe = oracle::bounded(3, 5);
    const auto r = interp::run(*exe, interp::Schedule::scripted(bench::s_opt_choices(5)));
    CHECK(r.log.size_ints() == 3 * r.log.block_entries.size() + 3 * r.log.switches.size());
    // S-opt switches thread four times per iteration
    CHECK(r.log.switches.size() == 4 * 5);

    auto s = interp::init_machine(*exe);
    interp::ExecutionPath path;
    interp::ExecutionLog log;
    std::vector<MachineState> states{s};
    for (const auto& name : bench::s_opt_choices(5)) {
        interp::step(*exe, s, path, log, exe->program().thread_index(name));
        states.push_back(s);
    }
    for (interp::Seq k = 0; k <= path.size(); ++k) {
        CHECK(interp::control_at(*exe, path, k) == states[k].resume_after);
    }
    while (!path.empty()) {
        auto t = s;
        interp::unwind_control(path, t);
        const auto k = path.size() - 1;
        CHECK(t.resume_after == states[k].resume_after);
        CHECK(t.steps == k);
        s = states[k];
        path.pop();
    }
}

TEST_CASE("seeded schedules are a pure function of seed and decision")
{
    const auto exe = oracle::bounded(2, 4);
    const auto a = interp::run(*exe, interp::Schedule::seeded(99));
    const auto b = interp::run(*exe, interp::Schedule::seeded(99));
    CHECK(same_path(a.path, b.path));
    const auto sched = interp::Schedule::seeded(5);
    const std::vector<int> both{0, 1};
    for (interp::Seq d = 0; d < 50; ++d) {
        CHECK(sched.choose(*exe, d, both) == sched.choose(*exe, d, both));
    }
}
