#include "interp/machine.hpp"

#include <algorithm>

#include "common/arith.hpp"
#include "common/error.hpp"

namespace retro::interp {

using lang::CommandId;
using lang::CommandKind;
using lang::Expr;
using lang::ExprPtr;
using lang::kNoCommand;

const char* to_string(ThreadStatus s)
{
    switch (s) {
    case ThreadStatus::runnable: return "runnable";
    case ThreadStatus::blocked: return "blocked";
    case ThreadStatus::finished: return "finished";
    }
    return "?";
}

const char* to_string(EntryKind k)
{
    switch (k) {
    case EntryKind::plain_assign: return "plain-assign";
    case EntryKind::wait_decrement: return "wait-decrement";
    case EntryKind::signal_increment: return "signal-increment";
    }
    return "?";
}

const char* to_string(BlockEdge e)
{
    switch (e) {
    case BlockEdge::enter: return "enter";
    case BlockEdge::exit: return "exit";
    case BlockEdge::after: return "after";
    }
    return "?";
}

const char* to_string(Event::Kind k)
{
    switch (k) {
    case Event::Kind::context_switch: return "switch";
    case Event::Kind::block_entry: return "block-entry";
    case Event::Kind::terminated: return "terminated";
    case Event::Kind::deadlock: return "deadlock";
    }
    return "?";
}

const char* to_string(Outcome o)
{
    return o == Outcome::terminated ? "terminated" : "deadlock";
}

void ExecutionLog::truncate(Seq len)
{
    std::erase_if(block_entries, [len](const BlockEntry& b) { return b.seq > len; });
    std::erase_if(switches, [len](const SwitchRecord& s) { return s.seq > len; });
}

std::optional<int> ExecutionLog::thread_at(Seq seq) const
{
    auto it = std::upper_bound(switches.begin(), switches.end(), seq,
                               [](Seq s, const SwitchRecord& r) { return s < r.seq; });
    if (it == switches.begin()) {
        return std::nullopt;
    }
    return std::prev(it)->to;
}

Schedule Schedule::scripted(std::vector<std::string> choices)
{
    Schedule s;
    s.kind_ = Kind::scripted;
    s.choices_ = std::move(choices);
    return s;
}

Schedule Schedule::seeded(std::uint64_t seed)
{
    Schedule s;
    s.kind_ = Kind::seeded;
    s.seed_ = seed;
    return s;
}

Schedule Schedule::interactive()
{
    return Schedule{};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

int Schedule::choose(const Executable& exe, Seq decision, const std::vector<int>& enabled) const
{
    switch (kind_) {
    case Kind::scripted: {
        if (decision >= choices_.size()) {
            throw Error(ErrorKind::schedule, "schedule-exhausted",
                        "scripted schedule exhausted at decision " + std::to_string(decision + 1));
        }
        const auto& name = choices_[static_cast<std::size_t>(decision)];
        const int t = exe.program().thread_index(name);
        if (t < 0) {
            throw Error(ErrorKind::schedule, "unknown-thread",
                        "decision " + std::to_string(decision + 1) + ": no thread '" + name + "'");
        }
        if (std::find(enabled.begin(), enabled.end(), t) == enabled.end()) {
            throw Error(ErrorKind::schedule, "not-enabled",
                        "decision " + std::to_string(decision + 1) + ": thread '" + name +
                            "' is not enabled");
        }
        return t;
    }
    case Kind::seeded: {
        if (enabled.empty()) {
            throw Error(ErrorKind::schedule, "no-enabled-thread", "no enabled thread");
        }
        // stateless per decision so a schedule survives stepping backwards
        const auto r = splitmix64(seed_ ^ splitmix64(decision));
        return enabled[static_cast<std::size_t>(r % enabled.size())];
    }
    case Kind::interactive:
        break;
    }
    throw Error(ErrorKind::schedule, "interactive-schedule",
                "interactive schedule needs an explicit thread choice");
}

MachineState init_machine(const Executable& exe)
{
    MachineState s;
    s.cells = exe.initial_cells();
    s.resume_after.assign(exe.thread_count(), kNoCommand);
    return s;
}

std::int64_t read(const Executable& exe, const MachineState& state, const Location& loc)
{
    return state.cells.at(exe.slot(loc));
}

namespace {

Location element_location(const Executable& exe, lang::VarId var, std::int64_t index)
{
    const auto n = exe.array_size(var);
    if (index < 0 || index >= n) {
        throw Error(ErrorKind::runtime, "index-out-of-bounds",
                    "index " + std::to_string(index) + " out of bounds for '" +
                        exe.program().var(var).name + "' of size " + std::to_string(n));
    }
    return {var, index};
}

bool evaluate_cond(const Executable& exe, const MachineState& state, const lang::Cond& c)
{
    switch (c.kind) {
    case lang::Cond::Kind::boolean: return c.value;
    case lang::Cond::Kind::negate: return !evaluate_cond(exe, state, *c.inner);
    case lang::Cond::Kind::compare: {
        const auto a = evaluate(exe, state, *c.lhs);
        const auto b = evaluate(exe, state, *c.rhs);
        return c.op == lang::CmpOp::eq ? a == b : a > b;
    }
    }
    return false;
}

// Replaces every array index and named constant by its current value.
ExprPtr concretize(const Executable& exe, const MachineState& state, const ExprPtr& e)
{
    switch (e->kind) {
    case Expr::Kind::literal:
    case Expr::Kind::var:
        return e;
    case Expr::Kind::constant:
        return Expr::literal(exe.constant(e->name));
    case Expr::Kind::elem: {
        const auto idx = evaluate(exe, state, *e->index());
        element_location(exe, e->var.id, idx);
        return Expr::element(e->var, Expr::literal(idx));
    }
    case Expr::Kind::binary:
        return Expr::binary(e->op, concretize(exe, state, e->lhs), concretize(exe, state, e->rhs));
    }
    return e;
}

constexpr int kMaxControlTransitions = 1'000'000;

// Walks control flow of `thread` from its resume point to its next
// state-changing command, evaluating guards in `state`. Returns kNoCommand
// when the thread runs off the end of its body.
CommandId next_primitive(const Executable& exe, const MachineState& state, int thread,
                         std::vector<BlockEntry>* blocks, Seq seq)
{
    const auto& prog = exe.program();
    auto record = [&](CommandId block, BlockEdge edge) {
        if (blocks) {
            blocks->push_back({seq, thread, block, edge});
        }
    };

    CommandId cur = state.resume_after[static_cast<std::size_t>(thread)];
    bool after = true;
    if (cur == kNoCommand) {
        cur = prog.threads[static_cast<std::size_t>(thread)].body;
        after = false;
        record(cur, BlockEdge::enter);
    } else {
        const auto kind = prog.command(cur).kind;
        if (kind == CommandKind::wait || kind == CommandKind::signal) {
            record(cur, BlockEdge::after);
        }
    }

    for (int guard = 0; guard < kMaxControlTransitions; ++guard) {
        const auto& c = prog.command(cur);
        if (after) {
            if (c.parent == kNoCommand) {
                return kNoCommand;
            }
            const auto& p = prog.command(c.parent);
            switch (p.kind) {
            case CommandKind::seq: {
                auto it = std::find(p.children.begin(), p.children.end(), cur);
                if (it + 1 != p.children.end()) {
                    cur = *(it + 1);
                    after = false;
                } else {
                    cur = p.id;
                }
                break;
            }
            case CommandKind::if_:
                cur = p.id;
                break;
            case CommandKind::while_:
                cur = p.id;
                after = false;
                break;
            default:
                throw Error(ErrorKind::internal, "bad-ast", "command nested in a primitive");
            }
            continue;
        }

        switch (c.kind) {
        case CommandKind::seq:
            if (c.children.empty()) {
                after = true;
            } else {
                cur = c.children.front();
            }
            break;
        case CommandKind::skip:
            after = true;
            break;
        case CommandKind::if_: {
            const auto arm = evaluate_cond(exe, state, *c.guard) ? c.children[0] : c.children[1];
            record(arm, BlockEdge::enter);
            cur = arm;
            break;
        }
        case CommandKind::while_:
            if (evaluate_cond(exe, state, *c.guard)) {
                record(c.children[0], BlockEdge::enter);
                cur = c.children[0];
            } else {
                record(c.id, BlockEdge::exit);
                after = true;
            }
            break;
        case CommandKind::assign:
        case CommandKind::wait:
        case CommandKind::signal:
            return cur;
        }
    }
    throw Error(ErrorKind::runtime, "no-progress",
                "thread '" + exe.thread_name(thread) + "' makes no progress");
}

} // namespace

std::int64_t evaluate(const Executable& exe, const MachineState& state, const Expr& e)
{
    switch (e.kind) {
    case Expr::Kind::literal: return e.value;
    case Expr::Kind::constant: return exe.constant(e.name);
    case Expr::Kind::var: return read(exe, state, {e.var.id, 0});
    case Expr::Kind::elem: {
        const auto idx = evaluate(exe, state, *e.index());
        return read(exe, state, element_location(exe, e.var.id, idx));
    }
    case Expr::Kind::binary: {
        const auto a = evaluate(exe, state, *e.lhs);
        const auto b = evaluate(exe, state, *e.rhs);
        switch (e.op) {
        case lang::BinOp::add: return arith::add(a, b);
        case lang::BinOp::sub: return arith::sub(a, b);
        case lang::BinOp::mul: return arith::mul(a, b);
        case lang::BinOp::div: return arith::div(a, b);
        case lang::BinOp::mod: return arith::mod(a, b);
        }
    }
    }
    return 0;
}

ThreadView thread_view(const Executable& exe, const MachineState& state, int thread)
{
    ThreadView v;
    CommandId next = kNoCommand;
    try {
        next = next_primitive(exe, state, thread, nullptr, 0);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::runtime) {
            throw;
        }
        // a failing guard is reported when the thread is stepped
        v.status = ThreadStatus::runnable;
        return v;
    }
    if (next == kNoCommand) {
        v.status = ThreadStatus::finished;
        return v;
    }
    const auto& c = exe.program().command(next);
    v.pending = next;
    v.line = c.line;
    v.status = ThreadStatus::runnable;
    if (c.kind == CommandKind::wait && read(exe, state, {c.semaphore.id, 0}) <= 0) {
        v.status = ThreadStatus::blocked;
    }
    return v;
}

std::vector<int> enabled_threads(const Executable& exe, const MachineState& state)
{
    std::vector<int> out;
    for (int t = 0; t < static_cast<int>(exe.thread_count()); ++t) {
        if (thread_view(exe, state, t).status == ThreadStatus::runnable) {
            out.push_back(t);
        }
    }
    return out;
}

bool all_finished(const Executable& exe, const MachineState& state)
{
    for (int t = 0; t < static_cast<int>(exe.thread_count()); ++t) {
        if (thread_view(exe, state, t).status != ThreadStatus::finished) {
            return false;
        }
    }
    return true;
}

StepResult step(const Executable& exe, MachineState& state, ExecutionPath& path,
                ExecutionLog& log, int thread)
{
    if (thread < 0 || thread >= static_cast<int>(exe.thread_count())) {
        throw Error(ErrorKind::schedule, "unknown-thread", "no such thread");
    }
    const auto view = thread_view(exe, state, thread);
    if (view.status == ThreadStatus::finished) {
        throw Error(ErrorKind::schedule, "not-enabled",
                    "thread '" + exe.thread_name(thread) + "' has finished");
    }
    if (view.status == ThreadStatus::blocked) {
        throw Error(ErrorKind::schedule, "not-enabled",
                    "thread '" + exe.thread_name(thread) + "' is blocked");
    }

    const Seq seq = state.steps + 1;
    std::vector<BlockEntry> blocks;
    const CommandId id = next_primitive(exe, state, thread, &blocks, seq);
    const auto& c = exe.program().command(id);

    PathEntry entry;
    entry.seq = seq;
    entry.thread = thread;
    entry.command = id;
    entry.line = c.line;

    std::int64_t value = 0;
    switch (c.kind) {
    case CommandKind::assign: {
        entry.kind = EntryKind::plain_assign;
        if (c.target_index) {
            const auto idx = evaluate(exe, state, *c.target_index);
            entry.lhs = element_location(exe, c.target.id, idx);
        } else {
            entry.lhs = {c.target.id, 0};
        }
        entry.rhs = concretize(exe, state, c.value);
        value = evaluate(exe, state, *c.value);
        break;
    }
    case CommandKind::wait:
    case CommandKind::signal: {
        const bool is_wait = c.kind == CommandKind::wait;
        entry.kind = is_wait ? EntryKind::wait_decrement : EntryKind::signal_increment;
        entry.lhs = {c.semaphore.id, 0};
        entry.rhs = Expr::binary(is_wait ? lang::BinOp::sub : lang::BinOp::add,
                                 Expr::variable(c.semaphore), Expr::literal(1));
        value = evaluate(exe, state, *entry.rhs);
        break;
    }
    default:
        throw Error(ErrorKind::internal, "bad-primitive", "not a state-changing command");
    }

    // commit
    StepResult result;
    const int prev = path.empty() ? -1 : path.back().thread;
    state.cells[exe.slot(entry.lhs)] = value;
    state.resume_after[static_cast<std::size_t>(thread)] = id;
    state.steps = seq;

    if (prev != thread) {
        SwitchRecord sw{seq, prev, thread};
        log.switches.push_back(sw);
        Event ev;
        ev.kind = Event::Kind::context_switch;
        ev.sw = sw;
        result.events.push_back(ev);
    }
    for (const auto& b : blocks) {
        log.block_entries.push_back(b);
        Event ev;
        ev.kind = Event::Kind::block_entry;
        ev.block = b;
        result.events.push_back(ev);
    }
    path.push(entry);

    if (enabled_threads(exe, state).empty()) {
        Event ev;
        ev.kind = all_finished(exe, state) ? Event::Kind::terminated : Event::Kind::deadlock;
        result.events.push_back(ev);
    }
    result.entry = std::move(entry);
    return result;
}

RunResult run(const Executable& exe, const Schedule& schedule)
{
    RunResult r;
    r.state = init_machine(exe);
    for (;;) {
        const auto enabled = enabled_threads(exe, r.state);
        if (enabled.empty()) {
            break;
        }
        const int t = schedule.choose(exe, r.state.steps, enabled);
        try {
            step(exe, r.state, r.path, r.log, t);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::runtime) {
                throw Error(e.kind(), e.code(),
                            "at seq " + std::to_string(r.state.steps + 1) + ": " + e.what());
            }
            throw;
        }
    }
    r.outcome = all_finished(exe, r.state) ? Outcome::terminated : Outcome::deadlock;
    return r;
}

ReplayResult replay(const Executable& exe, const ExecutionLog& log, Seq upto)
{
    ReplayResult r;
    r.state = init_machine(exe);
    std::size_t next_block = 0;
    for (Seq k = 1; k <= upto; ++k) {
        const auto t = log.thread_at(k);
        if (!t) {
            throw Error(ErrorKind::replay, "divergence",
                        "log has no thread for seq " + std::to_string(k));
        }
        try {
            step(exe, r.state, r.path, r.log, *t);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::schedule) {
                throw Error(ErrorKind::replay, "divergence",
                            "seq " + std::to_string(k) + ": " + e.what());
            }
            throw;
        }
        // regenerated block entries must match the recorded ones
        for (std::size_t i = next_block; i < r.log.block_entries.size(); ++i) {
            if (i >= log.block_entries.size() || !(log.block_entries[i] == r.log.block_entries[i])) {
                throw Error(ErrorKind::replay, "divergence",
                            "block entry log diverges at seq " + std::to_string(k));
            }
        }
        next_block = r.log.block_entries.size();
    }
    return r;
}

std::vector<CommandId> control_at(const Executable& exe, const ExecutionPath& path, Seq seq)
{
    std::vector<CommandId> out(exe.thread_count(), kNoCommand);
    for (Seq k = 1; k <= seq; ++k) {
        const auto& e = path.at(k);
        out[static_cast<std::size_t>(e.thread)] = e.command;
    }
    return out;
}

void unwind_control(const ExecutionPath& path, MachineState& state)
{
    const auto& last = path.back();
    CommandId prev = kNoCommand;
    for (auto k = last.seq - 1; k >= 1; --k) {
        if (path.at(k).thread == last.thread) {
            prev = path.at(k).command;
            break;
        }
    }
    state.resume_after[static_cast<std::size_t>(last.thread)] = prev;
    state.steps = last.seq - 1;
}

} // namespace retro::interp
