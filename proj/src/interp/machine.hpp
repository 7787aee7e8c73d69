#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "interp/executable.hpp"
#include "lang/ast.hpp"

namespace retro::interp {

using Seq = std::uint64_t;

// The full debuggee state. Control points are encoded as the last
// state-changing command each thread executed; the pending command and the
// thread status are derived from that and the current data.
struct MachineState {
    std::vector<std::int64_t> cells;
    std::vector<lang::CommandId> resume_after; // lang::kNoCommand: at body entry
    Seq steps = 0;

    bool operator==(const MachineState&) const = default;
};

enum class ThreadStatus { runnable, blocked, finished };

const char* to_string(ThreadStatus s);

struct ThreadView {
    ThreadStatus status = ThreadStatus::finished;
    lang::CommandId pending = lang::kNoCommand; // next state-changing command
    int line = 0;
};

enum class EntryKind { plain_assign, wait_decrement, signal_increment };

const char* to_string(EntryKind k);

// One executed state-changing command. Holds syntax and runtime indices only,
// never data values.
struct PathEntry {
    Seq seq = 0;
    int thread = -1;
    lang::CommandId command = lang::kNoCommand;
    int line = 0;
    Location lhs;
    lang::ExprPtr rhs; // array indices and constants replaced by literals
    EntryKind kind = EntryKind::plain_assign;
};

class ExecutionPath {
public:
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    // 1-based, as in the path notation.
    const PathEntry& at(Seq seq) const { return entries_.at(static_cast<std::size_t>(seq - 1)); }
    const PathEntry& back() const { return entries_.back(); }
    const std::vector<PathEntry>& entries() const { return entries_; }

    void push(PathEntry e) { entries_.push_back(std::move(e)); }
    void pop() { entries_.pop_back(); }
    void truncate(Seq len) { entries_.resize(static_cast<std::size_t>(len)); }

private:
    std::vector<PathEntry> entries_;
};

enum class BlockEdge { enter, exit, after };

const char* to_string(BlockEdge e);

struct BlockEntry {
    Seq seq = 0;
    int thread = -1;
    lang::CommandId block = lang::kNoCommand;
    BlockEdge edge = BlockEdge::enter;

    bool operator==(const BlockEntry&) const = default;
};

struct SwitchRecord {
    Seq seq = 0;
    int from = -1; // -1 before the first step
    int to = -1;

    bool operator==(const SwitchRecord&) const = default;
};

// The two logs every backtracking method keeps: basic-block entries and
// context-switch points.
struct ExecutionLog {
    std::vector<BlockEntry> block_entries;
    std::vector<SwitchRecord> switches;

    // Integer units needed to store the log (reported, never charged).
    std::size_t size_ints() const { return block_entries.size() * 3 + switches.size() * 3; }
    void truncate(Seq len);
    // Thread that executed entry `seq` according to the switch records.
    std::optional<int> thread_at(Seq seq) const;

    bool operator==(const ExecutionLog&) const = default;
};

struct Event {
    enum class Kind { context_switch, block_entry, terminated, deadlock };
    Kind kind = Kind::terminated;
    SwitchRecord sw;
    BlockEntry block;
};

const char* to_string(Event::Kind k);

class Schedule {
public:
    enum class Kind { scripted, seeded, interactive };

    static Schedule scripted(std::vector<std::string> choices);
    static Schedule seeded(std::uint64_t seed);
    static Schedule interactive();

    Kind kind() const { return kind_; }
    const std::vector<std::string>& choices() const { return choices_; }
    std::uint64_t seed() const { return seed_; }

    // Thread for decision number `decision` (0-based). `enabled` is sorted.
    int choose(const Executable& exe, Seq decision, const std::vector<int>& enabled) const;

private:
    Kind kind_ = Kind::interactive;
    std::vector<std::string> choices_;
    std::uint64_t seed_ = 0;
};

MachineState init_machine(const Executable& exe);

ThreadView thread_view(const Executable& exe, const MachineState& state, int thread);
std::vector<int> enabled_threads(const Executable& exe, const MachineState& state);
bool all_finished(const Executable& exe, const MachineState& state);

std::int64_t read(const Executable& exe, const MachineState& state, const Location& loc);

// Evaluates a concretized expression (no free index expressions).
std::int64_t evaluate(const Executable& exe, const MachineState& state, const lang::Expr& e);

struct StepResult {
    PathEntry entry;
    std::vector<Event> events;
};

// Runs `thread` up to and including its next state-changing command.
// On error the state, path and log are left untouched.
StepResult step(const Executable& exe, MachineState& state, ExecutionPath& path,
                ExecutionLog& log, int thread);

enum class Outcome { terminated, deadlock };

const char* to_string(Outcome o);

struct RunResult {
    MachineState state;
    ExecutionPath path;
    ExecutionLog log;
    Outcome outcome = Outcome::terminated;
};

RunResult run(const Executable& exe, const Schedule& schedule);

struct ReplayResult {
    MachineState state;
    ExecutionPath path;
    ExecutionLog log;
};

ReplayResult replay(const Executable& exe, const ExecutionLog& log, Seq upto);

// Control points after entry `seq` of `path` (0 = initial).
std::vector<lang::CommandId> control_at(const Executable& exe, const ExecutionPath& path, Seq seq);

// Rolls control back over the last path entry; data cells are not touched.
void unwind_control(const ExecutionPath& path, MachineState& state);

} // namespace retro::interp
