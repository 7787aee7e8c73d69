#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "interp/executable.hpp"
#include "interp/machine.hpp"
#include "revgen/revgen.hpp"

namespace retro::engines {

using interp::ExecutionLog;
using interp::ExecutionPath;
using interp::Executable;
using interp::MachineState;
using interp::PathEntry;
using interp::Seq;

enum class EngineType { basic_ss, incremental_ss, checkpointing, static_rcg, dynamic_rcg };

const char* to_string(EngineType t);
std::optional<EngineType> parse_engine_type(const std::string& name);

struct EngineKind {
    EngineType type = EngineType::incremental_ss;
    std::set<lang::CommandId> checkpoints;   // checkpointing; empty = program default
    std::optional<std::size_t> retention;    // dynamic-rcg; nullopt = unlimited
    std::size_t budget = revgen::kDefaultBudget;

    static EngineKind basic() { return {EngineType::basic_ss, {}, {}, revgen::kDefaultBudget}; }
    static EngineKind incremental() { return {EngineType::incremental_ss, {}, {}, revgen::kDefaultBudget}; }
    static EngineKind checkpointing(std::set<lang::CommandId> points = {})
    {
        return {EngineType::checkpointing, std::move(points), {}, revgen::kDefaultBudget};
    }
    static EngineKind static_rcg() { return {EngineType::static_rcg, {}, {}, revgen::kDefaultBudget}; }
    static EngineKind dynamic_rcg(std::optional<std::size_t> retention = std::nullopt)
    {
        return {EngineType::dynamic_rcg, {}, retention, revgen::kDefaultBudget};
    }
};

// All five kinds with default configuration, in cost order (most expensive first).
std::vector<EngineKind> all_engine_kinds();

struct MemoryLedger {
    std::string engine;
    std::uint64_t saved_ints = 0;          // data values held for backtracking (unit I)
    std::uint64_t aux_log_ints = 0;        // shared logs; reported, never charged
    std::uint64_t retained_revcode_cmds = 0;
};

// Read-only view of the session's recorded run, shared by all engines.
struct Trace {
    const Executable& exe;
    const ExecutionPath& path;
    const ExecutionLog& log;
};

// A backtracking method. Engines observe every forward step in order and, on
// back, reconstruct the state just before the last path entry. The session
// truncates the path and log afterwards.
class Engine {
public:
    virtual ~Engine() = default;

    virtual EngineType type() const = 0;
    std::string name() const { return to_string(type()); }

    // `trace.path.back()` is the entry just executed; `before` is the state
    // immediately before it.
    void on_forward(const Trace& trace, const MachineState& before);

    // State just before the last path entry. `current` is the state after it.
    MachineState back(const Trace& trace, const MachineState& current);

    MemoryLedger memory_units(const Trace& trace) const;

    // FNV-1a over every entry observed; engines fed the same run agree.
    std::uint64_t observed_hash() const { return hash_; }

protected:
    virtual void forward_impl(const Trace& trace, const MachineState& before,
                              const PathEntry& entry) = 0;
    virtual MachineState back_impl(const Trace& trace, const MachineState& current,
                                   const PathEntry& entry) = 0;
    virtual std::uint64_t saved_ints() const = 0;
    virtual std::uint64_t retained_cmds() const { return 0; }

private:
    Seq observed_ = 0;
    std::uint64_t hash_ = 1469598103934665603ull;
};

std::unique_ptr<Engine> make_engine(const EngineKind& kind, const Executable& exe);

// Checkpointing defaults: the first state-changing command of every loop
// body (for the bounded buffer: the two wait sites at the loop heads), or the
// first state-changing command of each thread when it has no loop.
std::set<lang::CommandId> default_checkpoints(const Executable& exe);

// Validates and resolves checkpoint source lines to command ids.
std::set<lang::CommandId> checkpoints_at_lines(const Executable& exe, const std::vector<int>& lines);

// Redefines the checkpoint set of a checkpointing engine.
void set_checkpoints(Engine& engine, const Executable& exe, std::set<lang::CommandId> points);

} // namespace retro::engines
