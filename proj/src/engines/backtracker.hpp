#pragma once

#include <chrono>
#include <memory>
#include <vector>

#include "engines/engine.hpp"

namespace retro::engines {

// One recorded run observed by a set of engines: steps forward, backs up
// LIFO, and checks that every engine restores the same state.
class Backtracker {
public:
    Backtracker(interp::ExecutablePtr exe, const std::vector<EngineKind>& kinds);

    interp::StepResult step(int thread);

    // Undo the last entry. The first engine's result becomes the state; all
    // others must agree with it.
    const MachineState& back();

    void reset();

    const Executable& exe() const { return *exe_; }
    interp::ExecutablePtr exe_ptr() const { return exe_; }
    const MachineState& state() const { return state_; }
    const ExecutionPath& path() const { return path_; }
    const ExecutionLog& log() const { return log_; }
    Trace trace() const { return {*exe_, path_, log_}; }

    const std::vector<std::unique_ptr<Engine>>& engines() const { return engines_; }
    Engine& engine(std::size_t i) { return *engines_.at(i); }
    std::vector<MemoryLedger> ledgers() const;
    // Time spent inside each engine's forward/back hooks.
    std::vector<double> engine_millis() const;

    // replay(log, len) reproduces the current state and path.
    bool consistent() const;

private:
    interp::ExecutablePtr exe_;
    std::vector<EngineKind> kinds_;
    std::vector<std::unique_ptr<Engine>> engines_;
    std::vector<std::chrono::nanoseconds> spent_;
    MachineState state_;
    ExecutionPath path_;
    ExecutionLog log_;
};

} // namespace retro::engines
