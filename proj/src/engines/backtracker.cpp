#include "engines/backtracker.hpp"

#include "common/error.hpp"

namespace retro::engines {

using Clock = std::chrono::steady_clock;

Backtracker::Backtracker(interp::ExecutablePtr exe, const std::vector<EngineKind>& kinds)
    : exe_(std::move(exe)), kinds_(kinds)
{
    reset();
}

void Backtracker::reset()
{
    engines_.clear();
    for (const auto& k : kinds_) {
        engines_.push_back(make_engine(k, *exe_));
    }
    spent_.assign(engines_.size(), std::chrono::nanoseconds{0});
    state_ = interp::init_machine(*exe_);
    path_ = {};
    log_ = {};
}

interp::StepResult Backtracker::step(int thread)
{
    const MachineState before = state_;
    auto result = interp::step(*exe_, state_, path_, log_, thread);
    const Trace t = trace();
    for (std::size_t i = 0; i < engines_.size(); ++i) {
        const auto start = Clock::now();
        engines_[i]->on_forward(t, before);
        spent_[i] += Clock::now() - start;
    }
    return result;
}

const MachineState& Backtracker::back()
{
    if (path_.empty()) {
        throw Error(ErrorKind::engine, "at-origin", "already at the initial state");
    }
    const Trace t = trace();
    std::optional<MachineState> restored;
    for (std::size_t i = 0; i < engines_.size(); ++i) {
        const auto start = Clock::now();
        auto s = engines_[i]->back(t, state_);
        spent_[i] += Clock::now() - start;
        if (!restored) {
            restored = std::move(s);
        } else if (!(s == *restored)) {
            throw Error(ErrorKind::internal, "engine-disagreement",
                        engines_[i]->name() + " restored a different state than " +
                            engines_.front()->name() + " at seq " + std::to_string(path_.size()));
        }
    }
    if (!restored) {
        // no engine attached: fall back to deterministic re-execution
        restored = interp::replay(*exe_, log_, path_.size() - 1).state;
    }
    state_ = std::move(*restored);
    path_.pop();
    log_.truncate(path_.size());
    return state_;
}

std::vector<MemoryLedger> Backtracker::ledgers() const
{
    std::vector<MemoryLedger> out;
    const Trace t = trace();
    for (const auto& e : engines_) {
        out.push_back(e->memory_units(t));
    }
    return out;
}

std::vector<double> Backtracker::engine_millis() const
{
    std::vector<double> out;
    for (auto ns : spent_) {
        out.push_back(std::chrono::duration<double, std::milli>(ns).count());
    }
    return out;
}

bool Backtracker::consistent() const
{
    const auto r = interp::replay(*exe_, log_, path_.size());
    if (!(r.state == state_) || r.path.size() != path_.size()) {
        return false;
    }
    for (Seq k = 1; k <= path_.size(); ++k) {
        const auto& a = r.path.at(k);
        const auto& b = path_.at(k);
        if (a.command != b.command || a.thread != b.thread || a.lhs != b.lhs ||
            !lang::structurally_equal(*a.rhs, *b.rhs)) {
            return false;
        }
    }
    return true;
}

} // namespace retro::engines
