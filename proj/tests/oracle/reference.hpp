#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "interp/executable.hpp"

namespace oracle {

struct RefError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RefStatus { runnable, blocked, finished };

// A deliberately naive interpreter: each thread keeps an explicit stack of
// commands still to run; guards are evaluated when the thread is scheduled.
// Shares only the parsed program and the cell layout with the real one.
class Reference {
public:
    explicit Reference(const retro::interp::Executable& exe);

    const std::vector<std::int64_t>& cells() const { return cells_; }
    std::int64_t cell(const std::string& var, std::int64_t index = 0) const;

    RefStatus status(int thread) const;
    // Line of the next state-changing command; 0 when finished.
    int pending_line(int thread) const;
    std::vector<int> enabled() const;
    bool finished() const;

    // Cells followed by each thread's continuation, for visited sets.
    std::vector<std::int64_t> key() const;

    // Runs `thread` through its next state-changing command; returns its line.
    int step(int thread);

private:
    using Stack = std::vector<retro::lang::CommandId>;

    std::int64_t eval(const retro::lang::Expr& e) const;
    bool test(const retro::lang::Cond& c) const;
    // Pops control commands until a state-changing one is on top.
    void settle(Stack& stack) const;
    std::size_t slot(retro::lang::VarId var, std::int64_t index) const;

    const retro::interp::Executable& exe_;
    std::vector<std::int64_t> cells_;
    std::vector<Stack> stacks_;
};

} // namespace oracle
