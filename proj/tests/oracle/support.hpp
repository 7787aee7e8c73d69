#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bench/bench.hpp"
#include "interp/executable.hpp"
#include "interp/machine.hpp"
#include "oracle/reference.hpp"

namespace oracle {

inline std::string read_fixture(const std::string& name)
{
    std::ifstream in(std::string(RETRO_FIXTURE_DIR) + "/" + name);
    if (!in) {
        throw std::runtime_error("missing fixture " + name);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Program {
    std::string name;
    retro::interp::ExecutablePtr exe;
};

// Auxiliary fixtures used by the property suites.
inline std::vector<Program> auxiliary_programs()
{
    using retro::interp::load_source;
    return {
        {"straight_line", load_source(read_fixture("straight_line.mcl"), {})},
        {"mutex_counter", load_source(read_fixture("mutex_counter.mcl"), {})},
        {"rotate", load_source(read_fixture("rotate.mcl"), {{"K", 5}})},
        {"pipeline", load_source(read_fixture("pipeline.mcl"), {})},
    };
}

inline retro::interp::ExecutablePtr bounded(std::int64_t m, std::int64_t n)
{
    return retro::bench::bounded_buffer(m, n, retro::bench::default_source_values(n));
}

inline int pick(const std::vector<int>& enabled, std::mt19937_64& rng)
{
    return enabled[std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng)];
}

// Compares a machine state with the reference interpreter: every cell, and
// every thread's status and pending line.
inline std::string mismatch(const retro::interp::Executable& exe, const retro::interp::MachineState& s,
                            const Reference& ref)
{
    if (s.cells != ref.cells()) {
        for (std::size_t i = 0; i < s.cells.size(); ++i) {
            if (s.cells[i] != ref.cells()[i]) {
                return "cell " + exe.location_name(exe.location_of(i)) + ": " + std::to_string(s.cells[i]) +
                       " vs reference " + std::to_string(ref.cells()[i]);
            }
        }
        return "cell count differs";
    }
    for (std::size_t t = 0; t < exe.thread_count(); ++t) {
        const int ti = static_cast<int>(t);
        const auto v = retro::interp::thread_view(exe, s, ti);
        const auto rs = ref.status(ti);
        const bool same_status = (rs == RefStatus::runnable && v.status == retro::interp::ThreadStatus::runnable) ||
                                 (rs == RefStatus::blocked && v.status == retro::interp::ThreadStatus::blocked) ||
                                 (rs == RefStatus::finished && v.status == retro::interp::ThreadStatus::finished);
        if (!same_status) {
            return "thread " + exe.thread_name(ti) + " status differs";
        }
        if (rs != RefStatus::finished && v.line != ref.pending_line(ti)) {
            return "thread " + exe.thread_name(ti) + " at line " + std::to_string(v.line) + " vs reference " +
                   std::to_string(ref.pending_line(ti));
        }
    }
    return {};
}

} // namespace oracle
