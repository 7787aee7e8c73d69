#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "engines/engine.hpp"
#include "interp/machine.hpp"

namespace retro::bench {

// Bounded-buffer program text. Line numbers of the loop bodies are fixed:
// Producer 15..22, Consumer 31..38. Array sizes use the constants M and N.
std::string bounded_buffer_source(const std::vector<std::int64_t>& src);

// src[i] = 10 * (i + 1)
std::vector<std::int64_t> default_source_values(std::int64_t n);

interp::ExecutablePtr bounded_buffer(std::int64_t m, std::int64_t n,
                                     const std::vector<std::int64_t>& src);

enum class ScheduleShape { s_seq, s_opt, other };

const char* to_string(ScheduleShape s);
std::optional<ScheduleShape> parse_schedule_shape(const std::string& name);

// Per iteration: Producer x8 then Consumer x8. Requires n <= m.
std::vector<std::string> s_seq_choices(std::int64_t n);
// Per iteration: Producer x6, Consumer x7, Producer x2, Consumer x1.
std::vector<std::string> s_opt_choices(std::int64_t n);

// Closed-form saved-integer count, when one applies to this engine, shape and
// configuration.
std::optional<std::uint64_t> closed_form(const engines::EngineKind& kind, ScheduleShape shape,
                                         std::int64_t m, std::int64_t n);

struct BenchConfig {
    std::int64_t m = 3;
    std::int64_t n = 5;
    std::vector<std::int64_t> src; // empty: default_source_values(n)
    ScheduleShape shape = ScheduleShape::s_opt;
    interp::Schedule schedule = interp::Schedule::interactive(); // used when shape is other
    std::vector<engines::EngineKind> engines = engines::all_engine_kinds();
    bool check_back = false; // back out the whole run and compare against snapshots
};

struct EngineRow {
    std::string engine;
    std::uint64_t saved_ints = 0;
    std::optional<std::uint64_t> closed_form;
    std::uint64_t aux_log_ints = 0;
    std::uint64_t retained_revcode_cmds = 0;
    double wall_ms = 0;
    std::uint64_t observed_hash = 0;

    std::optional<bool> match() const
    {
        if (!closed_form) {
            return std::nullopt;
        }
        return *closed_form == saved_ints;
    }
};

struct BenchReport {
    std::int64_t m = 0;
    std::int64_t n = 0;
    std::string schedule;
    std::uint64_t steps = 0;
    interp::Outcome outcome = interp::Outcome::terminated;
    bool functional_ok = false;   // dst[i] == src[i] + 1 for all i
    bool same_run = false;        // every engine observed the same path
    bool back_ok = true;          // only meaningful with check_back
    std::vector<EngineRow> rows;

    bool all_match() const;
    std::string to_csv() const;
    std::string to_json() const;
};

BenchReport run_benchmark(const BenchConfig& config);

} // namespace retro::bench
