#include "bench/bench.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "common/error.hpp"
#include "engines/backtracker.hpp"

namespace retro::bench {

std::string bounded_buffer_source(const std::vector<std::int64_t>& src)
{
    std::ostringstream init;
    for (std::size_t i = 0; i < src.size(); ++i) {
        init << (i ? ", " : "") << src[i];
    }
    std::ostringstream out;
    out << "/***************************\n"
           "  * Bounded-Buffer Example *\n"
           "  **************************/\n"
           "int buf[M]; // buffer size M\n"
           "int g:=0; // experimental code\n"
           "int empty:=M;\n"
           "int full:=0;\n"
           "\n"
           "thread Producer {\n"
        << "int src[N] := {" << init.str() << "}; // source array\n"
        << "int p:=0;\n"
           "int rear:=0;\n"
           "int d:=0;\n"
           "while (p < N) {\n"
           "wait(empty);\n"
           "buf[rear]:=src[p];\n"
           "p:=p+1;\n"
           "rear:=rear+1;\n"
           "rear:=rear % M;\n"
           "signal(full);\n"
           "g:=d+1;\n"
           "d:=g*3;\n"
           "}\n"
           "}\n"
           "thread Consumer {\n"
           "int dst[N];\n"
           "int c:=0;\n"
           "int front:=0;\n"
           "int e:=0;\n"
           "while (c < N) {\n"
           "wait(full);\n"
           "dst[c]:=buf[front]+1;\n"
           "c:=c+1;\n"
           "front:=front+1;\n"
           "front:=front % M;\n"
           "signal(empty);\n"
           "e:=g*2;\n"
           "g:=e-1;\n"
           "}\n"
           "}\n";
    return out.str();
}

std::vector<std::int64_t> default_source_values(std::int64_t n)
{
    std::vector<std::int64_t> v;
    for (std::int64_t i = 0; i < n; ++i) {
        v.push_back(10 * (i + 1));
    }
    return v;
}

interp::ExecutablePtr bounded_buffer(std::int64_t m, std::int64_t n,
                                     const std::vector<std::int64_t>& src)
{
    if (static_cast<std::int64_t>(src.size()) != n) {
        throw Error(ErrorKind::load, "initializer-length",
                    "source array needs " + std::to_string(n) + " values, got " +
                        std::to_string(src.size()));
    }
    return interp::load_source(bounded_buffer_source(src), {{"M", m}, {"N", n}});
}

const char* to_string(ScheduleShape s)
{
    switch (s) {
    case ScheduleShape::s_seq: return "s-seq";
    case ScheduleShape::s_opt: return "s-opt";
    case ScheduleShape::other: return "other";
    }
    return "?";
}

std::optional<ScheduleShape> parse_schedule_shape(const std::string& name)
{
    if (name == "s-seq") return ScheduleShape::s_seq;
    if (name == "s-opt") return ScheduleShape::s_opt;
    return std::nullopt;
}

static void repeat(std::vector<std::string>& out, const char* thread, int times)
{
    out.insert(out.end(), static_cast<std::size_t>(times), thread);
}

std::vector<std::string> s_seq_choices(std::int64_t n)
{
    std::vector<std::string> out;
    for (std::int64_t i = 0; i < n; ++i) {
        repeat(out, "Producer", 8);
        repeat(out, "Consumer", 8);
    }
    return out;
}

std::vector<std::string> s_opt_choices(std::int64_t n)
{
    std::vector<std::string> out;
    for (std::int64_t i = 0; i < n; ++i) {
        repeat(out, "Producer", 6);
        repeat(out, "Consumer", 7);
        repeat(out, "Producer", 2);
        repeat(out, "Consumer", 1);
    }
    return out;
}

std::optional<std::uint64_t> closed_form(const engines::EngineKind& kind, ScheduleShape shape,
                                         std::int64_t m, std::int64_t n)
{
    using engines::EngineType;
    const auto nn = static_cast<std::uint64_t>(n);
    const auto v = static_cast<std::uint64_t>(9 + m + 2 * n);
    switch (kind.type) {
    case EngineType::basic_ss: return 16 * nn * v;
    case EngineType::incremental_ss: return 16 * nn;
    case EngineType::static_rcg: return 8 * nn;
    case EngineType::checkpointing:
        if (shape == ScheduleShape::s_opt && kind.checkpoints.empty()) {
            return 13 * nn;
        }
        return std::nullopt;
    case EngineType::dynamic_rcg:
        if (shape == ScheduleShape::s_opt && kind.budget == revgen::kDefaultBudget) {
            return 2 * nn;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

bool BenchReport::all_match() const
{
    for (const auto& r : rows) {
        if (r.match() == false) {
            return false;
        }
    }
    return true;
}

static std::string fmt_ms(double ms)
{
    std::ostringstream o;
    o << std::fixed << std::setprecision(3) << ms;
    return o.str();
}

std::string BenchReport::to_csv() const
{
    std::ostringstream out;
    out << "engine,saved_ints,closed_form,match,aux_log_ints,wall_ms\n";
    for (const auto& r : rows) {
        out << r.engine << ',' << r.saved_ints << ',';
        out << (r.closed_form ? std::to_string(*r.closed_form) : "n/a") << ',';
        const auto m = r.match();
        out << (m ? (*m ? "true" : "false") : "n/a") << ',';
        out << r.aux_log_ints << ',' << fmt_ms(r.wall_ms) << '\n';
    }
    return out.str();
}

std::string BenchReport::to_json() const
{
    nlohmann::ordered_json j;
    j["M"] = m;
    j["N"] = n;
    j["schedule"] = schedule;
    j["steps"] = steps;
    j["outcome"] = interp::to_string(outcome);
    j["functional_ok"] = functional_ok;
    j["same_run"] = same_run;
    j["back_ok"] = back_ok;
    auto& arr = j["engines"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json e;
        e["engine"] = r.engine;
        e["saved_ints"] = r.saved_ints;
        e["closed_form"] = r.closed_form ? nlohmann::ordered_json(*r.closed_form) : nullptr;
        const auto mt = r.match();
        e["match"] = mt ? nlohmann::ordered_json(*mt) : nullptr;
        e["aux_log_ints"] = r.aux_log_ints;
        e["retained_revcode_cmds"] = r.retained_revcode_cmds;
        e["wall_ms"] = r.wall_ms;
        arr.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

BenchReport run_benchmark(const BenchConfig& config)
{
    const auto src = config.src.empty() ? default_source_values(config.n) : config.src;
    auto exe = bounded_buffer(config.m, config.n, src);

    interp::Schedule schedule = config.schedule;
    if (config.shape == ScheduleShape::s_seq) {
        schedule = interp::Schedule::scripted(s_seq_choices(config.n));
    } else if (config.shape == ScheduleShape::s_opt) {
        schedule = interp::Schedule::scripted(s_opt_choices(config.n));
    }

    engines::Backtracker bt(exe, config.engines);
    std::vector<interp::MachineState> snapshots;
    BenchReport report;
    report.m = config.m;
    report.n = config.n;
    report.schedule = to_string(config.shape);

    while (true) {
        const auto enabled = interp::enabled_threads(*exe, bt.state());
        if (enabled.empty()) {
            report.outcome = interp::all_finished(*exe, bt.state()) ? interp::Outcome::terminated
                                                                   : interp::Outcome::deadlock;
            break;
        }
        const int t = schedule.choose(*exe, bt.state().steps, enabled);
        if (config.check_back) {
            snapshots.push_back(bt.state());
        }
        bt.step(t);
    }
    report.steps = bt.path().size();

    const auto& prog = exe->program();
    const int consumer = prog.thread_index("Consumer");
    lang::VarId dst = -1;
    for (lang::VarId v : prog.threads.at(static_cast<std::size_t>(consumer)).locals) {
        if (prog.var(v).name == "dst") {
            dst = v;
        }
    }
    report.functional_ok = report.outcome == interp::Outcome::terminated;
    for (std::int64_t i = 0; report.functional_ok && i < config.n; ++i) {
        report.functional_ok = interp::read(*exe, bt.state(), {dst, i}) == src[static_cast<std::size_t>(i)] + 1;
    }

    const auto ledgers = bt.ledgers();
    const auto millis = bt.engine_millis();
    report.same_run = true;
    for (std::size_t i = 0; i < config.engines.size(); ++i) {
        EngineRow row;
        row.engine = ledgers[i].engine;
        row.saved_ints = ledgers[i].saved_ints;
        row.aux_log_ints = ledgers[i].aux_log_ints;
        row.retained_revcode_cmds = ledgers[i].retained_revcode_cmds;
        row.wall_ms = millis[i];
        row.observed_hash = bt.engines()[i]->observed_hash();
        if (report.outcome == interp::Outcome::terminated) {
            row.closed_form = closed_form(config.engines[i], config.shape, config.m, config.n);
        }
        if (!report.rows.empty() && row.observed_hash != report.rows.front().observed_hash) {
            report.same_run = false;
        }
        report.rows.push_back(std::move(row));
    }

    if (config.check_back) {
        while (!snapshots.empty()) {
            const auto& restored = bt.back();
            if (!(restored == snapshots.back())) {
                report.back_ok = false;
                break;
            }
            snapshots.pop_back();
        }
    }
    return report;
}

} // namespace retro::bench
