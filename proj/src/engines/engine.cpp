#include "engines/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "common/error.hpp"

namespace retro::engines {

using interp::Location;

const char* to_string(EngineType t)
{
    switch (t) {
    case EngineType::basic_ss: return "basic-ss";
    case EngineType::incremental_ss: return "incremental-ss";
    case EngineType::checkpointing: return "checkpointing";
    case EngineType::static_rcg: return "static-rcg";
    case EngineType::dynamic_rcg: return "dynamic-rcg";
    }
    return "?";
}

std::optional<EngineType> parse_engine_type(const std::string& name)
{
    for (auto t : {EngineType::basic_ss, EngineType::incremental_ss, EngineType::checkpointing,
                   EngineType::static_rcg, EngineType::dynamic_rcg}) {
        if (name == to_string(t)) {
            return t;
        }
    }
    return std::nullopt;
}

std::vector<EngineKind> all_engine_kinds()
{
    return {EngineKind::basic(), EngineKind::incremental(), EngineKind::checkpointing(),
            EngineKind::static_rcg(), EngineKind::dynamic_rcg()};
}

namespace {

std::uint64_t fnv(std::uint64_t h, std::string_view bytes)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t entry_hash(std::uint64_t h, const PathEntry& e)
{
    h = fnv(h, std::to_string(e.seq) + "|" + std::to_string(e.thread) + "|" +
                   std::to_string(e.command) + "|" + std::to_string(e.lhs.var) + "|" +
                   std::to_string(e.lhs.index) + "|" + lang::render(*e.rhs) + "\n");
    return h;
}

MachineState with_cell(MachineState s, const Executable& exe, const Location& loc, std::int64_t v)
{
    s.cells[exe.slot(loc)] = v;
    return s;
}

} // namespace

void Engine::on_forward(const Trace& trace, const MachineState& before)
{
    const auto& entry = trace.path.back();
    if (entry.seq != observed_ + 1) {
        throw Error(ErrorKind::engine, "out-of-order",
                    name() + ": expected entry " + std::to_string(observed_ + 1) + ", got " +
                        std::to_string(entry.seq));
    }
    forward_impl(trace, before, entry);
    observed_ = entry.seq;
    hash_ = entry_hash(hash_, entry);
}

MachineState Engine::back(const Trace& trace, const MachineState& current)
{
    if (trace.path.empty()) {
        throw Error(ErrorKind::engine, "at-origin", "already at the initial state");
    }
    const auto& entry = trace.path.back();
    if (entry.seq != observed_) {
        throw Error(ErrorKind::engine, "out-of-order",
                    name() + ": back over entry " + std::to_string(entry.seq) +
                        " but last observed " + std::to_string(observed_));
    }
    auto restored = back_impl(trace, current, entry);
    observed_ = entry.seq - 1;
    // the hash covers the observed prefix; recompute it from the path
    hash_ = 1469598103934665603ull;
    for (Seq k = 1; k < entry.seq; ++k) {
        hash_ = entry_hash(hash_, trace.path.at(k));
    }
    return restored;
}

MemoryLedger Engine::memory_units(const Trace& trace) const
{
    MemoryLedger m;
    m.engine = name();
    m.saved_ints = saved_ints();
    m.aux_log_ints = trace.log.size_ints();
    m.retained_revcode_cmds = retained_cmds();
    return m;
}

namespace {

class BasicStateSaving final : public Engine {
public:
    explicit BasicStateSaving(const Executable& exe) : width_(exe.cell_count()) {}

    EngineType type() const override { return EngineType::basic_ss; }

protected:
    void forward_impl(const Trace&, const MachineState& before, const PathEntry&) override
    {
        vectors_.push_back(before.cells);
    }

    MachineState back_impl(const Trace& trace, const MachineState& current, const PathEntry&) override
    {
        MachineState s = current;
        s.cells = std::move(vectors_.back());
        vectors_.pop_back();
        interp::unwind_control(trace.path, s);
        return s;
    }

    std::uint64_t saved_ints() const override { return vectors_.size() * width_; }

private:
    std::size_t width_;
    std::vector<std::vector<std::int64_t>> vectors_;
};

struct SavedValue {
    Seq seq = 0;
    Location loc;
    std::int64_t value = 0;
};

class IncrementalStateSaving final : public Engine {
public:
    EngineType type() const override { return EngineType::incremental_ss; }

protected:
    void forward_impl(const Trace& trace, const MachineState& before, const PathEntry& e) override
    {
        saved_.push_back({e.seq, e.lhs, interp::read(trace.exe, before, e.lhs)});
    }

    MachineState back_impl(const Trace& trace, const MachineState& current, const PathEntry&) override
    {
        const auto v = saved_.back();
        saved_.pop_back();
        auto s = with_cell(current, trace.exe, v.loc, v.value);
        interp::unwind_control(trace.path, s);
        return s;
    }

    std::uint64_t saved_ints() const override { return saved_.size(); }

private:
    std::vector<SavedValue> saved_;
};

class Checkpointing final : public Engine {
public:
    Checkpointing(const Executable& exe, std::set<lang::CommandId> points)
    {
        reset_points(exe, std::move(points));
    }

    EngineType type() const override { return EngineType::checkpointing; }

    void reset_points(const Executable& exe, std::set<lang::CommandId> points)
    {
        if (points.empty()) {
            points = default_checkpoints(exe);
        }
        for (auto id : points) {
            if (id < 0 || static_cast<std::size_t>(id) >= exe.program().commands.size()) {
                throw Error(ErrorKind::request, "unknown-command-id",
                            "no command with id " + std::to_string(id));
            }
            if (!exe.program().command(id).state_changing()) {
                throw Error(ErrorKind::request, "not-state-changing",
                            "checkpoint command " + std::to_string(id) + " changes no state");
            }
        }
        points_ = std::move(points);
    }

    const std::set<lang::CommandId>& points() const { return points_; }

protected:
    void forward_impl(const Trace& trace, const MachineState& before, const PathEntry& e) override
    {
        if (intervals_.empty() || points_.count(e.command)) {
            intervals_.push_back({e.seq, {}});
        }
        auto& saved = intervals_.back().saved;
        if (!saved.count(e.lhs)) {
            saved.emplace(e.lhs, std::make_pair(interp::read(trace.exe, before, e.lhs), e.seq));
        }
    }

    MachineState back_impl(const Trace& trace, const MachineState& current, const PathEntry& e) override
    {
        auto& interval = intervals_.back();
        const Seq start = interval.start;

        // state at the checkpoint that opened this interval
        MachineState s = current;
        for (const auto& [loc, saved] : interval.saved) {
            s.cells[trace.exe.slot(loc)] = saved.first;
        }
        s.resume_after = interp::control_at(trace.exe, trace.path, start - 1);
        s.steps = start - 1;

        // forward to just before e, steered by the recorded switch log
        ExecutionPath scratch_path;
        ExecutionLog scratch_log;
        for (Seq j = start; j < e.seq; ++j) {
            const auto t = trace.log.thread_at(j);
            if (!t) {
                throw Error(ErrorKind::replay, "divergence", "no thread logged for seq " + std::to_string(j));
            }
            const auto r = interp::step(trace.exe, s, scratch_path, scratch_log, *t);
            if (r.entry.command != trace.path.at(j).command || r.entry.lhs != trace.path.at(j).lhs) {
                throw Error(ErrorKind::replay, "divergence",
                            "re-execution from checkpoint diverged at seq " + std::to_string(j));
            }
        }

        std::erase_if(interval.saved, [&](const auto& kv) { return kv.second.second == e.seq; });
        if (e.seq == start) {
            intervals_.pop_back();
        }
        return s;
    }

    std::uint64_t saved_ints() const override
    {
        std::uint64_t n = 0;
        for (const auto& i : intervals_) {
            n += i.saved.size();
        }
        return n;
    }

private:
    struct Interval {
        Seq start = 0;
        // first write wins: value before the interval, seq of that first write
        std::map<Location, std::pair<std::int64_t, Seq>> saved;
    };

    std::set<lang::CommandId> points_;
    std::vector<Interval> intervals_;
};

class StaticReverseCode final : public Engine {
public:
    explicit StaticReverseCode(const Executable& exe) : classes_(revgen::classify_static(exe)) {}

    EngineType type() const override { return EngineType::static_rcg; }

protected:
    void forward_impl(const Trace& trace, const MachineState& before, const PathEntry& e) override
    {
        if (classes_.at(e.command) == revgen::StaticClass::state_save) {
            saved_.push_back({e.seq, e.lhs, interp::read(trace.exe, before, e.lhs)});
        }
    }

    MachineState back_impl(const Trace& trace, const MachineState& current, const PathEntry& e) override
    {
        MachineState s;
        if (!saved_.empty() && saved_.back().seq == e.seq) {
            s = with_cell(current, trace.exe, saved_.back().loc, saved_.back().value);
            saved_.pop_back();
        } else {
            const auto rhs = revgen::static_inverse(trace.exe, e);
            s = with_cell(current, trace.exe, e.lhs, interp::evaluate(trace.exe, current, *rhs));
        }
        interp::unwind_control(trace.path, s);
        return s;
    }

    std::uint64_t saved_ints() const override { return saved_.size(); }

private:
    std::map<lang::CommandId, revgen::StaticClass> classes_;
    std::vector<SavedValue> saved_;
};

class DynamicReverseCode final : public Engine {
public:
    DynamicReverseCode(std::optional<std::size_t> retention, std::size_t budget)
        : retention_(retention), budget_(budget)
    {
    }

    EngineType type() const override { return EngineType::dynamic_rcg; }

protected:
    void forward_impl(const Trace& trace, const MachineState& before, const PathEntry& e) override
    {
        auto code = revgen::gen_reverse(trace.exe, trace.path, e.seq, budget_);
        if (!code) {
            saved_.push_back({e.seq, e.lhs, interp::read(trace.exe, before, e.lhs)});
        } else {
            retained_.push_back(std::move(*code));
        }
        trim(e.seq);
    }

    MachineState back_impl(const Trace& trace, const MachineState& current, const PathEntry& e) override
    {
        MachineState s;
        if (!saved_.empty() && saved_.back().seq == e.seq) {
            s = with_cell(current, trace.exe, saved_.back().loc, saved_.back().value);
            saved_.pop_back();
        } else {
            revgen::ReverseCode code;
            if (!retained_.empty() && retained_.back().seq == e.seq) {
                code = std::move(retained_.back());
                retained_.pop_back();
            } else {
                auto regenerated = revgen::gen_reverse(trace.exe, trace.path, e.seq, budget_);
                if (!regenerated) {
                    throw Error(ErrorKind::internal, "regeneration-failed",
                                "reverse code for entry " + std::to_string(e.seq) +
                                    " could not be regenerated");
                }
                code = std::move(*regenerated);
            }
            s = revgen::execute_reverse(trace.exe, current, code);
        }
        interp::unwind_control(trace.path, s);
        refill(trace, e.seq - 1);
        return s;
    }

    std::uint64_t saved_ints() const override { return saved_.size(); }

    std::uint64_t retained_cmds() const override
    {
        std::uint64_t n = 0;
        for (const auto& c : retained_) {
            n += c.steps.size();
        }
        return n;
    }

private:
    // Keep code only for the last w entries of the path.
    void trim(Seq len)
    {
        if (!retention_) {
            return;
        }
        while (!retained_.empty() && retained_.front().seq + *retention_ <= len) {
            retained_.pop_front();
        }
    }

    bool is_saved(Seq seq) const
    {
        auto it = std::lower_bound(saved_.begin(), saved_.end(), seq,
                                   [](const SavedValue& v, Seq s) { return v.seq < s; });
        return it != saved_.end() && it->seq == seq;
    }

    // After a back, regenerate the code that slid back into the window.
    void refill(const Trace& trace, Seq len)
    {
        if (!retention_ || *retention_ == 0 || len <= *retention_) {
            return;
        }
        const Seq want = len - *retention_ + 1;
        if (want < 1 || is_saved(want)) {
            return;
        }
        if (!retained_.empty() && retained_.front().seq <= want) {
            return;
        }
        if (auto code = revgen::gen_reverse(trace.exe, trace.path, want, budget_)) {
            retained_.push_front(std::move(*code));
        }
    }

    std::optional<std::size_t> retention_;
    std::size_t budget_;
    std::vector<SavedValue> saved_;
    std::deque<revgen::ReverseCode> retained_;
};

} // namespace

std::unique_ptr<Engine> make_engine(const EngineKind& kind, const Executable& exe)
{
    switch (kind.type) {
    case EngineType::basic_ss: return std::make_unique<BasicStateSaving>(exe);
    case EngineType::incremental_ss: return std::make_unique<IncrementalStateSaving>();
    case EngineType::checkpointing: return std::make_unique<Checkpointing>(exe, kind.checkpoints);
    case EngineType::static_rcg: return std::make_unique<StaticReverseCode>(exe);
    case EngineType::dynamic_rcg:
        return std::make_unique<DynamicReverseCode>(kind.retention, kind.budget);
    }
    throw Error(ErrorKind::internal, "bad-engine", "unknown engine type");
}

std::set<lang::CommandId> default_checkpoints(const Executable& exe)
{
    const auto& prog = exe.program();
    std::set<lang::CommandId> out;

    auto first_primitive = [&](lang::CommandId root) -> lang::CommandId {
        // preorder ids: the first state-changing command inside root's subtree
        std::vector<lang::CommandId> stack{root};
        while (!stack.empty()) {
            const auto id = stack.back();
            stack.pop_back();
            const auto& c = prog.command(id);
            if (c.state_changing()) {
                return id;
            }
            for (auto it = c.children.rbegin(); it != c.children.rend(); ++it) {
                stack.push_back(*it);
            }
        }
        return lang::kNoCommand;
    };

    for (const auto& c : prog.commands) {
        if (c.kind == lang::CommandKind::while_) {
            const auto id = first_primitive(c.children.front());
            if (id != lang::kNoCommand) {
                out.insert(id);
            }
        }
    }
    if (out.empty()) {
        for (const auto& t : prog.threads) {
            const auto id = first_primitive(t.body);
            if (id != lang::kNoCommand) {
                out.insert(id);
            }
        }
    }
    return out;
}

std::set<lang::CommandId> checkpoints_at_lines(const Executable& exe, const std::vector<int>& lines)
{
    std::set<lang::CommandId> out;
    for (int line : lines) {
        const auto ids = exe.program().commands_at_line(line);
        if (ids.empty()) {
            throw Error(ErrorKind::request, "unknown-line",
                        "no state-changing command on line " + std::to_string(line));
        }
        out.insert(ids.begin(), ids.end());
    }
    return out;
}

void set_checkpoints(Engine& engine, const Executable& exe, std::set<lang::CommandId> points)
{
    auto* cp = dynamic_cast<Checkpointing*>(&engine);
    if (!cp) {
        throw Error(ErrorKind::request, "not-checkpointing",
                    "checkpoints apply to the checkpointing engine only");
    }
    if (points.empty()) {
        throw Error(ErrorKind::request, "empty-checkpoints", "checkpoint set must not be empty");
    }
    cp->reset_points(exe, std::move(points));
}

} // namespace retro::engines
