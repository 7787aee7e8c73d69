#include "revgen/revgen.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace retro::revgen {

using interp::ExecutionPath;
using interp::Executable;
using interp::PathEntry;
using lang::BinOp;
using lang::Expr;
using lang::ExprPtr;

const char* to_string(Technique t)
{
    switch (t) {
    case Technique::redefine: return "redefine";
    case Technique::extract_from_use: return "extract-from-use";
    case Technique::init_def: return "init-def";
    }
    return "?";
}

const char* to_string(StaticClass c)
{
    return c == StaticClass::self_inverse ? "self-inverse" : "state-save";
}

std::optional<Seq> reaching_definition(const ExecutionPath& path, const Location& target, Seq before)
{
    const Seq last = std::min<Seq>(before, path.size() + 1);
    for (Seq r = last; r-- > 1;) {
        if (path.at(r).lhs == target) {
            return r;
        }
    }
    return std::nullopt;
}

namespace {

void collect(const Expr& e, std::vector<Location>& out)
{
    switch (e.kind) {
    case Expr::Kind::literal:
    case Expr::Kind::constant:
        return;
    case Expr::Kind::var:
        out.push_back({e.var.id, 0});
        return;
    case Expr::Kind::elem:
        if (e.index()->kind != Expr::Kind::literal) {
            throw Error(ErrorKind::internal, "not-concrete", "expression has an unevaluated index");
        }
        out.push_back({e.var.id, e.index()->value});
        return;
    case Expr::Kind::binary:
        collect(*e.lhs, out);
        collect(*e.rhs, out);
        return;
    }
}

bool is_read_of(const Expr& e, const Location& x)
{
    if (e.kind == Expr::Kind::var) {
        return e.var.id == x.var && x.index == 0;
    }
    if (e.kind == Expr::Kind::elem && e.index()->kind == Expr::Kind::literal) {
        return e.var.id == x.var && e.index()->value == x.index;
    }
    return false;
}

bool reads(const Expr& e, const Location& x)
{
    std::vector<Location> r;
    collect(e, r);
    return std::find(r.begin(), r.end(), x) != r.end();
}

} // namespace

std::vector<Location> reads_of(const Expr& e)
{
    std::vector<Location> out;
    collect(e, out);
    return out;
}

ExprPtr location_expr(const Executable& exe, const Location& loc)
{
    lang::VarRef ref{exe.var_name(loc.var), loc.var};
    if (exe.program().var(loc.var).is_array) {
        return Expr::element(std::move(ref), Expr::literal(loc.index));
    }
    return Expr::variable(std::move(ref));
}

ExprPtr InvertibleForm::inverse(ExprPtr produced, ExprPtr other_value) const
{
    switch (shape) {
    case Shape::x_plus_e:
    case Shape::e_plus_x:
        return Expr::binary(BinOp::sub, std::move(produced), std::move(other_value));
    case Shape::x_minus_e:
        return Expr::binary(BinOp::add, std::move(produced), std::move(other_value));
    case Shape::e_minus_x:
        return Expr::binary(BinOp::sub, std::move(other_value), std::move(produced));
    case Shape::x_times_e:
    case Shape::e_times_x:
        return Expr::binary(BinOp::div, std::move(produced), std::move(other_value));
    }
    return produced;
}

namespace {

std::optional<InvertibleForm> match_form(const ExprPtr& rhs, const Location& x,
                                         bool (*multiplier_ok)(const Expr&, const void*),
                                         const void* ctx)
{
    if (!rhs || rhs->kind != Expr::Kind::binary) {
        return std::nullopt;
    }
    const bool x_left = is_read_of(*rhs->lhs, x) && !reads(*rhs->rhs, x);
    const bool x_right = is_read_of(*rhs->rhs, x) && !reads(*rhs->lhs, x);
    if (!x_left && !x_right) {
        return std::nullopt;
    }
    InvertibleForm f;
    f.x = x;
    f.other = x_left ? rhs->rhs : rhs->lhs;
    switch (rhs->op) {
    case BinOp::add:
        f.shape = x_left ? InvertibleForm::Shape::x_plus_e : InvertibleForm::Shape::e_plus_x;
        return f;
    case BinOp::sub:
        f.shape = x_left ? InvertibleForm::Shape::x_minus_e : InvertibleForm::Shape::e_minus_x;
        return f;
    case BinOp::mul:
        if (!multiplier_ok(*f.other, ctx)) {
            return std::nullopt;
        }
        f.shape = x_left ? InvertibleForm::Shape::x_times_e : InvertibleForm::Shape::e_times_x;
        return f;
    case BinOp::div:
    case BinOp::mod:
        return std::nullopt;
    }
    return std::nullopt;
}

bool nonzero_literal(const Expr& e, const void*)
{
    return e.kind == Expr::Kind::literal && e.value != 0;
}

bool nonzero_constant_operand(const Expr& e, const void* ctx)
{
    const auto& exe = *static_cast<const Executable*>(ctx);
    switch (e.kind) {
    case Expr::Kind::literal: return e.value != 0;
    case Expr::Kind::constant: return exe.constant(e.name) != 0;
    case Expr::Kind::var:
        return exe.never_written(e.var.id) && exe.initial_value({e.var.id, 0}) != 0;
    default: return false;
    }
}

} // namespace

std::optional<InvertibleForm> match_invertible(const ExprPtr& rhs, const Location& x)
{
    return match_form(rhs, x, nonzero_literal, nullptr);
}

namespace {

// Derives, for a (location, time) pair, an expression over the current state
// (just after entry n) that evaluates to the value the location held just
// after entry `time`.
class Generator {
public:
    Generator(const Executable& exe, const ExecutionPath& path, Seq n, std::size_t budget)
        : exe_(exe), path_(path), n_(n), budget_(budget)
    {
        for (Seq k = 1; k <= n_; ++k) {
            writes_[path_.at(k).lhs].push_back(k);
        }
    }

    struct Derived {
        ExprPtr expr;
        std::vector<Provenance> prov; // empty when read directly from the current state
    };

    std::optional<Derived> value(const Location& v, Seq time)
    {
        const auto w = first_write_after(v, time);
        if (!w) {
            return Derived{location_expr(exe_, v), {}};
        }
        // an older value of a location already being restored would make the
        // derivation depend on its own history
        for (const auto& [loc, t] : stack_) {
            if (loc == v && t >= time) {
                return std::nullopt;
            }
        }
        if (budget_ == 0) {
            return std::nullopt;
        }
        --budget_;
        stack_.emplace_back(v, time);
        auto result = derive(v, time, *w);
        stack_.pop_back();
        return result;
    }

private:
    std::optional<Seq> first_write_after(const Location& v, Seq time) const
    {
        auto it = writes_.find(v);
        if (it == writes_.end()) {
            return std::nullopt;
        }
        auto pos = std::upper_bound(it->second.begin(), it->second.end(), time);
        if (pos == it->second.end()) {
            return std::nullopt;
        }
        return *pos;
    }

    std::optional<Seq> last_write_upto(const Location& v, Seq time) const
    {
        auto it = writes_.find(v);
        if (it == writes_.end()) {
            return std::nullopt;
        }
        auto pos = std::upper_bound(it->second.begin(), it->second.end(), time);
        if (pos == it->second.begin()) {
            return std::nullopt;
        }
        return *std::prev(pos);
    }

    // Rebuilds e with every read replaced by its value just after `time`.
    std::optional<Derived> substitute(const ExprPtr& e, Seq time)
    {
        switch (e->kind) {
        case Expr::Kind::literal:
            return Derived{e, {}};
        case Expr::Kind::constant:
            return Derived{Expr::literal(exe_.constant(e->name)), {}};
        case Expr::Kind::var:
        case Expr::Kind::elem: {
            const Location loc = reads_of(*e).front();
            return value(loc, time);
        }
        case Expr::Kind::binary: {
            auto l = substitute(e->lhs, time);
            if (!l) {
                return std::nullopt;
            }
            auto r = substitute(e->rhs, time);
            if (!r) {
                return std::nullopt;
            }
            Derived d{Expr::binary(e->op, l->expr, r->expr), std::move(l->prov)};
            d.prov.insert(d.prov.end(), r->prov.begin(), r->prov.end());
            return d;
        }
        }
        return std::nullopt;
    }

    // Inverts use u of v: v = f^-1(lhs(u) just after u, other operands just before u).
    std::optional<Derived> invert_use(const Location& v, Seq time, Seq u, const InvertibleForm& form)
    {
        const auto& use = path_.at(u);
        auto produced = value(use.lhs, u);
        if (!produced) {
            return std::nullopt;
        }
        auto other = substitute(form.other, u - 1);
        if (!other) {
            return std::nullopt;
        }
        Provenance p{Technique::extract_from_use, v, time, u, std::move(produced->prov)};
        p.children.insert(p.children.end(), other->prov.begin(), other->prov.end());
        return Derived{form.inverse(produced->expr, other->expr), {std::move(p)}};
    }

    std::optional<Derived> derive(const Location& v, Seq time, Seq w)
    {
        // self-defined invertible write: v := f(v) inverts in place
        if (auto form = match_invertible(path_.at(w).rhs, v)) {
            if (auto d = invert_use(v, time, w, *form)) {
                return d;
            }
        }

        // redefine
        const auto rd = last_write_upto(v, time);
        if (!rd) {
            Provenance p{Technique::init_def, v, time, 0, {}};
            return Derived{Expr::literal(exe_.initial_value(v)), {std::move(p)}};
        }
        if (auto d = substitute(path_.at(*rd).rhs, *rd - 1)) {
            Provenance p{Technique::redefine, v, time, *rd, std::move(d->prov)};
            return Derived{d->expr, {std::move(p)}};
        }

        // extract-from-use: a later command that read this very value
        for (Seq u = *rd + 1; u < w; ++u) {
            const auto& use = path_.at(u);
            if (use.lhs == v) {
                continue;
            }
            if (auto form = match_invertible(use.rhs, v)) {
                if (auto d = invert_use(v, time, u, *form)) {
                    return d;
                }
            }
        }
        return std::nullopt;
    }

    const Executable& exe_;
    const ExecutionPath& path_;
    Seq n_;
    std::size_t budget_;
    std::map<Location, std::vector<Seq>> writes_;
    std::vector<std::pair<Location, Seq>> stack_;
};

} // namespace

std::optional<ReverseCode> gen_reverse(const Executable& exe, const ExecutionPath& path, Seq n,
                                       std::size_t budget)
{
    if (n < 1 || n > path.size()) {
        throw Error(ErrorKind::request, "seq-out-of-range",
                    "entry " + std::to_string(n) + " is not on the path (length " +
                        std::to_string(path.size()) + ")");
    }
    const auto& entry = path.at(n);
    ReverseCode code;
    code.seq = n;
    code.target = entry.lhs;

    // x := x cannot change x
    if (is_read_of(*entry.rhs, entry.lhs)) {
        return code;
    }

    Generator gen(exe, path, n, budget);
    auto d = gen.value(entry.lhs, n - 1);
    if (!d) {
        return std::nullopt;
    }
    ReverseStep step;
    step.lhs = entry.lhs;
    step.rhs = d->expr;
    if (!d->prov.empty()) {
        step.provenance = std::move(d->prov.front());
    }
    code.steps.push_back(std::move(step));
    return code;
}

interp::MachineState execute_reverse(const Executable& exe, interp::MachineState state,
                                     const ReverseCode& code)
{
    for (const auto& s : code.steps) {
        try {
            state.cells[exe.slot(s.lhs)] = interp::evaluate(exe, state, *s.rhs);
        } catch (const Error& e) {
            throw Error(ErrorKind::internal, "reverse-execution-failed",
                        "reverse code for entry " + std::to_string(code.seq) + " failed: " + e.what());
        }
    }
    return state;
}

std::map<lang::CommandId, StaticClass> classify_static(const Executable& exe)
{
    std::map<lang::CommandId, StaticClass> out;
    for (const auto& c : exe.program().commands) {
        switch (c.kind) {
        case lang::CommandKind::wait:
        case lang::CommandKind::signal:
            out[c.id] = StaticClass::self_inverse;
            break;
        case lang::CommandKind::assign: {
            auto cls = StaticClass::state_save;
            if (!c.target_index) {
                const Location x{c.target.id, 0};
                if (auto form = match_form(c.value, x, nonzero_constant_operand, &exe)) {
                    const auto& o = *form->other;
                    const bool constant_operand =
                        o.kind == Expr::Kind::literal || o.kind == Expr::Kind::constant ||
                        (o.kind == Expr::Kind::var && !exe.program().var(o.var.id).is_array &&
                         exe.never_written(o.var.id));
                    if (constant_operand) {
                        cls = StaticClass::self_inverse;
                    }
                }
            }
            out[c.id] = cls;
            break;
        }
        default:
            break;
        }
    }
    return out;
}

ExprPtr static_inverse(const Executable& exe, const PathEntry& entry)
{
    auto form = match_form(entry.rhs, entry.lhs, nonzero_constant_operand, &exe);
    if (!form) {
        throw Error(ErrorKind::internal, "not-self-inverse",
                    "entry " + std::to_string(entry.seq) + " has no fixed inverse");
    }
    ExprPtr other = form->other;
    if (other->kind == Expr::Kind::var) {
        other = location_expr(exe, {other->var.id, 0});
    }
    return form->inverse(location_expr(exe, entry.lhs), other);
}

std::string render_expr(const Executable&, const Expr& e)
{
    return lang::render(e);
}

std::string render_provenance(const Provenance& p)
{
    std::string out = to_string(p.technique);
    if (p.technique != Technique::init_def) {
        out += "@" + std::to_string(p.used_seq);
    }
    if (!p.children.empty()) {
        out += "(";
        for (std::size_t i = 0; i < p.children.size(); ++i) {
            out += (i ? ", " : "") + render_provenance(p.children[i]);
        }
        out += ")";
    }
    return out;
}

std::string render(const Executable& exe, const ReverseCode& code)
{
    std::string out;
    for (const auto& s : code.steps) {
        out += exe.location_name(s.lhs) + " := " + render_expr(exe, *s.rhs) + ";  // " +
               render_provenance(s.provenance) + "\n";
    }
    return out;
}

} // namespace retro::revgen
