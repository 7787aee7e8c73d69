#include "lang/ast.hpp"

#include <algorithm>
#include <stdexcept>

#include "common/error.hpp"

namespace retro {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::load: return "load";
    case ErrorKind::runtime: return "runtime";
    case ErrorKind::schedule: return "schedule";
    case ErrorKind::replay: return "replay";
    case ErrorKind::engine: return "engine";
    case ErrorKind::request: return "request";
    case ErrorKind::internal: return "internal";
    }
    return "internal";
}

} // namespace retro

namespace retro::lang {

const char* to_string(BinOp op)
{
    switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
    case BinOp::mod: return "%";
    }
    return "?";
}

ExprPtr Expr::literal(std::int64_t v)
{
    auto e = std::make_shared<Expr>();
    e->kind = Kind::literal;
    e->value = v;
    return e;
}

ExprPtr Expr::constant(std::string name)
{
    auto e = std::make_shared<Expr>();
    e->kind = Kind::constant;
    e->name = std::move(name);
    return e;
}

ExprPtr Expr::variable(VarRef var)
{
    auto e = std::make_shared<Expr>();
    e->kind = Kind::var;
    e->var = std::move(var);
    return e;
}

ExprPtr Expr::element(VarRef var, ExprPtr index)
{
    auto e = std::make_shared<Expr>();
    e->kind = Kind::elem;
    e->var = std::move(var);
    e->lhs = std::move(index);
    return e;
}

ExprPtr Expr::binary(BinOp op, ExprPtr lhs, ExprPtr rhs)
{
    auto e = std::make_shared<Expr>();
    e->kind = Kind::binary;
    e->op = op;
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
}

CondPtr Cond::boolean(bool v)
{
    auto c = std::make_shared<Cond>();
    c->kind = Kind::boolean;
    c->value = v;
    return c;
}

CondPtr Cond::compare(CmpOp op, ExprPtr lhs, ExprPtr rhs)
{
    auto c = std::make_shared<Cond>();
    c->kind = Kind::compare;
    c->op = op;
    c->lhs = std::move(lhs);
    c->rhs = std::move(rhs);
    return c;
}

CondPtr Cond::negate(CondPtr inner)
{
    auto c = std::make_shared<Cond>();
    c->kind = Kind::negate;
    c->inner = std::move(inner);
    return c;
}

namespace {

bool ptr_equal(const ExprPtr& a, const ExprPtr& b)
{
    if (!a || !b) {
        return !a && !b;
    }
    return structurally_equal(*a, *b);
}

bool ptr_equal(const CondPtr& a, const CondPtr& b)
{
    if (!a || !b) {
        return !a && !b;
    }
    return structurally_equal(*a, *b);
}

int precedence(const Expr& e)
{
    if (e.kind != Expr::Kind::binary) {
        return 3;
    }
    return (e.op == BinOp::add || e.op == BinOp::sub) ? 1 : 2;
}

void render_into(const Expr& e, std::string& out)
{
    switch (e.kind) {
    case Expr::Kind::literal:
        out += std::to_string(e.value);
        return;
    case Expr::Kind::constant:
        out += e.name;
        return;
    case Expr::Kind::var:
        out += e.var.name;
        return;
    case Expr::Kind::elem:
        out += e.var.name;
        out += '[';
        render_into(*e.index(), out);
        out += ']';
        return;
    case Expr::Kind::binary: {
        const int p = precedence(e);
        const bool lp = precedence(*e.lhs) < p;
        const bool rp = precedence(*e.rhs) <= p;
        if (lp) out += '(';
        render_into(*e.lhs, out);
        if (lp) out += ')';
        out += ' ';
        out += to_string(e.op);
        out += ' ';
        if (rp) out += '(';
        render_into(*e.rhs, out);
        if (rp) out += ')';
        return;
    }
    }
}

void collect_reads(const ExprPtr& e, std::vector<SyntacticLocation>& out)
{
    if (!e) {
        return;
    }
    switch (e->kind) {
    case Expr::Kind::literal:
    case Expr::Kind::constant:
        return;
    case Expr::Kind::var:
        out.push_back({e->var, nullptr});
        return;
    case Expr::Kind::elem:
        out.push_back({e->var, e->index()});
        collect_reads(e->index(), out);
        return;
    case Expr::Kind::binary:
        collect_reads(e->lhs, out);
        collect_reads(e->rhs, out);
        return;
    }
}

} // namespace

bool structurally_equal(const Expr& a, const Expr& b)
{
    if (a.kind != b.kind) {
        return false;
    }
    switch (a.kind) {
    case Expr::Kind::literal: return a.value == b.value;
    case Expr::Kind::constant: return a.name == b.name;
    case Expr::Kind::var: return a.var == b.var;
    case Expr::Kind::elem: return a.var == b.var && ptr_equal(a.lhs, b.lhs);
    case Expr::Kind::binary:
        return a.op == b.op && ptr_equal(a.lhs, b.lhs) && ptr_equal(a.rhs, b.rhs);
    }
    return false;
}

bool structurally_equal(const Cond& a, const Cond& b)
{
    if (a.kind != b.kind) {
        return false;
    }
    switch (a.kind) {
    case Cond::Kind::boolean: return a.value == b.value;
    case Cond::Kind::compare:
        return a.op == b.op && ptr_equal(a.lhs, b.lhs) && ptr_equal(a.rhs, b.rhs);
    case Cond::Kind::negate: return ptr_equal(a.inner, b.inner);
    }
    return false;
}

std::vector<VarId> Program::globals() const
{
    std::vector<VarId> out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].is_global()) {
            out.push_back(static_cast<VarId>(i));
        }
    }
    return out;
}

int Program::thread_index(const std::string& name) const
{
    for (std::size_t i = 0; i < threads.size(); ++i) {
        if (threads[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

VarId Program::var_index(const std::string& name) const
{
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].name == name) {
            return static_cast<VarId>(i);
        }
    }
    return -1;
}

std::vector<CommandId> Program::commands_at_line(int line) const
{
    std::vector<CommandId> out;
    for (const auto& c : commands) {
        if (c.line == line && c.state_changing()) {
            out.push_back(c.id);
        }
    }
    return out;
}

bool structurally_equal(const Program& a, const Program& b)
{
    if (a.vars.size() != b.vars.size() || a.threads.size() != b.threads.size() ||
        a.commands.size() != b.commands.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.vars.size(); ++i) {
        const auto& x = a.vars[i];
        const auto& y = b.vars[i];
        if (x.name != y.name || x.thread != y.thread || x.is_array != y.is_array ||
            x.size != y.size || x.scalar_init != y.scalar_init || x.array_init != y.array_init) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.threads.size(); ++i) {
        const auto& x = a.threads[i];
        const auto& y = b.threads[i];
        if (x.name != y.name || x.locals != y.locals || x.body != y.body) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.commands.size(); ++i) {
        const auto& x = a.commands[i];
        const auto& y = b.commands[i];
        if (x.kind != y.kind || x.id != y.id || x.parent != y.parent || x.thread != y.thread ||
            x.children != y.children || !(x.target == y.target) ||
            !(x.semaphore == y.semaphore) || !ptr_equal(x.target_index, y.target_index) ||
            !ptr_equal(x.value, y.value) || !ptr_equal(x.guard, y.guard)) {
            return false;
        }
    }
    return true;
}

SyntacticLocation lhs_of(const Command& assignment)
{
    if (assignment.kind != CommandKind::assign) {
        throw Error(ErrorKind::internal, "not-an-assignment", "lhs_of: command is not an assignment");
    }
    return {assignment.target, assignment.target_index};
}

std::vector<SyntacticLocation> rhs_vars(const Command& assignment)
{
    if (assignment.kind != CommandKind::assign) {
        throw Error(ErrorKind::internal, "not-an-assignment", "rhs_vars: command is not an assignment");
    }
    std::vector<SyntacticLocation> reads;
    collect_reads(assignment.target_index, reads);
    collect_reads(assignment.value, reads);

    // set semantics: drop repeated occurrences of the same syntactic read
    std::vector<SyntacticLocation> out;
    std::vector<std::string> seen;
    for (auto& r : reads) {
        auto key = render(r);
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
            seen.push_back(std::move(key));
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::string render(const SyntacticLocation& loc)
{
    if (!loc.index) {
        return loc.var.name;
    }
    return loc.var.name + "[" + render(*loc.index) + "]";
}

std::string render(const Expr& e)
{
    std::string out;
    render_into(e, out);
    return out;
}

std::string render(const Cond& c)
{
    switch (c.kind) {
    case Cond::Kind::boolean: return c.value ? "true" : "false";
    case Cond::Kind::compare:
        return render(*c.lhs) + (c.op == CmpOp::eq ? " == " : " > ") + render(*c.rhs);
    case Cond::Kind::negate: {
        const bool paren = c.inner->kind == Cond::Kind::compare;
        return paren ? "!(" + render(*c.inner) + ")" : "!" + render(*c.inner);
    }
    }
    return "";
}

} // namespace retro::lang
