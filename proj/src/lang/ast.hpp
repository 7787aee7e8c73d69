#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace retro::lang {

using VarId = std::int32_t;
using CommandId = std::int32_t;

inline constexpr CommandId kNoCommand = -1;

struct VarRef {
    std::string name;
    VarId id = -1;

    bool operator==(const VarRef&) const = default;
};

enum class BinOp { add, sub, mul, div, mod };

const char* to_string(BinOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Arithmetic expression. Immutable once built; subtrees are shared freely.
struct Expr {
    enum class Kind { literal, constant, var, elem, binary };

    Kind kind = Kind::literal;
    std::int64_t value = 0; // literal
    std::string name;       // constant
    VarRef var;             // var, elem
    BinOp op = BinOp::add;  // binary
    ExprPtr lhs;            // binary lhs, elem index
    ExprPtr rhs;

    static ExprPtr literal(std::int64_t v);
    static ExprPtr constant(std::string name);
    static ExprPtr variable(VarRef var);
    static ExprPtr element(VarRef var, ExprPtr index);
    static ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs);

    const ExprPtr& index() const { return lhs; }
};

bool structurally_equal(const Expr& a, const Expr& b);

enum class CmpOp { eq, gt };

struct Cond;
using CondPtr = std::shared_ptr<const Cond>;

// Boolean expression; only appears in if/while guards.
struct Cond {
    enum class Kind { boolean, compare, negate };

    Kind kind = Kind::boolean;
    bool value = false;
    CmpOp op = CmpOp::eq;
    ExprPtr lhs;
    ExprPtr rhs;
    CondPtr inner;

    static CondPtr boolean(bool v);
    static CondPtr compare(CmpOp op, ExprPtr lhs, ExprPtr rhs);
    static CondPtr negate(CondPtr inner);
};

bool structurally_equal(const Cond& a, const Cond& b);

// Array sizes and scalar initializers may name a compile-time constant.
struct IntOrConst {
    std::int64_t value = 0;
    std::string constant; // non-empty when symbolic

    bool symbolic() const { return !constant.empty(); }
    bool operator==(const IntOrConst&) const = default;
};

struct VarDecl {
    std::string name;
    int thread = -1; // -1 for globals, else index into Program::threads
    bool is_array = false;
    IntOrConst size; // arrays only
    std::optional<IntOrConst> scalar_init;
    std::optional<std::vector<std::int64_t>> array_init;
    int line = 0;

    bool is_global() const { return thread < 0; }
};

enum class CommandKind { assign, skip, seq, if_, while_, wait, signal };

struct Command {
    CommandKind kind = CommandKind::skip;
    CommandId id = kNoCommand;
    CommandId parent = kNoCommand;
    int thread = -1;
    int line = 0;

    // assign
    VarRef target;
    ExprPtr target_index; // null for scalar targets
    ExprPtr value;

    // if / while
    CondPtr guard;

    // seq children; if: {then, else}; while: {body}
    std::vector<CommandId> children;

    // wait / signal
    VarRef semaphore;

    bool state_changing() const
    {
        return kind == CommandKind::assign || kind == CommandKind::wait ||
               kind == CommandKind::signal;
    }
};

struct ThreadDef {
    std::string name;
    std::vector<VarId> locals;
    CommandId body = kNoCommand;
};

// A parsed program. Commands are stored in a flat table indexed by CommandId;
// ids are assigned in source (pre-)order and therefore stable across reparses.
struct Program {
    std::vector<VarDecl> vars;
    std::vector<ThreadDef> threads;
    std::vector<Command> commands;
    std::set<std::string> constant_names;

    std::vector<VarId> globals() const;
    const Command& command(CommandId id) const { return commands.at(static_cast<std::size_t>(id)); }
    const VarDecl& var(VarId id) const { return vars.at(static_cast<std::size_t>(id)); }
    int thread_index(const std::string& name) const;
    // First declaration with this name; -1 if none.
    VarId var_index(const std::string& name) const;

    // All state-changing commands on the given source line.
    std::vector<CommandId> commands_at_line(int line) const;
};

bool structurally_equal(const Program& a, const Program& b);

// A syntactic location: a scalar or an array cell with its index expression.
struct SyntacticLocation {
    VarRef var;
    ExprPtr index; // null for scalars
};

// Left-hand side of an assignment.
SyntacticLocation lhs_of(const Command& assignment);

// Reads performed by an assignment: rhs variables and array reads, plus
// index expressions of the lhs. Array reads are reported with their index.
std::vector<SyntacticLocation> rhs_vars(const Command& assignment);

// Render a location or expression in surface syntax.
std::string render(const SyntacticLocation& loc);
std::string render(const Expr& e);
std::string render(const Cond& c);

} // namespace retro::lang
