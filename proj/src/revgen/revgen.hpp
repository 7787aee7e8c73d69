#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "interp/executable.hpp"
#include "interp/machine.hpp"
#include "lang/ast.hpp"

// Reverse-code generation over a concrete execution path.
//
// Reverse code for entry n of a path is executed in the state just after that
// entry (backtracking is LIFO, so every later entry has been undone already)
// and sets the entry's target back to its previous value. Generation reads the
// path and the program only; it never looks at data values.
namespace retro::revgen {

using interp::Location;
using interp::Seq;

enum class Technique { redefine, extract_from_use, init_def };

const char* to_string(Technique t);

// Which technique produced a value, for which (location, time), using which
// path entry; children are the operands that had to be restored first.
struct Provenance {
    Technique technique = Technique::init_def;
    Location location;
    Seq time = 0;     // value wanted is the one held just after entry `time`
    Seq used_seq = 0; // entry re-executed or inverted; 0 for init-def
    std::vector<Provenance> children;
};

struct ReverseStep {
    Location lhs;
    lang::ExprPtr rhs; // over concrete locations and literals
    Provenance provenance;
};

struct ReverseCode {
    Seq seq = 0;
    Location target;
    std::vector<ReverseStep> steps; // empty only if the entry cannot change target
};

inline constexpr std::size_t kDefaultBudget = 64;

// Greatest r < before with lhs(entry r) == target; nullopt means the
// declaration's initializer is the reaching definition.
std::optional<Seq> reaching_definition(const interp::ExecutionPath& path, const Location& target,
                                       Seq before);

// rhs viewed as f(x) for one distinguished read x:
// x+e, e+x, x-e, e-x, x*e, e*x.
struct InvertibleForm {
    enum class Shape { x_plus_e, e_plus_x, x_minus_e, e_minus_x, x_times_e, e_times_x };

    Shape shape = Shape::x_plus_e;
    Location x;
    lang::ExprPtr other;

    // f^-1 applied to the produced value, with `other` replaced by `other_value`.
    lang::ExprPtr inverse(lang::ExprPtr produced, lang::ExprPtr other_value) const;
};

// Matches a concretized rhs against the invertible forms with respect to x.
// Multiplication is invertible only by a non-zero literal; division and
// modulo never are.
std::optional<InvertibleForm> match_invertible(const lang::ExprPtr& rhs, const Location& x);

// Concrete locations read by a concretized expression.
std::vector<Location> reads_of(const lang::Expr& e);

lang::ExprPtr location_expr(const interp::Executable& exe, const Location& loc);

// Reverse code for entry n of `path`, or nullopt when only state saving
// works. `budget` bounds the number of technique applications.
std::optional<ReverseCode> gen_reverse(const interp::Executable& exe,
                                       const interp::ExecutionPath& path, Seq n,
                                       std::size_t budget = kDefaultBudget);

// Runs reverse code in `state`; any arithmetic failure is a generator bug and
// surfaces as an internal error.
interp::MachineState execute_reverse(const interp::Executable& exe, interp::MachineState state,
                                     const ReverseCode& code);

enum class StaticClass { self_inverse, state_save };

const char* to_string(StaticClass c);

// Pre-session classification usable under any interleaving: only
// self-defined invertible assignments and semaphore operations reverse
// without saving.
std::map<lang::CommandId, StaticClass> classify_static(const interp::Executable& exe);

// Fixed reverse assignment rhs for an entry whose command is self-inverse.
lang::ExprPtr static_inverse(const interp::Executable& exe, const interp::PathEntry& entry);

// One assignment per line with a provenance comment.
std::string render(const interp::Executable& exe, const ReverseCode& code);
std::string render_expr(const interp::Executable& exe, const lang::Expr& e);
std::string render_provenance(const Provenance& p);

} // namespace retro::revgen
