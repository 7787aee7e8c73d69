#include "interp/executable.hpp"

#include "common/error.hpp"
#include "lang/parser.hpp"

namespace retro::interp {

using lang::CommandKind;
using lang::IntOrConst;
using lang::VarId;

Executable::Executable(std::shared_ptr<const lang::Program> program, Constants constants)
    : program_(std::move(program)), constants_(std::move(constants))
{
    const auto& p = *program_;
    for (const auto& name : p.constant_names) {
        if (!constants_.count(name)) {
            throw Error(ErrorKind::load, "unbound-constant", "constant '" + name + "' is not bound");
        }
    }
    for (const auto& [name, value] : constants_) {
        if (value <= 0) {
            throw Error(ErrorKind::load, "bad-constant",
                        "constant '" + name + "' must be positive, got " + std::to_string(value));
        }
    }

    auto resolve = [&](const IntOrConst& v) { return v.symbolic() ? constant(v.constant) : v.value; };

    std::size_t next = 0;
    for (const auto& d : p.vars) {
        const std::int64_t n = d.is_array ? resolve(d.size) : 1;
        if (n <= 0) {
            throw Error(ErrorKind::load, "bad-array-size", "array '" + d.name + "' has non-positive size");
        }
        base_.push_back(next);
        size_.push_back(d.is_array ? n : 0);
        next += static_cast<std::size_t>(n);

        if (d.is_array) {
            if (d.array_init) {
                if (static_cast<std::int64_t>(d.array_init->size()) != n) {
                    throw Error(ErrorKind::load, "initializer-length",
                                "initializer of '" + d.name + "' has " +
                                    std::to_string(d.array_init->size()) + " values, size is " +
                                    std::to_string(n));
                }
                initial_.insert(initial_.end(), d.array_init->begin(), d.array_init->end());
            } else {
                initial_.insert(initial_.end(), static_cast<std::size_t>(n), 0);
            }
        } else {
            initial_.push_back(d.scalar_init ? resolve(*d.scalar_init) : 0);
        }
    }

    ambiguous_.assign(p.vars.size(), false);
    for (std::size_t i = 0; i < p.vars.size(); ++i) {
        for (std::size_t j = 0; j < p.vars.size(); ++j) {
            if (i != j && p.vars[i].name == p.vars[j].name) {
                ambiguous_[i] = true;
            }
        }
    }

    written_.assign(p.vars.size(), false);
    for (const auto& c : p.commands) {
        if (c.kind == CommandKind::assign) {
            written_[static_cast<std::size_t>(c.target.id)] = true;
        } else if (c.kind == CommandKind::wait || c.kind == CommandKind::signal) {
            written_[static_cast<std::size_t>(c.semaphore.id)] = true;
        }
    }
}

std::int64_t Executable::constant(const std::string& name) const
{
    auto it = constants_.find(name);
    if (it == constants_.end()) {
        throw Error(ErrorKind::load, "unbound-constant", "constant '" + name + "' is not bound");
    }
    return it->second;
}

std::int64_t Executable::array_size(VarId var) const
{
    return size_.at(static_cast<std::size_t>(var));
}

std::size_t Executable::slot(const Location& loc) const
{
    const auto v = static_cast<std::size_t>(loc.var);
    return base_.at(v) + static_cast<std::size_t>(loc.index);
}

Location Executable::location_of(std::size_t slot) const
{
    for (std::size_t v = base_.size(); v-- > 0;) {
        if (base_[v] <= slot) {
            return {static_cast<VarId>(v), static_cast<std::int64_t>(slot - base_[v])};
        }
    }
    throw Error(ErrorKind::internal, "bad-slot", "slot out of range");
}

std::string Executable::var_name(VarId var) const
{
    const auto& d = program_->var(var);
    if (ambiguous_[static_cast<std::size_t>(var)] && !d.is_global()) {
        return thread_name(d.thread) + "." + d.name;
    }
    return d.name;
}

std::string Executable::location_name(const Location& loc) const
{
    if (program_->var(loc.var).is_array) {
        return var_name(loc.var) + "[" + std::to_string(loc.index) + "]";
    }
    return var_name(loc.var);
}

bool Executable::never_written(VarId var) const
{
    return !written_.at(static_cast<std::size_t>(var));
}

const std::string& Executable::thread_name(int thread) const
{
    return program_->threads.at(static_cast<std::size_t>(thread)).name;
}

ExecutablePtr load(std::shared_ptr<const lang::Program> program, Constants constants)
{
    return std::make_shared<const Executable>(std::move(program), std::move(constants));
}

ExecutablePtr load_source(const std::string& source, const Constants& constants)
{
    auto program = std::make_shared<const lang::Program>(lang::parse_program(source, constants));
    return load(std::move(program), constants);
}

} // namespace retro::interp
