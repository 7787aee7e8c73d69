#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lang/ast.hpp"

namespace retro::interp {

using Constants = std::map<std::string, std::int64_t>;

// A concrete storage cell: a scalar (index 0) or an array element.
struct Location {
    lang::VarId var = -1;
    std::int64_t index = 0;

    auto operator<=>(const Location&) const = default;
};

// A program with its named constants bound: array sizes, initial values and
// the flat cell layout of the state vector.
class Executable {
public:
    Executable(std::shared_ptr<const lang::Program> program, Constants constants);

    const lang::Program& program() const { return *program_; }
    std::shared_ptr<const lang::Program> program_ptr() const { return program_; }
    const Constants& constants() const { return constants_; }

    std::int64_t constant(const std::string& name) const;

    // Number of integer cells in one state vector.
    std::size_t cell_count() const { return initial_.size(); }
    std::int64_t array_size(lang::VarId var) const;
    std::size_t slot(const Location& loc) const;
    Location location_of(std::size_t slot) const;
    std::int64_t initial_value(const Location& loc) const { return initial_[slot(loc)]; }
    const std::vector<std::int64_t>& initial_cells() const { return initial_; }

    // Display name; thread-qualified ("Producer.p") only when ambiguous.
    std::string var_name(lang::VarId var) const;
    std::string location_name(const Location& loc) const;

    // True if no assignment, wait or signal anywhere in the program writes var.
    bool never_written(lang::VarId var) const;

    std::size_t thread_count() const { return program_->threads.size(); }
    const std::string& thread_name(int thread) const;

private:
    std::shared_ptr<const lang::Program> program_;
    Constants constants_;
    std::vector<std::size_t> base_;
    std::vector<std::int64_t> size_;
    std::vector<std::int64_t> initial_;
    std::vector<bool> ambiguous_;
    std::vector<bool> written_;
};

using ExecutablePtr = std::shared_ptr<const Executable>;

ExecutablePtr load(std::shared_ptr<const lang::Program> program, Constants constants);
ExecutablePtr load_source(const std::string& source, const Constants& constants);

} // namespace retro::interp
