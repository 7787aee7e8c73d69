#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "lang/ast.hpp"

namespace retro::lang {

// Parses a program. Identifiers that are neither declared variables nor listed
// in `constants` are rejected. Constant values are bound later, at load time.
Program parse_program(std::string_view text, const std::set<std::string>& constants = {});

Program parse_program(std::string_view text, const std::map<std::string, std::int64_t>& constants);

// Canonical surface syntax; reparses to a structurally equal program.
std::string pretty_print(const Program& program);

} // namespace retro::lang
