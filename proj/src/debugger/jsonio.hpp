#pragma once

#include "json.hpp"

#include "engines/engine.hpp"
#include "interp/machine.hpp"
#include "revgen/revgen.hpp"

namespace retro::debugger {

using json = nlohmann::ordered_json;

// {"kind":"scripted","choices":[...]}, {"kind":"seeded","seed":n},
// {"kind":"interactive"}, or the bounded-buffer shorthands "s-seq"/"s-opt"
// (which need the constant N).
interp::Schedule schedule_from_json(const json& j, const interp::Constants& constants);
json schedule_to_json(const interp::Schedule& s);
const char* schedule_kind_name(const interp::Schedule& s);

json path_entry_json(const interp::Executable& exe, const interp::PathEntry& e);
json switch_json(const interp::Executable& exe, const interp::SwitchRecord& s);
json block_entry_json(const interp::Executable& exe, const interp::BlockEntry& b);
json log_json(const interp::Executable& exe, const interp::ExecutionLog& log);
interp::ExecutionLog log_from_json(const interp::Executable& exe, const json& j);
json ledger_json(const engines::MemoryLedger& l);
json provenance_json(const interp::Executable& exe, const revgen::Provenance& p);
json state_json(const interp::Executable& exe, const interp::MachineState& s);

} // namespace retro::debugger
