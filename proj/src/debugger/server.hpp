#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "debugger/session.hpp"

namespace retro::debugger {

// Handles one protocol line, writing events then the response (each
// newline-terminated) through `write`. Returns false after a shutdown request.
bool serve_line(Session& session, const std::string& line,
                const std::function<void(const std::string&)>& write);

// Newline-delimited JSON over a stream pair. Returns true if the client asked
// for shutdown, false on end of input.
bool serve_stream(Session& session, std::istream& in, std::ostream& out);

// Listens on 127.0.0.1:port (0 picks a free port, reported through
// `on_listening`). Clients are served one at a time; the session survives
// disconnects so a client can reattach. Returns after a shutdown request.
void serve_tcp(Session& session, int port, const std::function<void(int)>& on_listening = {});

} // namespace retro::debugger
