#include "debugger/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include "common/error.hpp"

namespace retro::debugger {

namespace {

bool is_shutdown(const std::string& line, json& id)
{
    try {
        const auto j = json::parse(line);
        if (j.is_object() && j.value("cmd", std::string()) == "shutdown") {
            id = j.value("id", json(nullptr));
            return true;
        }
    } catch (const json::exception&) {
    }
    return false;
}

class Fd {
public:
    explicit Fd(int fd) : fd_(fd) {}
    ~Fd()
    {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    int get() const { return fd_; }

private:
    int fd_;
};

Error sys_error(const char* what)
{
    return Error(ErrorKind::internal, "transport", std::string(what) + ": " + std::strerror(errno));
}

bool send_all(int fd, const std::string& data)
{
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

} // namespace

bool serve_line(Session& session, const std::string& line,
                const std::function<void(const std::string&)>& write)
{
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
        return true;
    }
    json id;
    if (is_shutdown(line, id)) {
        write(json{{"id", id}, {"ok", true}, {"payload", nullptr}}.dump() + "\n");
        return false;
    }
    std::vector<std::string> events;
    const auto response = session.handle_line(line, events);
    for (const auto& e : events) {
        write(e + "\n");
    }
    write(response + "\n");
    return true;
}

bool serve_stream(Session& session, std::istream& in, std::ostream& out)
{
    const auto write = [&](const std::string& s) { out << s << std::flush; };
    for (std::string line; std::getline(in, line);) {
        if (!serve_line(session, line, write)) {
            return true;
        }
    }
    return false;
}

void serve_tcp(Session& session, int port, const std::function<void(int)>& on_listening)
{
    Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
    if (listener.get() < 0) {
        throw sys_error("socket");
    }
    const int one = 1;
    ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        throw sys_error("bind");
    }
    if (::listen(listener.get(), 1) < 0) {
        throw sys_error("listen");
    }
    socklen_t len = sizeof addr;
    ::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    if (on_listening) {
        on_listening(ntohs(addr.sin_port));
    }

    while (true) {
        Fd client(::accept(listener.get(), nullptr, nullptr));
        if (client.get() < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw sys_error("accept");
        }
        bool connected = true;
        const auto write = [&](const std::string& s) {
            if (connected) {
                connected = send_all(client.get(), s);
            }
        };
        std::string buffer;
        char chunk[4096];
        while (connected) {
            const auto n = ::recv(client.get(), chunk, sizeof chunk, 0);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n <= 0) {
                break; // client gone; keep the session for the next one
            }
            buffer.append(chunk, static_cast<std::size_t>(n));
            for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
                const auto line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (!serve_line(session, line, write)) {
                    return;
                }
            }
        }
    }
}

} // namespace retro::debugger
