#include "qhyb/net.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>

#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace qhyb::net {

namespace {

std::string errno_text() { return std::strerror(errno); }

struct AddrInfo {
    addrinfo* head = nullptr;
    ~AddrInfo() {
        if (head)
            ::freeaddrinfo(head);
    }
};

AddrInfo resolve(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive)
        hints.ai_flags = AI_PASSIVE;
    AddrInfo info;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints,
                                 &info.head);
    if (rc != 0)
        throw TransportError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
    return info;
}

void send_all(const Socket& s, const std::uint8_t* data, std::size_t size) {
    while (size > 0) {
        const ssize_t n = ::send(s.fd(), data, size, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw TransportError("send failed: " + errno_text());
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

/// Reads exactly `size` bytes. Returns false on a clean EOF before the first byte.
bool recv_exact(const Socket& s, std::uint8_t* data, std::size_t size, std::size_t stream_offset) {
    std::size_t got = 0;
    while (got < size) {
        const ssize_t n = ::recv(s.fd(), data + got, size - got, 0);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw TransportError("receive failed: " + errno_text());
        }
        if (n == 0) {
            if (got == 0 && stream_offset == 0)
                return false;
            throw ProtocolError("truncated stream", stream_offset + got);
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

std::string_view error_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e))
        return protocol::codes::kParse;
    if (dynamic_cast<const ResourceLimitError*>(&e))
        return protocol::codes::kLimit;
    if (dynamic_cast<const DegeneratePostselectionError*>(&e))
        return protocol::codes::kPostselect;
    if (dynamic_cast<const ValidationError*>(&e))
        return protocol::codes::kValidate;
    return protocol::codes::kExecute;
}

} // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

Socket::~Socket() { close(); }

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void send_message(const Socket& s, const protocol::Message& m, std::size_t max_frame) {
    const auto frame = protocol::encode_frame(m, max_frame);
    send_all(s, frame.data(), frame.size());
}

protocol::Message receive_message(const Socket& s, std::size_t max_frame) {
    std::uint8_t header[protocol::kHeaderSize];
    if (!recv_exact(s, header, sizeof header, 0))
        throw TransportError("connection closed by peer");
    const std::size_t n = protocol::frame_length(header, max_frame);
    std::vector<std::uint8_t> body(n);
    recv_exact(s, body.data(), n, protocol::kHeaderSize);
    return protocol::decode_body(body);
}

// ---------------------------------------------------------------------------

DeviceServer::DeviceServer(ServerOptions options)
    : options_(std::move(options)), device_(options_.device) {
    const AddrInfo info = resolve(options_.host, options_.port, true);
    Socket s(::socket(info.head->ai_family, info.head->ai_socktype, info.head->ai_protocol));
    if (!s.valid())
        throw TransportError("socket failed: " + errno_text());
    const int yes = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    if (::bind(s.fd(), info.head->ai_addr, info.head->ai_addrlen) != 0)
        throw TransportError("cannot bind " + options_.host + ":" + std::to_string(options_.port) +
                             ": " + errno_text());
    if (::listen(s.fd(), 16) != 0)
        throw TransportError("listen failed: " + errno_text());
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    listener_ = std::move(s);
}

DeviceServer::~DeviceServer() {
    stop();
    for (auto& w : workers_)
        if (w.joinable())
            w.join();
}

void DeviceServer::stop() { stopping_ = true; }

void DeviceServer::serve() {
    while (!stopping_) {
        pollfd pfd{listener_.fd(), POLLIN, 0};
        const int rc = ::poll(&pfd, 1, 100);
        if (rc < 0 && errno != EINTR)
            throw TransportError("poll failed: " + errno_text());
        if (rc <= 0)
            continue;
        Socket conn(::accept(listener_.fd(), nullptr, nullptr));
        if (!conn.valid())
            continue;
        std::lock_guard lock(conn_mutex_);
        open_fds_.push_back(conn.fd());
        workers_.emplace_back([this, c = std::move(conn)]() mutable { handle(std::move(c)); });
    }
    listener_.close();
    {
        // unblock idle readers; a worker in the middle of a request still replies
        std::lock_guard lock(conn_mutex_);
        for (int fd : open_fds_)
            ::shutdown(fd, SHUT_RD);
    }
    for (auto& w : workers_)
        if (w.joinable())
            w.join();
    workers_.clear();
}

void DeviceServer::handle(Socket conn) {
    const std::size_t max_frame = options_.max_frame;
    auto reply_error = [&](std::string_view code, const std::string& detail) {
        send_message(conn, protocol::ErrorReply{std::string(code), detail}, max_frame);
    };
    try {
        bool greeted = false;
        while (true) {
            protocol::Message msg;
            try {
                msg = receive_message(conn, max_frame);
            } catch (const ProtocolError& e) {
                // framing is lost; tell the peer and drop the connection
                reply_error(protocol::codes::kProtocol, e.what());
                break;
            }
            if (const auto* hello = std::get_if<protocol::Hello>(&msg)) {
                if (hello->protocol_version != protocol::kProtocolVersion) {
                    reply_error(protocol::codes::kProtocol,
                                "protocol version " + std::to_string(hello->protocol_version) +
                                    " not supported; server speaks " +
                                    std::to_string(protocol::kProtocolVersion));
                    break;
                }
                greeted = true;
                send_message(conn, protocol::Hello{}, max_frame);
            } else if (!greeted) {
                reply_error(protocol::codes::kProtocol, "expected HELLO first");
                break;
            } else if (std::holds_alternative<protocol::Shutdown>(msg)) {
                stopping_ = true;
                break;
            } else if (const auto* solve = std::get_if<protocol::SolveCircuit>(&msg)) {
                send_message(conn, answer(*solve), max_frame);
            } else {
                reply_error(protocol::codes::kProtocol,
                            "unexpected message " + std::string(protocol::type_name(msg)));
            }
        }
    } catch (const Error&) {
        // connection lost
    }
    std::lock_guard lock(conn_mutex_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), conn.fd()), open_fds_.end());
}

protocol::Message DeviceServer::answer(const protocol::SolveCircuit& request) {
    RequestLog log;
    protocol::Message reply;
    try {
        device::Request req;
        req.circuit = qasm::parse(request.qasm);
        log.qubits = req.circuit.n_qubits;
        req.readout = request.readout;
        req.postselect = request.postselect;
        device::Result r;
        {
            std::lock_guard lock(device_mutex_);
            r = device_.run(req);
        }
        log.outcome = "RESULT";
        log.amplitudes = r.amplitudes.size();
        log.device_time = r.device_time;
        reply = protocol::Result{std::move(r.amplitudes), r.p_success, r.device_time,
                                 r.readout_time};
    } catch (const std::exception& e) {
        log.outcome = std::string(error_code_for(e));
        reply = protocol::ErrorReply{log.outcome, e.what()};
    }
    if (options_.on_request)
        options_.on_request(log);
    return reply;
}

// ---------------------------------------------------------------------------

DeviceClient DeviceClient::connect(const std::string& host, std::uint16_t port,
                                   std::size_t max_frame) {
    const AddrInfo info = resolve(host, port, false);
    Socket s(::socket(info.head->ai_family, info.head->ai_socktype, info.head->ai_protocol));
    if (!s.valid())
        throw TransportError("socket failed: " + errno_text());
    if (::connect(s.fd(), info.head->ai_addr, info.head->ai_addrlen) != 0)
        throw TransportError("cannot connect to " + host + ":" + std::to_string(port) + ": " +
                             errno_text());
    send_message(s, protocol::Hello{}, max_frame);
    const protocol::Message reply = receive_message(s, max_frame);
    if (const auto* err = std::get_if<protocol::ErrorReply>(&reply))
        throw DeviceError(err->code, err->detail);
    const auto* hello = std::get_if<protocol::Hello>(&reply);
    if (!hello || hello->protocol_version != protocol::kProtocolVersion)
        throw TransportError("device did not answer HELLO with protocol version " +
                             std::to_string(protocol::kProtocolVersion));
    return DeviceClient(std::move(s), max_frame);
}

device::Result DeviceClient::solve(const device::Request& request) {
    protocol::SolveCircuit msg;
    msg.qasm = qasm::serialize(request.circuit);
    msg.readout = request.readout;
    msg.postselect = request.postselect;
    send_message(socket_, msg, max_frame_);
    protocol::Message reply = receive_message(socket_, max_frame_);
    if (const auto* err = std::get_if<protocol::ErrorReply>(&reply))
        throw DeviceError(err->code, err->detail);
    auto* result = std::get_if<protocol::Result>(&reply);
    if (!result)
        throw ProtocolError("expected RESULT, got " + std::string(protocol::type_name(reply)), 0);
    device::Result out;
    out.amplitudes = std::move(result->amplitudes);
    out.p_success = result->p_success;
    out.device_time = result->device_time;
    out.readout_time = result->readout_time;
    return out;
}

void DeviceClient::shutdown() { send_message(socket_, protocol::Shutdown{}, max_frame_); }

device::Result RemoteExecutor::run(const device::Request& request) {
    std::lock_guard lock(mutex_);
    return client_.solve(request);
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
        throw ValidationError("endpoint must look like host:port, got '" + endpoint + "'");
    unsigned port = 0;
    const char* first = endpoint.data() + colon + 1;
    const char* last = endpoint.data() + endpoint.size();
    auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc() || ptr != last || port == 0 || port > 65535)
        throw ValidationError("invalid port in endpoint '" + endpoint + "'");
    return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

hhl::SolveReport qsolve_Axb(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                            device::Executor& executor, const hhl::HhlConfig& config) {
    hhl::HhlSolver solver(a, config, executor);
    return solver.solve(b);
}

} // namespace qhyb::net
