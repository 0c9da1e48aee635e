#pragma once

// TCP transport for the device protocol: the device server and the blocking
// client / remote executor used by the application side.

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qhyb/device.hpp"
#include "qhyb/hhl.hpp"
#include "qhyb/protocol.hpp"

namespace qhyb::net {

/// Owning file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void close();

private:
    int fd_ = -1;
};

void send_message(const Socket& s, const protocol::Message& m, std::size_t max_frame);

/// Blocks for one frame. Throws TransportError on EOF or socket errors and
/// ProtocolError on malformed frames.
protocol::Message receive_message(const Socket& s, std::size_t max_frame);

struct RequestLog {
    std::string outcome; ///< "RESULT" or an error code
    unsigned qubits = 0;
    std::size_t amplitudes = 0;
    double device_time = 0.0;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0; ///< 0 picks a free port
    std::size_t max_frame = protocol::kDefaultMaxFrame;
    device::DeviceOptions device;
    std::function<void(const RequestLog&)> on_request;
};

/// Device server. Binds on construction; serve() runs until a SHUTDOWN
/// message arrives or stop() is called. Circuits execute one at a time.
class DeviceServer {
public:
    explicit DeviceServer(ServerOptions options);
    ~DeviceServer();

    std::uint16_t port() const noexcept { return port_; }
    void serve();
    void stop();

private:
    void handle(Socket conn);
    protocol::Message answer(const protocol::SolveCircuit& request);

    ServerOptions options_;
    device::Device device_;
    Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex device_mutex_;
    std::mutex conn_mutex_;
    std::vector<int> open_fds_;
    std::vector<std::thread> workers_;
};

/// Blocking client for one connection; HELLO is exchanged on connect.
class DeviceClient {
public:
    static DeviceClient connect(const std::string& host, std::uint16_t port,
                                std::size_t max_frame = protocol::kDefaultMaxFrame);

    /// Sends one circuit and waits for the reply. ERROR replies throw DeviceError.
    device::Result solve(const device::Request& request);

    /// Asks the server to terminate after its current request.
    void shutdown();

private:
    DeviceClient(Socket s, std::size_t max_frame) : socket_(std::move(s)), max_frame_(max_frame) {}

    Socket socket_;
    std::size_t max_frame_;
};

/// Executor over a DeviceClient. Calls are serialized.
class RemoteExecutor final : public device::Executor {
public:
    explicit RemoteExecutor(DeviceClient client) : client_(std::move(client)) {}
    device::Result run(const device::Request& request) override;
    bool remote() const noexcept override { return true; }
    DeviceClient& client() noexcept { return client_; }

private:
    std::mutex mutex_;
    DeviceClient client_;
};

/// Splits "host:port"; throws ValidationError on a malformed endpoint.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

/// Synthesizes the HHL circuit for (A, b) and runs it on `executor`, local or remote.
hhl::SolveReport qsolve_Axb(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b,
                            device::Executor& executor, const hhl::HhlConfig& config = {});

} // namespace qhyb::net
