#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>

#include <thread>

#include "qhyb/error.hpp"
#include "qhyb/net.hpp"
#include "qhyb/protocol.hpp"
#include "support.hpp"

using namespace qhyb;
using protocol::Message;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view body) {
    std::vector<std::uint8_t> out;
    const auto n = static_cast<std::uint32_t>(body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

ProtocolError decode_error(std::span<const std::uint8_t> bytes,
                           std::size_t max_frame = protocol::kDefaultMaxFrame) {
    try {
        protocol::decode_frame(bytes, max_frame);
    } catch (const ProtocolError& e) {
        return e;
    }
    FAIL("expected a protocol error");
    return ProtocolError("", 0);
}

net::Socket raw_connect(std::uint16_t port) {
    net::Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    return s;
}

/// Server running serve() on a background thread for the lifetime of the object.
struct RunningServer {
    explicit RunningServer(net::ServerOptions opts = {}) : server(std::move(opts)) {
        thread = std::thread([this] { server.serve(); });
    }
    ~RunningServer() {
        server.stop();
        thread.join();
    }
    net::DeviceServer server;
    std::thread thread;
};

device::Request bell_request() {
    device::Request r;
    r.circuit = qasm::parse("qubits 3; h 0; cx 0 1; ry(0.3) 2;");
    return r;
}

} // namespace

TEST_CASE("every message kind round-trips through a frame") {
    protocol::SolveCircuit sc;
    sc.qasm = "qubits 1;\nh 0;\n";
    sc.readout = {0, 1};
    sc.postselect = device::PostselectSpec{2, {0, 1}};
    protocol::Result res;
    res.amplitudes = {{0.1, -0.2}, {1e-300, 3.5}};
    res.p_success = 0.25;
    res.device_time = 1.5e-3;
    res.readout_time = 2e-6;
    const std::vector<Message> all = {protocol::Hello{}, sc, res,
                                      protocol::ErrorReply{"PARSE", "line 1, column 2: x"},
                                      protocol::Shutdown{}};
    for (const auto& m : all) {
        CAPTURE(protocol::type_name(m));
        const auto frame = protocol::encode_frame(m);
        CHECK(protocol::decode_frame(frame) == m);
    }
}

TEST_CASE("length prefix is big-endian") {
    const auto frame = protocol::encode_frame(protocol::Shutdown{});
    const std::size_t body = frame.size() - protocol::kHeaderSize;
    CHECK(frame[0] == 0);
    CHECK(frame[1] == 0);
    CHECK(frame[2] == ((body >> 8) & 0xFF));
    CHECK(frame[3] == (body & 0xFF));
    CHECK(protocol::frame_length(std::span(frame).first(4), 1000) == body);
    const std::uint8_t big[] = {0x01, 0x02, 0x03, 0x04};
    CHECK(protocol::frame_length(big, std::size_t{1} << 30) == 0x01020304u);
}

TEST_CASE("frame defects carry byte offsets") {
    const std::uint8_t zero[] = {0, 0, 0, 0};
    CHECK(decode_error(zero).offset() == 0);

    const auto ok = bytes_of(R"({"type":"SHUTDOWN"})");
    CHECK(decode_error(ok, 4).offset() == 0);

    auto truncated = ok;
    truncated.resize(truncated.size() - 3);
    CHECK(decode_error(truncated).offset() == truncated.size());
    CHECK(decode_error(std::span(ok).first(2)).offset() == 2);

    auto trailing = ok;
    trailing.push_back('x');
    CHECK(decode_error(trailing).offset() == ok.size());

    const auto bad_json = bytes_of(R"({"type":"SHUTDOWN",})");
    const auto e = decode_error(bad_json);
    CHECK(e.offset() >= 4 + 18);
    CHECK(e.offset() <= bad_json.size());
}

TEST_CASE("schema violations") {
    for (const char* body : {R"({"type":"BOGUS"})", R"({"kind":"HELLO"})", R"([1,2])",
                             R"({"type":"HELLO"})", R"({"type":"SOLVE_CIRCUIT"})",
                             R"({"type":"SOLVE_CIRCUIT","qasm":"qubits 1;","readout_indices":[-1]})",
                             R"({"type":"RESULT","amplitudes":[[1]],"p_success":1,"device_time":0})",
                             R"({"type":"ERROR","code":5,"detail":""})"}) {
        CAPTURE(body);
        const auto frame = bytes_of(body);
        CHECK(decode_error(frame).offset() == 4);
    }
    // unknown fields are ignored
    CHECK(std::holds_alternative<protocol::Shutdown>(
        protocol::decode_frame(bytes_of(R"({"type":"SHUTDOWN","extra":[1,2,3]})"))));
}

TEST_CASE("oversized messages are refused on encode") {
    protocol::SolveCircuit sc;
    sc.qasm = std::string(200, 'x');
    CHECK_THROWS_AS(protocol::encode_frame(sc, 64), ResourceLimitError);
}

TEST_CASE("random bytes never crash the decoder") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> byte(0, 255);
    std::size_t rejected = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t size = trial < 290 ? rng() % 512 : (rng() % (1u << 20)) + 1;
        std::vector<std::uint8_t> buf(size);
        for (auto& b : buf)
            b = static_cast<std::uint8_t>(byte(rng));
        // half the trials carry a consistent header so the body parser is exercised
        if (trial % 2 == 0 && size >= 4) {
            const std::size_t n = size - 4;
            buf[0] = static_cast<std::uint8_t>(n >> 24);
            buf[1] = static_cast<std::uint8_t>(n >> 16);
            buf[2] = static_cast<std::uint8_t>(n >> 8);
            buf[3] = static_cast<std::uint8_t>(n);
        }
        try {
            protocol::decode_frame(buf);
        } catch (const ProtocolError& e) {
            CHECK(e.offset() <= size);
            ++rejected;
        }
    }
    CHECK(rejected == 300);
}

TEST_CASE("endpoint parsing") {
    CHECK(net::parse_endpoint("127.0.0.1:5555") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 5555});
    CHECK(net::parse_endpoint("localhost:1").second == 1);
    for (const char* bad : {"localhost", ":80", "host:", "host:99999", "host:12x"})
        CHECK_THROWS_AS(net::parse_endpoint(bad), ValidationError);
}

TEST_CASE("remote execution is bitwise identical to local") {
    RunningServer rs;
    auto client = net::DeviceClient::connect("127.0.0.1", rs.server.port());
    device::Device local;
    auto req = bell_request();
    const auto a = client.solve(req);
    const auto b = local.run(req);
    CHECK(a.amplitudes == b.amplitudes);
    CHECK(a.p_success == b.p_success);

    req.readout = {3, 0};
    const auto c = client.solve(req);
    REQUIRE(c.amplitudes.size() == 2);
    CHECK(c.amplitudes[0] == b.amplitudes[3]);

    std::mt19937_64 rng(8);
    const auto sys = testing::random_spd(4, 5.0, rng);
    const auto rhs = testing::random_vector(4, rng);
    net::RemoteExecutor remote(std::move(client));
    device::LocalExecutor in_process;
    const auto xr = net::qsolve_Axb(hhl::to_complex(sys), hhl::to_complex(rhs), remote).x;
    const auto xl = net::qsolve_Axb(hhl::to_complex(sys), hhl::to_complex(rhs), in_process).x;
    CHECK(xr == xl);
}

TEST_CASE("device errors come back as coded replies") {
    net::ServerOptions opts;
    opts.device.qubit_cap = 4;
    std::vector<std::string> outcomes;
    std::mutex m;
    opts.on_request = [&](const net::RequestLog& log) {
        std::lock_guard lock(m);
        outcomes.push_back(log.outcome);
    };
    RunningServer rs(opts);
    auto client = net::DeviceClient::connect("127.0.0.1", rs.server.port());

    device::Request big;
    big.circuit = qasm::parse("qubits 5; h 0;");
    try {
        client.solve(big);
        FAIL("expected LIMIT");
    } catch (const DeviceError& e) {
        CHECK(e.code() == "LIMIT");
    }

    device::Request zero;
    zero.circuit = qasm::parse("qubits 2; h 0;");
    zero.postselect = device::PostselectSpec{1, {}};
    try {
        client.solve(zero);
        FAIL("expected POSTSELECT");
    } catch (const DeviceError& e) {
        CHECK(e.code() == "POSTSELECT");
    }

    device::Request out_of_range = bell_request();
    out_of_range.readout = {64};
    try {
        client.solve(out_of_range);
        FAIL("expected VALIDATE");
    } catch (const DeviceError& e) {
        CHECK(e.code() == "VALIDATE");
    }

    // the connection survives all of the above
    CHECK(client.solve(bell_request()).amplitudes.size() == 8);
    std::lock_guard lock(m);
    CHECK(outcomes == std::vector<std::string>{"LIMIT", "POSTSELECT", "VALIDATE", "RESULT"});
}

TEST_CASE("unparsable program yields PARSE and the connection stays open") {
    RunningServer rs;
    auto s = raw_connect(rs.server.port());
    net::send_message(s, protocol::Hello{}, protocol::kDefaultMaxFrame);
    CHECK(std::holds_alternative<protocol::Hello>(net::receive_message(s, protocol::kDefaultMaxFrame)));

    protocol::SolveCircuit bad;
    bad.qasm = "qubits 2;\nh 9;\n";
    net::send_message(s, bad, protocol::kDefaultMaxFrame);
    const auto reply = net::receive_message(s, protocol::kDefaultMaxFrame);
    REQUIRE(std::holds_alternative<protocol::ErrorReply>(reply));
    CHECK(std::get<protocol::ErrorReply>(reply).code == "PARSE");
    CHECK(std::get<protocol::ErrorReply>(reply).detail.find("line 2") != std::string::npos);

    protocol::SolveCircuit good;
    good.qasm = "qubits 1;\nh 0;\n";
    net::send_message(s, good, protocol::kDefaultMaxFrame);
    CHECK(std::holds_alternative<protocol::Result>(net::receive_message(s, protocol::kDefaultMaxFrame)));
}

TEST_CASE("handshake violations get PROTOCOL and a closed connection") {
    RunningServer rs;
    {
        auto s = raw_connect(rs.server.port());
        net::send_message(s, protocol::Hello{99}, protocol::kDefaultMaxFrame);
        const auto reply = net::receive_message(s, protocol::kDefaultMaxFrame);
        REQUIRE(std::holds_alternative<protocol::ErrorReply>(reply));
        CHECK(std::get<protocol::ErrorReply>(reply).code == "PROTOCOL");
        CHECK_THROWS_AS(net::receive_message(s, protocol::kDefaultMaxFrame), TransportError);
    }
    {
        auto s = raw_connect(rs.server.port());
        net::send_message(s, protocol::Shutdown{}, protocol::kDefaultMaxFrame);
        const auto reply = net::receive_message(s, protocol::kDefaultMaxFrame);
        REQUIRE(std::holds_alternative<protocol::ErrorReply>(reply));
        CHECK(std::get<protocol::ErrorReply>(reply).code == "PROTOCOL");
    }
    {
        auto s = raw_connect(rs.server.port());
        const auto junk = bytes_of("{not json");
        REQUIRE(::send(s.fd(), junk.data(), junk.size(), 0) == static_cast<ssize_t>(junk.size()));
        const auto reply = net::receive_message(s, protocol::kDefaultMaxFrame);
        REQUIRE(std::holds_alternative<protocol::ErrorReply>(reply));
        CHECK(std::get<protocol::ErrorReply>(reply).code == "PROTOCOL");
        CHECK_THROWS_AS(net::receive_message(s, protocol::kDefaultMaxFrame), TransportError);
    }
    // the server itself is still healthy
    auto client = net::DeviceClient::connect("127.0.0.1", rs.server.port());
    CHECK(client.solve(bell_request()).amplitudes.size() == 8);
}

TEST_CASE("concurrent clients are served one circuit at a time") {
    RunningServer rs;
    device::Device local;
    const auto expected = local.run(bell_request()).amplitudes;
    std::atomic<int> matches{0};
    std::vector<std::thread> clients;
    for (int i = 0; i < 4; ++i)
        clients.emplace_back([&] {
            auto c = net::DeviceClient::connect("127.0.0.1", rs.server.port());
            for (int k = 0; k < 5; ++k)
                if (c.solve(bell_request()).amplitudes == expected)
                    ++matches;
        });
    for (auto& t : clients)
        t.join();
    CHECK(matches == 20);
}

TEST_CASE("SHUTDOWN ends serve()") {
    net::DeviceServer server(net::ServerOptions{});
    std::thread t([&] { server.serve(); });
    auto client = net::DeviceClient::connect("127.0.0.1", server.port());
    client.solve(bell_request());
    client.shutdown();
    t.join();
    CHECK_THROWS_AS(net::DeviceClient::connect("127.0.0.1", server.port()), TransportError);
}

TEST_CASE("binding an occupied port fails cleanly") {
    net::DeviceServer first(net::ServerOptions{});
    net::ServerOptions opts;
    opts.port = first.port();
    CHECK_THROWS_AS(net::DeviceServer{opts}, TransportError);
    CHECK_THROWS_AS(net::DeviceClient::connect("127.0.0.1", 1), TransportError);
}
