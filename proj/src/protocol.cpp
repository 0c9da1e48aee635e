#include "qhyb/protocol.hpp"

namespace qhyb::protocol {

using nlohmann::json;

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

[[noreturn]] void schema(const std::string& what) {
    throw ProtocolError("malformed message: " + what, 0);
}

const json& field(const json& body, const char* name) {
    const auto it = body.find(name);
    if (it == body.end())
        schema(std::string("missing field '") + name + "'");
    return *it;
}

double number(const json& body, const char* name) {
    const json& v = field(body, name);
    if (!v.is_number())
        schema(std::string("field '") + name + "' must be a number");
    return v.get<double>();
}

template <class Int>
Int unsigned_integer(const json& v, const char* what) {
    if (!v.is_number_unsigned())
        schema(std::string(what) + " must be a non-negative integer");
    return v.get<Int>();
}

} // namespace

std::string_view type_name(const Message& m) {
    return std::visit(overloaded{[](const Hello&) { return std::string_view("HELLO"); },
                                 [](const SolveCircuit&) { return std::string_view("SOLVE_CIRCUIT"); },
                                 [](const Result&) { return std::string_view("RESULT"); },
                                 [](const ErrorReply&) { return std::string_view("ERROR"); },
                                 [](const Shutdown&) { return std::string_view("SHUTDOWN"); }},
                      m);
}

json to_json(const Message& m) {
    json body = json::object();
    body["type"] = type_name(m);
    std::visit(overloaded{
                   [&](const Hello& h) { body["protocol_version"] = h.protocol_version; },
                   [&](const SolveCircuit& s) {
                       body["qasm"] = s.qasm;
                       body["readout_indices"] = s.readout;
                       if (s.postselect)
                           body["postselect"] = {{"ancilla_qubit", s.postselect->ancilla},
                                                 {"clock_qubits", s.postselect->clock}};
                       else
                           body["postselect"] = nullptr;
                   },
                   [&](const Result& r) {
                       json amps = json::array();
                       for (const auto& a : r.amplitudes)
                           amps.push_back(json::array({a.real(), a.imag()}));
                       body["amplitudes"] = std::move(amps);
                       body["p_success"] = r.p_success;
                       body["device_time"] = r.device_time;
                       body["readout_time"] = r.readout_time;
                   },
                   [&](const ErrorReply& e) {
                       body["code"] = e.code;
                       body["detail"] = e.detail;
                   },
                   [](const Shutdown&) {}},
               m);
    return body;
}

Message message_from_json(const json& body) {
    if (!body.is_object())
        schema("body is not an object");
    const json& type = field(body, "type");
    if (!type.is_string())
        schema("'type' must be a string");
    const auto t = type.get<std::string>();

    if (t == "HELLO") {
        const json& v = field(body, "protocol_version");
        if (!v.is_number_integer())
            schema("'protocol_version' must be an integer");
        return Hello{v.get<int>()};
    }
    if (t == "SOLVE_CIRCUIT") {
        SolveCircuit s;
        const json& q = field(body, "qasm");
        if (!q.is_string())
            schema("'qasm' must be a string");
        s.qasm = q.get<std::string>();
        if (const auto it = body.find("readout_indices"); it != body.end() && !it->is_null()) {
            if (!it->is_array())
                schema("'readout_indices' must be an array");
            for (const json& i : *it)
                s.readout.push_back(unsigned_integer<device::BasisIndex>(i, "readout index"));
        }
        if (const auto it = body.find("postselect"); it != body.end() && !it->is_null()) {
            if (!it->is_object())
                schema("'postselect' must be an object or null");
            device::PostselectSpec ps;
            ps.ancilla = unsigned_integer<device::Qubit>(field(*it, "ancilla_qubit"), "ancilla_qubit");
            const json& clock = field(*it, "clock_qubits");
            if (!clock.is_array())
                schema("'clock_qubits' must be an array");
            for (const json& q2 : clock)
                ps.clock.push_back(unsigned_integer<device::Qubit>(q2, "clock qubit"));
            s.postselect = std::move(ps);
        }
        return s;
    }
    if (t == "RESULT") {
        Result r;
        const json& amps = field(body, "amplitudes");
        if (!amps.is_array())
            schema("'amplitudes' must be an array");
        r.amplitudes.reserve(amps.size());
        for (const json& a : amps) {
            if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
                schema("amplitude must be a [re, im] pair of numbers");
            r.amplitudes.emplace_back(a[0].get<double>(), a[1].get<double>());
        }
        r.p_success = number(body, "p_success");
        r.device_time = number(body, "device_time");
        if (body.contains("readout_time"))
            r.readout_time = number(body, "readout_time");
        return r;
    }
    if (t == "ERROR") {
        ErrorReply e;
        const json& code = field(body, "code");
        const json& detail = field(body, "detail");
        if (!code.is_string() || !detail.is_string())
            schema("'code' and 'detail' must be strings");
        e.code = code.get<std::string>();
        e.detail = detail.get<std::string>();
        return e;
    }
    if (t == "SHUTDOWN")
        return Shutdown{};
    schema("unknown message type '" + t + "'");
}

std::vector<std::uint8_t> encode_frame(const Message& m, std::size_t max_frame) {
    const std::string body = to_json(m).dump();
    if (body.size() > max_frame)
        throw ResourceLimitError("frame body of " + std::to_string(body.size()) +
                                 " bytes exceeds the limit of " + std::to_string(max_frame));
    const auto n = static_cast<std::uint32_t>(body.size());
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::size_t frame_length(std::span<const std::uint8_t> header, std::size_t max_frame) {
    if (header.size() < kHeaderSize)
        throw ProtocolError("truncated frame header", header.size());
    const std::size_t n = (std::size_t{header[0]} << 24) | (std::size_t{header[1]} << 16) |
                          (std::size_t{header[2]} << 8) | std::size_t{header[3]};
    if (n == 0)
        throw ProtocolError("empty frame body", 0);
    if (n > max_frame)
        throw ProtocolError("frame length " + std::to_string(n) + " exceeds the limit of " +
                                std::to_string(max_frame),
                            0);
    return n;
}

Message decode_body(std::span<const std::uint8_t> body, std::size_t base_offset) {
    json parsed;
    try {
        parsed = json::parse(body.begin(), body.end());
    } catch (const json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ProtocolError(std::string("malformed frame body: ") + e.what(), base_offset + at);
    }
    try {
        return message_from_json(parsed);
    } catch (const ProtocolError& e) {
        throw ProtocolError(e.detail(), base_offset);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what(), base_offset);
    }
}

Message decode_frame(std::span<const std::uint8_t> bytes, std::size_t max_frame) {
    const std::size_t n = frame_length(bytes, max_frame);
    if (bytes.size() < kHeaderSize + n)
        throw ProtocolError("truncated frame: expected " + std::to_string(n) + " body bytes, got " +
                                std::to_string(bytes.size() - kHeaderSize),
                            bytes.size());
    if (bytes.size() > kHeaderSize + n)
        throw ProtocolError("trailing bytes after frame", kHeaderSize + n);
    return decode_body(bytes.subspan(kHeaderSize, n));
}

} // namespace qhyb::protocol
