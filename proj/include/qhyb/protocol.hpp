#pragma once

// Wire format between application and device server.
//
// Frame: 4-byte big-endian body length, then a UTF-8 JSON body of exactly that
// many bytes holding one message object with a "type" field. Unknown fields
// are ignored on receipt.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qhyb/device.hpp"

namespace qhyb::protocol {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kDefaultMaxFrame = 64u << 20; // 64 MiB
inline constexpr std::size_t kHeaderSize = 4;

struct Hello {
    int protocol_version = kProtocolVersion;
    friend bool operator==(const Hello&, const Hello&) = default;
};

struct SolveCircuit {
    std::string qasm;
    std::vector<device::BasisIndex> readout; ///< empty = full register
    std::optional<device::PostselectSpec> postselect;
    friend bool operator==(const SolveCircuit&, const SolveCircuit&) = default;
};

struct Result {
    std::vector<std::complex<double>> amplitudes;
    double p_success = 1.0;
    double device_time = 0.0;
    double readout_time = 0.0;
    friend bool operator==(const Result&, const Result&) = default;
};

/// Device-side error codes.
namespace codes {
inline constexpr std::string_view kParse = "PARSE";
inline constexpr std::string_view kValidate = "VALIDATE";
inline constexpr std::string_view kExecute = "EXECUTE";
inline constexpr std::string_view kPostselect = "POSTSELECT";
inline constexpr std::string_view kLimit = "LIMIT";
inline constexpr std::string_view kProtocol = "PROTOCOL";
} // namespace codes

struct ErrorReply {
    std::string code;
    std::string detail;
    friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

struct Shutdown {
    friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

using Message = std::variant<Hello, SolveCircuit, Result, ErrorReply, Shutdown>;

std::string_view type_name(const Message& m);

nlohmann::json to_json(const Message& m);

/// Throws ProtocolError (offset 0) on schema violations.
Message message_from_json(const nlohmann::json& body);

/// Length prefix + body. Throws ResourceLimitError if the body exceeds max_frame.
std::vector<std::uint8_t> encode_frame(const Message& m, std::size_t max_frame = kDefaultMaxFrame);

/// Body length from a 4-byte header; throws ProtocolError on 0 or > max_frame.
std::size_t frame_length(std::span<const std::uint8_t> header, std::size_t max_frame);

/// Parses only the body (no header).
Message decode_body(std::span<const std::uint8_t> body, std::size_t base_offset = kHeaderSize);

/// Decodes exactly one complete frame. Throws ProtocolError with the byte
/// offset of the defect on truncation, trailing bytes, bad length or bad body.
Message decode_frame(std::span<const std::uint8_t> bytes, std::size_t max_frame = kDefaultMaxFrame);

} // namespace qhyb::protocol
