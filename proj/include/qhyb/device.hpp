#pragma once

// The quantum-device stand-in: runs a circuit on the statevector engine,
// post-selects, and returns only the amplitudes that were asked for.

#include <complex>
#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

#include "qhyb/qasm.hpp"

namespace qhyb::device {

using statevec::BasisIndex;
using statevec::Qubit;
using cplx = std::complex<double>;

/// Condition on ancilla == 1 and every clock qubit == 0.
struct PostselectSpec {
    Qubit ancilla = 0;
    std::vector<Qubit> clock;

    friend bool operator==(const PostselectSpec&, const PostselectSpec&) = default;
};

struct Request {
    qasm::Circuit circuit;
    /// Basis indices to read back; empty means the full register.
    std::vector<BasisIndex> readout;
    std::optional<PostselectSpec> postselect;
};

struct Result {
    std::vector<cplx> amplitudes;
    double p_success = 1.0;
    double device_time = 0.0;  ///< circuit execution, seconds
    double readout_time = 0.0; ///< post-selection plus amplitude extraction, seconds
};

struct DeviceOptions {
    unsigned qubit_cap = statevec::kDefaultQubitCap;
    bool check_unitary = true;
};

class Device {
public:
    explicit Device(DeviceOptions options = {}) : options_(options) {}

    const DeviceOptions& options() const noexcept { return options_; }

    /// Throws ResourceLimitError, ValidationError or DegeneratePostselectionError.
    Result run(const Request& request) const;

private:
    DeviceOptions options_;
};

/// Something that can run a device request: an in-process device or a remote one.
class Executor {
public:
    virtual ~Executor() = default;
    virtual Result run(const Request& request) = 0;
    virtual bool remote() const noexcept { return false; }
};

/// In-process transport: a direct call on the caller's thread.
class LocalExecutor final : public Executor {
public:
    explicit LocalExecutor(DeviceOptions options = {}) : device_(options) {}
    Result run(const Request& request) override { return device_.run(request); }

private:
    Device device_;
};

} // namespace qhyb::device
