#include "qhyb/device.hpp"

#include <chrono>

namespace qhyb::device {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

Result Device::run(const Request& request) const {
    const auto& circuit = request.circuit;
    if (circuit.n_qubits > options_.qubit_cap)
        throw ResourceLimitError("circuit needs " + std::to_string(circuit.n_qubits) +
                                 " qubits; device qubit cap is " +
                                 std::to_string(options_.qubit_cap));
    const statevec::Options sim{options_.qubit_cap, options_.check_unitary};

    Result result;
    auto start = std::chrono::steady_clock::now();
    qasm::State state = qasm::execute(circuit, sim);
    result.device_time = seconds_since(start);

    start = std::chrono::steady_clock::now();
    if (request.postselect) {
        std::vector<statevec::Control> outcome;
        outcome.push_back({request.postselect->ancilla, 1});
        for (Qubit q : request.postselect->clock)
            outcome.push_back({q, 0});
        result.p_success = statevec::postselect<double>(state, outcome);
    }
    result.amplitudes = statevec::extract_amplitudes<double>(state, request.readout);
    result.readout_time = seconds_since(start);
    return result;
}

} // namespace qhyb::device
