#include "qhyb/qasm.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "qhyb/base64.hpp"

namespace qhyb::qasm {

std::string_view keyword(GateKind kind) {
    switch (kind) {
    case GateKind::H: return "h";
    case GateKind::X: return "x";
    case GateKind::RX: return "rx";
    case GateKind::RY: return "ry";
    case GateKind::RZ: return "rz";
    case GateKind::CX: return "cx";
    case GateKind::CRY: return "cry";
    case GateKind::SWAP: return "swap";
    case GateKind::Unitary: return "unitary";
    case GateKind::CUnitary: return "cunitary";
    case GateKind::MCRY: return "mcry";
    }
    return "?";
}

Instruction Instruction::h(Qubit q) { return {GateKind::H, 0.0, {}, {q}, nullptr}; }
Instruction Instruction::x(Qubit q) { return {GateKind::X, 0.0, {}, {q}, nullptr}; }
Instruction Instruction::rx(double theta, Qubit q) { return {GateKind::RX, theta, {}, {q}, nullptr}; }
Instruction Instruction::ry(double theta, Qubit q) { return {GateKind::RY, theta, {}, {q}, nullptr}; }
Instruction Instruction::rz(double theta, Qubit q) { return {GateKind::RZ, theta, {}, {q}, nullptr}; }

Instruction Instruction::cx(Qubit control, Qubit target) {
    return {GateKind::CX, 0.0, {{control, 1}}, {target}, nullptr};
}

Instruction Instruction::cry(double theta, Qubit control, Qubit target) {
    return {GateKind::CRY, theta, {{control, 1}}, {target}, nullptr};
}

Instruction Instruction::swap(Qubit a, Qubit b) { return {GateKind::SWAP, 0.0, {}, {a, b}, nullptr}; }

Instruction Instruction::mcry(double theta, std::vector<Control> controls, Qubit target) {
    return {GateKind::MCRY, theta, std::move(controls), {target}, nullptr};
}

Instruction Instruction::unitary(Matrix m, std::vector<Qubit> targets) {
    return {GateKind::Unitary, 0.0, {}, std::move(targets),
            std::make_shared<const Matrix>(std::move(m))};
}

Instruction Instruction::cunitary(Matrix m, std::vector<Control> controls,
                                  std::vector<Qubit> targets) {
    return {GateKind::CUnitary, 0.0, std::move(controls), std::move(targets),
            std::make_shared<const Matrix>(std::move(m))};
}

Matrix Instruction::gate_matrix() const {
    namespace g = statevec::gates;
    switch (kind) {
    case GateKind::H: return g::h();
    case GateKind::X:
    case GateKind::CX: return g::x();
    case GateKind::RX: return g::rx(angle);
    case GateKind::RY:
    case GateKind::CRY:
    case GateKind::MCRY: return g::ry(angle);
    case GateKind::RZ: return g::rz(angle);
    case GateKind::SWAP: return g::swap();
    case GateKind::Unitary:
    case GateKind::CUnitary:
        if (!matrix)
            throw ValidationError("missing matrix payload");
        return *matrix;
    }
    throw ValidationError("unknown gate kind");
}

namespace {

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_matrix(const std::shared_ptr<const Matrix>& a, const std::shared_ptr<const Matrix>& b) {
    if (a == b)
        return true;
    if (!a || !b || a->rows() != b->rows() || a->cols() != b->cols())
        return false;
    return std::memcmp(a->data(), b->data(), sizeof(std::complex<double>) * a->size()) == 0;
}

bool has_matrix(GateKind k) { return k == GateKind::Unitary || k == GateKind::CUnitary; }

bool has_angle(GateKind k) {
    return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ || k == GateKind::CRY ||
           k == GateKind::MCRY;
}

} // namespace

bool operator==(const Instruction& a, const Instruction& b) {
    return a.kind == b.kind && same_bits(a.angle, b.angle) && a.controls == b.controls &&
           a.targets == b.targets && same_matrix(a.matrix, b.matrix);
}

std::string encode_matrix(const Matrix& m) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(static_cast<std::size_t>(m.size()) * 16);
    auto put = [&](double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i)
            bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    };
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            put(m(r, c).real());
            put(m(r, c).imag());
        }
    return base64::encode(bytes);
}

std::optional<Matrix> decode_matrix(std::string_view blob, Eigen::Index dim) {
    auto bytes = base64::decode(blob);
    if (!bytes || bytes->size() != static_cast<std::size_t>(dim * dim * 16))
        return std::nullopt;
    auto get = [&](std::size_t offset) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= std::uint64_t{(*bytes)[offset + i]} << (8 * i);
        return std::bit_cast<double>(bits);
    };
    Matrix m(dim, dim);
    std::size_t offset = 0;
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c, offset += 16)
            m(r, c) = {get(offset), get(offset + 8)};
    return m;
}

void validate(const Circuit& circuit) {
    if (circuit.n_qubits < 1 || circuit.n_qubits > kMaxDeclaredQubits)
        throw ValidationError("qubit count " + std::to_string(circuit.n_qubits) +
                              " outside 1.." + std::to_string(kMaxDeclaredQubits));
    for (std::size_t i = 0; i < circuit.instructions.size(); ++i) {
        const Instruction& ins = circuit.instructions[i];
        const std::string where =
            "instruction " + std::to_string(i) + " (" + std::string(keyword(ins.kind)) + "): ";
        auto fail = [&](const std::string& msg) { throw ValidationError(where + msg); };

        std::size_t want_controls_min = 0, want_controls_max = 0, want_targets = 1;
        switch (ins.kind) {
        case GateKind::CX:
        case GateKind::CRY: want_controls_min = want_controls_max = 1; break;
        case GateKind::MCRY:
        case GateKind::CUnitary: want_controls_min = 1; want_controls_max = SIZE_MAX; break;
        case GateKind::SWAP: want_targets = 2; break;
        default: break;
        }
        if (has_matrix(ins.kind))
            want_targets = 0; // any positive count
        if (ins.controls.size() < want_controls_min || ins.controls.size() > want_controls_max)
            fail("wrong number of controls (" + std::to_string(ins.controls.size()) + ")");
        if (want_targets != 0 && ins.targets.size() != want_targets)
            fail("wrong number of targets (" + std::to_string(ins.targets.size()) + ")");
        if (ins.targets.empty())
            fail("no target qubits");
        if ((ins.kind == GateKind::CX || ins.kind == GateKind::CRY) && ins.controls[0].value != 1)
            fail("single-control gates require control value 1");
        if (!std::isfinite(ins.angle) || (!has_angle(ins.kind) && ins.angle != 0.0))
            fail("invalid angle");

        std::uint64_t seen = 0;
        auto claim = [&](Qubit q) {
            if (q >= circuit.n_qubits)
                fail("qubit " + std::to_string(q) + " out of range for " +
                     std::to_string(circuit.n_qubits) + " qubits");
            if (seen & (std::uint64_t{1} << q))
                fail("qubit " + std::to_string(q) + " repeated");
            seen |= std::uint64_t{1} << q;
        };
        for (Qubit t : ins.targets)
            claim(t);
        for (const Control& c : ins.controls) {
            claim(c.qubit);
            if (c.value > 1)
                fail("control value must be 0 or 1");
        }

        if (has_matrix(ins.kind) != static_cast<bool>(ins.matrix))
            fail(has_matrix(ins.kind) ? "missing matrix payload" : "unexpected matrix payload");
        if (ins.matrix) {
            const Eigen::Index dim = Eigen::Index{1} << ins.targets.size();
            if (ins.matrix->rows() != dim || ins.matrix->cols() != dim)
                fail("matrix payload is not " + std::to_string(dim) + "x" + std::to_string(dim));
            if (statevec::unitarity_defect<double>(*ins.matrix) > statevec::kUnitarityTolerance)
                fail("matrix payload is not unitary");
        }
    }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Circuit run() {
        Circuit circuit;
        skip_space();
        const Mark head = mark();
        if (read_word() != "qubits")
            fail(head, "program must start with 'qubits'");
        const Mark count_at = mark();
        const auto n = read_uint();
        if (n < 1 || n > kMaxDeclaredQubits)
            fail(count_at, "qubit count must be in 1.." + std::to_string(kMaxDeclaredQubits));
        circuit.n_qubits = static_cast<unsigned>(n);
        expect(';');
        for (;;) {
            skip_space();
            if (pos_ == text_.size())
                break;
            circuit.instructions.push_back(instruction(circuit.n_qubits));
        }
        return circuit;
    }

private:
    struct Mark {
        std::size_t pos, line, col;
    };

    [[noreturn]] void fail(const Mark& at, const std::string& msg) const {
        throw ParseError(at.line, at.col, msg);
    }

    Mark mark() const { return {pos_, line_, col_}; }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (ch == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string describe_next() const {
        if (pos_ >= text_.size())
            return "end of input";
        const char ch = text_[pos_];
        if (std::isprint(static_cast<unsigned char>(ch)))
            return std::string("'") + ch + "'";
        return "byte " + std::to_string(static_cast<unsigned char>(ch));
    }

    void expect(char want) {
        skip_space();
        if (peek() != want)
            fail(mark(), std::string("expected '") + want + "' but found " + describe_next());
        advance();
    }

    std::string_view read_word() {
        skip_space();
        const Mark at = mark();
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            advance();
        if (pos_ == at.pos)
            fail(at, "expected a keyword but found " + describe_next());
        return text_.substr(at.pos, pos_ - at.pos);
    }

    std::uint64_t read_uint() {
        skip_space();
        const Mark at = mark();
        std::uint64_t value = 0;
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        if (!std::isdigit(static_cast<unsigned char>(peek())))
            fail(at, "expected an integer but found " + describe_next());
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc())
            fail(at, "integer out of range");
        if (ptr < last && (std::isalpha(static_cast<unsigned char>(*ptr)) || *ptr == '.'))
            fail(at, "malformed integer");
        while (text_.data() + pos_ < ptr)
            advance();
        return value;
    }

    double read_float() {
        skip_space();
        const Mark at = mark();
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        const char ch = peek();
        if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.'))
            fail(at, "expected a number but found " + describe_next());
        double value = 0;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || !std::isfinite(value))
            fail(at, "malformed number");
        while (text_.data() + pos_ < ptr)
            advance();
        return value;
    }

    Qubit read_qubit(unsigned n_qubits) {
        skip_space();
        const Mark at = mark();
        const auto q = read_uint();
        if (q >= n_qubits)
            fail(at, "qubit " + std::to_string(q) + " out of range for " +
                         std::to_string(n_qubits) + " qubits");
        return static_cast<Qubit>(q);
    }

    double angle() {
        expect('(');
        const double a = read_float();
        expect(')');
        return a;
    }

    // "c[" or "t[" with no space between the letter and the bracket.
    void list_open(char letter) {
        skip_space();
        const Mark at = mark();
        if (peek() != letter || pos_ + 1 >= text_.size() || text_[pos_ + 1] != '[')
            fail(at, std::string("expected '") + letter + "[' but found " + describe_next());
        advance();
        advance();
    }

    bool list_continues() {
        skip_space();
        const Mark at = mark();
        if (peek() == ',') {
            advance();
            return true;
        }
        if (peek() == ']') {
            advance();
            return false;
        }
        fail(at, "expected ',' or ']' but found " + describe_next());
    }

    std::vector<Control> controls(unsigned n_qubits) {
        list_open('c');
        std::vector<Control> out;
        do {
            const Qubit q = read_qubit(n_qubits);
            expect('=');
            skip_space();
            const Mark at = mark();
            const auto v = read_uint();
            if (v > 1)
                fail(at, "control value must be 0 or 1");
            out.push_back({q, static_cast<unsigned>(v)});
        } while (list_continues());
        return out;
    }

    std::vector<Qubit> targets(unsigned n_qubits) {
        list_open('t');
        std::vector<Qubit> out;
        do {
            out.push_back(read_qubit(n_qubits));
        } while (list_continues());
        return out;
    }

    std::shared_ptr<const Matrix> matrix_payload(std::size_t n_targets) {
        skip_space();
        const Mark at = mark();
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '+' || ch == '/' ||
                  ch == '='))
                break;
            advance();
        }
        if (pos_ == at.pos)
            fail(at, "expected a base64 matrix payload but found " + describe_next());
        if (n_targets > 12)
            fail(at, "matrix payload on more than 12 qubits is not supported");
        const Eigen::Index dim = Eigen::Index{1} << n_targets;
        auto m = decode_matrix(text_.substr(at.pos, pos_ - at.pos), dim);
        if (!m)
            fail(at, "malformed matrix payload (expected " + std::to_string(dim) + "x" +
                         std::to_string(dim) + " complex entries)");
        if (!m->allFinite() ||
            statevec::unitarity_defect<double>(*m) > statevec::kUnitarityTolerance)
            fail(at, "matrix payload is not unitary");
        return std::make_shared<const Matrix>(std::move(*m));
    }

    void check_distinct(const Mark& at, const std::vector<Control>& cs,
                        const std::vector<Qubit>& ts) {
        std::uint64_t seen = 0;
        auto claim = [&](Qubit q) {
            if (seen & (std::uint64_t{1} << q))
                fail(at, "qubit " + std::to_string(q) + " used more than once in one instruction");
            seen |= std::uint64_t{1} << q;
        };
        for (const auto& c : cs)
            claim(c.qubit);
        for (Qubit t : ts)
            claim(t);
    }

    Instruction instruction(unsigned n) {
        skip_space();
        const Mark at = mark();
        const std::string_view word = read_word();
        Instruction ins;
        if (word == "h" || word == "x") {
            ins = word == "h" ? Instruction::h(read_qubit(n)) : Instruction::x(read_qubit(n));
        } else if (word == "cx" || word == "swap") {
            const Qubit a = read_qubit(n);
            const Qubit b = read_qubit(n);
            ins = word == "cx" ? Instruction::cx(a, b) : Instruction::swap(a, b);
        } else if (word == "rx" || word == "ry" || word == "rz") {
            const double theta = angle();
            const Qubit q = read_qubit(n);
            ins = word == "rx" ? Instruction::rx(theta, q)
                  : word == "ry" ? Instruction::ry(theta, q)
                                 : Instruction::rz(theta, q);
        } else if (word == "cry") {
            const double theta = angle();
            const Qubit c = read_qubit(n);
            const Qubit t = read_qubit(n);
            ins = Instruction::cry(theta, c, t);
        } else if (word == "mcry") {
            const double theta = angle();
            auto cs = controls(n);
            const Qubit t = read_qubit(n);
            ins = Instruction::mcry(theta, std::move(cs), t);
        } else if (word == "unitary") {
            auto ts = targets(n);
            check_distinct(at, {}, ts);
            ins = {GateKind::Unitary, 0.0, {}, std::move(ts), nullptr};
            ins.matrix = matrix_payload(ins.targets.size());
        } else if (word == "cunitary") {
            auto cs = controls(n);
            auto ts = targets(n);
            check_distinct(at, cs, ts);
            ins = {GateKind::CUnitary, 0.0, std::move(cs), std::move(ts), nullptr};
            ins.matrix = matrix_payload(ins.targets.size());
        } else {
            fail(at, "unknown instruction '" + std::string(word) + "'");
        }
        check_distinct(at, ins.controls, ins.targets);
        expect(';');
        return ins;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

std::string format_double(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

void append_controls(std::string& out, const std::vector<Control>& cs) {
    out += "c[";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(cs[i].qubit);
        out += '=';
        out += cs[i].value ? '1' : '0';
    }
    out += ']';
}

void append_targets(std::string& out, const std::vector<Qubit>& ts) {
    out += "t[";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(ts[i]);
    }
    out += ']';
}

} // namespace

Circuit parse(std::string_view text) { return Parser(text).run(); }

std::string serialize(const Circuit& circuit) {
    validate(circuit);
    std::string out = "qubits " + std::to_string(circuit.n_qubits) + ";\n";
    for (const Instruction& ins : circuit.instructions) {
        out += keyword(ins.kind);
        if (has_angle(ins.kind))
            out += "(" + format_double(ins.angle) + ")";
        switch (ins.kind) {
        case GateKind::CX:
        case GateKind::CRY:
            out += " " + std::to_string(ins.controls[0].qubit) + " " +
                   std::to_string(ins.targets[0]);
            break;
        case GateKind::SWAP:
            out += " " + std::to_string(ins.targets[0]) + " " + std::to_string(ins.targets[1]);
            break;
        case GateKind::MCRY:
            out += ' ';
            append_controls(out, ins.controls);
            out += " " + std::to_string(ins.targets[0]);
            break;
        case GateKind::Unitary:
            out += ' ';
            append_targets(out, ins.targets);
            out += " " + encode_matrix(*ins.matrix);
            break;
        case GateKind::CUnitary:
            out += ' ';
            append_controls(out, ins.controls);
            out += ' ';
            append_targets(out, ins.targets);
            out += " " + encode_matrix(*ins.matrix);
            break;
        default:
            out += " " + std::to_string(ins.targets[0]);
            break;
        }
        out += ";\n";
    }
    return out;
}

void execute_into(const Circuit& circuit, State& state, const statevec::Options& options) {
    if (state.n_qubits() != circuit.n_qubits)
        throw ValidationError("circuit declares " + std::to_string(circuit.n_qubits) +
                              " qubits but the state has " + std::to_string(state.n_qubits()));
    for (std::size_t i = 0; i < circuit.instructions.size(); ++i) {
        const Instruction& ins = circuit.instructions[i];
        const std::string where =
            "instruction " + std::to_string(i) + " (" + std::string(keyword(ins.kind)) + "): ";
        try {
            if (ins.matrix) {
                statevec::apply_controlled<double>(state, *ins.matrix, ins.controls, ins.targets,
                                                   options);
            } else {
                statevec::apply_controlled<double>(state, ins.gate_matrix(), ins.controls,
                                                   ins.targets, options);
            }
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        } catch (const ResourceLimitError& e) {
            throw ResourceLimitError(where + e.what());
        }
    }
}

State execute(const Circuit& circuit, const statevec::Options& options) {
    State state = statevec::new_zero_state<double>(circuit.n_qubits, options.qubit_cap);
    execute_into(circuit, state, options);
    return state;
}

State execute(const Circuit& circuit, State initial, const statevec::Options& options) {
    execute_into(circuit, initial, options);
    return initial;
}

} // namespace qhyb::qasm
