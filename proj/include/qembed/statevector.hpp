// Copyright 2026 The qembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QEMBED_STATEVECTOR_HPP_
#define QEMBED_STATEVECTOR_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/numfmt.hpp"

namespace qembed {

using Amplitude = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 20;
inline constexpr double kNormTolerance = 1e-12;

enum class GateKind { H, U1, RY, CX };

inline std::string_view gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::H:
            return "H";
        case GateKind::U1:
            return "U1";
        case GateKind::RY:
            return "RY";
        case GateKind::CX:
            return "CX";
    }
    return "?";
}

/// One gate of the supported set. `angle` is the U1 phase or the RY rotation and is
/// ignored for H and CX. `control` is set only for CX.
struct GateOp {
    GateKind kind = GateKind::H;
    std::size_t target = 0;
    std::optional<std::size_t> control;
    double angle = 0.0;

    static GateOp h(std::size_t q) {
        return {GateKind::H, q, std::nullopt, 0.0};
    }
    static GateOp u1(std::size_t q, double lambda) {
        return {GateKind::U1, q, std::nullopt, lambda};
    }
    static GateOp ry(std::size_t q, double theta) {
        return {GateKind::RY, q, std::nullopt, theta};
    }
    static GateOp cx(std::size_t control, std::size_t target) {
        return {GateKind::CX, target, control, 0.0};
    }

    bool has_angle() const {
        return kind == GateKind::U1 || kind == GateKind::RY;
    }

    bool operator==(const GateOp &) const = default;
};

/// Dense n-qubit pure state. Qubit 0 is the least significant bit of the basis index.
///
/// Instances are immutable through the public interface; gate application returns a new
/// state, so a single state may be shared across threads.
class StateVector {
   public:
    /// |0...0> on `n_qubits` qubits. Throws SizeError outside [1, kMaxQubits].
    static StateVector zero(std::size_t n_qubits) {
        check_qubit_count(n_qubits);
        std::vector<Amplitude> amps(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
        amps[0] = 1.0;
        return StateVector(n_qubits, std::move(amps));
    }

    /// Wraps explicit amplitudes. The length must be a power of two and the norm 1.
    static StateVector from_amplitudes(std::vector<Amplitude> amps) {
        std::size_t n = 0;
        while ((std::size_t{1} << n) < amps.size()) {
            ++n;
        }
        if (amps.empty() || (std::size_t{1} << n) != amps.size() || n == 0) {
            throw SizeError("amplitude count must be 2^n with n >= 1, got " + std::to_string(amps.size()));
        }
        check_qubit_count(n);
        double norm2 = 0.0;
        for (const auto &a : amps) {
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
                throw NumericalError("non-finite amplitude");
            }
            norm2 += std::norm(a);
        }
        if (std::abs(norm2 - 1.0) > kNormTolerance) {
            throw NumericalError("state is not normalized: squared norm " + format_real(norm2));
        }
        return StateVector(n, std::move(amps));
    }

    std::size_t num_qubits() const {
        return n_qubits_;
    }
    std::size_t size() const {
        return amps_.size();
    }
    std::span<const Amplitude> amplitudes() const {
        return amps_;
    }
    const Amplitude &operator[](std::size_t i) const {
        return amps_[i];
    }

    double squared_norm() const {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    /// Throws IndexError if the gate does not fit this register.
    void validate(const GateOp &gate) const {
        if (gate.target >= n_qubits_) {
            throw IndexError("gate target " + std::to_string(gate.target) + " out of range for " +
                             std::to_string(n_qubits_) + " qubits");
        }
        if (gate.kind == GateKind::CX) {
            if (!gate.control.has_value()) {
                throw IndexError("CX requires a control qubit");
            }
            if (*gate.control >= n_qubits_) {
                throw IndexError("gate control " + std::to_string(*gate.control) + " out of range for " +
                                 std::to_string(n_qubits_) + " qubits");
            }
            if (*gate.control == gate.target) {
                throw IndexError("CX control equals target");
            }
        } else if (gate.control.has_value()) {
            throw IndexError(std::string(gate_name(gate.kind)) + " does not take a control qubit");
        }
        if (gate.has_angle() && !std::isfinite(gate.angle)) {
            throw NumericalError("non-finite gate angle");
        }
    }

    /// Applies the gate to this state in place. Callers must have validated it.
    void apply_unchecked(const GateOp &gate) {
        const std::size_t bit = std::size_t{1} << gate.target;
        switch (gate.kind) {
            case GateKind::H: {
                const double r = 1.0 / std::sqrt(2.0);
                for_each_pair(bit, [r](Amplitude &a0, Amplitude &a1) {
                    Amplitude x = a0, y = a1;
                    a0 = r * (x + y);
                    a1 = r * (x - y);
                });
                break;
            }
            case GateKind::U1: {
                const Amplitude phase = std::polar(1.0, gate.angle);
                for_each_pair(bit, [phase](Amplitude &, Amplitude &a1) { a1 *= phase; });
                break;
            }
            case GateKind::RY: {
                const double c = std::cos(gate.angle / 2);
                const double s = std::sin(gate.angle / 2);
                for_each_pair(bit, [c, s](Amplitude &a0, Amplitude &a1) {
                    Amplitude x = a0, y = a1;
                    a0 = c * x - s * y;
                    a1 = s * x + c * y;
                });
                break;
            }
            case GateKind::CX: {
                const std::size_t cbit = std::size_t{1} << *gate.control;
                for (std::size_t i = 0; i < amps_.size(); ++i) {
                    if ((i & cbit) && !(i & bit)) {
                        std::swap(amps_[i], amps_[i | bit]);
                    }
                }
                break;
            }
        }
    }

   private:
    StateVector(std::size_t n, std::vector<Amplitude> amps) : n_qubits_(n), amps_(std::move(amps)) {
    }

    static void check_qubit_count(std::size_t n) {
        if (n < 1 || n > kMaxQubits) {
            throw SizeError("qubit count must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                            std::to_string(n));
        }
    }

    template <typename F>
    void for_each_pair(std::size_t bit, F &&f) {
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if (!(i & bit)) {
                f(amps_[i], amps_[i | bit]);
            }
        }
    }

    std::size_t n_qubits_;
    std::vector<Amplitude> amps_;
};

inline StateVector new_zero_state(std::size_t n_qubits) {
    return StateVector::zero(n_qubits);
}

inline StateVector apply_gate(const StateVector &state, const GateOp &gate) {
    state.validate(gate);
    StateVector out = state;
    out.apply_unchecked(gate);
    return out;
}

/// Left fold of apply_gate. Every gate is validated before any is applied.
inline StateVector run_circuit(const StateVector &state, std::span<const GateOp> gates) {
    for (const auto &g : gates) {
        state.validate(g);
    }
    StateVector out = state;
    for (const auto &g : gates) {
        out.apply_unchecked(g);
    }
    return out;
}

inline std::vector<double> probabilities(const StateVector &state) {
    std::vector<double> p;
    p.reserve(state.size());
    for (const auto &a : state.amplitudes()) {
        p.push_back(std::norm(a));
    }
    return p;
}

/// Probability that `qubit` reads 0 in the computational basis.
inline double marginal_zero_probability(const StateVector &state, std::size_t qubit) {
    if (qubit >= state.num_qubits()) {
        throw IndexError("readout qubit " + std::to_string(qubit) + " out of range for " +
                         std::to_string(state.num_qubits()) + " qubits");
    }
    const std::size_t bit = std::size_t{1} << qubit;
    double p0 = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        double p = std::norm(state[i]);
        total += p;
        if (!(i & bit)) {
            p0 += p;
        }
    }
    // Normalising by the total keeps p0 in [0, 1] after rounding drift.
    p0 /= total;
    return p0 < 0.0 ? 0.0 : (p0 > 1.0 ? 1.0 : p0);
}

/// One gate per line: `H 0`, `U1 0 1.4`, `RY 0 0.3`, `CX 0 1` (control first).
inline std::string format_gate(const GateOp &g) {
    std::string out(gate_name(g.kind));
    if (g.kind == GateKind::CX) {
        out += " " + std::to_string(*g.control) + " " + std::to_string(g.target);
    } else {
        out += " " + std::to_string(g.target);
        if (g.has_angle()) {
            out += " " + format_real(g.angle);
        }
    }
    return out;
}

inline std::string format_circuit(std::span<const GateOp> gates) {
    std::string out;
    for (const auto &g : gates) {
        out += format_gate(g);
        out += '\n';
    }
    return out;
}

inline std::vector<GateOp> parse_circuit(std::string_view text) {
    std::vector<GateOp> gates;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        std::istringstream fields{std::string(body)};
        std::string name, a, b, extra;
        fields >> name >> a >> b >> extra;
        auto index = [&](const std::string &s) {
            auto v = parse_integer(s);
            if (!v || *v < 0) {
                throw ParseError("bad qubit index '" + s + "'", line_no);
            }
            return static_cast<std::size_t>(*v);
        };
        auto angle = [&](const std::string &s) {
            auto v = parse_real(s);
            if (!v) {
                throw ParseError("bad angle '" + s + "'", line_no);
            }
            return *v;
        };
        if (!extra.empty()) {
            throw ParseError("trailing fields", line_no);
        }
        if (name == "H" && b.empty()) {
            gates.push_back(GateOp::h(index(a)));
        } else if (name == "U1" && !b.empty()) {
            gates.push_back(GateOp::u1(index(a), angle(b)));
        } else if (name == "RY" && !b.empty()) {
            gates.push_back(GateOp::ry(index(a), angle(b)));
        } else if (name == "CX" && !b.empty()) {
            gates.push_back(GateOp::cx(index(a), index(b)));
        } else {
            throw ParseError("unrecognised gate line '" + std::string(body) + "'", line_no);
        }
    }
    return gates;
}

}  // namespace qembed

#endif  // QEMBED_STATEVECTOR_HPP_
