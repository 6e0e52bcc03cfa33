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

#ifndef QEMBED_EMBEDDING_HPP_
#define QEMBED_EMBEDDING_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/statevector.hpp"

namespace qembed {

/// First-order Z-evolution feature map: each repetition applies H then U1(scale * x[q])
/// on every qubit. With one qubit, two repetitions and scale 2 the circuit is
/// U1(2x) H U1(2x) H.
struct FeatureMapSpec {
    std::size_t n_qubits = 1;
    std::size_t repetitions = 2;
    double scale = 2.0;

    void validate() const {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw SizeError("feature map qubit count out of range");
        }
        if (repetitions < 1) {
            throw ShapeError("feature map repetitions must be >= 1");
        }
        if (!std::isfinite(scale) || scale == 0.0) {
            throw ShapeError("feature map scale must be finite and nonzero");
        }
    }

    std::size_t gate_count() const {
        return repetitions * 2 * n_qubits;
    }
};

/// Real-amplitudes ansatz with a linear CX chain.
struct AnsatzSpec {
    std::size_t n_qubits = 1;
    std::size_t layers = 0;

    std::size_t parameter_count() const {
        return n_qubits * (layers + 1);
    }

    void validate() const {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw SizeError("ansatz qubit count out of range");
        }
    }
};

struct QuantumForwardResult {
    double p0;
    double p1;
    StateVector final_state;
};

inline std::vector<GateOp> build_z_feature_map(std::span<const double> features, const FeatureMapSpec &spec) {
    spec.validate();
    if (features.size() != spec.n_qubits) {
        throw ShapeError("feature map expects " + std::to_string(spec.n_qubits) + " features, got " +
                         std::to_string(features.size()));
    }
    for (double f : features) {
        if (!std::isfinite(f)) {
            throw NumericalError("non-finite feature");
        }
    }
    std::vector<GateOp> gates;
    gates.reserve(spec.gate_count());
    for (std::size_t r = 0; r < spec.repetitions; ++r) {
        for (std::size_t q = 0; q < spec.n_qubits; ++q) {
            gates.push_back(GateOp::h(q));
            gates.push_back(GateOp::u1(q, spec.scale * features[q]));
        }
    }
    return gates;
}

/// Index of the U1 gate carrying feature `q` in repetition `rep` inside the sequence
/// produced by build_z_feature_map.
inline std::size_t feature_gate_index(const FeatureMapSpec &spec, std::size_t rep, std::size_t q) {
    return rep * 2 * spec.n_qubits + 2 * q + 1;
}

/// theta is consumed layer by layer: layer l uses theta[l*n .. l*n+n-1] for its RY column,
/// followed by CX(q, q+1) for q = 0..n-2; the final RY column uses the last n entries.
inline std::vector<GateOp> build_real_amplitudes(std::span<const double> theta, const AnsatzSpec &spec) {
    spec.validate();
    if (theta.size() != spec.parameter_count()) {
        throw ShapeError("ansatz expects " + std::to_string(spec.parameter_count()) + " parameters, got " +
                         std::to_string(theta.size()));
    }
    const std::size_t n = spec.n_qubits;
    std::vector<GateOp> gates;
    std::size_t k = 0;
    for (std::size_t layer = 0; layer < spec.layers; ++layer) {
        for (std::size_t q = 0; q < n; ++q) {
            gates.push_back(GateOp::ry(q, theta[k++]));
        }
        for (std::size_t q = 0; q + 1 < n; ++q) {
            gates.push_back(GateOp::cx(q, q + 1));
        }
    }
    for (std::size_t q = 0; q < n; ++q) {
        gates.push_back(GateOp::ry(q, theta[k++]));
    }
    return gates;
}

/// Feature map followed by ansatz, as one gate list.
inline std::vector<GateOp> build_classifier_circuit(std::span<const double> features, std::span<const double> theta,
                                                    const FeatureMapSpec &fm, const AnsatzSpec &an) {
    if (fm.n_qubits != an.n_qubits) {
        throw ShapeError("feature map and ansatz disagree on qubit count");
    }
    auto gates = build_z_feature_map(features, fm);
    auto tail = build_real_amplitudes(theta, an);
    gates.insert(gates.end(), tail.begin(), tail.end());
    return gates;
}

/// Probability of reading 0 on `readout_qubit` after running `gates` from |0...0>.
inline double circuit_p0(std::span<const GateOp> gates, std::size_t n_qubits, std::size_t readout_qubit) {
    return marginal_zero_probability(run_circuit(StateVector::zero(n_qubits), gates), readout_qubit);
}

inline QuantumForwardResult quantum_forward(std::span<const double> features, std::span<const double> theta,
                                            const FeatureMapSpec &fm, const AnsatzSpec &an,
                                            std::size_t readout_qubit = 0) {
    auto gates = build_classifier_circuit(features, theta, fm, an);
    auto state = run_circuit(StateVector::zero(fm.n_qubits), gates);
    const double p0 = marginal_zero_probability(state, readout_qubit);
    return {p0, 1.0 - p0, std::move(state)};
}

}  // namespace qembed

#endif  // QEMBED_EMBEDDING_HPP_
