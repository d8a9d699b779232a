#pragma once

#include <json.hpp>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnn/rng.hpp"
#include "qnn/tensor.hpp"

// Physical objects of the network: Pauli strings, the translation-invariant
// two-site Hamiltonian and jump operator, the three-qubit local gate and the
// dense Lindblad generator.
//
// Conventions used throughout:
//   - Pauli order (I, x, y, z); |0> is the +1 eigenstate of sigma^z.
//   - Row-major tensor products, first factor most significant.
//   - Gate qubit order: (k-1, l-1), (k, l-1), (k, l).
//   - Open chain; the k=1 gate keeps only alpha1 = I terms.

namespace qnn {

inline constexpr int kPauliCount = 4;  // I, x, y, z

inline const Matrix& pauli(int alpha) {
    static const std::array<Matrix, 4> sigma = [] {
        std::array<Matrix, 4> s;
        for (auto& m : s) m = Matrix::Zero(2, 2);
        s[0](0, 0) = 1.0;  s[0](1, 1) = 1.0;            // I
        s[1](0, 1) = 1.0;  s[1](1, 0) = 1.0;            // x
        s[2](0, 1) = cd(0, -1);  s[2](1, 0) = cd(0, 1); // y
        s[3](0, 0) = 1.0;  s[3](1, 1) = -1.0;           // z
        return s;
    }();
    return sigma.at(static_cast<std::size_t>(alpha));
}

inline Matrix sigma_plus() {
    Matrix sp = Matrix::Zero(2, 2);
    sp(0, 1) = 1.0;  // row |0>, column |1>
    return sp;
}

inline Matrix swap_gate() {
    Matrix s = Matrix::Zero(4, 4);
    s(0, 0) = 1.0;
    s(1, 2) = 1.0;
    s(2, 1) = 1.0;
    s(3, 3) = 1.0;
    return s;
}

// ---------- trainable parameters ----------

// One trainable scalar inside (h, j): a matrix entry plus a re/im selector.
struct ParamSlot {
    char matrix;  // 'h' or 'j'
    int a1 = 0;
    int a2 = 0;
    bool imag = false;

    bool operator==(const ParamSlot&) const = default;
};

struct ParamSet {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    Eigen::Matrix4cd j = Eigen::Matrix4cd::Zero();
    std::vector<ParamSlot> mask;  // fixed slot order = flat vector order

    std::size_t dim() const { return mask.size(); }

    double get(const ParamSlot& s) const {
        if (s.matrix == 'h') return h(s.a1, s.a2);
        return s.imag ? j(s.a1, s.a2).imag() : j(s.a1, s.a2).real();
    }

    void set(const ParamSlot& s, double value) {
        if (s.matrix == 'h') {
            h(s.a1, s.a2) = value;
        } else if (s.imag) {
            j(s.a1, s.a2) = cd(j(s.a1, s.a2).real(), value);
        } else {
            j(s.a1, s.a2) = cd(value, j(s.a1, s.a2).imag());
        }
    }

    std::vector<double> flat() const {
        std::vector<double> v(mask.size());
        for (std::size_t i = 0; i < mask.size(); ++i) v[i] = get(mask[i]);
        return v;
    }

    void set_flat(const std::vector<double>& v) {
        if (v.size() != mask.size())
            throw std::invalid_argument("ParamSet::set_flat: length mismatch");
        for (std::size_t i = 0; i < mask.size(); ++i) set(mask[i], v[i]);
    }

    ParamSet perturbed(std::size_t slot, double eps) const {
        ParamSet p = *this;
        p.set(mask.at(slot), get(mask.at(slot)) + eps);
        return p;
    }
};

inline nlohmann::json paramset_to_json(const ParamSet& p) {
    nlohmann::json out;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            out["h"][r][c] = p.h(r, c);
            out["j_re"][r][c] = p.j(r, c).real();
            out["j_im"][r][c] = p.j(r, c).imag();
        }
    out["mask"] = nlohmann::json::array();
    for (const auto& s : p.mask)
        out["mask"].push_back({{"matrix", std::string(1, s.matrix)},
                               {"a1", s.a1},
                               {"a2", s.a2},
                               {"part", s.imag ? "im" : "re"}});
    return out;
}

inline ParamSet paramset_from_json(const nlohmann::json& in) {
    ParamSet p;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            p.h(r, c) = in.at("h").at(r).at(c).get<double>();
            p.j(r, c) = cd(in.at("j_re").at(r).at(c).get<double>(),
                           in.at("j_im").at(r).at(c).get<double>());
        }
    for (const auto& s : in.at("mask")) {
        ParamSlot slot;
        slot.matrix = s.at("matrix").get<std::string>().at(0);
        slot.a1 = s.at("a1").get<int>();
        slot.a2 = s.at("a2").get<int>();
        slot.imag = s.at("part").get<std::string>() == "im";
        p.mask.push_back(slot);
    }
    return p;
}

// ---------- network geometry ----------

struct NetworkConfig {
    int n_sites = 2;     // N
    int layers = 1;      // L propagation steps (layers = L + 1)
    double dt = 0.1;
    std::string boundary = "open";

    void validate() const {
        if (n_sites < 2) throw std::invalid_argument("NetworkConfig: N >= 2 required");
        if (layers < 1) throw std::invalid_argument("NetworkConfig: L >= 1 required");
        if (dt <= 0.0) throw std::invalid_argument("NetworkConfig: dt > 0 required");
        if (boundary != "open") throw std::invalid_argument("NetworkConfig: unknown boundary rule");
    }
};

// ---------- operators ----------

// sum_{a1,a2} coeffs(a1,a2) sigma^{a1} (x) sigma^{a2}
inline Matrix two_site_operator(const Eigen::Matrix4cd& coeffs) {
    Matrix out = Matrix::Zero(4, 4);
    for (int a1 = 0; a1 < kPauliCount; ++a1)
        for (int a2 = 0; a2 < kPauliCount; ++a2) {
            if (coeffs(a1, a2) == cd(0.0, 0.0)) continue;
            out += coeffs(a1, a2) * kron(pauli(a1), pauli(a2));
        }
    return out;
}

inline Matrix hamiltonian_operator(const ParamSet& p) {
    return two_site_operator(p.h.cast<cd>());
}

inline Matrix jump_operator(const ParamSet& p) { return two_site_operator(p.j); }

// Single-site remnants for k = 1: only alpha1 = I coefficients survive.
inline Matrix boundary_hamiltonian(const ParamSet& p) {
    Matrix out = Matrix::Zero(2, 2);
    for (int a2 = 0; a2 < kPauliCount; ++a2) out += cd(p.h(0, a2), 0.0) * pauli(a2);
    return out;
}

inline Matrix boundary_jump(const ParamSet& p) {
    Matrix out = Matrix::Zero(2, 2);
    for (int a2 = 0; a2 < kPauliCount; ++a2) out += p.j(0, a2) * pauli(a2);
    return out;
}

// 8x8 gate on qubits ((k-1,l-1), (k,l-1), (k,l)):
// SWAP_{2,3} * exp(-i sqrt(dt) (J (x) sigma^+ + h.c.)) * exp(-i dt H (x) I)
inline Matrix build_gate(const ParamSet& p, double dt) {
    if (dt < 0.0) throw std::invalid_argument("build_gate: dt >= 0 required");
    const Matrix eye2 = Matrix::Identity(2, 2);
    Matrix coupling = kron(jump_operator(p), sigma_plus());
    coupling += Matrix(coupling.adjoint());
    const Matrix u_coupling = matrix_exp(coupling, cd(0.0, -std::sqrt(dt)));
    const Matrix u_hamiltonian = kron(matrix_exp(hamiltonian_operator(p), cd(0.0, -dt)), eye2);
    return kron(eye2, swap_gate()) * u_coupling * u_hamiltonian;
}

// 4x4 gate on qubits ((1,l-1), (1,l)) with the missing left neighbor
// replaced by identity.
inline Matrix boundary_gate(const ParamSet& p, double dt) {
    if (dt < 0.0) throw std::invalid_argument("boundary_gate: dt >= 0 required");
    const Matrix eye2 = Matrix::Identity(2, 2);
    Matrix coupling = kron(boundary_jump(p), sigma_plus());
    coupling += Matrix(coupling.adjoint());
    const Matrix u_coupling = matrix_exp(coupling, cd(0.0, -std::sqrt(dt)));
    const Matrix u_hamiltonian = kron(matrix_exp(boundary_hamiltonian(p), cd(0.0, -dt)), eye2);
    return swap_gate() * u_coupling * u_hamiltonian;
}

// Embed an operator acting on `width` adjacent qubits starting at `first`
// (0-based, most significant first) into an n-qubit operator.
inline Matrix embed_adjacent(const Matrix& op, int first, int width, int n_qubits) {
    const std::int64_t left = std::int64_t(1) << first;
    const std::int64_t right = std::int64_t(1) << (n_qubits - first - width);
    return kron(kron(Matrix::Identity(left, left), op), Matrix::Identity(right, right));
}

inline constexpr int kDenseSiteGuard = 6;

// Dense Lindblad generator applied to a layer density matrix:
// L[rho] = -i [sum_k H_k, rho] + sum_k (K_k rho K_k^dag - 1/2 {K_k^dag K_k, rho})
// with effective jump K_k = J_k^dag. With sigma_plus = |0><1| the coupling
// exp(-i sqrt(dt) (J (x) sigma_plus + h.c.)) acting on a vacuum ancilla produces
// cross terms dt * J^dag rho J at second order (sigma_plus annihilates |0>), so
// the continuous-time limit of the discrete layer step dissipates via J^dag.
inline Matrix lindblad_apply(const ParamSet& p, const NetworkConfig& cfg, const Matrix& rho) {
    const int n = cfg.n_sites;
    if (n > kDenseSiteGuard)
        throw std::invalid_argument("lindblad_apply: dense guard N <= 6 exceeded");
    const std::int64_t dim = std::int64_t(1) << n;
    if (rho.rows() != dim || rho.cols() != dim)
        throw std::invalid_argument("lindblad_apply: density matrix size mismatch");

    Matrix h_total = embed_adjacent(boundary_hamiltonian(p), 0, 1, n);
    for (int k = 2; k <= n; ++k)
        h_total += embed_adjacent(hamiltonian_operator(p), k - 2, 2, n);

    Matrix out = cd(0.0, -1.0) * (h_total * rho - rho * h_total);
    for (int k = 1; k <= n; ++k) {
        const Matrix jk = (k == 1) ? embed_adjacent(boundary_jump(p), 0, 1, n)
                                   : embed_adjacent(jump_operator(p), k - 2, 2, n);
        const Matrix kk = jk.adjoint();
        const Matrix kdk = kk.adjoint() * kk;
        out += kk * rho * kk.adjoint() - 0.5 * (kdk * rho + rho * kdk);
    }
    return out;
}

// Vectorization convention shared by the dense oracle and the tensor-network
// engine: per-site |i><j| -> digit 2i+j, site 1 most significant.
inline std::int64_t vec_index(std::int64_t row, std::int64_t col, int n_sites) {
    std::int64_t v = 0;
    for (int k = 0; k < n_sites; ++k) {
        const int i = static_cast<int>((row >> (n_sites - 1 - k)) & 1);
        const int j = static_cast<int>((col >> (n_sites - 1 - k)) & 1);
        v = v * 4 + (2 * i + j);
    }
    return v;
}

// ---------- reference parameter presets ----------

inline std::vector<ParamSlot> dataset1_mask() {
    return {{'h', 0, 1, false}, {'h', 0, 3, false}, {'h', 1, 1, false},
            {'h', 2, 2, false}, {'h', 3, 3, false}, {'j', 0, 1, false},
            {'j', 0, 2, false}, {'j', 0, 2, true},  {'j', 0, 3, false},
            {'j', 0, 3, true}};
}

inline std::vector<ParamSlot> dataset2_mask() {
    return {{'h', 0, 1, false}, {'h', 1, 1, false}, {'h', 2, 2, false},
            {'h', 3, 3, false}, {'j', 0, 1, false}, {'j', 0, 3, false},
            {'j', 1, 1, false}, {'j', 1, 2, false}, {'j', 1, 3, false},
            {'j', 2, 1, false}, {'j', 3, 1, false}};
}

inline ParamSet dataset1_initial() {
    ParamSet p;
    p.mask = dataset1_mask();
    p.set_flat({1, -1, 1, 1, -1, 1, -1, -1, 1, -1});
    return p;
}

inline ParamSet dataset2_initial() {
    ParamSet p;
    p.mask = dataset2_mask();
    p.set_flat({0, -1, -1, -1, 0, 0, 0, -1, 0, 0, 0});
    return p;
}

// Stochastic training endpoints reported for reference, not reproducible targets.
inline ParamSet dataset1_trained_reference() {
    ParamSet p;
    p.mask = dataset1_mask();
    p.set_flat({0.32, 0.9, -0.38, -0.26, -1.08, 0.27, -0.43, -0.17, 0.38, -0.64});
    return p;
}

inline ParamSet dataset2_trained_reference() {
    ParamSet p;
    p.mask = dataset2_mask();
    p.set_flat({-0.05, -1.06, -0.55, -1.33, 0.01, -0.40, -0.07, -0.55, -0.04, 0.26, -0.03});
    return p;
}

// Uniform [-1, 1] draws on every masked slot, for property tests.
inline ParamSet random_paramset(std::vector<ParamSlot> mask, rng::Stream& stream) {
    ParamSet p;
    p.mask = std::move(mask);
    for (const auto& slot : p.mask) p.set(slot, stream.uniform(-1.0, 1.0));
    return p;
}

}  // namespace qnn
