#pragma once

#include <vector>

#include "qnn/model.hpp"
#include "qnn/tensor.hpp"

// Exact small-N reference implementation of the layer channel, built on the
// literal 2N-qubit register of the recurrence: embed rho (x) |0...0><0...0|
// with interleaved site order (old_1, new_1, old_2, new_2, ...), apply the
// gates for k = 1..N in increasing k, trace out the old layer.
//
// Correctness-only; guarded to small N.

namespace qnn::oracle {

// Most significant qubit first: position p carries bit (index >> (n-1-p)) & 1.
inline int bit_at(std::int64_t index, int position, int n_qubits) {
    return static_cast<int>((index >> (n_qubits - 1 - position)) & 1);
}

// In-place rho -> G rho G^dag for a gate on the given qubit positions.
inline void apply_gate_dm(Matrix& rho, const Matrix& gate, const std::vector<int>& positions,
                          int n_qubits) {
    const std::int64_t dim = std::int64_t(1) << n_qubits;
    const int g = static_cast<int>(positions.size());
    const std::int64_t gdim = std::int64_t(1) << g;
    std::vector<std::int64_t> bit_value(g);
    for (int t = 0; t < g; ++t) bit_value[t] = std::int64_t(1) << (n_qubits - 1 - positions[t]);
    std::int64_t target_mask = 0;
    for (auto b : bit_value) target_mask |= b;

    std::vector<std::int64_t> group(gdim);
    std::vector<cd> tmp(gdim);

    for (std::int64_t base = 0; base < dim; ++base) {
        if (base & target_mask) continue;
        for (std::int64_t t = 0; t < gdim; ++t) {
            std::int64_t idx = base;
            for (int q = 0; q < g; ++q)
                if ((t >> (g - 1 - q)) & 1) idx |= bit_value[q];
            group[t] = idx;
        }
        // left factor: rows
        for (std::int64_t c = 0; c < dim; ++c) {
            for (std::int64_t t = 0; t < gdim; ++t) tmp[t] = rho(group[t], c);
            for (std::int64_t t = 0; t < gdim; ++t) {
                cd acc(0.0, 0.0);
                for (std::int64_t s = 0; s < gdim; ++s) acc += gate(t, s) * tmp[s];
                rho(group[t], c) = acc;
            }
        }
        // right factor: columns against the adjoint
        for (std::int64_t r = 0; r < dim; ++r) {
            for (std::int64_t t = 0; t < gdim; ++t) tmp[t] = rho(r, group[t]);
            for (std::int64_t t = 0; t < gdim; ++t) {
                cd acc(0.0, 0.0);
                for (std::int64_t s = 0; s < gdim; ++s) acc += tmp[s] * std::conj(gate(t, s));
                rho(r, group[t]) = acc;
            }
        }
    }
}

// Spread an N-bit layer index onto the even (old) or odd (new) positions of
// the interleaved 2N-qubit register.
inline std::int64_t spread_bits(std::int64_t layer_index, int n_sites, int offset) {
    std::int64_t out = 0;
    for (int k = 0; k < n_sites; ++k) {
        const int bit = static_cast<int>((layer_index >> (n_sites - 1 - k)) & 1);
        if (bit) out |= std::int64_t(1) << (2 * n_sites - 1 - (2 * k + offset));
    }
    return out;
}

inline void check_dense_guard(int n_sites, int guard, const char* where) {
    if (n_sites > guard)
        throw std::invalid_argument(std::string(where) + ": dense size guard exceeded");
}

// One application of the layer channel to an N-qubit density matrix.
inline Matrix layer_step_dense(const ParamSet& p, const NetworkConfig& cfg, const Matrix& rho) {
    const int n = cfg.n_sites;
    check_dense_guard(n, 6, "layer_step_dense");
    const std::int64_t ldim = std::int64_t(1) << n;
    if (rho.rows() != ldim || rho.cols() != ldim)
        throw std::invalid_argument("layer_step_dense: density matrix size mismatch");

    const int q = 2 * n;
    const std::int64_t dim = std::int64_t(1) << q;
    Matrix full = Matrix::Zero(dim, dim);
    for (std::int64_t a = 0; a < ldim; ++a)
        for (std::int64_t b = 0; b < ldim; ++b)
            full(spread_bits(a, n, 0), spread_bits(b, n, 0)) = rho(a, b);

    // Gates act in decreasing k (the product G_1 ... G_N applies G_N to the
    // state first): each gate's left-neighbor site then still carries the
    // incoming layer state instead of an already-swapped-in vacuum qubit,
    // which is what makes the small-dt limit a nearest-neighbor Lindbladian.
    const Matrix gate = build_gate(p, cfg.dt);
    for (int k = n; k >= 2; --k)
        apply_gate_dm(full, gate, {2 * (k - 2), 2 * (k - 1), 2 * (k - 1) + 1}, q);
    apply_gate_dm(full, boundary_gate(p, cfg.dt), {0, 1}, q);

    // trace out the old (even) positions
    Matrix out = Matrix::Zero(ldim, ldim);
    for (std::int64_t t = 0; t < ldim; ++t) {
        const std::int64_t old_part = spread_bits(t, n, 0);
        for (std::int64_t a = 0; a < ldim; ++a)
            for (std::int64_t b = 0; b < ldim; ++b)
                out(a, b) += full(old_part | spread_bits(a, n, 1), old_part | spread_bits(b, n, 1));
    }
    return out;
}

// ---------- vectorization (per-site |i><j| -> 2i+j, site 1 most significant) ----------

inline Vector vectorize(const Matrix& rho, int n_sites) {
    const std::int64_t ldim = std::int64_t(1) << n_sites;
    Vector v(ldim * ldim);
    for (std::int64_t a = 0; a < ldim; ++a)
        for (std::int64_t b = 0; b < ldim; ++b) v(vec_index(a, b, n_sites)) = rho(a, b);
    return v;
}

inline Matrix unvectorize(const Vector& v, int n_sites) {
    const std::int64_t ldim = std::int64_t(1) << n_sites;
    Matrix rho(ldim, ldim);
    for (std::int64_t a = 0; a < ldim; ++a)
        for (std::int64_t b = 0; b < ldim; ++b) rho(a, b) = v(vec_index(a, b, n_sites));
    return rho;
}

// 4^N x 4^N superoperator matching layer_step_dense column by column.
inline Matrix build_dense_channel(const ParamSet& p, const NetworkConfig& cfg) {
    const int n = cfg.n_sites;
    check_dense_guard(n, 5, "build_dense_channel");
    const std::int64_t ldim = std::int64_t(1) << n;
    const std::int64_t sdim = ldim * ldim;
    Matrix channel(sdim, sdim);
    for (std::int64_t c = 0; c < sdim; ++c) {
        Vector basis = Vector::Zero(sdim);
        basis(c) = 1.0;
        channel.col(c) = vectorize(layer_step_dense(p, cfg, unvectorize(basis, n)), n);
    }
    return channel;
}

// Dense Lindblad superoperator in the same vectorized ordering.
inline Matrix lindblad_superoperator(const ParamSet& p, const NetworkConfig& cfg) {
    const int n = cfg.n_sites;
    check_dense_guard(n, 4, "lindblad_superoperator");
    const std::int64_t ldim = std::int64_t(1) << n;
    const std::int64_t sdim = ldim * ldim;
    Matrix out(sdim, sdim);
    for (std::int64_t c = 0; c < sdim; ++c) {
        Vector basis = Vector::Zero(sdim);
        basis(c) = 1.0;
        out.col(c) = vectorize(lindblad_apply(p, cfg, unvectorize(basis, n)), n);
    }
    return out;
}

// ---------- reference states and observables ----------

inline Eigen::Vector2cd bloch_qubit(double mx, double my, double mz) {
    const double theta = std::acos(std::clamp(2.0 * mz, -1.0, 1.0));
    const double phi = std::atan2(my, mx);
    Eigen::Vector2cd psi;
    psi(0) = std::cos(theta / 2.0);
    psi(1) = std::exp(cd(0.0, phi)) * std::sin(theta / 2.0);
    return psi;
}

inline Vector product_state_vector(const Eigen::Vector2cd& psi, int n_sites) {
    Vector out = Vector::Ones(1);
    for (int k = 0; k < n_sites; ++k) {
        Vector next(out.size() * 2);
        for (std::int64_t i = 0; i < out.size(); ++i) {
            next(2 * i) = out(i) * psi(0);
            next(2 * i + 1) = out(i) * psi(1);
        }
        out = next;
    }
    return out;
}

inline Matrix bloch_product_dm(double mx, double my, double mz, int n_sites) {
    const Vector psi = product_state_vector(bloch_qubit(mx, my, mz), n_sites);
    return psi * psi.adjoint();
}

// Haar-random pure product state with per-site independent draws.
inline Matrix random_product_dm(int n_sites, rng::Stream& stream) {
    Vector psi = Vector::Ones(1);
    for (int k = 0; k < n_sites; ++k) {
        Eigen::Vector2cd site;
        site(0) = cd(stream.normal(), stream.normal());
        site(1) = cd(stream.normal(), stream.normal());
        site.normalize();
        Vector next(psi.size() * 2);
        for (std::int64_t i = 0; i < psi.size(); ++i) {
            next(2 * i) = psi(i) * site(0);
            next(2 * i + 1) = psi(i) * site(1);
        }
        psi = next;
    }
    return psi * psi.adjoint();
}

// m^alpha = Tr(m_hat^alpha rho) with m_hat^alpha = (1/2N) sum_k sigma^alpha_k.
inline double magnetization_dense(const Matrix& rho, int axis, int n_sites) {
    Matrix op = Matrix::Zero(rho.rows(), rho.cols());
    for (int k = 1; k <= n_sites; ++k) op += embed_adjacent(pauli(axis), k - 1, 1, n_sites);
    return ((op * rho).trace() / (2.0 * n_sites)).real();
}

struct DenseTrajectory {
    std::vector<double> values;  // per-layer magnetization, l = 0..L
    Matrix final_rho;
};

inline DenseTrajectory evolve_dense(const ParamSet& p, const NetworkConfig& cfg,
                                    const Matrix& rho_in, int axis) {
    check_dense_guard(cfg.n_sites, 6, "evolve_dense");
    DenseTrajectory out;
    Matrix rho = rho_in;
    out.values.push_back(magnetization_dense(rho, axis, cfg.n_sites));
    for (int l = 0; l < cfg.layers; ++l) {
        rho = layer_step_dense(p, cfg, rho);
        out.values.push_back(magnetization_dense(rho, axis, cfg.n_sites));
    }
    out.final_rho = std::move(rho);
    return out;
}

// e(dt) = max over seeded random states of || step(dt)[rho] - exp(L dt)[rho] ||_F
inline std::vector<double> lindblad_limit_error(const ParamSet& p, const NetworkConfig& cfg,
                                                const std::vector<double>& dt_list,
                                                std::uint64_t seed = 20260826,
                                                int n_states = 10) {
    const int n = cfg.n_sites;
    check_dense_guard(n, 4, "lindblad_limit_error");
    const Matrix generator = lindblad_superoperator(p, cfg);

    std::vector<Matrix> states;
    for (int i = 0; i < n_states; ++i) {
        rng::Stream stream(rng::derive(seed, static_cast<std::uint64_t>(i)));
        states.push_back(random_product_dm(n, stream));
    }

    std::vector<double> errors;
    for (double dt : dt_list) {
        NetworkConfig step_cfg = cfg;
        step_cfg.dt = dt;
        const Matrix propagator = matrix_exp(generator, cd(dt, 0.0));
        double worst = 0.0;
        for (const auto& rho : states) {
            const Matrix stepped = layer_step_dense(p, step_cfg, rho);
            const Matrix continuous = unvectorize(propagator * vectorize(rho, n), n);
            worst = std::max(worst, (stepped - continuous).norm());
        }
        errors.push_back(worst);
    }
    return errors;
}

// Joint x-basis Born probabilities over all 2^N outcomes; bit 0 of the
// outcome index means +1 on that site (site 1 most significant).
inline std::vector<double> born_x_probabilities(const Matrix& rho, int n_sites) {
    const std::int64_t ldim = std::int64_t(1) << n_sites;
    std::vector<double> probs(static_cast<std::size_t>(ldim));
    const double amp = 1.0 / std::sqrt(static_cast<double>(ldim));
    for (std::int64_t m = 0; m < ldim; ++m) {
        Vector v(ldim);
        for (std::int64_t b = 0; b < ldim; ++b) {
            // <b | (x) |m_k> : minus sign for every site where the basis bit
            // and a -1 outcome coincide
            int parity = 0;
            for (int k = 0; k < n_sites; ++k) {
                const int outcome_minus = static_cast<int>((m >> (n_sites - 1 - k)) & 1);
                const int bit = static_cast<int>((b >> (n_sites - 1 - k)) & 1);
                parity ^= (outcome_minus & bit);
            }
            v(b) = parity ? -amp : amp;
        }
        probs[static_cast<std::size_t>(m)] = std::max(0.0, (v.adjoint() * rho * v)(0, 0).real());
    }
    return probs;
}

}  // namespace qnn::oracle
