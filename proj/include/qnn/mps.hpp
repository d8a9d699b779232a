#pragma once

#include <array>
#include <vector>

#include "qnn/tensor.hpp"

// Matrix-product representation of vectorized layer states: N site tensors
// of shape (chi_left, 4, chi_right), physical index 2i+j over |i><j|.

namespace qnn::tn {

inline const std::array<cd, 4>& trace_weights() {
    static const std::array<cd, 4> w = {cd(1, 0), cd(0, 0), cd(0, 0), cd(1, 0)};
    return w;
}

inline const std::array<cd, 4>& vacuum_weights() {
    static const std::array<cd, 4> w = {cd(1, 0), cd(0, 0), cd(0, 0), cd(0, 0)};
    return w;
}

// w[2j+i] = sigma[i][j], so that contracting the physical leg with w gives
// Tr(sigma rho) site-locally.
inline std::array<cd, 4> pauli_weights(int axis) {
    switch (axis) {
        case 1: return {cd(0, 0), cd(1, 0), cd(1, 0), cd(0, 0)};    // x
        case 2: return {cd(0, 0), cd(0, 1), cd(0, -1), cd(0, 0)};   // y
        case 3: return {cd(1, 0), cd(0, 0), cd(0, 0), cd(-1, 0)};   // z
        default: throw std::invalid_argument("pauli_weights: axis must be x, y or z");
    }
}

struct LayerMps {
    std::vector<DenseTensor> sites;  // each (l, 4, r)
    std::int64_t chi_max = -1;       // -1: unlimited
    double discarded_weight = 0.0;

    int n_sites() const { return static_cast<int>(sites.size()); }
    std::int64_t bond(int i) const { return sites[static_cast<std::size_t>(i)].shape[2]; }
    std::int64_t max_bond() const {
        std::int64_t m = 1;
        for (const auto& s : sites) m = std::max(m, s.shape[2]);
        return m;
    }
};

// Contract the physical leg of a site tensor with a weight vector -> (l x r).
template <typename W>
inline Matrix contract_phys(const DenseTensor& site, const W& w) {
    const std::int64_t l = site.shape[0], p = site.shape[1], r = site.shape[2];
    Matrix out = Matrix::Zero(l, r);
    for (std::int64_t a = 0; a < l; ++a)
        for (std::int64_t i = 0; i < p; ++i) {
            if (w[static_cast<std::size_t>(i)] == cd(0, 0)) continue;
            for (std::int64_t b = 0; b < r; ++b)
                out(a, b) += w[static_cast<std::size_t>(i)] * site.data[(a * p + i) * r + b];
        }
    return out;
}

inline cd mps_trace(const LayerMps& state) {
    Matrix acc = Matrix::Ones(1, 1);
    for (const auto& site : state.sites) acc = acc * contract_phys(site, trace_weights());
    return acc(0, 0);
}

// Rescale the state so its trace is exactly 1. The layer channel preserves
// the trace, but bond truncation moves it slightly; renormalizing after each
// layer keeps sampled probabilities consistent. A trace far from 1 signals a
// collapsed compression rather than ordinary truncation error.
inline void normalize_trace(LayerMps& state) {
    const cd t = mps_trace(state);
    if (std::abs(t - cd(1.0, 0.0)) > 0.2)
        throw NumericalError("normalize_trace: trace deviates from 1 by more than 0.2");
    const cd scale = cd(1.0, 0.0) / t;
    for (auto& v : state.sites.front().data) v *= scale;
}

// Bond-dimension-1 MPS for the translation-invariant pure product state with
// the given radius-1/2 Bloch vector.
inline LayerMps product_state_mps(double mx, double my, double mz, int n_sites) {
    const double radius2 = mx * mx + my * my + mz * mz;
    if (std::abs(radius2 - 0.25) > 1e-10)
        throw std::invalid_argument("product_state_mps: Bloch vector must have norm 1/2");
    DenseTensor site({1, 4, 1});
    site.data[0] = cd(0.5 + mz, 0.0);
    site.data[1] = cd(mx, -my);
    site.data[2] = cd(mx, my);
    site.data[3] = cd(0.5 - mz, 0.0);
    LayerMps state;
    state.sites.assign(static_cast<std::size_t>(n_sites), site);
    return state;
}

struct Expectation {
    double value = 0.0;
    double imag_magnitude = 0.0;  // health metric; ~0 for physical states
};

inline Expectation magnetization_expectation_full(const LayerMps& state, int axis) {
    const int n = state.n_sites();
    const auto w = pauli_weights(axis);

    std::vector<Matrix> left(static_cast<std::size_t>(n) + 1);
    left[0] = Matrix::Ones(1, 1);
    for (int k = 0; k < n; ++k)
        left[k + 1] = left[k] * contract_phys(state.sites[static_cast<std::size_t>(k)], trace_weights());
    std::vector<Matrix> right(static_cast<std::size_t>(n) + 1);
    right[static_cast<std::size_t>(n)] = Matrix::Ones(1, 1);
    for (int k = n - 1; k >= 0; --k)
        right[k] = contract_phys(state.sites[static_cast<std::size_t>(k)], trace_weights()) * right[k + 1];

    cd total(0.0, 0.0);
    for (int k = 0; k < n; ++k)
        total += (left[k] * contract_phys(state.sites[static_cast<std::size_t>(k)], w) * right[k + 1])(0, 0);
    total /= 2.0 * n;
    return {total.real(), std::abs(total.imag())};
}

inline double magnetization_expectation(const LayerMps& state, int axis) {
    return magnetization_expectation_full(state, axis).value;
}

// Full 4^N vectorized state; test/diagnostic use only.
inline Vector mps_to_vector(const LayerMps& state) {
    Matrix acc = Matrix::Ones(1, 1);  // (phys-so-far, bond)
    for (const auto& site : state.sites) {
        const std::int64_t l = site.shape[0], p = site.shape[1], r = site.shape[2];
        const Matrix m = as_matrix(site, l, p * r);
        Matrix next(acc.rows() * p, r);
        for (std::int64_t z = 0; z < acc.rows(); ++z) {
            Matrix block = acc.row(z) * m;  // 1 x (p*r)
            next.block(z * p, 0, p, r) =
                Eigen::Map<const Matrix>(block.data(), p, r);
        }
        acc = next;
    }
    return Vector(Eigen::Map<const Vector>(acc.data(), acc.rows()));
}

// ---------- canonicalization and truncation ----------

// Left-to-right QR pass (no truncation) followed by a right-to-left
// truncating SVD pass; leaves the orthogonality center on site 0.
// Works for any chain of (l, p, r) tensors; returns accumulated
// discarded weight.
inline double compress_chain(std::vector<DenseTensor>& sites, std::int64_t chi,
                             const SvdTruncation& base_trunc) {
    const int n = static_cast<int>(sites.size());
    double discarded = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
        auto& site = sites[static_cast<std::size_t>(k)];
        const std::int64_t l = site.shape[0], p = site.shape[1], r = site.shape[2];
        Matrix m = as_matrix(site, l * p, r);
        Eigen::HouseholderQR<Matrix> qr(m);
        const std::int64_t keep = std::min(l * p, r);
        Matrix q = qr.householderQ() * Matrix::Identity(l * p, keep);
        Matrix rest = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
        site = reshape(from_matrix(q), {l, p, keep});
        auto& next = sites[static_cast<std::size_t>(k) + 1];
        const std::int64_t nl = next.shape[0], np = next.shape[1], nr = next.shape[2];
        next = reshape(from_matrix(rest * as_matrix(next, nl, np * nr)), {keep, np, nr});
    }
    SvdTruncation trunc = base_trunc;
    trunc.max_rank = chi;
    for (int k = n - 1; k > 0; --k) {
        auto& site = sites[static_cast<std::size_t>(k)];
        const std::int64_t l = site.shape[0], p = site.shape[1], r = site.shape[2];
        SvdResult svd = svd_truncate(as_matrix(site, l, p * r), trunc);
        discarded += svd.discarded_weight;
        const std::int64_t keep = svd.s.size();
        site = reshape(from_matrix(svd.v), {keep, p, r});
        Matrix carry = svd.u * svd.s.asDiagonal();
        auto& prev = sites[static_cast<std::size_t>(k) - 1];
        const std::int64_t pl = prev.shape[0], pp = prev.shape[1], pr = prev.shape[2];
        prev = reshape(from_matrix(as_matrix(prev, pl * pp, pr) * carry), {pl, pp, keep});
    }
    return discarded;
}

inline void compress(LayerMps& state, std::int64_t chi, const SvdTruncation& base_trunc) {
    state.discarded_weight += compress_chain(state.sites, chi, base_trunc);
}

}  // namespace qnn::tn
