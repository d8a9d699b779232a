#pragma once

#include <vector>

#include "qnn/model.hpp"
#include "qnn/mps.hpp"

// Matrix-product-operator form of the layer channel and the two evolution
// backends (MPO application and direct gate sweeps on the doubled chain).
//
// The channel is a staircase applied in decreasing k: gate k couples the old
// qubit of site k-1 with the old and new qubits of site k, and acts after
// gate k+1 but before gate k-1. The old qubit of site k therefore passes
// through gate k+1 (as its left neighbor) and then through gate k, after
// which it is traced out locally at site k. Two vectorized legs cross the
// bond between MPO sites k and k+1: the original site-k input travelling
// right into gate k+1, and gate k+1's intermediate result travelling back
// left into gate k. The exact channel MPO bond dimension is thus 16; the
// configured chi_mpo cap and SVD compression act on top of that exact form.

namespace qnn::tn {

struct LayerMpo {
    std::vector<DenseTensor> sites;  // each (l, 4out, 4in, r)
    std::int64_t chi_max = -1;
    double discarded_weight = 0.0;

    int n_sites() const { return static_cast<int>(sites.size()); }
    std::int64_t max_bond() const {
        std::int64_t m = 1;
        for (const auto& s : sites) m = std::max(m, s.shape[3]);
        return m;
    }
};

// Superoperator of a unitary gate in the per-qubit interleaved vectorization:
// S[vec(i',j'), vec(i,j)] = G(i',i) conj(G(j',j)).
inline Matrix gate_superoperator(const Matrix& gate, int n_qubits) {
    const std::int64_t dim = gate.rows();
    const std::int64_t sup = dim * dim;
    Matrix s(sup, sup);
    for (std::int64_t ip = 0; ip < dim; ++ip)
        for (std::int64_t jp = 0; jp < dim; ++jp)
            for (std::int64_t i = 0; i < dim; ++i)
                for (std::int64_t j = 0; j < dim; ++j)
                    s(vec_index(ip, jp, n_qubits), vec_index(i, j, n_qubits)) =
                        gate(ip, i) * std::conj(gate(jp, j));
    return s;
}

// MPO of the layer channel: 4-dim input (old layer), 4-dim output (new
// layer). Vacuum injection and old-layer trace closures are folded in
// site-locally as described above.
inline LayerMpo build_layer_mpo(const ParamSet& p, const NetworkConfig& cfg,
                                std::int64_t chi_mpo, const SvdTruncation& trunc) {
    const int n = cfg.n_sites;
    const Matrix sb = gate_superoperator(boundary_gate(p, cfg.dt), 2);   // [(o1',n'),(o1,n)]
    const Matrix s = gate_superoperator(build_gate(p, cfg.dt), 3);       // [(v1',o2',n'),(v1,o2,n)]
    const auto& tr = trace_weights();

    LayerMpo mpo;
    mpo.chi_max = chi_mpo;
    mpo.sites.reserve(static_cast<std::size_t>(n));

    // Bond index between sites k and k+1 is the pair (x_k, m_k) flattened as
    // 4*x + m: x_k is the original site-k input forwarded to gate k+1's left
    // slot, m_k is gate k+1's intermediate left-slot output coming back for
    // gate k's own-site slot.

    // site 1: the boundary gate acts last; its own-site old-qubit input is
    // m_1 (site 1's input after gate 2) and its old-qubit output is traced
    DenseTensor first({1, 4, 4, 16});
    for (std::int64_t no = 0; no < 4; ++no)
        for (std::int64_t oi = 0; oi < 4; ++oi)
            for (std::int64_t x = 0; x < 4; ++x)
                for (std::int64_t m = 0; m < 4; ++m) {
                    if (x != oi) continue;
                    cd acc(0.0, 0.0);
                    for (std::int64_t t = 0; t < 4; ++t) {
                        if (tr[static_cast<std::size_t>(t)] == cd(0, 0)) continue;
                        acc += tr[static_cast<std::size_t>(t)] * sb(t * 4 + no, m * 4 + 0);
                    }
                    first.data[(no * 4 + oi) * 16 + (x * 4 + m)] = acc;
                }
    mpo.sites.push_back(std::move(first));

    DenseTensor bulk({16, 4, 4, 16});
    for (std::int64_t xl = 0; xl < 4; ++xl)
        for (std::int64_t ml = 0; ml < 4; ++ml)
            for (std::int64_t no = 0; no < 4; ++no)
                for (std::int64_t ok = 0; ok < 4; ++ok)
                    for (std::int64_t mr = 0; mr < 4; ++mr) {
                        cd acc(0.0, 0.0);
                        for (std::int64_t t = 0; t < 4; ++t) {
                            if (tr[static_cast<std::size_t>(t)] == cd(0, 0)) continue;
                            acc += tr[static_cast<std::size_t>(t)] *
                                   s((ml * 4 + t) * 4 + no, (xl * 4 + mr) * 4 + 0);
                        }
                        // right bond forwards ok as x_k; m_k = mr feeds this gate
                        bulk.data[(((xl * 4 + ml) * 4 + no) * 4 + ok) * 16 + (ok * 4 + mr)] =
                            acc;
                    }
    for (int k = 2; k < n; ++k) mpo.sites.push_back(bulk);

    // site N: gate N is the first to act, so its own-site slot sees the raw
    // input and its old-qubit output is traced out locally
    DenseTensor last({16, 4, 4, 1});
    for (std::int64_t xl = 0; xl < 4; ++xl)
        for (std::int64_t ml = 0; ml < 4; ++ml)
            for (std::int64_t no = 0; no < 4; ++no)
                for (std::int64_t on = 0; on < 4; ++on) {
                    cd acc(0.0, 0.0);
                    for (std::int64_t t = 0; t < 4; ++t) {
                        if (tr[static_cast<std::size_t>(t)] == cd(0, 0)) continue;
                        acc += tr[static_cast<std::size_t>(t)] *
                               s((ml * 4 + t) * 4 + no, (xl * 4 + on) * 4 + 0);
                    }
                    last.data[((xl * 4 + ml) * 4 + no) * 4 + on] = acc;
                }
    mpo.sites.push_back(std::move(last));

    // canonicalize and apply the configured cap
    std::vector<DenseTensor> merged;
    merged.reserve(mpo.sites.size());
    for (auto& site : mpo.sites) {
        const std::int64_t l = site.shape[0], r = site.shape[3];
        merged.push_back(reshape(std::move(site), {l, 16, r}));
    }
    mpo.discarded_weight += compress_chain(merged, chi_mpo, trunc);
    mpo.sites.clear();
    for (auto& site : merged) {
        const std::int64_t l = site.shape[0], r = site.shape[2];
        mpo.sites.push_back(reshape(std::move(site), {l, 4, 4, r}));
    }
    return mpo;
}

// Zip-up MPO application followed by a truncating canonicalization sweep.
inline LayerMps apply_mpo(const LayerMps& state, const LayerMpo& op, std::int64_t chi_mps,
                          const SvdTruncation& base_trunc) {
    const int n = state.n_sites();
    if (op.n_sites() != n) throw std::invalid_argument("apply_mpo: site count mismatch");
    SvdTruncation trunc = base_trunc;
    trunc.max_rank = chi_mps;

    LayerMps out;
    out.chi_max = chi_mps;
    out.discarded_weight = state.discarded_weight;
    out.sites.reserve(static_cast<std::size_t>(n));

    DenseTensor carry({1, 1, 1});  // (a, state bond, mpo bond)
    carry.data[0] = cd(1.0, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& m = state.sites[static_cast<std::size_t>(i)];
        const auto& o = op.sites[static_cast<std::size_t>(i)];
        const std::int64_t a = carry.shape[0], ml = m.shape[0], ol = carry.shape[2];
        const std::int64_t mr = m.shape[2], orr = o.shape[3];

        // cm[a, ol, pi, mr] = sum_ml carry[a, ml, ol] m[ml, pi, mr]
        DenseTensor c2 = permute(carry, {0, 2, 1});
        DenseTensor cm = reshape(
            from_matrix(as_matrix(c2, a * ol, ml) * as_matrix(m, ml, 4 * mr)),
            {a, ol, 4, mr});
        // x[a, mr, po, or] = sum_{ol, pi} cm[a, ol, pi, mr] o[ol, po, pi, or]
        DenseTensor cmp = permute(cm, {0, 3, 1, 2});
        DenseTensor op_t = permute(o, {0, 2, 1, 3});
        DenseTensor x = reshape(
            from_matrix(as_matrix(cmp, a * mr, ol * 4) * as_matrix(op_t, ol * 4, 4 * orr)),
            {a, mr, 4, orr});
        DenseTensor b = permute(x, {0, 2, 1, 3});  // (a, po, mr, or)

        if (i + 1 == n) {
            out.sites.push_back(reshape(std::move(b), {a, 4, mr * orr}));
            break;
        }
        SvdResult svd = svd_truncate(as_matrix(b, a * 4, mr * orr), trunc);
        out.discarded_weight += svd.discarded_weight;
        const std::int64_t keep = svd.s.size();
        out.sites.push_back(reshape(from_matrix(svd.u), {a, 4, keep}));
        carry = reshape(from_matrix(Matrix(svd.s.asDiagonal()) * svd.v), {keep, mr, orr});
    }
    compress(out, chi_mps, base_trunc);
    return out;
}

// ---------- direct gate sweep on the doubled chain ----------

// Two-site gate on (sites i, i+1); the orthogonality center is assumed
// inside the pair and ends at site i+1 (default) or at site i when
// center_at_left is set, matching the sweep direction.
inline void apply_two_site(std::vector<DenseTensor>& sites, double& discarded, int i,
                           const Matrix& w, const SvdTruncation& trunc,
                           bool center_at_left = false) {
    auto& a = sites[static_cast<std::size_t>(i)];
    auto& b = sites[static_cast<std::size_t>(i) + 1];
    const std::int64_t l = a.shape[0], p1 = a.shape[1], mid = a.shape[2];
    const std::int64_t p2 = b.shape[1], r = b.shape[2];

    DenseTensor theta = reshape(
        from_matrix(as_matrix(a, l * p1, mid) * as_matrix(b, mid, p2 * r)), {l, p1, p2, r});
    // apply w to the (p1, p2) block of every fixed l slice
    for (std::int64_t z = 0; z < l; ++z) {
        Eigen::Map<Matrix> block(theta.data.data() + z * p1 * p2 * r, p1 * p2, r);
        block = (w * block).eval();
    }
    SvdResult svd = svd_truncate(as_matrix(theta, l * p1, p2 * r), trunc);
    discarded += svd.discarded_weight;
    const std::int64_t keep = svd.s.size();
    if (center_at_left) {
        a = reshape(from_matrix(Matrix(svd.u * svd.s.asDiagonal())), {l, p1, keep});
        b = reshape(from_matrix(svd.v), {keep, p2, r});
    } else {
        a = reshape(from_matrix(svd.u), {l, p1, keep});
        b = reshape(from_matrix(Matrix(svd.s.asDiagonal()) * svd.v), {keep, p2, r});
    }
}

// Move the orthogonality center from site 0 to the last site by a sweep of
// thin QR factorizations (no truncation).
inline void shift_center_to_last(std::vector<DenseTensor>& sites) {
    for (std::size_t i = 0; i + 1 < sites.size(); ++i) {
        auto& a = sites[i];
        const std::int64_t l = a.shape[0], p = a.shape[1], r = a.shape[2];
        Matrix m = as_matrix(a, l * p, r);
        Eigen::HouseholderQR<Matrix> qr(m);
        const std::int64_t keep = std::min(l * p, r);
        Matrix q = qr.householderQ() * Matrix::Identity(l * p, keep);
        Matrix rm = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
        a = reshape(from_matrix(q), {l, p, keep});
        auto& b = sites[i + 1];
        const std::int64_t p2 = b.shape[1], r2 = b.shape[2];
        b = reshape(from_matrix(Matrix(rm * as_matrix(b, r, p2 * r2))), {keep, p2, r2});
    }
}

// Apply one network layer by widening every site with a fresh vacuum qubit,
// sweeping the vectorized gates in decreasing k (gate N first, boundary gate
// last) and tracing out the old qubits. Cross-validation backend for
// apply_mpo.
inline LayerMps sweep_evolve(const LayerMps& state, const ParamSet& p, const NetworkConfig& cfg,
                             std::int64_t chi_mps, const SvdTruncation& base_trunc) {
    const int n = state.n_sites();
    if (cfg.n_sites != n) throw std::invalid_argument("sweep_evolve: site count mismatch");
    SvdTruncation trunc = base_trunc;
    trunc.max_rank = chi_mps;

    LayerMps work = state;
    work.chi_max = chi_mps;
    compress(work, chi_mps, base_trunc);  // right-canonical, center at site 0

    // widen: local dimension 16 = (old qubit) x (new vacuum qubit)
    for (auto& site : work.sites) {
        const std::int64_t l = site.shape[0], r = site.shape[2];
        DenseTensor wide({l, 16, r});
        for (std::int64_t a = 0; a < l; ++a)
            for (std::int64_t q = 0; q < 4; ++q)
                for (std::int64_t b = 0; b < r; ++b)
                    wide.data[(a * 16 + 4 * q) * r + b] = site.data[(a * 4 + q) * r + b];
        site = std::move(wide);
    }

    // bulk gate as a two-site superoperator: acts on the old qubit of site
    // k-1 and both qubits of site k, identity on the new qubit of site k-1
    const Matrix s = gate_superoperator(build_gate(p, cfg.dt), 3);
    Matrix two_site = Matrix::Zero(256, 256);
    for (std::int64_t v1p = 0; v1p < 4; ++v1p)
        for (std::int64_t v2p = 0; v2p < 4; ++v2p)
            for (std::int64_t v3p = 0; v3p < 4; ++v3p)
                for (std::int64_t v1 = 0; v1 < 4; ++v1)
                    for (std::int64_t v2 = 0; v2 < 4; ++v2)
                        for (std::int64_t v3 = 0; v3 < 4; ++v3)
                            for (std::int64_t u = 0; u < 4; ++u)
                                two_site((4 * v1p + u) * 16 + (4 * v2p + v3p),
                                         (4 * v1 + u) * 16 + (4 * v2 + v3)) =
                                    s((v1p * 4 + v2p) * 4 + v3p, (v1 * 4 + v2) * 4 + v3);

    shift_center_to_last(work.sites);
    for (int k = n - 2; k >= 0; --k)
        apply_two_site(work.sites, work.discarded_weight, k, two_site, trunc,
                       /*center_at_left=*/true);

    const Matrix sb = gate_superoperator(boundary_gate(p, cfg.dt), 2);
    {   // boundary gate acts last, as a single-site superoperator on site 1
        auto& site = work.sites.front();
        const std::int64_t l = site.shape[0], r = site.shape[2];
        for (std::int64_t a = 0; a < l; ++a) {
            Eigen::Map<Matrix> block(site.data.data() + a * 16 * r, 16, r);
            block = (sb * block).eval();
        }
    }

    // trace out the old qubit on every site
    const auto& tr = trace_weights();
    for (auto& site : work.sites) {
        const std::int64_t l = site.shape[0], r = site.shape[2];
        DenseTensor narrow({l, 4, r});
        for (std::int64_t a = 0; a < l; ++a)
            for (std::int64_t pn = 0; pn < 4; ++pn)
                for (std::int64_t b = 0; b < r; ++b) {
                    cd acc(0.0, 0.0);
                    for (std::int64_t q = 0; q < 4; ++q)
                        acc += tr[static_cast<std::size_t>(q)] *
                               site.data[(a * 16 + 4 * q + pn) * r + b];
                    narrow.data[(a * 4 + pn) * r + b] = acc;
                }
        site = std::move(narrow);
    }
    compress(work, chi_mps, base_trunc);
    return work;
}

// ---------- trajectories ----------

struct Trajectory {
    std::vector<double> mx;  // per-layer magnetization, l = 0..L
    LayerMps final_state;
};

inline Trajectory evolve_trajectory_mpo(const LayerMps& state0, const LayerMpo& mpo, int layers,
                                        std::int64_t chi_mps, const SvdTruncation& trunc,
                                        int axis = 1) {
    Trajectory out;
    LayerMps state = state0;
    out.mx.push_back(magnetization_expectation(state, axis));
    for (int l = 0; l < layers; ++l) {
        state = apply_mpo(state, mpo, chi_mps, trunc);
        normalize_trace(state);
        out.mx.push_back(magnetization_expectation(state, axis));
    }
    out.final_state = std::move(state);
    return out;
}

inline Trajectory evolve_trajectory_sweep(const LayerMps& state0, const ParamSet& p,
                                          const NetworkConfig& cfg, std::int64_t chi_mps,
                                          const SvdTruncation& trunc, int axis = 1) {
    Trajectory out;
    LayerMps state = state0;
    out.mx.push_back(magnetization_expectation(state, axis));
    for (int l = 0; l < cfg.layers; ++l) {
        state = sweep_evolve(state, p, cfg, chi_mps, trunc);
        normalize_trace(state);
        out.mx.push_back(magnetization_expectation(state, axis));
    }
    out.final_state = std::move(state);
    return out;
}

}  // namespace qnn::tn
