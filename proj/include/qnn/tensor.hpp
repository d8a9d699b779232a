#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

// Dense complex multilinear algebra: reshape/permute, truncated SVD and
// matrix exponentials. Everything here is a pure function on immutable
// inputs; all entry storage is row-major.

namespace qnn {

using cd = std::complex<double>;
using Matrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXcd;

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------- dense tensors ----------

struct DenseTensor {
    std::vector<std::int64_t> shape;
    std::vector<cd> data;  // row-major

    DenseTensor() = default;
    explicit DenseTensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel(shape)), cd(0.0, 0.0));
    }

    static std::int64_t numel(const std::vector<std::int64_t>& s) {
        std::int64_t n = 1;
        for (auto e : s) n *= e;
        return n;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
};

// Reshape keeps the entry sequence untouched.
inline DenseTensor reshape(DenseTensor t, std::vector<std::int64_t> shape) {
    if (DenseTensor::numel(shape) != t.size())
        throw std::invalid_argument("reshape: extents do not match entry count");
    t.shape = std::move(shape);
    return t;
}

// perm[d] gives the source axis placed at destination axis d.
inline DenseTensor permute(const DenseTensor& t, const std::vector<int>& perm) {
    const int r = t.rank();
    if (static_cast<int>(perm.size()) != r)
        throw std::invalid_argument("permute: rank mismatch");
    std::vector<std::int64_t> out_shape(r);
    for (int d = 0; d < r; ++d) out_shape[d] = t.shape[perm[d]];

    std::vector<std::int64_t> in_stride(r, 1);
    for (int d = r - 2; d >= 0; --d) in_stride[d] = in_stride[d + 1] * t.shape[d + 1];
    std::vector<std::int64_t> step(r);
    for (int d = 0; d < r; ++d) step[d] = in_stride[perm[d]];

    DenseTensor out(out_shape);
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t src = 0;
    for (std::int64_t dst = 0; dst < out.size(); ++dst) {
        out.data[dst] = t.data[src];
        for (int d = r - 1; d >= 0; --d) {
            if (++idx[d] < out_shape[d]) {
                src += step[d];
                break;
            }
            idx[d] = 0;
            src -= step[d] * (out_shape[d] - 1);
        }
    }
    return out;
}

inline std::vector<int> inverse_permutation(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (int d = 0; d < static_cast<int>(perm.size()); ++d) inv[perm[d]] = d;
    return inv;
}

inline Matrix as_matrix(const DenseTensor& t, std::int64_t rows, std::int64_t cols) {
    if (rows * cols != t.size())
        throw std::invalid_argument("as_matrix: extents do not match entry count");
    return Eigen::Map<const Matrix>(t.data.data(), rows, cols);
}

inline DenseTensor from_matrix(const Matrix& m) {
    DenseTensor t({m.rows(), m.cols()});
    Eigen::Map<Matrix>(t.data.data(), m.rows(), m.cols()) = m;
    return t;
}

// ---------- truncated SVD ----------

struct SvdTruncation {
    std::int64_t max_rank = -1;     // -1: unlimited
    double rel_cutoff = 1e-12;      // sigma < rel_cutoff * sigma_max is dropped

    static SvdTruncation unlimited() { return {-1, 0.0}; }
    static SvdTruncation rank(std::int64_t r) { return {r, 1e-12}; }
};

struct SvdResult {
    Matrix u;                 // m x k, orthonormal columns
    Eigen::VectorXd s;        // k, descending
    Matrix v;                 // k x n, orthonormal rows
    double discarded_weight;  // sum of dropped sigma^2 / sum of all sigma^2
};

inline SvdResult svd_truncate(const Matrix& a, const SvdTruncation& trunc) {
    if (a.size() == 0) throw std::invalid_argument("svd_truncate: empty input");
    if (!a.allFinite())
        throw NumericalError("svd_truncate: non-finite input of shape " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!svd.singularValues().allFinite())
        throw NumericalError("svd_truncate: SVD failed on shape " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));

    const Eigen::VectorXd& sigma = svd.singularValues();
    const std::int64_t full = sigma.size();
    const double total = sigma.squaredNorm();

    std::int64_t keep = full;
    if (trunc.max_rank >= 0) keep = std::min(keep, trunc.max_rank);
    if (total > 0.0) {
        const double floor_value = trunc.rel_cutoff * sigma(0);
        while (keep > 1 && sigma(keep - 1) < floor_value) --keep;
    }
    keep = std::max<std::int64_t>(keep, 1);

    SvdResult out;
    out.u = svd.matrixU().leftCols(keep);
    out.s = sigma.head(keep);
    out.v = svd.matrixV().leftCols(keep).adjoint();
    out.discarded_weight =
        total > 0.0 ? (total - sigma.head(keep).squaredNorm()) / total : 0.0;
    return out;
}

inline SvdResult svd_truncate(const DenseTensor& t, const SvdTruncation& trunc) {
    if (t.rank() != 2) throw std::invalid_argument("svd_truncate: rank-2 tensor required");
    return svd_truncate(as_matrix(t, t.shape[0], t.shape[1]), trunc);
}

// ---------- matrix exponential ----------

inline bool is_hermitian(const Matrix& a, double tol = 1e-12) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

// exp(scale * a). Hermitian inputs go through an eigendecomposition,
// everything else through scaling-and-squaring.
inline Matrix matrix_exp(const Matrix& a, cd scale = cd(1.0, 0.0)) {
    if (a.rows() != a.cols()) throw std::invalid_argument("matrix_exp: square matrix required");
    if (!a.allFinite()) throw NumericalError("matrix_exp: non-finite input");
    if (is_hermitian(a)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a);
        Eigen::VectorXcd phases(a.rows());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            phases(i) = std::exp(scale * eig.eigenvalues()(i));
        Eigen::MatrixXcd r =
            eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
        return Matrix(r);
    }
    Eigen::MatrixXcd scaled = scale * Eigen::MatrixXcd(a);
    Eigen::MatrixXcd r = scaled.exp();
    if (!r.allFinite()) throw NumericalError("matrix_exp: overflow in exponential");
    return Matrix(r);
}

inline DenseTensor matrix_exp(const DenseTensor& t, cd scale = cd(1.0, 0.0)) {
    if (t.rank() != 2 || t.shape[0] != t.shape[1])
        throw std::invalid_argument("matrix_exp: square rank-2 tensor required");
    return from_matrix(matrix_exp(as_matrix(t, t.shape[0], t.shape[1]), scale));
}

// Kronecker product, row-major convention (first factor most significant).
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace qnn
