#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "freeball/linalg.hpp"

namespace freeball {

// A point X = (X_1, ..., X_d) of the NC universe at level n.
class MatrixTuple {
public:
    MatrixTuple() = default;

    explicit MatrixTuple(std::vector<CMatrix> mats) : mats_(std::move(mats)) {
        if (mats_.empty()) return;
        const auto n = mats_.front().rows();
        for (const auto& m : mats_) {
            if (m.rows() != n || m.cols() != n)
                throw DimensionMismatch("MatrixTuple: matrices must be square of equal size");
            if (!m.allFinite()) throw NonFinite("MatrixTuple: non-finite entry");
        }
    }

    static MatrixTuple zeros(std::size_t d, Eigen::Index n) {
        return MatrixTuple(std::vector<CMatrix>(d, CMatrix::Zero(n, n)));
    }

    /// Tuple of scalar multiples of the identity, c_j * I_n.
    static MatrixTuple scalars(const std::vector<cplx>& c, Eigen::Index n = 1) {
        std::vector<CMatrix> mats;
        mats.reserve(c.size());
        for (const auto& v : c) mats.push_back(v * identity(n));
        return MatrixTuple(std::move(mats));
    }

    std::size_t d() const noexcept { return mats_.size(); }
    Eigen::Index level() const noexcept { return mats_.empty() ? 0 : mats_.front().rows(); }

    const CMatrix& operator[](std::size_t j) const { return mats_.at(j); }
    const std::vector<CMatrix>& matrices() const noexcept { return mats_; }

    /// max_j ||X_j||
    double norm() const {
        double r = 0.0;
        for (const auto& m : mats_) r = std::max(r, opnorm(m));
        return r;
    }

    MatrixTuple scaled(cplx s) const {
        std::vector<CMatrix> out;
        out.reserve(mats_.size());
        for (const auto& m : mats_) out.push_back(s * m);
        return MatrixTuple(std::move(out));
    }

    MatrixTuple operator+(const MatrixTuple& o) const {
        check_same_shape(o);
        std::vector<CMatrix> out;
        for (std::size_t j = 0; j < d(); ++j) out.push_back(mats_[j] + o.mats_[j]);
        return MatrixTuple(std::move(out));
    }

    /// Conjugation S^-1 X_j S applied to every entry.
    MatrixTuple similar(const CMatrix& s, const CMatrix& s_inv) const {
        std::vector<CMatrix> out;
        for (const auto& m : mats_) out.push_back(s_inv * m * s);
        return MatrixTuple(std::move(out));
    }

    /// Swap two coordinates; used for variable permutations.
    MatrixTuple permuted(const std::vector<std::size_t>& perm) const {
        std::vector<CMatrix> out;
        for (auto p : perm) out.push_back(mats_.at(p));
        return MatrixTuple(std::move(out));
    }

private:
    void check_same_shape(const MatrixTuple& o) const {
        if (d() != o.d() || level() != o.level()) throw DimensionMismatch("MatrixTuple: shapes differ");
    }

    std::vector<CMatrix> mats_;
};

inline MatrixTuple direct_sum(const MatrixTuple& x, const MatrixTuple& y) {
    if (x.d() != y.d()) throw DimensionMismatch("direct_sum: tuples have different d");
    std::vector<CMatrix> out;
    for (std::size_t j = 0; j < x.d(); ++j) out.push_back(direct_sum(x[j], y[j]));
    return MatrixTuple(std::move(out));
}

/// Anything that can be evaluated at a point of the NC universe.
using Evaluator = std::function<CMatrix(const MatrixTuple&)>;

/// Random tuple with Ginibre entries at level n.
inline MatrixTuple random_tuple(std::size_t d, Eigen::Index n, Rng& rng) {
    std::vector<CMatrix> mats;
    mats.reserve(d);
    for (std::size_t j = 0; j < d; ++j) mats.push_back(ginibre(n, rng));
    return MatrixTuple(std::move(mats));
}

/// sum_j kron(A_j, X_j)
inline CMatrix tensor_pair(const MatrixTuple& a, const MatrixTuple& x) {
    if (a.d() != x.d()) throw DimensionMismatch("tensor_pair: variable counts differ");
    const auto m = a.level(), n = x.level();
    CMatrix out = CMatrix::Zero(m * n, m * n);
    for (std::size_t j = 0; j < a.d(); ++j) out += kron(a[j], x[j]);
    return out;
}

}  // namespace freeball
