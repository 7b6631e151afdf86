#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "freeball/linalg.hpp"
#include "freeball/matrix_tuple.hpp"

namespace freeball {

// Letters are 0-based internally; JSON and printed forms use 1-based indices.
using Word = std::vector<std::size_t>;

/// Degree-lexicographic order: shorter words first, then lexicographic.
struct DegLex {
    bool operator()(const Word& a, const Word& b) const {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

inline Word concat(const Word& a, const Word& b) {
    Word w = a;
    w.insert(w.end(), b.begin(), b.end());
    return w;
}

inline std::string word_to_string(const Word& w, std::size_t d) {
    if (w.empty()) return "1";
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += "*";
        if (d == 2)
            s += (w[i] == 0 ? "Z" : "W");
        else
            s += "Z" + std::to_string(w[i] + 1);
    }
    return s;
}

// An element of M_k(C<Z_1..Z_d>), stored as word -> k x k coefficient.
class MatPoly {
public:
    using TermMap = std::map<Word, CMatrix, DegLex>;

    MatPoly() = default;
    MatPoly(std::size_t d, Eigen::Index k) : d_(d), k_(k) {
        if (k <= 0) throw InvalidArgument("MatPoly: k must be positive");
    }

    static MatPoly zero(std::size_t d, Eigen::Index k) { return MatPoly(d, k); }

    static MatPoly identity(std::size_t d, Eigen::Index k) {
        MatPoly p(d, k);
        p.add_term({}, freeball::identity(k));
        return p;
    }

    static MatPoly constant(std::size_t d, const CMatrix& c) {
        if (c.rows() != c.cols()) throw DimensionMismatch("MatPoly::constant: coefficient must be square");
        MatPoly p(d, c.rows());
        p.add_term({}, c);
        return p;
    }

    static MatPoly monomial(std::size_t d, const Word& w, const CMatrix& c) {
        MatPoly p(d, c.rows());
        p.add_term(w, c);
        return p;
    }

    static MatPoly scalar_monomial(std::size_t d, const Word& w, cplx c) {
        CMatrix m(1, 1);
        m(0, 0) = c;
        return monomial(d, w, m);
    }

    /// Z_j * I_k (j is 0-based)
    static MatPoly variable(std::size_t d, std::size_t j, Eigen::Index k = 1) {
        if (j >= d) throw UnknownVariable("MatPoly::variable: index out of range");
        return monomial(d, {j}, freeball::identity(k));
    }

    std::size_t d() const noexcept { return d_; }
    Eigen::Index k() const noexcept { return k_; }
    const TermMap& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    /// Adds c to the coefficient of w; exact zeros are dropped.
    void add_term(const Word& w, const CMatrix& c) {
        if (c.rows() != k_ || c.cols() != k_) throw DimensionMismatch("MatPoly: coefficient has wrong size");
        if (!c.allFinite()) throw NonFinite("MatPoly: non-finite coefficient");
        for (auto letter : w)
            if (letter >= d_) throw UnknownVariable("MatPoly: letter out of range");
        auto it = terms_.find(w);
        if (it == terms_.end()) {
            if (!c.isZero(0.0)) terms_.emplace(w, c);
            return;
        }
        it->second += c;
        if (it->second.isZero(0.0)) terms_.erase(it);
    }

    void set_coeff(const Word& w, const CMatrix& c) {
        terms_.erase(w);
        add_term(w, c);
    }

    CMatrix coeff(const Word& w) const {
        auto it = terms_.find(w);
        return it == terms_.end() ? CMatrix::Zero(k_, k_) : it->second;
    }

    /// -1 for the zero polynomial.
    int degree() const {
        return terms_.empty() ? -1 : static_cast<int>(terms_.rbegin()->first.size());
    }

    CMatrix constant_term() const { return coeff({}); }

    MatPoly operator+(const MatPoly& o) const {
        check_compatible(o);
        MatPoly out = *this;
        for (const auto& [w, c] : o.terms_) out.add_term(w, c);
        return out;
    }

    MatPoly operator-() const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) out.terms_.emplace(w, -c);
        return out;
    }

    MatPoly operator-(const MatPoly& o) const { return *this + (-o); }

    MatPoly operator*(const MatPoly& o) const {
        check_compatible(o);
        MatPoly out(d_, k_);
        for (const auto& [w1, c1] : terms_)
            for (const auto& [w2, c2] : o.terms_) out.add_term(concat(w1, w2), c1 * c2);
        return out;
    }

    MatPoly operator*(cplx s) const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) out.add_term(w, s * c);
        return out;
    }

    /// Left multiplication by a constant matrix.
    MatPoly left_mul(const CMatrix& m) const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) out.add_term(w, m * c);
        return out;
    }

    MatPoly right_mul(const CMatrix& m) const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) out.add_term(w, c * m);
        return out;
    }

    MatPoly homogeneous_part(std::size_t j) const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_)
            if (w.size() == j) out.terms_.emplace(w, c);
        return out;
    }

    /// Parts 0..degree; the zero polynomial yields one zero part.
    std::vector<MatPoly> homogeneous_parts() const {
        const int deg = std::max(degree(), 0);
        std::vector<MatPoly> parts;
        for (int j = 0; j <= deg; ++j) parts.push_back(homogeneous_part(static_cast<std::size_t>(j)));
        return parts;
    }

    /// P^(r)(X) = P(rX)
    MatPoly dilate(double r) const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) out.add_term(w, std::pow(r, static_cast<double>(w.size())) * c);
        return out;
    }

    /// sum_w kron(A_w, X^w)
    CMatrix eval(const MatrixTuple& x) const {
        if (x.d() != d_) throw DimensionMismatch("MatPoly::eval: tuple has wrong number of variables");
        const Eigen::Index n = x.level();
        CMatrix out = CMatrix::Zero(k_ * n, k_ * n);
        // Terms come in deg-lex order, so every proper prefix is cached before it is needed.
        std::map<Word, CMatrix, DegLex> powers;
        powers.emplace(Word{}, freeball::identity(n));
        auto power = [&](const Word& w) -> const CMatrix& {
            auto it = powers.find(w);
            if (it != powers.end()) return it->second;
            Word prefix;
            CMatrix acc = freeball::identity(n);
            for (auto letter : w) {
                prefix.push_back(letter);
                auto pit = powers.find(prefix);
                if (pit != powers.end()) {
                    acc = pit->second;
                } else {
                    acc = acc * x[letter];
                    powers.emplace(prefix, acc);
                }
            }
            return powers.at(w);
        };
        for (const auto& [w, c] : terms_) out += kron(c, power(w));
        return out;
    }

    /// Entrywise conjugate transpose of every coefficient (letters unchanged).
    MatPoly coeff_adjoint() const {
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) out.terms_.emplace(w, c.adjoint());
        return out;
    }

    /// Scalar polynomial in entry (i, j).
    MatPoly entry(Eigen::Index i, Eigen::Index j) const {
        MatPoly out(d_, 1);
        for (const auto& [w, c] : terms_) {
            CMatrix m(1, 1);
            m(0, 0) = c(i, j);
            out.add_term(w, m);
        }
        return out;
    }

    /// Adds scalar polynomial s to entry (i, j).
    void add_to_entry(Eigen::Index i, Eigen::Index j, const MatPoly& s) {
        if (s.k() != 1 || s.d() != d_) throw DimensionMismatch("add_to_entry: expected scalar polynomial");
        for (const auto& [w, c] : s.terms_) {
            CMatrix m = CMatrix::Zero(k_, k_);
            m(i, j) = c(0, 0);
            add_term(w, m);
        }
    }

    int entry_degree(Eigen::Index i, Eigen::Index j) const {
        int deg = -1;
        for (const auto& [w, c] : terms_)
            if (c(i, j) != cplx(0.0)) deg = std::max(deg, static_cast<int>(w.size()));
        return deg;
    }

    /// diag(P, I_l)
    MatPoly pad(Eigen::Index l) const {
        MatPoly out(d_, k_ + l);
        for (const auto& [w, c] : terms_) {
            CMatrix m = CMatrix::Zero(k_ + l, k_ + l);
            m.topLeftCorner(k_, k_) = c;
            out.add_term(w, m);
        }
        if (l > 0) {
            CMatrix e = CMatrix::Zero(k_ + l, k_ + l);
            e.bottomRightCorner(l, l) = freeball::identity(l);
            out.add_term({}, e);
        }
        return out;
    }

    /// Rows and columns restricted to `keep` (in that order).
    MatPoly submatrix(const std::vector<Eigen::Index>& keep) const {
        const auto m = static_cast<Eigen::Index>(keep.size());
        MatPoly out(d_, m);
        for (const auto& [w, c] : terms_) {
            CMatrix s(m, m);
            for (Eigen::Index a = 0; a < m; ++a)
                for (Eigen::Index b = 0; b < m; ++b) s(a, b) = c(keep[a], keep[b]);
            out.add_term(w, s);
        }
        return out;
    }

    /// Q(Z_1..Z_d) = P(Z_{perm[0]}, ..., Z_{perm[d-1]}).
    MatPoly substitute(const std::vector<std::size_t>& perm) const {
        if (perm.size() != d_) throw DimensionMismatch("substitute: permutation has wrong length");
        MatPoly out(d_, k_);
        for (const auto& [w, c] : terms_) {
            Word v;
            for (auto letter : w) v.push_back(perm[letter]);
            out.add_term(v, c);
        }
        return out;
    }

    /// Largest absolute coefficient difference; the symbolic comparison used by identity checks.
    double coeff_distance(const MatPoly& o) const {
        check_compatible(o);
        double r = 0.0;
        for (const auto& [w, c] : terms_) r = std::max(r, (c - o.coeff(w)).cwiseAbs().maxCoeff());
        for (const auto& [w, c] : o.terms_)
            if (!terms_.count(w)) r = std::max(r, c.cwiseAbs().maxCoeff());
        return r;
    }

    bool operator==(const MatPoly& o) const {
        if (d_ != o.d_ || k_ != o.k_ || terms_.size() != o.terms_.size()) return false;
        auto it = o.terms_.begin();
        for (const auto& [w, c] : terms_) {
            if (w != it->first || c != it->second) return false;
            ++it;
        }
        return true;
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::string s;
        char buf[64];
        for (const auto& [w, c] : terms_) {
            if (!s.empty()) s += " + ";
            if (k_ == 1) {
                std::snprintf(buf, sizeof buf, "(%.6g%+.6gi)", c(0, 0).real(), c(0, 0).imag());
                s += buf;
            } else {
                s += "[" + std::to_string(k_) + "x" + std::to_string(k_) + "]";
            }
            if (!w.empty()) s += "*" + word_to_string(w, d_);
        }
        return s;
    }

private:
    void check_compatible(const MatPoly& o) const {
        if (d_ != o.d_ || k_ != o.k_) throw DimensionMismatch("MatPoly: incompatible operands");
    }

    std::size_t d_ = 0;
    Eigen::Index k_ = 1;
    TermMap terms_;
};

inline MatPoly operator*(cplx s, const MatPoly& p) { return p * s; }

/// Block matrix of scalar polynomials -> matrix polynomial.
inline MatPoly from_entries(std::size_t d, const std::vector<std::vector<MatPoly>>& grid) {
    const auto k = static_cast<Eigen::Index>(grid.size());
    MatPoly out(d, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (static_cast<Eigen::Index>(grid[i].size()) != k) throw DimensionMismatch("from_entries: grid not square");
        for (Eigen::Index j = 0; j < k; ++j) out.add_to_entry(i, j, grid[i][j]);
    }
    return out;
}

/// Nilpotent-part power sum sum_{i<k} (-J)^i for P = I + J with J nilpotent.
inline MatPoly unitriangular_inverse(const MatPoly& p) {
    const MatPoly id = MatPoly::identity(p.d(), p.k());
    const MatPoly j = p - id;
    MatPoly term = id;
    MatPoly acc = id;
    for (Eigen::Index i = 1; i < p.k(); ++i) {
        term = term * (-j);
        acc = acc + term;
    }
    return acc;
}

/// I plus strictly upper triangular part, checked exactly.
inline bool is_upper_unitriangular(const MatPoly& p) {
    for (const auto& [w, c] : p.terms()) {
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const cplx expect = (i == j && w.empty()) ? cplx(1.0) : cplx(0.0);
                if (c(i, j) != expect) return false;
            }
    }
    for (Eigen::Index i = 0; i < p.k(); ++i)
        if (p.coeff({})(i, i) != cplx(1.0)) return false;
    return true;
}

inline bool is_lower_unitriangular(const MatPoly& p) {
    MatPoly t(p.d(), p.k());
    for (const auto& [w, c] : p.terms()) t.add_term(w, c.transpose());
    return is_upper_unitriangular(t);
}

}  // namespace freeball
