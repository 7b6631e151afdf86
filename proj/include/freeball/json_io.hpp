#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeball/errors.hpp"
#include "freeball/freepoly.hpp"
#include "freeball/linalg.hpp"
#include "freeball/linearize.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/ncball.hpp"
#include "freeball/realization.hpp"

namespace freeball::json_io {

using json = nlohmann::ordered_json;

inline double clean(double v) { return v == 0.0 ? 0.0 : v; }

inline json to_json(cplx c) { return json::array({clean(c.real()), clean(c.imag())}); }

inline cplx cplx_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw InvalidArgument("json: complex numbers are [re, im] pairs or plain numbers");
}

inline json to_json(const CMatrix& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(to_json(m(i, j)));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline CMatrix matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw InvalidArgument("json: a matrix needs rows, cols and data");
    const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw DimensionMismatch("json: matrix data length differs from rows * cols");
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = cplx_from_json(data[static_cast<std::size_t>(i * cols + k)]);
    if (!all_finite(m)) throw NonFinite("json: matrix has non-finite entries");
    return m;
}

inline json to_json(const MatrixTuple& x, bool pencil = false) {
    json mats = json::array();
    for (const CMatrix& m : x.matrices()) mats.push_back(to_json(m));
    json out{{"d", x.d()}, {"n", x.level()}, {"matrices", mats}};
    if (pencil) out["pencil"] = true;
    return out;
}

inline MatrixTuple tuple_from_json(const json& j) {
    if (!j.is_object() || !j.contains("matrices")) throw InvalidArgument("json: a tuple needs a matrices array");
    std::vector<CMatrix> mats;
    for (const json& m : j.at("matrices")) mats.push_back(matrix_from_json(m));
    if (j.contains("d") && j.at("d").get<std::size_t>() != mats.size())
        throw DimensionMismatch("json: tuple d differs from the number of matrices");
    return MatrixTuple(std::move(mats));
}

inline json word_to_json(const Word& w) {
    json out = json::array();
    for (const std::size_t letter : w) out.push_back(letter + 1);
    return out;
}

inline json to_json(const MatPoly& p) {
    json terms = json::array();
    for (const auto& [w, c] : p.terms()) terms.push_back(json{{"word", word_to_json(w)}, {"coeff", to_json(c)}});
    return json{{"d", p.d()}, {"k", p.k()}, {"terms", terms}};
}

inline MatPoly poly_from_json(const json& j) {
    if (!j.is_object() || !j.contains("d") || !j.contains("terms"))
        throw InvalidArgument("json: a polynomial needs d and terms");
    const auto d = j.at("d").get<std::size_t>();
    const auto k = j.value("k", Eigen::Index{1});
    MatPoly p(d, k);
    for (const json& t : j.at("terms")) {
        Word w;
        for (const json& letter : t.at("word")) {
            const auto v = letter.get<long long>();
            if (v < 1 || static_cast<std::size_t>(v) > d)
                throw InvalidArgument("json: word letters must lie in 1..d");
            w.push_back(static_cast<std::size_t>(v - 1));
        }
        const json& c = t.at("coeff");
        const CMatrix coeff = c.is_object() ? matrix_from_json(c) : CMatrix::Constant(1, 1, cplx_from_json(c));
        if (coeff.rows() != k || coeff.cols() != k) throw DimensionMismatch("json: coefficient size differs from k");
        p.add_term(w, coeff);
    }
    return p;
}

inline json to_json(const BallSpec& b) {
    json q = json::array();
    for (const CMatrix& m : b.Q) q.push_back(to_json(m));
    json out{{"kind", b.kind_name()}, {"d", b.d}};
    if (b.kind == BallSpec::Kind::General) out["Q"] = q;
    return out;
}

inline BallSpec ball_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rowball") return BallSpec::rowball(j.at("d").get<std::size_t>());
    if (kind == "polydisk") return BallSpec::polydisk(j.at("d").get<std::size_t>());
    if (kind == "general") {
        std::vector<CMatrix> q;
        for (const json& m : j.at("Q")) q.push_back(matrix_from_json(m));
        return BallSpec::general(std::move(q));
    }
    throw InvalidArgument("json: ball kind must be rowball, polydisk or general");
}

inline json to_json(const Linearization& lin) {
    json perm = json::array();
    for (const auto i : lin.perm) perm.push_back(i);
    json steps = json::array();
    for (const auto& s : lin.steps)
        steps.push_back(json{{"row", s.row}, {"col", s.col}, {"word", word_to_json(s.word)}, {"coeff", to_json(s.coeff)}});
    return json{{"p", to_json(lin.p)},     {"pad", lin.pad},          {"size", lin.size()},
                {"F", to_json(lin.F)},     {"G", to_json(lin.G)},     {"F_inv", to_json(lin.F_inv)},
                {"G_inv", to_json(lin.G_inv)}, {"A", to_json(lin.A, true)}, {"permutation", perm},
                {"steps", steps}};
}

inline json to_json(const Descriptor& r) {
    return json{{"dim", r.dim()}, {"A", to_json(r.A, true)}, {"b", to_json(CMatrix(r.b))}, {"c", to_json(CMatrix(r.c))}};
}

inline json to_json(const FMRealization& fm) {
    json b = json::array();
    for (const CMatrix& m : fm.B) b.push_back(to_json(m));
    return json{{"A", to_json(fm.A, true)}, {"B", b}, {"C", to_json(fm.C)}, {"D", to_json(fm.D)}};
}

inline FMRealization fm_from_json(const json& j) {
    FMRealization fm;
    fm.A = tuple_from_json(j.at("A"));
    for (const json& m : j.at("B")) fm.B.push_back(matrix_from_json(m));
    fm.C = matrix_from_json(j.at("C"));
    fm.D = j.contains("D") ? matrix_from_json(j.at("D")) : identity(fm.C.cols());
    const Eigen::Index n = fm.A.level();
    if (fm.B.size() != fm.A.d()) throw DimensionMismatch("json: FM data needs one B_j per variable");
    for (const CMatrix& m : fm.B)
        if (m.rows() != n || m.cols() != fm.D.rows()) throw DimensionMismatch("json: B_j must be N x k");
    if (fm.C.rows() != n || fm.C.cols() != fm.D.rows()) throw DimensionMismatch("json: C must be N x k");
    return fm;
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

}  // namespace freeball::json_io
