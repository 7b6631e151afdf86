#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "freeball/freepoly.hpp"
#include "freeball/linalg.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/parallel.hpp"

namespace freeball {

enum class Op { Const, Var, Add, Sub, Mul, Neg, Inv, Scale };

struct Node;
using RatExpr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    cplx value{0.0};     // Const, Scale
    std::size_t var = 0;  // Var (0-based)
    RatExpr lhs;          // binary ops, and the operand of Neg/Inv/Scale
    RatExpr rhs;
};

namespace expr {

inline RatExpr cnst(cplx c) { return std::make_shared<const Node>(Node{Op::Const, c, 0, nullptr, nullptr}); }
inline RatExpr var(std::size_t j) { return std::make_shared<const Node>(Node{Op::Var, 0.0, j, nullptr, nullptr}); }
inline RatExpr add(RatExpr a, RatExpr b) { return std::make_shared<const Node>(Node{Op::Add, 0.0, 0, a, b}); }
inline RatExpr sub(RatExpr a, RatExpr b) { return std::make_shared<const Node>(Node{Op::Sub, 0.0, 0, a, b}); }
inline RatExpr neg(RatExpr a) { return std::make_shared<const Node>(Node{Op::Neg, 0.0, 0, a, nullptr}); }
inline RatExpr inv(RatExpr a) { return std::make_shared<const Node>(Node{Op::Inv, 0.0, 0, a, nullptr}); }
inline RatExpr scale(cplx c, RatExpr a) { return std::make_shared<const Node>(Node{Op::Scale, c, 0, a, nullptr}); }

inline RatExpr mul_raw(RatExpr a, RatExpr b) { return std::make_shared<const Node>(Node{Op::Mul, 0.0, 0, a, b}); }

/// Mul with a leading constant becomes Scale, which is also what the parser produces.
inline RatExpr mul(RatExpr a, RatExpr b) {
    if (a->op == Op::Const) return scale(a->value, b);
    return mul_raw(a, b);
}

}  // namespace expr

inline bool same(const RatExpr& a, const RatExpr& b) {
    if (a == b) return true;
    if (!a || !b || a->op != b->op) return false;
    switch (a->op) {
        case Op::Const: return a->value == b->value;
        case Op::Var: return a->var == b->var;
        case Op::Scale: return a->value == b->value && same(a->lhs, b->lhs);
        case Op::Neg:
        case Op::Inv: return same(a->lhs, b->lhs);
        default: return same(a->lhs, b->lhs) && same(a->rhs, b->rhs);
    }
}

/// Largest variable index + 1 (0 when the expression has no variables).
inline std::size_t var_count(const RatExpr& e) {
    if (!e) return 0;
    if (e->op == Op::Var) return e->var + 1;
    return std::max(var_count(e->lhs), var_count(e->rhs));
}

inline std::size_t node_count(const RatExpr& e) {
    if (!e) return 0;
    return 1 + node_count(e->lhs) + node_count(e->rhs);
}

/// Rename variables: Z_j -> Z_{perm[j]}.
inline RatExpr substitute(const RatExpr& e, const std::vector<std::size_t>& perm) {
    switch (e->op) {
        case Op::Const: return e;
        case Op::Var: return expr::var(perm.at(e->var));
        case Op::Neg: return expr::neg(substitute(e->lhs, perm));
        case Op::Inv: return expr::inv(substitute(e->lhs, perm));
        case Op::Scale: return expr::scale(e->value, substitute(e->lhs, perm));
        default: {
            auto node = std::make_shared<Node>(*e);
            node->lhs = substitute(e->lhs, perm);
            node->rhs = substitute(e->rhs, perm);
            return node;
        }
    }
}

// k x k grid of rational expressions, row-major.
struct MatExpr {
    Eigen::Index k = 1;
    std::vector<RatExpr> entries;

    const RatExpr& at(Eigen::Index i, Eigen::Index j) const { return entries.at(i * k + j); }

    static MatExpr scalar(RatExpr e) { return MatExpr{1, {std::move(e)}}; }
};

inline std::size_t var_count(const MatExpr& m) {
    std::size_t d = 0;
    for (const auto& e : m.entries) d = std::max(d, var_count(e));
    return d;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string literal(cplx c) {
    const double re = c.real(), im = c.imag();
    if (im == 0.0 && !std::signbit(im) && re >= 0.0 && !std::signbit(re)) return fmt_real(re);
    if (im == 0.0 && !std::signbit(im)) return "(" + fmt_real(re) + ")";
    std::string s = "(" + fmt_real(re);
    s += std::signbit(im) ? "-" : "+";
    s += fmt_real(std::abs(im)) + "i)";
    return s;
}

// 1 = sum level, 2 = product level, 3 = factor level.
inline int precedence(const RatExpr& e) {
    switch (e->op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Scale: return 2;
        default: return 3;
    }
}

inline std::string print(const RatExpr& e, int min_prec);

inline std::string wrap(const RatExpr& e, int min_prec) {
    const std::string s = print(e, 0);
    return precedence(e) < min_prec ? "(" + s + ")" : s;
}

inline std::string print(const RatExpr& e, int) {
    switch (e->op) {
        case Op::Const: return literal(e->value);
        case Op::Var: return "Z" + std::to_string(e->var + 1);
        case Op::Add: return wrap(e->lhs, 1) + " + " + wrap(e->rhs, 2);
        case Op::Sub: return wrap(e->lhs, 1) + " - " + wrap(e->rhs, 2);
        case Op::Mul: return wrap(e->lhs, 2) + " * " + wrap(e->rhs, 3);
        case Op::Scale: return literal(e->value) + " * " + wrap(e->lhs, 3);
        case Op::Neg: return "-" + wrap(e->lhs, 3);
        case Op::Inv: return "inv(" + print(e->lhs, 0) + ")";
    }
    return {};
}

}  // namespace detail

inline std::string to_string(const RatExpr& e) { return detail::print(e, 0); }

inline std::string to_string(const MatExpr& m) {
    if (m.k == 1) return to_string(m.entries.front());
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.k; ++i) {
        if (i) s += "; ";
        for (Eigen::Index j = 0; j < m.k; ++j) {
            if (j) s += ", ";
            s += to_string(m.at(i, j));
        }
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

enum class Tok { Num, Imag, Var, Inv, LParen, RParen, Plus, Minus, Star, InvPow, LBrack, RBrack, Comma, Semi, End };

struct Token {
    Tok kind;
    double number = 0.0;
    std::size_t var = 0;
    std::size_t line = 1, col = 1;
    std::string text;
};

inline const char* tok_name(Tok t) {
    switch (t) {
        case Tok::Num: return "number";
        case Tok::Imag: return "imaginary number";
        case Tok::Var: return "variable";
        case Tok::Inv: return "inv";
        case Tok::LParen: return "(";
        case Tok::RParen: return ")";
        case Tok::Plus: return "+";
        case Tok::Minus: return "-";
        case Tok::Star: return "*";
        case Tok::InvPow: return "^-1";
        case Tok::LBrack: return "[";
        case Tok::RBrack: return "]";
        case Tok::Comma: return ",";
        case Tok::Semi: return ";";
        case Tok::End: return "end of input";
    }
    return "?";
}

// Variable spellings: Z<n> (1-based); Z and W mean Z1 and Z2 when at most two variables are in play.
constexpr std::size_t kAliasZ = static_cast<std::size_t>(-1);
constexpr std::size_t kAliasW = static_cast<std::size_t>(-2);
constexpr std::size_t kIdentity = static_cast<std::size_t>(-3);

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.col = col_;
            if (pos_ >= s_.size()) {
                t.kind = Tok::End;
                out.push_back(t);
                return out;
            }
            const char c = s_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < s_.size() &&
                                                                 std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
                lex_number(t);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                lex_word(t);
            } else if (c == '^') {
                if (s_.compare(pos_, 3, "^-1") != 0)
                    throw SyntaxError("malformed power, only ^-1 is supported", t.line, t.col, {"^-1"});
                t.kind = Tok::InvPow;
                advance(3);
            } else {
                switch (c) {
                    case '(': t.kind = Tok::LParen; break;
                    case ')': t.kind = Tok::RParen; break;
                    case '+': t.kind = Tok::Plus; break;
                    case '-': t.kind = Tok::Minus; break;
                    case '*': t.kind = Tok::Star; break;
                    case '[': t.kind = Tok::LBrack; break;
                    case ']': t.kind = Tok::RBrack; break;
                    case ',': t.kind = Tok::Comma; break;
                    case ';': t.kind = Tok::Semi; break;
                    default:
                        throw SyntaxError(std::string("unexpected character '") + c + "'", t.line, t.col,
                                          {"number", "variable", "(", "inv", "-"});
                }
                advance(1);
            }
            out.push_back(t);
        }
    }

private:
    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < s_.size(); ++i, ++pos_) {
            if (s_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }

    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) advance(1);
    }

    void lex_number(Token& t) {
        const std::size_t start = pos_;
        std::size_t p = pos_;
        auto digits = [&] {
            while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
        };
        digits();
        if (p < s_.size() && s_[p] == '.') {
            ++p;
            digits();
        }
        if (p < s_.size() && (s_[p] == 'e' || s_[p] == 'E')) {
            std::size_t q = p + 1;
            if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
            if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
                p = q;
                digits();
            }
        }
        t.text = s_.substr(start, p - start);
        t.number = std::strtod(t.text.c_str(), nullptr);
        t.kind = Tok::Num;
        advance(p - start);
        if (pos_ < s_.size() && s_[pos_] == 'i' &&
            (pos_ + 1 >= s_.size() || !std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])))) {
            t.kind = Tok::Imag;
            advance(1);
        }
    }

    void lex_word(Token& t) {
        std::size_t p = pos_;
        while (p < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p])) || s_[p] == '_')) ++p;
        t.text = s_.substr(pos_, p - pos_);
        const std::string& w = t.text;
        if (w == "inv") {
            t.kind = Tok::Inv;
        } else if (w == "i") {
            t.kind = Tok::Imag;
            t.number = 1.0;
        } else if (w == "I") {
            t.kind = Tok::Var;
            t.var = kIdentity;
        } else if (w == "Z") {
            t.kind = Tok::Var;
            t.var = kAliasZ;
        } else if (w == "W") {
            t.kind = Tok::Var;
            t.var = kAliasW;
        } else if (w.size() > 1 && w[0] == 'Z' &&
                   std::all_of(w.begin() + 1, w.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            t.kind = Tok::Var;
            const unsigned long idx = std::strtoul(w.c_str() + 1, nullptr, 10);
            if (idx == 0) throw UnknownVariable("variable index must be at least 1: " + w);
            t.var = idx - 1;
        } else {
            throw UnknownVariable("unknown identifier '" + w + "' at " + std::to_string(t.line) + ":" +
                                  std::to_string(t.col));
        }
        advance(p - pos_);
    }

    const std::string& s_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

class Parser {
public:
    Parser(std::vector<Token> toks, std::size_t d) : t_(std::move(toks)), d_(d) {}

    std::variant<RatExpr, MatExpr> run() {
        if (peek().kind == Tok::LBrack) {
            MatExpr m = matrix();
            expect(Tok::End);
            return m;
        }
        RatExpr e = expr_();
        expect(Tok::End);
        return e;
    }

    bool used_alias() const { return used_alias_; }

private:
    const Token& peek(std::size_t ahead = 0) const { return t_[std::min(i_ + ahead, t_.size() - 1)]; }
    Token take() { return t_[std::min(i_++, t_.size() - 1)]; }

    [[noreturn]] void fail(const std::vector<std::string>& expected) const {
        const Token& t = peek();
        throw SyntaxError(std::string("unexpected ") + tok_name(t.kind), t.line, t.col, expected);
    }

    void expect(Tok k) {
        if (peek().kind != k) fail({tok_name(k)});
        take();
    }

    MatExpr matrix() {
        expect(Tok::LBrack);
        std::vector<std::vector<RatExpr>> rows(1);
        rows.back().push_back(expr_());
        for (;;) {
            if (peek().kind == Tok::Comma) {
                take();
                rows.back().push_back(expr_());
            } else if (peek().kind == Tok::Semi) {
                take();
                rows.emplace_back();
                rows.back().push_back(expr_());
            } else if (peek().kind == Tok::RBrack) {
                const Token close = take();
                const std::size_t k = rows.size();
                for (const auto& r : rows)
                    if (r.size() != k)
                        throw SyntaxError("matrix must be square with equal row lengths", close.line, close.col, {});
                MatExpr m;
                m.k = static_cast<Eigen::Index>(k);
                for (auto& r : rows)
                    for (auto& e : r) m.entries.push_back(std::move(e));
                return m;
            } else {
                fail({",", ";", "]", "+", "-", "*"});
            }
        }
    }

    RatExpr expr_() {
        RatExpr acc = term();
        for (;;) {
            if (peek().kind == Tok::Plus) {
                take();
                acc = expr::add(acc, term());
            } else if (peek().kind == Tok::Minus) {
                take();
                acc = expr::sub(acc, term());
            } else {
                return acc;
            }
        }
    }

    RatExpr term() {
        bool literal = false;
        RatExpr acc = factor(&literal);
        bool first = true;
        while (peek().kind == Tok::Star) {
            take();
            RatExpr rhs = factor(nullptr);
            if (first && literal)
                acc = expr::scale(acc->value, rhs);
            else
                acc = expr::mul_raw(acc, rhs);
            first = false;
        }
        return acc;
    }

    RatExpr factor(bool* literal) {
        bool lit = false;
        RatExpr b = base(&lit);
        if (peek().kind == Tok::InvPow) {
            take();
            b = expr::inv(b);
            lit = false;
        }
        if (literal) *literal = lit;
        return b;
    }

    // "(" ["-"] NUM [("+"|"-") IMAG] ")" or "(" ["-"] IMAG ")"
    std::optional<cplx> paren_literal() {
        std::size_t j = i_ + 1;
        double sign = 1.0;
        if (peek(j - i_).kind == Tok::Minus) {
            sign = -1.0;
            ++j;
        }
        const Token& a = peek(j - i_);
        if (a.kind != Tok::Num && a.kind != Tok::Imag) return std::nullopt;
        cplx value = a.kind == Tok::Num ? cplx(sign * a.number, 0.0) : cplx(0.0, sign * a.number);
        ++j;
        if (a.kind == Tok::Num && (peek(j - i_).kind == Tok::Plus || peek(j - i_).kind == Tok::Minus) &&
            peek(j - i_ + 1).kind == Tok::Imag) {
            const double s2 = peek(j - i_).kind == Tok::Minus ? -1.0 : 1.0;
            value = cplx(value.real(), s2 * peek(j - i_ + 1).number);
            j += 2;
        }
        if (peek(j - i_).kind != Tok::RParen) return std::nullopt;
        i_ = j + 1;
        return value;
    }

    RatExpr base(bool* literal) {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Num:
                take();
                *literal = true;
                return expr::cnst(cplx(t.number, 0.0));
            case Tok::Imag: {
                const double v = t.number;
                take();
                *literal = true;
                return expr::cnst(cplx(0.0, v));
            }
            case Tok::Var: {
                const Token v = take();
                return variable(v);
            }
            case Tok::LParen: {
                if (auto c = paren_literal()) {
                    *literal = true;
                    return expr::cnst(*c);
                }
                take();
                RatExpr e = expr_();
                expect(Tok::RParen);
                return e;
            }
            case Tok::Inv: {
                take();
                expect(Tok::LParen);
                RatExpr e = expr_();
                expect(Tok::RParen);
                return expr::inv(e);
            }
            case Tok::Minus:
                take();
                return expr::neg(factor(nullptr));
            default:
                fail({"number", "variable", "(", "inv", "-"});
        }
    }

    RatExpr variable(const Token& v) {
        if (v.var == kIdentity) return expr::cnst(1.0);
        if (v.var == kAliasZ || v.var == kAliasW) {
            if (d_ != 0 && d_ > 2)
                throw UnknownVariable("aliases Z and W need d <= 2 (use Z1, Z2, ...) at " +
                                      std::to_string(v.line) + ":" + std::to_string(v.col));
            if (v.var == kAliasW && d_ == 1) throw UnknownVariable("W is not defined when d = 1");
            used_alias_ = true;
            return expr::var(v.var == kAliasZ ? 0 : 1);
        }
        if (d_ != 0 && v.var >= d_)
            throw UnknownVariable("variable Z" + std::to_string(v.var + 1) + " exceeds d = " + std::to_string(d_));
        return expr::var(v.var);
    }

    std::vector<Token> t_;
    std::size_t i_ = 0;
    std::size_t d_;
    bool used_alias_ = false;
};

}  // namespace detail

/// Parses a scalar expression or a "[a, b; c, d]" matrix. d = 0 accepts any variable index.
inline std::variant<RatExpr, MatExpr> parse(const std::string& text, std::size_t d = 0) {
    detail::Lexer lex(text);
    detail::Parser p(lex.run(), d);
    return p.run();
}

inline RatExpr parse_expr(const std::string& text, std::size_t d = 0) {
    auto v = parse(text, d);
    if (auto* e = std::get_if<RatExpr>(&v)) return *e;
    throw SyntaxError("expected a scalar expression, got a matrix", 1, 1, {"expression"});
}

inline MatExpr parse_matrix(const std::string& text, std::size_t d = 0) {
    auto v = parse(text, d);
    if (auto* e = std::get_if<RatExpr>(&v)) return MatExpr::scalar(*e);
    return std::get<MatExpr>(v);
}

// ---------------------------------------------------------------------------
// Evaluation

/// Inv nodes fail below this relative smallest singular value.
inline constexpr double kDomainTol = 1e-10;

namespace detail {

inline CMatrix eval_rec(const RatExpr& e, const MatrixTuple& x, std::vector<std::size_t>& path) {
    const Eigen::Index n = x.level();
    switch (e->op) {
        case Op::Const: return e->value * identity(n);
        case Op::Var:
            if (e->var >= x.d()) throw DimensionMismatch("eval_expr: variable index exceeds tuple size");
            return x[e->var];
        case Op::Neg: {
            path.push_back(0);
            CMatrix v = -eval_rec(e->lhs, x, path);
            path.pop_back();
            return v;
        }
        case Op::Scale: {
            path.push_back(0);
            CMatrix v = e->value * eval_rec(e->lhs, x, path);
            path.pop_back();
            return v;
        }
        case Op::Inv: {
            path.push_back(0);
            CMatrix v = eval_rec(e->lhs, x, path);
            path.pop_back();
            const RVector s = singular_values(v);
            const double smin = s(s.size() - 1);
            if (!(smin >= kDomainTol * s(0)) || s(0) == 0.0)
                throw OutOfDomain("eval_expr: inverted subexpression is singular", path, smin);
            return inverse(v, 0.0);
        }
        default: {
            path.push_back(0);
            CMatrix a = eval_rec(e->lhs, x, path);
            path.back() = 1;
            CMatrix b = eval_rec(e->rhs, x, path);
            path.pop_back();
            switch (e->op) {
                case Op::Add: return a + b;
                case Op::Sub: return a - b;
                default: return a * b;
            }
        }
    }
}

}  // namespace detail

inline CMatrix eval_expr(const RatExpr& e, const MatrixTuple& x) {
    std::vector<std::size_t> path;
    CMatrix v = detail::eval_rec(e, x, path);
    if (!v.allFinite()) throw NonFinite("eval_expr: non-finite value");
    return v;
}

/// sum over (i, j) of kron(E_ij, r_ij(X))
inline CMatrix eval_expr(const MatExpr& m, const MatrixTuple& x) {
    const Eigen::Index n = x.level();
    CMatrix out(m.k * n, m.k * n);
    for (Eigen::Index i = 0; i < m.k; ++i)
        for (Eigen::Index j = 0; j < m.k; ++j) out.block(i * n, j * n, n, n) = eval_expr(m.at(i, j), x);
    return out;
}

// ---------------------------------------------------------------------------
// Probabilistic identity testing

struct EquivalenceOptions {
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    Eigen::Index max_level = 3;
    double rel_tol = 1e-8;
    std::size_t jobs = 1;
};

struct EquivalenceVerdict {
    bool equivalent = false;
    std::size_t agreeing = 0;        // common-domain samples that agreed
    std::size_t skipped = 0;         // samples outside one of the domains
    double max_discrepancy = 0.0;    // relative, over agreeing samples
    std::optional<MatrixTuple> witness;
    double witness_discrepancy = 0.0;
};

/// Random evaluation at generic tuples of levels 1..max_level; Distinct on the first disagreement.
inline EquivalenceVerdict equivalent_fn(const Evaluator& f, const Evaluator& g, std::size_t d,
                                        const EquivalenceOptions& opt = {}) {
    EquivalenceVerdict v;
    const std::size_t budget = 10 * std::max<std::size_t>(opt.trials, 1);
    const std::size_t batch = std::max<std::size_t>(opt.trials, 1);
    std::size_t attempt = 0;
    while (v.agreeing < opt.trials && attempt < budget) {
        const std::size_t count = std::min(batch, budget - attempt);
        struct Slot {
            int status = 0;  // 0 skipped, 1 agree, 2 differ
            double disc = 0.0;
            std::optional<MatrixTuple> x;
        };
        std::vector<Slot> slots(count);
        parallel_for(count, opt.jobs, [&](std::size_t i) {
            const std::size_t a = attempt + i;
            Rng rng(derive_seed(opt.seed, 0xe9u, a));
            const Eigen::Index level = 1 + static_cast<Eigen::Index>(a % static_cast<std::size_t>(opt.max_level));
            MatrixTuple x = random_tuple(d, level, rng);
            CMatrix a1, a2;
            try {
                a1 = f(x);
                a2 = g(x);
            } catch (const OutOfDomain&) {
                return;
            } catch (const Singular&) {
                return;
            } catch (const OutOfPencilDomain&) {
                return;
            }
            if (a1.rows() != a2.rows() || a1.cols() != a2.cols()) {
                slots[i] = {2, INFINITY, x};
                return;
            }
            const double scale = std::max(1.0, opnorm(a1));
            const double disc = opnorm(a1 - a2) / scale;
            slots[i].disc = disc;
            if (disc > opt.rel_tol) {
                slots[i].status = 2;
                slots[i].x = x;
            } else {
                slots[i].status = 1;
            }
        });
        for (auto& s : slots) {
            if (v.agreeing >= opt.trials) break;
            if (s.status == 0) {
                ++v.skipped;
            } else if (s.status == 1) {
                ++v.agreeing;
                v.max_discrepancy = std::max(v.max_discrepancy, s.disc);
            } else {
                v.equivalent = false;
                v.witness = std::move(s.x);
                v.witness_discrepancy = s.disc;
                return v;
            }
        }
        attempt += count;
    }
    if (v.agreeing == 0) throw Degenerate("equivalent: no common-domain sample found within budget");
    v.equivalent = true;
    return v;
}

inline EquivalenceVerdict equivalent(const RatExpr& e1, const RatExpr& e2, const EquivalenceOptions& opt = {},
                                     std::size_t d = 0) {
    if (d == 0) d = std::max<std::size_t>({var_count(e1), var_count(e2), 1});
    return equivalent_fn([&](const MatrixTuple& x) { return eval_expr(e1, x); },
                         [&](const MatrixTuple& x) { return eval_expr(e2, x); }, d, opt);
}

// ---------------------------------------------------------------------------
// Bridges to freepoly

inline RatExpr monomial_expr(const Word& w) {
    RatExpr acc = expr::var(w.front());
    for (std::size_t i = 1; i < w.size(); ++i) acc = expr::mul_raw(acc, expr::var(w[i]));
    return acc;
}

inline RatExpr scalar_poly_to_expr(const MatPoly& p) {
    RatExpr acc;
    for (const auto& [w, c] : p.terms()) {
        const cplx a = c(0, 0);
        RatExpr t;
        if (w.empty())
            t = expr::cnst(a);
        else if (a == cplx(1.0))
            t = monomial_expr(w);
        else
            t = expr::scale(a, monomial_expr(w));
        acc = acc ? expr::add(acc, t) : t;
    }
    return acc ? acc : expr::cnst(0.0);
}

inline MatExpr poly_to_expr(const MatPoly& p) {
    MatExpr m;
    m.k = p.k();
    for (Eigen::Index i = 0; i < p.k(); ++i)
        for (Eigen::Index j = 0; j < p.k(); ++j) m.entries.push_back(scalar_poly_to_expr(p.entry(i, j)));
    return m;
}

/// Polynomial form when every Inv node inverts a nonzero constant; nullopt otherwise.
inline std::optional<MatPoly> expr_is_polynomial(const RatExpr& e, std::size_t d) {
    switch (e->op) {
        case Op::Const: return MatPoly::scalar_monomial(d, {}, e->value);
        case Op::Var:
            if (e->var >= d) throw UnknownVariable("expr_is_polynomial: variable exceeds d");
            return MatPoly::scalar_monomial(d, {e->var}, 1.0);
        case Op::Neg: {
            auto a = expr_is_polynomial(e->lhs, d);
            if (!a) return std::nullopt;
            return -*a;
        }
        case Op::Scale: {
            auto a = expr_is_polynomial(e->lhs, d);
            if (!a) return std::nullopt;
            return *a * e->value;
        }
        case Op::Inv: {
            auto a = expr_is_polynomial(e->lhs, d);
            if (!a || a->degree() != 0) return std::nullopt;
            return MatPoly::scalar_monomial(d, {}, 1.0 / a->constant_term()(0, 0));
        }
        default: {
            auto a = expr_is_polynomial(e->lhs, d);
            if (!a) return std::nullopt;
            auto b = expr_is_polynomial(e->rhs, d);
            if (!b) return std::nullopt;
            if (e->op == Op::Add) return *a + *b;
            if (e->op == Op::Sub) return *a - *b;
            return *a * *b;
        }
    }
}

inline std::optional<MatPoly> expr_is_polynomial(const MatExpr& m, std::size_t d) {
    std::vector<std::vector<MatPoly>> grid(static_cast<std::size_t>(m.k));
    for (Eigen::Index i = 0; i < m.k; ++i)
        for (Eigen::Index j = 0; j < m.k; ++j) {
            auto p = expr_is_polynomial(m.at(i, j), d);
            if (!p) return std::nullopt;
            grid[i].push_back(*p);
        }
    return from_entries(d, grid);
}

inline MatPoly to_poly(const MatExpr& m, std::size_t d) {
    auto p = expr_is_polynomial(m, d);
    if (!p) throw NotPolynomial("expression contains an inverse of a non-constant subexpression");
    return *p;
}

inline MatPoly to_poly(const RatExpr& e, std::size_t d) {
    auto p = expr_is_polynomial(e, d);
    if (!p) throw NotPolynomial("expression contains an inverse of a non-constant subexpression");
    return *p;
}

}  // namespace freeball
