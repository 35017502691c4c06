#pragma once

// A small expression language for master-equation generators, e.g.
//
//   param g N
//   -(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad)
//   - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)
//
// Grammar:
//   program := { "param" ident* NEWLINE } expr
//   expr    := term (("+" | "-") term)*
//   term    := unary (("*" | "/") unary)*
//   unary   := "-" unary | "+" unary | power
//   power   := atom ["^" integer]
//   atom    := "a" | "ad" | "rho" | "i" | number | ident | "(" expr ")"
// '#' starts a comment. Every product must contain exactly one `rho`.

#include <Eigen/Dense>

#include <cctype>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wignerkit/diffform.hpp"
#include "wignerkit/errors.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/numeric.hpp"
#include "wignerkit/poly.hpp"

namespace wignerkit {

struct MeqTerm {
    Poly coefficient;
    std::vector<Ladder> left;
    std::vector<Ladder> right;
};

struct MasterEquation {
    std::vector<MeqTerm> terms;
    std::set<std::string> parameters;
};

struct ParseOptions {
    /// When set, identifiers outside this set are rejected. A `param` line in
    /// the text has the same effect.
    std::optional<std::set<std::string>> parameters;
};

namespace detail {

struct WordTerm {
    Poly coef;
    std::vector<Ladder> left;   // word left of rho, or the whole word if no rho
    std::vector<Ladder> right;
    bool has_rho = false;
};

using WordSum = std::vector<WordTerm>;

inline void merge_into(WordSum& acc, const WordTerm& t) {
    if (t.coef.is_zero()) return;
    for (auto it = acc.begin(); it != acc.end(); ++it)
        if (it->has_rho == t.has_rho && it->left == t.left && it->right == t.right) {
            it->coef += t.coef;
            if (it->coef.is_zero()) acc.erase(it);
            return;
        }
    acc.push_back(t);
}

class Parser {
public:
    Parser(const std::string& text, const ParseOptions& opt) : src_(text) {
        if (opt.parameters) declared_ = *opt.parameters;
    }

    MasterEquation parse() {
        parse_declarations();
        skip_ws();
        if (at_end()) throw error("empty expression");
        WordSum v = expr();
        skip_ws();
        if (!at_end()) throw error(std::string("unexpected character '") + peek() + "'");
        MasterEquation meq;
        for (const auto& t : v) {
            if (!t.has_rho) throw ParseError("term without rho: every product must act on rho", 1, 1);
            meq.terms.push_back({t.coef, t.left, t.right});
        }
        meq.parameters = used_;
        return meq;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::optional<std::set<std::string>> declared_;
    std::set<std::string> used_;

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return at_end() ? '\0' : src_[pos_]; }
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    ParseError error(const std::string& msg) const { return ParseError(msg, line_, col_); }

    void skip_ws() {
        while (!at_end()) {
            const char c = peek();
            if (c == '#') {
                while (!at_end() && peek() != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void skip_inline_ws() {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
        if (!at_end() && peek() == '#')
            while (!at_end() && peek() != '\n') advance();
    }

    std::string read_ident() {
        std::string id;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
            id += peek();
            advance();
        }
        return id;
    }

    void parse_declarations() {
        for (;;) {
            skip_ws();
            if (src_.compare(pos_, 5, "param") != 0) return;
            const std::size_t after = pos_ + 5;
            if (after < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[after])) || src_[after] == '_'))
                return;  // an identifier that merely starts with "param"
            for (int k = 0; k < 5; ++k) advance();
            if (!declared_) declared_ = std::set<std::string>{};
            for (;;) {
                skip_inline_ws();
                if (at_end() || peek() == '\n') break;
                if (!(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_'))
                    throw error("expected parameter name");
                const int l = line_, c = col_;
                const std::string id = read_ident();
                if (is_reserved(id)) throw ParseError("'" + id + "' is reserved", l, c);
                declared_->insert(id);
                skip_inline_ws();
                if (!at_end() && peek() == ',') advance();
            }
        }
    }

    static bool is_reserved(const std::string& id) {
        return id == "a" || id == "ad" || id == "rho" || id == "i" || id == "s" || id == "param";
    }

    WordSum expr() {
        WordSum acc = term();
        for (;;) {
            skip_ws();
            if (peek() == '+' || peek() == '-') {
                const bool minus = peek() == '-';
                advance();
                WordSum rhs = term();
                for (auto& t : rhs) {
                    if (minus) t.coef = -t.coef;
                    merge_into(acc, t);
                }
            } else {
                return acc;
            }
        }
    }

    WordSum term() {
        WordSum acc = unary();
        for (;;) {
            skip_ws();
            if (peek() == '*') {
                const int l = line_, c = col_;
                advance();
                acc = multiply(acc, unary(), l, c);
            } else if (peek() == '/') {
                const int l = line_, c = col_;
                advance();
                WordSum den = unary();
                const CRational d = as_constant(den, l, c);
                if (d.is_zero()) throw ParseError("division by zero", l, c);
                const Poly inv(CRational(1) / d);
                for (auto& t : acc) t.coef *= inv;
            } else {
                return acc;
            }
        }
    }

    WordSum unary() {
        skip_ws();
        if (peek() == '-') {
            advance();
            WordSum v = unary();
            for (auto& t : v) t.coef = -t.coef;
            return v;
        }
        if (peek() == '+') {
            advance();
            return unary();
        }
        return power();
    }

    WordSum power() {
        WordSum base = atom();
        skip_ws();
        if (peek() != '^') return base;
        const int l = line_, c = col_;
        advance();
        skip_ws();
        if (!std::isdigit(static_cast<unsigned char>(peek()))) throw error("expected integer exponent after '^'");
        int e = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            e = e * 10 + (peek() - '0');
            if (e > 64) throw ParseError("exponent too large", l, c);
            advance();
        }
        WordSum out{WordTerm{Poly(1), {}, {}, false}};
        for (int k = 0; k < e; ++k) out = multiply(out, base, l, c);
        return out;
    }

    WordSum atom() {
        skip_ws();
        if (at_end()) throw error("unexpected end of input");
        const char c = peek();
        const int l = line_, col = col_;
        if (c == '(') {
            advance();
            WordSum v = expr();
            skip_ws();
            if (peek() != ')') throw error("expected ')'");
            advance();
            return v;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return {WordTerm{Poly(number()), {}, {}, false}};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::string id = read_ident();
            if (id == "a") return {WordTerm{Poly(1), {Ladder::A}, {}, false}};
            if (id == "ad") return {WordTerm{Poly(1), {Ladder::Ad}, {}, false}};
            if (id == "rho") return {WordTerm{Poly(1), {}, {}, true}};
            if (id == "i") return {WordTerm{Poly(CRational::unit_i()), {}, {}, false}};
            if (id == "s" || id == "param") throw ParseError("'" + id + "' is reserved", l, col);
            if (declared_ && !declared_->count(id)) throw ParseError("unknown identifier '" + id + "'", l, col);
            used_.insert(id);
            return {WordTerm{Poly::var(id), {}, {}, false}};
        }
        throw error(std::string("unexpected character '") + c + "'");
    }

    CRational number() {
        std::string digits;
        int frac = 0;
        bool dot = false;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) {
            if (peek() == '.') {
                if (dot) throw error("malformed number");
                dot = true;
            } else {
                digits += peek();
                if (dot) ++frac;
            }
            advance();
        }
        if (digits.empty()) throw error("malformed number");
        int exp10 = -frac;
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            advance();
            int sign = 1;
            if (peek() == '+' || peek() == '-') {
                sign = peek() == '-' ? -1 : 1;
                advance();
            }
            if (!std::isdigit(static_cast<unsigned char>(peek()))) throw error("malformed exponent");
            int e = 0;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                e = e * 10 + (peek() - '0');
                if (e > 400) throw error("exponent too large");
                advance();
            }
            exp10 += sign * e;
        }
        // a leading zero would select octal
        const auto nz = digits.find_first_not_of('0');
        digits = nz == std::string::npos ? "0" : digits.substr(nz);
        Rational v{boost::multiprecision::mpz_int(digits)};
        Rational ten(10);
        for (int k = 0; k < std::abs(exp10); ++k) v = exp10 > 0 ? v * ten : v / ten;
        return CRational(v);
    }

    CRational as_constant(const WordSum& v, int l, int c) const {
        if (v.empty()) return CRational();
        if (v.size() != 1 || v[0].has_rho || !v[0].left.empty() || !v[0].coef.is_constant())
            throw ParseError("division is only allowed by numeric constants", l, c);
        return v[0].coef.constant_value();
    }

    static WordSum multiply(const WordSum& x, const WordSum& y, int l, int c) {
        WordSum out;
        for (const auto& a : x)
            for (const auto& b : y) {
                if (a.has_rho && b.has_rho) throw ParseError("more than one rho in a product", l, c);
                WordTerm t;
                t.coef = a.coef * b.coef;
                if (a.has_rho) {
                    t.has_rho = true;
                    t.left = a.left;
                    t.right = a.right;
                    t.right.insert(t.right.end(), b.left.begin(), b.left.end());
                } else if (b.has_rho) {
                    t.has_rho = true;
                    t.left = a.left;
                    t.left.insert(t.left.end(), b.left.begin(), b.left.end());
                    t.right = b.right;
                } else {
                    t.left = a.left;
                    t.left.insert(t.left.end(), b.left.begin(), b.left.end());
                }
                merge_into(out, t);
            }
        return out;
    }
};

}  // namespace detail

inline MasterEquation parse_master_equation(const std::string& text, const ParseOptions& opt = {}) {
    return detail::Parser(text, opt).parse();
}

/// Sum over terms of coefficient times the word's composed form.
inline DiffForm compile_generator(const MasterEquation& meq, const Poly& s = Poly::var("s")) {
    DiffForm out;
    for (const auto& t : meq.terms) out += t.coefficient * word_form(t.left, t.right, s);
    return out;
}

/// d rho/dt from the generator, evaluated in Fock space. The result lives in a
/// basis enlarged by the longest word so that no ladder action is truncated.
inline CMatrix apply_master_equation(const MasterEquation& meq, const std::map<std::string, cplx>& bindings,
                                     const DensityMatrix& rho) {
    std::size_t longest = 0;
    for (const auto& t : meq.terms) longest = std::max(longest, t.left.size() + t.right.size());
    const FockDim big(rho.dim().n_max + static_cast<int>(longest));
    const DensityMatrix r = rho.resized(big);
    const CMatrix a = annihilation(big).matrix();
    const CMatrix ad = creation(big).matrix();
    CMatrix out = CMatrix::Zero(big.size(), big.size());
    for (const auto& t : meq.terms) {
        CMatrix m = r.matrix();
        for (auto it = t.left.rbegin(); it != t.left.rend(); ++it) m = (*it == Ladder::A ? a : ad) * m;
        for (Ladder l : t.right) m = m * (l == Ladder::A ? a : ad);
        out += t.coefficient.evaluate(bindings) * m;
    }
    return out;
}

/// Applies a numeric normal-ordered form to a sampled field with centred
/// finite differences (d_a = (d_x - i d_y)/2, d_ac = (d_x + i d_y)/2). Nodes
/// too close to the boundary for the stencils are NaN.
struct AppliedForm {
    WignerField field;
    double imag_residue = 0.0;  ///< max |Im| over interior nodes
    int margin = 0;             ///< boundary layer width left as NaN
};

inline AppliedForm apply_form(const std::map<FormKey, cplx>& form, const WignerField& w, int accuracy = 6) {
    require(accuracy >= 2 && accuracy % 2 == 0, "apply_form: accuracy order must be even");
    const PhaseSpaceGrid& g = w.grid;
    int max_order = 0;
    for (const auto& [k, c] : form) max_order = std::max(max_order, k[2] + k[3]);
    // central stencil of order-`accuracy` error for the k-th derivative
    auto half_width = [&](int order) { return order == 0 ? 0 : (order + 1) / 2 - 1 + accuracy / 2; };
    auto stencil = [&](int order, double h) {
        const int m = half_width(order);
        std::vector<double> xs;
        for (int j = -m; j <= m; ++j) xs.push_back(j * h);
        return fd_weights(0.0, xs, order);
    };
    int margin = 0;
    for (int o = 0; o <= max_order; ++o) margin = std::max(margin, half_width(o));
    std::vector<std::vector<double>> wx(static_cast<std::size_t>(max_order + 1));
    std::vector<std::vector<double>> wy(static_cast<std::size_t>(max_order + 1));
    for (int o = 0; o <= max_order; ++o) {
        wx[static_cast<std::size_t>(o)] = stencil(o, g.h_re());
        wy[static_cast<std::size_t>(o)] = stencil(o, g.h_im());
    }
    // d_a^r d_ac^t = 2^{-(r+t)} (d_x - i d_y)^r (d_x + i d_y)^t = sum c_{u,v} d_x^u d_y^v
    struct Mixed {
        int u, v;
        cplx c;
    };
    std::map<FormKey, std::vector<Mixed>> expansions;
    for (const auto& [k, c] : form) {
        const int r = k[2], t = k[3];
        std::map<std::pair<int, int>, cplx> acc;
        for (int j = 0; j <= r; ++j)
            for (int l = 0; l <= t; ++l) {
                // (d_x)^{r-j} (-i d_y)^j C(r,j) * (d_x)^{t-l} (i d_y)^l C(t,l)
                const double bin = static_cast<double>(detail::binomial(r, j) * detail::binomial(t, l));
                const cplx ph = std::pow(cplx(0, -1), j) * std::pow(cplx(0, 1), l);
                acc[{r - j + t - l, j + l}] += bin * ph * std::pow(0.5, r + t);
            }
        std::vector<Mixed> list;
        for (const auto& [uv, cc] : acc)
            if (cc != cplx(0, 0)) list.push_back({uv.first, uv.second, cc});
        expansions[k] = list;
    }
    AppliedForm out;
    out.margin = margin;
    out.field.grid = g;
    out.field.s = w.s;
    out.field.method = "apply_form(" + w.method + ")";
    out.field.values = Eigen::MatrixXd::Constant(g.n_re, g.n_im, std::numeric_limits<double>::quiet_NaN());
    for (int i = margin; i < g.n_re - margin; ++i)
        for (int j = margin; j < g.n_im - margin; ++j) {
            const cplx alpha = g.node(i, j);
            cplx total = 0.0;
            for (const auto& [k, c] : form) {
                cplx deriv = 0.0;
                for (const auto& mx : expansions[k]) {
                    const auto& sx = wx[static_cast<std::size_t>(mx.u)];
                    const auto& sy = wy[static_cast<std::size_t>(mx.v)];
                    const int hx = static_cast<int>(sx.size()) / 2;
                    const int hy = static_cast<int>(sy.size()) / 2;
                    double d = 0.0;
                    for (int a = 0; a < static_cast<int>(sx.size()); ++a) {
                        if (sx[static_cast<std::size_t>(a)] == 0.0) continue;
                        double row = 0.0;
                        for (int b = 0; b < static_cast<int>(sy.size()); ++b)
                            row += sy[static_cast<std::size_t>(b)] * w.values(i + a - hx, j + b - hy);
                        d += sx[static_cast<std::size_t>(a)] * row;
                    }
                    deriv += mx.c * d;
                }
                total += c * std::pow(alpha, k[0]) * std::pow(std::conj(alpha), k[1]) * deriv;
            }
            out.field.values(i, j) = total.real();
            out.imag_residue = std::max(out.imag_residue, std::abs(total.imag()));
        }
    return out;
}

}  // namespace wignerkit
