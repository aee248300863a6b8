#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "mfpd/geometry.hpp"

namespace mfpd::expr {

struct ParseError : std::runtime_error {
    std::size_t pos;
    ParseError(const std::string& msg, std::size_t p)
        : std::runtime_error(msg + " at position " + std::to_string(p)), pos(p) {}
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { num, var_x, var_y, add, sub, mul, div, pow, neg, exp, log, sin, cos, sqrt };
    Kind kind;
    double value = 0.0;
    NodePtr a, b;
};

inline NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr make_num(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::num;
    n->value = v;
    return n;
}

inline double eval(const Node& n, const Point& p) {
    using K = Node::Kind;
    switch (n.kind) {
        case K::num: return n.value;
        case K::var_x: return p.x;
        case K::var_y: return p.y;
        case K::add: return eval(*n.a, p) + eval(*n.b, p);
        case K::sub: return eval(*n.a, p) - eval(*n.b, p);
        case K::mul: return eval(*n.a, p) * eval(*n.b, p);
        case K::div: return eval(*n.a, p) / eval(*n.b, p);
        case K::pow: return std::pow(eval(*n.a, p), eval(*n.b, p));
        case K::neg: return -eval(*n.a, p);
        case K::exp: return std::exp(eval(*n.a, p));
        case K::log: return std::log(eval(*n.a, p));
        case K::sin: return std::sin(eval(*n.a, p));
        case K::cos: return std::cos(eval(*n.a, p));
        case K::sqrt: return std::sqrt(eval(*n.a, p));
    }
    return 0.0;
}

/// Canonical fully parenthesized form; parsing it back yields the same tree.
inline std::string print(const Node& n) {
    using K = Node::Kind;
    char buf[40];
    switch (n.kind) {
        case K::num:
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            return buf;
        case K::var_x: return "x";
        case K::var_y: return "y";
        case K::add: return "(" + print(*n.a) + "+" + print(*n.b) + ")";
        case K::sub: return "(" + print(*n.a) + "-" + print(*n.b) + ")";
        case K::mul: return "(" + print(*n.a) + "*" + print(*n.b) + ")";
        case K::div: return "(" + print(*n.a) + "/" + print(*n.b) + ")";
        case K::pow: return "(" + print(*n.a) + "^" + print(*n.b) + ")";
        case K::neg: return "(-" + print(*n.a) + ")";
        case K::exp: return "exp(" + print(*n.a) + ")";
        case K::log: return "log(" + print(*n.a) + ")";
        case K::sin: return "sin(" + print(*n.a) + ")";
        case K::cos: return "cos(" + print(*n.a) + ")";
        case K::sqrt: return "sqrt(" + print(*n.a) + ")";
    }
    return "";
}

inline bool equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == Node::Kind::num) return a.value == b.value;
    if (a.a && (!b.a || !equal(*a.a, *b.a))) return false;
    if (a.b && (!b.b || !equal(*a.b, *b.b))) return false;
    return true;
}

namespace detail {

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expression() {
        NodePtr e = term();
        while (true) {
            if (accept('+'))
                e = make(Node::Kind::add, e, term());
            else if (accept('-'))
                e = make(Node::Kind::sub, e, term());
            else
                return e;
        }
    }

    NodePtr term() {
        NodePtr e = unary();
        while (true) {
            if (accept('*'))
                e = make(Node::Kind::mul, e, unary());
            else if (accept('/'))
                e = make(Node::Kind::div, e, unary());
            else
                return e;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Node::Kind::neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Node::Kind::pow, base, unary()); // right associative
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expression();
            if (!accept(')')) throw ParseError("missing ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr number() {
        std::size_t end = 0;
        double v;
        try {
            v = std::stod(s_.substr(pos_), &end);
        } catch (const std::exception&) {
            throw ParseError("malformed number", pos_);
        }
        pos_ += end;
        return make_num(v);
    }

    NodePtr name() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        if (id == "x") return make(Node::Kind::var_x);
        if (id == "y") return make(Node::Kind::var_y);
        Node::Kind k;
        if (id == "exp")
            k = Node::Kind::exp;
        else if (id == "log")
            k = Node::Kind::log;
        else if (id == "sin")
            k = Node::Kind::sin;
        else if (id == "cos")
            k = Node::Kind::cos;
        else if (id == "sqrt")
            k = Node::Kind::sqrt;
        else
            throw ParseError("unknown identifier '" + id + "'", start);
        if (!accept('(')) throw ParseError("expected '(' after " + id, pos_);
        NodePtr arg = expression();
        if (!accept(')')) throw ParseError("missing ')'", pos_);
        return make(k, arg);
    }
};

} // namespace detail

/// Parsed potential expression over the grammar
///   number | x | y | (expr) | +-*/^ | exp log sin cos sqrt.
/// Evaluation is pure; print() round-trips through parse() to an equal tree.
struct PotentialExpr {
    NodePtr root;
    std::string source;

    static PotentialExpr parse(const std::string& text) {
        return {detail::Parser(text).parse(), text};
    }
    double operator()(const Point& p) const { return eval(*root, p); }
    std::string print_canonical() const { return print(*root); }
};

} // namespace mfpd::expr
