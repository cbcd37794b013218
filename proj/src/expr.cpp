#include "iobs/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace iobs::expr {

enum class Kind { Literal, Time, Neg, Add, Sub, Mul, Div, Call1, Call2 };
enum class Fn { Sin, Cos, Exp, Abs, Min, Max };

struct Node {
    Kind kind;
    double value = 0.0;  // Literal
    Fn fn = Fn::Sin;     // Call1/Call2
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_literal(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Literal;
    n->value = v;
    return n;
}

class Parser {
public:
    Parser(std::string_view src, TimeSymbol sym) : src_(src), sym_(sym) {}

    NodePtr run() {
        skip_ws();
        if (at_end())
            throw ParseError("empty expression", 0);
        NodePtr e = expression();
        skip_ws();
        if (!at_end())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    // expression := term { ('+' | '-') term }
    NodePtr expression() {
        NodePtr e = term();
        for (;;) {
            skip_ws();
            if (accept('+'))
                e = make(Kind::Add, e, term());
            else if (accept('-'))
                e = make(Kind::Sub, e, term());
            else
                return e;
        }
    }

    // term := unary { ('*' | '/') unary }
    NodePtr term() {
        NodePtr e = unary();
        for (;;) {
            skip_ws();
            if (accept('*'))
                e = make(Kind::Mul, e, unary());
            else if (accept('/'))
                e = make(Kind::Div, e, unary());
            else
                return e;
        }
    }

    NodePtr unary() {
        skip_ws();
        if (accept('-'))
            return make(Kind::Neg, unary());
        return primary();
    }

    NodePtr primary() {
        skip_ws();
        if (at_end())
            throw ParseError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expression();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr number() {
        const size_t start = pos_;
        const std::string s(src_.substr(pos_));
        size_t used = 0;
        double v;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ParseError("malformed number", start);
        }
        pos_ += used;
        return make_literal(v);
    }

    NodePtr identifier() {
        const size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                             src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        if (name == time_symbol_name(sym_))
            return make(Kind::Time);
        if (name == "pi")
            return make_literal(std::numbers::pi);
        if (name == "sin" || name == "cos" || name == "exp" || name == "abs")
            return call1(name, start);
        if (name == "min" || name == "max")
            return call2(name, start);
        const TimeSymbol other = sym_ == TimeSymbol::T ? TimeSymbol::K : TimeSymbol::T;
        if (name == time_symbol_name(other))
            throw ParseError("time variable is '" +
                                 std::string(time_symbol_name(sym_)) +
                                 "' in this context, not '" + name + "'",
                             start);
        throw ParseError("unknown identifier '" + name + "'", start);
    }

    NodePtr call1(const std::string& name, size_t at) {
        expect('(');
        NodePtr arg = expression();
        expect(')');
        auto n = std::make_shared<Node>();
        n->kind = Kind::Call1;
        n->fn = name == "sin"   ? Fn::Sin
                : name == "cos" ? Fn::Cos
                : name == "exp" ? Fn::Exp
                                : Fn::Abs;
        n->a = std::move(arg);
        (void)at;
        return n;
    }

    NodePtr call2(const std::string& name, size_t at) {
        expect('(');
        NodePtr a = expression();
        skip_ws();
        if (!accept(','))
            throw ParseError(name + " expects two arguments", pos_);
        NodePtr b = expression();
        expect(')');
        auto n = std::make_shared<Node>();
        n->kind = Kind::Call2;
        n->fn = name == "min" ? Fn::Min : Fn::Max;
        n->a = std::move(a);
        n->b = std::move(b);
        (void)at;
        return n;
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool at_end() const { return pos_ >= src_.size(); }

    bool accept(char c) {
        if (!at_end() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    std::string_view src_;
    TimeSymbol sym_;
    size_t pos_ = 0;
};

double eval_node(const Node& n, double time) {
    switch (n.kind) {
        case Kind::Literal: return n.value;
        case Kind::Time: return time;
        case Kind::Neg: return -eval_node(*n.a, time);
        case Kind::Add: return eval_node(*n.a, time) + eval_node(*n.b, time);
        case Kind::Sub: return eval_node(*n.a, time) - eval_node(*n.b, time);
        case Kind::Mul: return eval_node(*n.a, time) * eval_node(*n.b, time);
        case Kind::Div: {
            const double d = eval_node(*n.b, time);
            if (d == 0.0)
                throw DivisionByZero();
            return eval_node(*n.a, time) / d;
        }
        case Kind::Call1: {
            const double a = eval_node(*n.a, time);
            switch (n.fn) {
                case Fn::Sin: return std::sin(a);
                case Fn::Cos: return std::cos(a);
                case Fn::Exp: return std::exp(a);
                case Fn::Abs: return std::abs(a);
                default: break;
            }
            throw EvalError("bad unary function");
        }
        case Kind::Call2: {
            const double a = eval_node(*n.a, time);
            const double b = eval_node(*n.b, time);
            return n.fn == Fn::Min ? std::min(a, b) : std::max(a, b);
        }
    }
    throw EvalError("corrupt AST");
}

void print_node(const Node& n, std::ostream& os) {
    switch (n.kind) {
        case Kind::Literal: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.value;
            os << tmp.str();
            return;
        }
        case Kind::Time: os << "t"; return;  // reparsed with TimeSymbol::T
        case Kind::Neg:
            os << "(-";
            print_node(*n.a, os);
            os << ")";
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div: {
            const char op = n.kind == Kind::Add   ? '+'
                            : n.kind == Kind::Sub ? '-'
                            : n.kind == Kind::Mul ? '*'
                                                  : '/';
            os << "(";
            print_node(*n.a, os);
            os << op;
            print_node(*n.b, os);
            os << ")";
            return;
        }
        case Kind::Call1: {
            const char* name = n.fn == Fn::Sin   ? "sin"
                               : n.fn == Fn::Cos ? "cos"
                               : n.fn == Fn::Exp ? "exp"
                                                 : "abs";
            os << name << "(";
            print_node(*n.a, os);
            os << ")";
            return;
        }
        case Kind::Call2:
            os << (n.fn == Fn::Min ? "min" : "max") << "(";
            print_node(*n.a, os);
            os << ",";
            print_node(*n.b, os);
            os << ")";
            return;
    }
}

bool has_time(const Node& n) {
    if (n.kind == Kind::Time)
        return true;
    if (n.a && has_time(*n.a))
        return true;
    if (n.b && has_time(*n.b))
        return true;
    return false;
}

}  // namespace

Expr Expr::parse(std::string_view src, TimeSymbol sym) {
    return Expr(Parser(src, sym).run());
}

Expr Expr::constant(double v) { return Expr(make_literal(v)); }

double Expr::eval(double time) const {
    const double v = eval_node(*root_, time);
    if (!std::isfinite(v))
        throw NonFiniteResult();
    return v;
}

std::string Expr::str() const {
    std::ostringstream os;
    print_node(*root_, os);
    return os.str();
}

bool Expr::is_constant() const { return !has_time(*root_); }

}  // namespace iobs::expr
