#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iobs::expr {

// Which symbol names the time variable: "t" for CT configs, "k" for DT.
enum class TimeSymbol { T, K };

inline const char* time_symbol_name(TimeSymbol s) {
    return s == TimeSymbol::T ? "t" : "k";
}

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, size_t offset)
        : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivisionByZero : public EvalError {
public:
    DivisionByZero() : EvalError("division by zero") {}
};

class NonFiniteResult : public EvalError {
public:
    NonFiniteResult() : EvalError("non-finite result") {}
};

struct Node;

// Immutable AST over literals, the time variable, + - * /, unary minus,
// sin/cos/exp/abs/min/max, and pi.
class Expr {
public:
    static Expr parse(std::string_view src, TimeSymbol sym);
    static Expr constant(double v);

    double eval(double time) const;
    std::string str() const;
    bool is_constant() const;

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

}  // namespace iobs::expr
