#pragma once

// Arithmetic micro-language for outcome functions and custom families:
//   numbers, named variables, + - * / ^, unary minus, comparisons (0/1 valued),
//   exp log abs sqrt tanh sign min max pow.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drexp/error.hpp"

namespace drexp {

class Expression {
public:
    Expression() = default;

    /// Parses `source` with the given variable names (evaluation order of
    /// `vars` in `eval` follows `names`).
    Expression(std::string source, std::vector<std::string> names)
        : source_(std::move(source)), names_(std::move(names)) {
        Parser p{source_, names_, nodes_};
        root_ = p.parse();
    }

    static Expression in_x(std::string source) { return Expression(std::move(source), {"x"}); }

    double eval(std::span<const double> vars) const { return eval_node(root_, vars); }
    double operator()(double x) const { return eval_node(root_, std::span<const double>(&x, 1)); }

    const std::string& source() const { return source_; }
    const std::vector<std::string>& variables() const { return names_; }
    bool empty() const { return nodes_.empty(); }

    /// True when the top-level operation is a comparison, so values lie in {0, 1}.
    bool is_indicator() const { return !nodes_.empty() && is_comparison(nodes_[root_].op); }

private:
    enum class Op {
        Num, Var, Neg, Add, Sub, Mul, Div, Pow, Lt, Le, Gt, Ge, Eq, Ne,
        Exp, Log, Abs, Sqrt, Tanh, Sign, Min, Max
    };
    struct Node {
        Op op;
        double value = 0.0;
        std::size_t lhs = 0, rhs = 0;
    };

    static bool is_comparison(Op op) {
        return op == Op::Lt || op == Op::Le || op == Op::Gt || op == Op::Ge || op == Op::Eq || op == Op::Ne;
    }

    double eval_node(std::size_t i, std::span<const double> v) const {
        const Node& n = nodes_[i];
        switch (n.op) {
        case Op::Num: return n.value;
        case Op::Var: return v[n.lhs];
        case Op::Neg: return -eval_node(n.lhs, v);
        case Op::Add: return eval_node(n.lhs, v) + eval_node(n.rhs, v);
        case Op::Sub: return eval_node(n.lhs, v) - eval_node(n.rhs, v);
        case Op::Mul: return eval_node(n.lhs, v) * eval_node(n.rhs, v);
        case Op::Div: return eval_node(n.lhs, v) / eval_node(n.rhs, v);
        case Op::Pow: {
            const double b = eval_node(n.lhs, v), e = eval_node(n.rhs, v);
            if (e == 2.0) return b * b;
            return std::pow(b, e);
        }
        case Op::Lt: return eval_node(n.lhs, v) < eval_node(n.rhs, v) ? 1.0 : 0.0;
        case Op::Le: return eval_node(n.lhs, v) <= eval_node(n.rhs, v) ? 1.0 : 0.0;
        case Op::Gt: return eval_node(n.lhs, v) > eval_node(n.rhs, v) ? 1.0 : 0.0;
        case Op::Ge: return eval_node(n.lhs, v) >= eval_node(n.rhs, v) ? 1.0 : 0.0;
        case Op::Eq: return eval_node(n.lhs, v) == eval_node(n.rhs, v) ? 1.0 : 0.0;
        case Op::Ne: return eval_node(n.lhs, v) != eval_node(n.rhs, v) ? 1.0 : 0.0;
        case Op::Exp: return std::exp(eval_node(n.lhs, v));
        case Op::Log: return std::log(eval_node(n.lhs, v));
        case Op::Abs: return std::fabs(eval_node(n.lhs, v));
        case Op::Sqrt: return std::sqrt(eval_node(n.lhs, v));
        case Op::Tanh: return std::tanh(eval_node(n.lhs, v));
        case Op::Sign: {
            const double a = eval_node(n.lhs, v);
            return (a > 0.0) - (a < 0.0);
        }
        case Op::Min: return std::fmin(eval_node(n.lhs, v), eval_node(n.rhs, v));
        case Op::Max: return std::fmax(eval_node(n.lhs, v), eval_node(n.rhs, v));
        }
        return 0.0;
    }

    struct Parser {
        const std::string& s;
        const std::vector<std::string>& names;
        std::vector<Node>& nodes;
        std::size_t pos = 0;

        [[noreturn]] void fail(const std::string& what) const {
            throw UsageError("expression '" + s + "': " + what + " at column " + std::to_string(pos + 1));
        }
        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(const char* tok) {
            skip();
            const std::size_t len = std::char_traits<char>::length(tok);
            if (s.compare(pos, len, tok) == 0) {
                pos += len;
                return true;
            }
            return false;
        }
        std::size_t add(Op op, std::size_t l = 0, std::size_t r = 0, double value = 0.0) {
            nodes.push_back({op, value, l, r});
            return nodes.size() - 1;
        }

        std::size_t parse() {
            if (s.find_first_not_of(" \t\r\n") == std::string::npos) fail("empty expression");
            const std::size_t r = comparison();
            skip();
            if (pos != s.size()) fail("unexpected character '" + std::string(1, s[pos]) + "'");
            return r;
        }
        std::size_t comparison() {
            std::size_t l = sum();
            if (accept("<=")) return add(Op::Le, l, sum());
            if (accept(">=")) return add(Op::Ge, l, sum());
            if (accept("==")) return add(Op::Eq, l, sum());
            if (accept("!=")) return add(Op::Ne, l, sum());
            if (accept("<")) return add(Op::Lt, l, sum());
            if (accept(">")) return add(Op::Gt, l, sum());
            return l;
        }
        std::size_t sum() {
            std::size_t l = term();
            for (;;) {
                if (accept("+")) l = add(Op::Add, l, term());
                else if (accept("-")) l = add(Op::Sub, l, term());
                else return l;
            }
        }
        std::size_t term() {
            std::size_t l = unary();
            for (;;) {
                if (accept("*")) l = add(Op::Mul, l, unary());
                else if (accept("/")) l = add(Op::Div, l, unary());
                else return l;
            }
        }
        std::size_t unary() {
            if (accept("-")) return add(Op::Neg, unary());
            if (accept("+")) return unary();
            return power();
        }
        std::size_t power() {
            std::size_t base = primary();
            if (accept("^")) return add(Op::Pow, base, unary());
            return base;
        }
        std::size_t primary() {
            skip();
            if (pos >= s.size()) fail("unexpected end of input");
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (const std::exception&) {
                    fail("bad number");
                }
                pos += used;
                return add(Op::Num, 0, 0, v);
            }
            if (accept("(")) {
                const std::size_t inner = comparison();
                if (!accept(")")) fail("expected ')'");
                return inner;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                const std::string id = s.substr(start, pos - start);
                skip();
                if (pos < s.size() && s[pos] == '(') return call(id);
                for (std::size_t i = 0; i < names.size(); ++i)
                    if (names[i] == id) return add(Op::Var, i);
                if (id == "pi") return add(Op::Num, 0, 0, 3.14159265358979323846);
                if (id == "e") return add(Op::Num, 0, 0, 2.71828182845904523536);
                if (id == "inf") return add(Op::Num, 0, 0, HUGE_VAL);
                pos = start;
                fail("unknown variable '" + id + "'");
            }
            fail("unexpected character '" + std::string(1, c) + "'");
        }
        std::size_t call(const std::string& id) {
            accept("(");
            std::vector<std::size_t> args;
            if (!accept(")")) {
                do args.push_back(comparison());
                while (accept(","));
                if (!accept(")")) fail("expected ')' after arguments");
            }
            auto want = [&](std::size_t n) {
                if (args.size() != n) fail(id + " takes " + std::to_string(n) + " argument(s)");
            };
            struct Unary { const char* name; Op op; };
            static constexpr Unary unaries[] = {{"exp", Op::Exp},   {"log", Op::Log},   {"abs", Op::Abs},
                                                {"sqrt", Op::Sqrt}, {"tanh", Op::Tanh}, {"sign", Op::Sign}};
            for (const auto& u : unaries)
                if (id == u.name) {
                    want(1);
                    return add(u.op, args[0]);
                }
            if (id == "min") { want(2); return add(Op::Min, args[0], args[1]); }
            if (id == "max") { want(2); return add(Op::Max, args[0], args[1]); }
            if (id == "pow") { want(2); return add(Op::Pow, args[0], args[1]); }
            fail("unknown function '" + id + "'");
        }
    };

    std::string source_;
    std::vector<std::string> names_;
    std::vector<Node> nodes_;
    std::size_t root_ = 0;
};

} // namespace drexp
