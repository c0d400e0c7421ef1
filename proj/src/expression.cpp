#include "lyocert/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

namespace lyocert::expr {

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ")"),
      line(line),
      column(column) {}

namespace {

enum class Func { Sin, Cos, Exp, Log, Abs, Sqrt, Min, Max, Tanh };

const std::map<std::string, std::pair<Func, int>>& func_table() {
    static const std::map<std::string, std::pair<Func, int>> table{
        {"sin", {Func::Sin, 1}},   {"cos", {Func::Cos, 1}}, {"exp", {Func::Exp, 1}},
        {"log", {Func::Log, 1}},   {"abs", {Func::Abs, 1}}, {"sqrt", {Func::Sqrt, 1}},
        {"min", {Func::Min, 2}},   {"max", {Func::Max, 2}}, {"tanh", {Func::Tanh, 1}},
    };
    return table;
}

double apply(Func f, double a, double b) {
    switch (f) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Log: return std::log(a);
        case Func::Abs: return std::abs(a);
        case Func::Sqrt: return std::sqrt(a);
        case Func::Min: return std::min(a, b);
        case Func::Max: return std::max(a, b);
        case Func::Tanh: return std::tanh(a);
    }
    return 0.0;
}

}  // namespace

struct Expression::Node {
    enum class Op { Const, Time, State, Dist, Add, Sub, Mul, Div, Neg, Pow, Call };
    Op op = Op::Const;
    double value = 0.0;
    int index = 0;  // State/Dist
    Func func = Func::Sin;
    std::vector<Node> args;

    double eval(double t, std::span<const double> x, std::span<const double> d) const {
        switch (op) {
            case Op::Const: return value;
            case Op::Time: return t;
            case Op::State: return x[static_cast<size_t>(index)];
            case Op::Dist: return d[static_cast<size_t>(index)];
            case Op::Add: return args[0].eval(t, x, d) + args[1].eval(t, x, d);
            case Op::Sub: return args[0].eval(t, x, d) - args[1].eval(t, x, d);
            case Op::Mul: return args[0].eval(t, x, d) * args[1].eval(t, x, d);
            case Op::Div: return args[0].eval(t, x, d) / args[1].eval(t, x, d);
            case Op::Neg: return -args[0].eval(t, x, d);
            case Op::Pow: return std::pow(args[0].eval(t, x, d), args[1].eval(t, x, d));
            case Op::Call:
                return apply(func, args[0].eval(t, x, d),
                             args.size() > 1 ? args[1].eval(t, x, d) : 0.0);
        }
        return 0.0;
    }

    bool is_const() const { return op == Op::Const; }
};

namespace {

using Node = Expression::Node;

struct Parser {
    const std::string& src;
    size_t pos = 0;
    int line = 1, col = 1;
    int dim, ddim;
    bool scalar_mode;
    std::string scalar_var;

    Parser(const std::string& s, int n, int m, bool scalar, std::string var)
        : src(s), dim(n), ddim(m), scalar_mode(scalar), scalar_var(std::move(var)) {}

    [[noreturn]] void fail(const std::string& what) { throw ParseError(what, line, col); }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    }

    void advance(size_t n = 1) {
        for (size_t i = 0; i < n && pos < src.size(); ++i, ++pos) col += 1;
    }

    Node fold(Node n) {
        bool all_const = true;
        for (const Node& a : n.args) all_const = all_const && a.is_const();
        if (all_const && n.op != Node::Op::Const && n.op != Node::Op::Time &&
            n.op != Node::Op::State && n.op != Node::Op::Dist) {
            Node c;
            c.op = Node::Op::Const;
            c.value = n.eval(0.0, {}, {});
            return c;
        }
        return n;
    }

    Node binary(Node::Op op, Node lhs, Node rhs) {
        Node n;
        n.op = op;
        n.args.push_back(std::move(lhs));
        n.args.push_back(std::move(rhs));
        return fold(std::move(n));
    }

    Node parse_expr() {
        Node lhs = parse_term();
        while (true) {
            char c = peek();
            if (c == '+' || c == '-') {
                advance();
                Node rhs = parse_term();
                lhs = binary(c == '+' ? Node::Op::Add : Node::Op::Sub, std::move(lhs),
                             std::move(rhs));
            } else {
                return lhs;
            }
        }
    }

    Node parse_term() {
        Node lhs = parse_factor();
        while (true) {
            char c = peek();
            if (c == '*' || c == '/') {
                advance();
                Node rhs = parse_factor();
                lhs = binary(c == '*' ? Node::Op::Mul : Node::Op::Div, std::move(lhs),
                             std::move(rhs));
            } else {
                return lhs;
            }
        }
    }

    Node parse_factor() {
        bool neg = false;
        if (peek() == '-') {
            advance();
            neg = true;
        }
        Node base = parse_atom();
        if (peek() == '^') {
            advance();
            Node exp = parse_atom();
            base = binary(Node::Op::Pow, std::move(base), std::move(exp));
        }
        if (neg) {
            Node n;
            n.op = Node::Op::Neg;
            n.args.push_back(std::move(base));
            return fold(std::move(n));
        }
        return base;
    }

    Node parse_atom() {
        char c = peek();
        if (c == '\0') fail("unexpected end of input");
        if (c == '(') {
            advance();
            Node inner = parse_expr();
            if (peek() != ')') fail("expected ')'");
            advance();
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
        fail(std::string("unexpected character '") + c + "'");
    }

    Node parse_number() {
        skip_ws();
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        advance(static_cast<size_t>(end - begin));
        Node n;
        n.op = Node::Op::Const;
        n.value = v;
        return n;
    }

    Node parse_name() {
        skip_ws();
        size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            advance();
        std::string name = src.substr(start, pos - start);

        if (peek() == '(') {
            auto it = func_table().find(name);
            if (it == func_table().end()) fail("unknown function name '" + name + "'");
            advance();
            Node call;
            call.op = Node::Op::Call;
            call.func = it->second.first;
            call.args.push_back(parse_expr());
            while (peek() == ',') {
                advance();
                call.args.push_back(parse_expr());
            }
            if (peek() != ')') fail("expected ')' after arguments of '" + name + "'");
            advance();
            if (static_cast<int>(call.args.size()) != it->second.second)
                fail("function '" + name + "' expects " + std::to_string(it->second.second) +
                     " argument(s), got " + std::to_string(call.args.size()));
            return fold(std::move(call));
        }

        if (scalar_mode) {
            if (name == scalar_var) {
                Node n;
                n.op = Node::Op::State;
                n.index = 0;
                return n;
            }
            fail("unknown identifier '" + name + "'");
        }
        if (name == "t") {
            Node n;
            n.op = Node::Op::Time;
            return n;
        }
        if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'd')) {
            bool digits = true;
            for (size_t i = 1; i < name.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (digits) {
                int idx = std::stoi(name.substr(1));
                int limit = name[0] == 'x' ? dim : ddim;
                if (idx < 1 || idx > limit) fail("unknown identifier '" + name + "'");
                Node n;
                n.op = name[0] == 'x' ? Node::Op::State : Node::Op::Dist;
                n.index = idx - 1;
                return n;
            }
        }
        fail("unknown identifier '" + name + "'");
    }

    Node parse_all() {
        Node n = parse_expr();
        if (peek() != '\0') fail("unexpected trailing input");
        return n;
    }
};

}  // namespace

Expression::Expression(std::shared_ptr<const Node> node, std::string src)
    : node_(std::move(node)), source_(std::move(src)) {}

double Expression::eval(double t, std::span<const double> x, std::span<const double> d) const {
    if (!node_) throw std::logic_error("empty expression");
    return node_->eval(t, x, d);
}

double Expression::eval_scalar(double r) const {
    const double x[1] = {r};
    return eval(0.0, x, {});
}

const std::string& Expression::source() const { return source_; }

Expression parse_rhs(const std::string& source, int dimension, int disturbance_dim) {
    if (dimension < 1) throw std::invalid_argument("parse_rhs: dimension must be >= 1");
    if (disturbance_dim < 0) throw std::invalid_argument("parse_rhs: disturbance_dim must be >= 0");
    Parser p(source, dimension, disturbance_dim, false, "");
    auto node = std::make_shared<Node>(p.parse_all());
    return Expression(std::move(node), source);
}

Expression parse_scalar(const std::string& source, const std::string& var) {
    Parser p(source, 1, 0, true, var);
    auto node = std::make_shared<Node>(p.parse_all());
    return Expression(std::move(node), source);
}

}  // namespace lyocert::expr
