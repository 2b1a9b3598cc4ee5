#include "flowlin/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "flowlin/errors.hpp"

namespace flowlin::expr {

namespace {

constexpr int kMaxDepth = 1000;

struct FuncEntry {
    const char* name;
    Func func;
};

constexpr FuncEntry kFuncs[] = {{"sin", Func::kSin},   {"cos", Func::kCos}, {"exp", Func::kExp},
                                {"log", Func::kLog},   {"sqrt", Func::kSqrt},
                                {"tanh", Func::kTanh}, {"abs", Func::kAbs}};

const char* func_name(Func f) {
    for (const auto& e : kFuncs) {
        if (e.func == f) return e.name;
    }
    return "?";
}

[[noreturn]] void syntax_error(std::size_t offset, const std::string& expected) {
    throw EngineError(Err::kSyntaxError, "expr",
                      "byte " + std::to_string(offset) + ": expected " + expected);
}

class Parser {
  public:
    explicit Parser(std::string_view src) : src_(src) {}

    ExprAst run() {
        skip_ws();
        NodePtr root = parse_sum(0);
        skip_ws();
        if (pos_ != src_.size()) {
            syntax_error(pos_, "end of input or an operator");
        }
        ExprAst ast;
        ast.root = std::move(root);
        ast.max_variable = max_var_;
        return ast;
    }

  private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int max_var_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }

    bool consume(char c) {
        skip_ws();
        if (!eof() && peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void check_depth(int depth) {
        if (depth > kMaxDepth) {
            syntax_error(pos_, "a shallower expression (nesting limit reached)");
        }
    }

    NodePtr parse_sum(int depth) {
        check_depth(depth);
        NodePtr lhs = parse_product(depth + 1);
        for (;;) {
            skip_ws();
            if (eof()) return lhs;
            const char c = peek();
            if (c != '+' && c != '-') return lhs;
            const std::size_t at = pos_++;
            NodePtr rhs = parse_product(depth + 1);
            auto node = std::make_unique<Node>();
            node->kind = NodeKind::kBinary;
            node->op = c == '+' ? BinaryOp::kAdd : BinaryOp::kSub;
            node->offset = at;
            node->children.push_back(std::move(lhs));
            node->children.push_back(std::move(rhs));
            lhs = std::move(node);
        }
    }

    NodePtr parse_product(int depth) {
        check_depth(depth);
        NodePtr lhs = parse_unary(depth + 1);
        for (;;) {
            skip_ws();
            if (eof()) return lhs;
            const char c = peek();
            if (c != '*' && c != '/') return lhs;
            const std::size_t at = pos_++;
            NodePtr rhs = parse_unary(depth + 1);
            auto node = std::make_unique<Node>();
            node->kind = NodeKind::kBinary;
            node->op = c == '*' ? BinaryOp::kMul : BinaryOp::kDiv;
            node->offset = at;
            node->children.push_back(std::move(lhs));
            node->children.push_back(std::move(rhs));
            lhs = std::move(node);
        }
    }

    // Unary minus binds looser than ^ : -x^2 is -(x^2).
    NodePtr parse_unary(int depth) {
        check_depth(depth);
        skip_ws();
        if (!eof() && peek() == '-') {
            const std::size_t at = pos_++;
            NodePtr inner = parse_unary(depth + 1);
            if (inner->kind == NodeKind::kConstant) {
                inner->value = -inner->value;
                inner->offset = at;
                return inner;  // fold so x^-2 keeps a literal integer exponent
            }
            auto node = std::make_unique<Node>();
            node->kind = NodeKind::kNegate;
            node->offset = at;
            node->children.push_back(std::move(inner));
            return node;
        }
        return parse_power(depth + 1);
    }

    NodePtr parse_power(int depth) {
        check_depth(depth);
        NodePtr base = parse_atom(depth + 1);
        skip_ws();
        if (eof() || peek() != '^') return base;
        const std::size_t at = pos_++;
        NodePtr exponent = parse_unary(depth + 1);  // right-associative
        auto node = std::make_unique<Node>();
        node->kind = NodeKind::kBinary;
        node->op = BinaryOp::kPow;
        node->offset = at;
        if (exponent->kind == NodeKind::kConstant) {
            const double v = exponent->value;
            if (std::isfinite(v) && v == std::floor(v) && std::abs(v) <= 1e15) {
                node->integral_exponent = true;
                node->exponent = static_cast<long long>(v);
            }
        }
        node->children.push_back(std::move(base));
        node->children.push_back(std::move(exponent));
        return node;
    }

    NodePtr parse_atom(int depth) {
        check_depth(depth);
        skip_ws();
        if (eof()) syntax_error(pos_, "a number, variable, function or '('");
        const char c = peek();
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum(depth + 1);
            if (!consume(')')) syntax_error(pos_, "')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier(depth);
        syntax_error(pos_, "a number, variable, function or '('");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (!eof() && peek() == '.') {
            ++pos_;
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && src_[start] == '.')) {
            syntax_error(start, "a number");
        }
        if (!eof() && (peek() == 'e' || peek() == 'E')) {
            ++pos_;
            if (!eof() && (peek() == '+' || peek() == '-')) ++pos_;
            if (eof() || !std::isdigit(static_cast<unsigned char>(peek()))) {
                syntax_error(pos_, "an exponent digit");
            }
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        double value = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            syntax_error(start, "a representable number");
        }
        auto node = std::make_unique<Node>();
        node->kind = NodeKind::kConstant;
        node->value = value;
        node->offset = start;
        return node;
    }

    NodePtr parse_identifier(int depth) {
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        if (name.size() >= 2 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            int index = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (ec != std::errc() || ptr != name.data() + name.size() || index < 1) {
                throw EngineError(Err::kUnknownIdentifier, "expr",
                                  "byte " + std::to_string(start) + ": variable '" +
                                      std::string(name) + "' (indices start at x1)");
            }
            auto node = std::make_unique<Node>();
            node->kind = NodeKind::kVariable;
            node->var_index = index;
            node->offset = start;
            max_var_ = std::max(max_var_, index);
            return node;
        }

        for (const auto& entry : kFuncs) {
            if (name == entry.name) {
                if (!consume('(')) syntax_error(pos_, "'(' after function name");
                std::vector<NodePtr> args;
                if (!consume(')')) {
                    args.push_back(parse_sum(depth + 1));
                    while (consume(',')) args.push_back(parse_sum(depth + 1));
                    if (!consume(')')) syntax_error(pos_, "')' or ','");
                }
                if (args.size() != 1) {
                    throw EngineError(Err::kArityError, "expr",
                                      "byte " + std::to_string(start) + ": " + entry.name +
                                          " takes 1 argument, got " + std::to_string(args.size()));
                }
                auto node = std::make_unique<Node>();
                node->kind = NodeKind::kCall;
                node->func = entry.func;
                node->offset = start;
                node->children = std::move(args);
                return node;
            }
        }
        throw EngineError(Err::kUnknownIdentifier, "expr",
                          "byte " + std::to_string(start) + ": '" + std::string(name) + "'");
    }
};

[[noreturn]] void domain_error(const Node& node, const std::string& what) {
    throw EngineError(Err::kEvalDomainError, "expr",
                      what + " (at byte " + std::to_string(node.offset) + ")");
}

double check_nan(const Node& node, double v, const char* what) {
    if (std::isnan(v)) domain_error(node, std::string(what) + " produced NaN");
    return v;
}

double integer_power(const Node& node, double base, long long e) {
    if (e < 0) {
        if (base == 0.0) domain_error(node, "0 raised to a negative power");
        return 1.0 / integer_power(node, base, -e);
    }
    double result = 1.0;
    double factor = base;
    while (e > 0) {
        if (e & 1) result *= factor;
        factor *= factor;
        e >>= 1;
    }
    return result;
}

double eval_node(const Node& node, const Vec& point) {
    switch (node.kind) {
        case NodeKind::kConstant:
            return node.value;
        case NodeKind::kVariable:
            if (node.var_index > point.size()) {
                throw EngineError(Err::kInvalidArgument, "expr",
                                  "point has dimension " + std::to_string(point.size()) +
                                      " but x" + std::to_string(node.var_index) + " is referenced");
            }
            return point[node.var_index - 1];
        case NodeKind::kNegate:
            return -eval_node(*node.children[0], point);
        case NodeKind::kCall: {
            const double a = eval_node(*node.children[0], point);
            switch (node.func) {
                case Func::kSin: return std::sin(a);
                case Func::kCos: return std::cos(a);
                case Func::kExp: return std::exp(a);
                case Func::kLog:
                    if (a <= 0.0) domain_error(node, "log of a nonpositive value");
                    return std::log(a);
                case Func::kSqrt:
                    if (a < 0.0) domain_error(node, "sqrt of a negative value");
                    return std::sqrt(a);
                case Func::kTanh: return std::tanh(a);
                case Func::kAbs: return std::abs(a);
            }
            domain_error(node, "unknown function");
        }
        case NodeKind::kBinary: {
            const double a = eval_node(*node.children[0], point);
            const double b = eval_node(*node.children[1], point);
            switch (node.op) {
                case BinaryOp::kAdd: return check_nan(node, a + b, "addition");
                case BinaryOp::kSub: return check_nan(node, a - b, "subtraction");
                case BinaryOp::kMul: return check_nan(node, a * b, "multiplication");
                case BinaryOp::kDiv:
                    if (b == 0.0) domain_error(node, "division by zero");
                    return check_nan(node, a / b, "division");
                case BinaryOp::kPow: {
                    if (node.integral_exponent) {
                        return check_nan(node, integer_power(node, a, node.exponent), "power");
                    }
                    if (a < 0.0) {
                        domain_error(node, "negative base with a non-integer-literal exponent");
                    }
                    if (a == 0.0 && b < 0.0) domain_error(node, "0 raised to a negative power");
                    return check_nan(node, std::pow(a, b), "power");
                }
            }
            domain_error(node, "unknown operator");
        }
    }
    domain_error(node, "unknown node kind");
}

int precedence_rank(const Node& node) {
    switch (node.kind) {
        case NodeKind::kConstant:
        case NodeKind::kVariable:
        case NodeKind::kCall:
            return 5;
        case NodeKind::kNegate:
            return 2;
        case NodeKind::kBinary:
            switch (node.op) {
                case BinaryOp::kPow: return 4;
                case BinaryOp::kMul:
                case BinaryOp::kDiv: return 3;
                default: return 1;
            }
    }
    return 0;
}

void print_node(const Node& node, std::string& out);

void print_child(const Node& child, int min_rank, std::string& out) {
    const bool parens = precedence_rank(child) < min_rank;
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
}

void print_node(const Node& node, std::string& out) {
    switch (node.kind) {
        case NodeKind::kConstant: {
            char buf[40];
            if (node.value < 0.0) {
                // Negative literals print parenthesized so they re-parse as
                // folded constants in any operator context.
                std::snprintf(buf, sizeof(buf), "(%.17g)", node.value);
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", node.value);
            }
            out += buf;
            return;
        }
        case NodeKind::kVariable:
            out += 'x';
            out += std::to_string(node.var_index);
            return;
        case NodeKind::kNegate:
            out += '-';
            print_child(*node.children[0], 3, out);
            return;
        case NodeKind::kCall:
            out += func_name(node.func);
            out += '(';
            print_node(*node.children[0], out);
            out += ')';
            return;
        case NodeKind::kBinary: {
            const char* op = nullptr;
            int rank = precedence_rank(node);
            int left_min = rank;
            int right_min = rank + 1;
            switch (node.op) {
                case BinaryOp::kAdd: op = " + "; break;
                case BinaryOp::kSub: op = " - "; break;
                case BinaryOp::kMul: op = "*"; break;
                case BinaryOp::kDiv: op = "/"; break;
                case BinaryOp::kPow:
                    op = "^";
                    left_min = rank + 1;  // right-associative
                    right_min = rank;
                    break;
            }
            print_child(*node.children[0], left_min, out);
            out += op;
            print_child(*node.children[1], right_min, out);
            return;
        }
    }
}

bool equal_node(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::kConstant:
            return a.value == b.value ||
                   (std::isnan(a.value) && std::isnan(b.value));
        case NodeKind::kVariable:
            return a.var_index == b.var_index;
        case NodeKind::kNegate:
            return equal_node(*a.children[0], *b.children[0]);
        case NodeKind::kCall:
            return a.func == b.func && equal_node(*a.children[0], *b.children[0]);
        case NodeKind::kBinary:
            return a.op == b.op && a.integral_exponent == b.integral_exponent &&
                   (!a.integral_exponent || a.exponent == b.exponent) &&
                   equal_node(*a.children[0], *b.children[0]) &&
                   equal_node(*a.children[1], *b.children[1]);
    }
    return false;
}

}  // namespace

ExprAst parse(std::string_view source) { return Parser(source).run(); }

double evaluate(const ExprAst& ast, const Vec& point) { return eval_node(*ast.root, point); }

std::string print(const ExprAst& ast) {
    std::string out;
    print_node(*ast.root, out);
    return out;
}

bool equal(const ExprAst& a, const ExprAst& b) { return equal_node(*a.root, *b.root); }

CompiledField::CompiledField(int dimension, std::vector<ExprAst> components, CachePolicy cache)
    : n_(dimension), components_(std::move(components)), cache_(cache) {
    if (dimension < 1) {
        throw EngineError(Err::kInvalidArgument, "expr", "field dimension must be positive");
    }
    if (static_cast<int>(components_.size()) != dimension) {
        throw EngineError(Err::kInvalidArgument, "expr",
                          "field needs exactly one expression per component");
    }
    for (const auto& ast : components_) {
        if (ast.max_variable > dimension) {
            throw EngineError(Err::kUnknownIdentifier, "expr",
                              "component references x" + std::to_string(ast.max_variable) +
                                  " but the field dimension is " + std::to_string(dimension));
        }
    }
}

Vec CompiledField::operator()(const Vec& point) const {
    if (point.size() != n_) {
        throw EngineError(Err::kInvalidArgument, "expr",
                          "point dimension " + std::to_string(point.size()) +
                              " does not match field dimension " + std::to_string(n_));
    }
    if (cache_ == CachePolicy::kMemoLastPoint && memo_point_.size() == n_ && memo_point_ == point) {
        return memo_value_;
    }
    Vec out(n_);
    for (int i = 0; i < n_; ++i) out[i] = evaluate(components_[i], point);
    if (cache_ == CachePolicy::kMemoLastPoint) {
        memo_point_ = point;
        memo_value_ = out;
    }
    return out;
}

CompiledField compile_field(int dimension, const std::vector<std::string>& sources) {
    std::vector<ExprAst> parts;
    parts.reserve(sources.size());
    for (const auto& s : sources) parts.push_back(parse(s));
    return CompiledField(dimension, std::move(parts));
}

Mat numeric_jacobian(const CompiledField& field, const Vec& point, double step) {
    return numeric_jacobian_fn([&field](const Vec& x) { return field(x); }, point, step);
}

Mat numeric_jacobian_fn(const std::function<Vec(const Vec&)>& fn, const Vec& point, double step) {
    const double h = step > 0.0 ? step : 1e-6 * (1.0 + point.norm());
    const int n = static_cast<int>(point.size());
    Vec probe = point;
    probe[0] += h;
    const Vec f_plus0 = fn(probe);
    const int m = static_cast<int>(f_plus0.size());
    Mat jac(m, n);
    for (int j = 0; j < n; ++j) {
        Vec hi = point, lo = point;
        hi[j] += h;
        lo[j] -= h;
        jac.col(j) = (fn(hi) - fn(lo)) / (2.0 * h);
    }
    return jac;
}

}  // namespace flowlin::expr
