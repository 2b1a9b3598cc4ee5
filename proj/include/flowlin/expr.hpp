#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "flowlin/common.hpp"

namespace flowlin::expr {

enum class NodeKind { kConstant, kVariable, kNegate, kBinary, kCall };
enum class BinaryOp { kAdd, kSub, kMul, kDiv, kPow };
enum class Func { kSin, kCos, kExp, kLog, kSqrt, kTanh, kAbs };

struct Node;
using NodePtr = std::unique_ptr<Node>;

/// One node of the parsed expression tree. `offset` is the byte offset of the
/// token that produced the node, used in error reports.
struct Node {
    NodeKind kind;
    std::size_t offset = 0;
    double value = 0.0;                     // kConstant
    int var_index = 0;                      // kVariable, 1-based
    BinaryOp op = BinaryOp::kAdd;           // kBinary
    bool integral_exponent = false;         // kBinary kPow with a literal integer rhs
    long long exponent = 0;
    Func func = Func::kSin;                 // kCall
    std::vector<NodePtr> children;
};

/// Immutable parsed expression. Evaluation is pure; concurrent use is fine.
struct ExprAst {
    NodePtr root;
    int max_variable = 0;  // highest x<i> referenced (0 if none)
};

/// Recursive-descent parse with precedence ^ > unary- > *,/ > +,-;
/// ^ right-associative, the rest left-associative. Functions:
/// sin cos exp log sqrt tanh abs. Variables: x1, x2, ...
/// Throws SyntaxError (with byte offset and expected-token description),
/// UnknownIdentifier or ArityError.
ExprAst parse(std::string_view source);

/// IEEE double evaluation. Domain violations (log of a nonpositive value,
/// sqrt of a negative, 0^negative, negative base with non-integer-literal
/// exponent, division by zero, any NaN-producing operation) throw
/// EvalDomainError carrying the offending node's byte offset.
double evaluate(const ExprAst& ast, const Vec& point);

/// Pretty-print such that parse(print(ast)) is structurally equal to ast.
std::string print(const ExprAst& ast);

bool equal(const ExprAst& a, const ExprAst& b);

/// Vector-valued field of n expressions over x1..xn.
class CompiledField {
  public:
    enum class CachePolicy { kNone, kMemoLastPoint };

    /// Throws UnknownIdentifier if a component references x<i> with i > n.
    CompiledField(int dimension, std::vector<ExprAst> components,
                  CachePolicy cache = CachePolicy::kNone);

    [[nodiscard]] int dimension() const { return n_; }
    [[nodiscard]] const std::vector<ExprAst>& components() const { return components_; }

    /// Evaluates all components at the point. With kMemoLastPoint the most
    /// recent result is reused for repeated points (single-threaded use only).
    Vec operator()(const Vec& point) const;

  private:
    int n_;
    std::vector<ExprAst> components_;
    CachePolicy cache_;
    mutable Vec memo_point_;
    mutable Vec memo_value_;
};

/// Parses one source string per component into a CompiledField.
CompiledField compile_field(int dimension, const std::vector<std::string>& sources);

/// Central-difference Jacobian of the field at `point`; componentwise error
/// O(step^2). step <= 0 selects the default 1e-6·(1+‖point‖).
Mat numeric_jacobian(const CompiledField& field, const Vec& point, double step = 0.0);

/// Same, for an arbitrary vector function (used wherever no analytic
/// Jacobian is supplied).
Mat numeric_jacobian_fn(const std::function<Vec(const Vec&)>& fn, const Vec& point,
                        double step = 0.0);

}  // namespace flowlin::expr
