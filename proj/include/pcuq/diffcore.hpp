#pragma once

// Small tape-style automatic differentiation over dense Eigen matrices.
//
// A Graph is a list of nodes in evaluation order. Leaves are inputs,
// parameters or constants; every other node applies one primitive to
// earlier nodes. Values are evaluated lazily and cached until a leaf is
// rebound. Reverse mode (gradient) runs on the cached values. Forward mode
// (directional_derivative) does not compute numbers: it expands the graph
// with new nodes whose value is the Jacobian-vector product, so losses built
// on a tangent are differentiated by the same reverse pass.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcuq::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class OpKind : std::uint8_t {
  Input,
  Parameter,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  MatMul,
  Relu,
  Cos,
  Exp,
  Log,
  Softplus,
  Square,
  Abs,
  Sum,
  Mean,
  LogGamma,
  // Derivative helpers emitted only by forward-mode expansion.
  Neg,
  Sin,
  Sigmoid,
  Step,
  Sign,
  Digamma,
};

const char* op_name(OpKind kind);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnboundLeafError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedOpError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NodeId {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const { return index != static_cast<std::size_t>(-1); }
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

using Bindings = std::map<NodeId, Matrix>;

/// Per-leaf gradients, one matrix per input or parameter leaf, shaped like
/// the bound value.
class GradientMap {
 public:
  const Matrix& at(NodeId leaf) const;
  bool contains(NodeId leaf) const { return grads_.count(leaf) != 0; }
  const std::map<NodeId, Matrix>& entries() const { return grads_; }
  void set(NodeId leaf, Matrix g) { grads_[leaf] = std::move(g); }

 private:
  std::map<NodeId, Matrix> grads_;
};

class Graph {
 public:
  /// `rows` or `cols` may be Eigen::Dynamic to accept any extent.
  NodeId input(std::string name, Index rows, Index cols);
  NodeId parameter(std::string name, Index rows, Index cols);
  NodeId constant(Matrix value);
  NodeId constant(double value);

  /// Primitive application; arity is checked against `kind`.
  NodeId apply(OpKind kind, NodeId a, NodeId b = {});

  void bind(NodeId leaf, Matrix value);
  void bind(const Bindings& bindings);

  /// Forward value of `node`, evaluating anything stale it depends on.
  const Matrix& value(NodeId node);

  GradientMap gradient(NodeId output);

  NodeId directional_derivative(NodeId output, NodeId leaf, NodeId direction);

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(NodeId node) const { return nodes_.at(node.index).kind; }
  const std::string& name(NodeId node) const { return nodes_.at(node.index).name; }
  std::vector<NodeId> parameters() const;
  std::vector<NodeId> inputs(NodeId node) const;

 private:
  struct Node {
    OpKind kind;
    NodeId a;
    NodeId b;
    std::string name;
    Index rows = Eigen::Dynamic;
    Index cols = Eigen::Dynamic;
    Matrix value;
    bool bound = false;
    std::uint64_t stamp = 0;
  };

  NodeId push(Node node);
  void check_id(NodeId id) const;
  std::vector<char> reachable(NodeId output) const;
  void compute(std::size_t i);

  std::vector<Node> nodes_;
  std::uint64_t epoch_ = 1;
};

/// Lightweight handle for building expressions; `*` is elementwise with
/// broadcasting of 1-row / 1-column operands, `matmul` is the matrix product.
class Var {
 public:
  Var() = default;
  Var(Graph& graph, NodeId id) : graph_(&graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  NodeId id() const { return id_; }
  const Matrix& value() const { return graph_->value(id_); }

 private:
  Graph* graph_ = nullptr;
  NodeId id_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

Var matmul(const Var& a, const Var& b);
Var relu(const Var& x);
Var cos(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var softplus(const Var& x);
Var square(const Var& x);
Var abs(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);
Var log_gamma(const Var& x);

/// Binds then evaluates `output`.
Matrix evaluate(Graph& graph, const Bindings& bindings, NodeId output);

/// Binds then runs reverse mode from a 1x1 `output`.
GradientMap gradient(Graph& graph, const Bindings& bindings, NodeId output);

/// Node holding J v where J = d output / d leaf; `direction` must match the
/// leaf shape when bound.
Var directional_derivative(const Var& output, const Var& leaf, const Var& direction);
Var directional_derivative(const Var& output, const Var& leaf, const Matrix& direction);

}  // namespace pcuq::ad
