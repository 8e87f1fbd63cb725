#include "pcuq/diffcore.hpp"

#include "pcuq/special.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace pcuq::ad {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

bool is_leaf(OpKind k) { return k == OpKind::Input || k == OpKind::Parameter || k == OpKind::Constant; }

bool is_binary(OpKind k) {
  switch (k) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
    case OpKind::MatMul:
      return true;
    default:
      return false;
  }
}

Index broadcast_extent(Index x, Index y, const char* op, const Matrix& a, const Matrix& b) {
  if (x == y) return x;
  if (x == 1) return y;
  if (y == 1) return x;
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

Matrix expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Sum `g` down to a (rows x cols) operand that was broadcast.
Matrix reduce_to(const Matrix& g, Index rows, Index cols) {
  Matrix out = g;
  if (rows == 1 && out.rows() != 1) out = out.colwise().sum().eval();
  if (cols == 1 && out.cols() != 1) out = out.rowwise().sum().eval();
  return out;
}

template <typename F>
Matrix binary(const Matrix& a, const Matrix& b, const char* op, F f) {
  const Index r = broadcast_extent(a.rows(), b.rows(), op, a, b);
  const Index c = broadcast_extent(a.cols(), b.cols(), op, a, b);
  const Matrix ea = expand(a, r, c);
  const Matrix eb = expand(b, r, c);
  return f(ea.array(), eb.array()).matrix();
}

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Parameter: return "parameter";
    case OpKind::Constant: return "constant";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    case OpKind::MatMul: return "matmul";
    case OpKind::Relu: return "relu";
    case OpKind::Cos: return "cos";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Softplus: return "softplus";
    case OpKind::Square: return "square";
    case OpKind::Abs: return "abs";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::LogGamma: return "log_gamma";
    case OpKind::Neg: return "neg";
    case OpKind::Sin: return "sin";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Step: return "step";
    case OpKind::Sign: return "sign";
    case OpKind::Digamma: return "digamma";
  }
  return "?";
}

const Matrix& GradientMap::at(NodeId leaf) const {
  auto it = grads_.find(leaf);
  if (it == grads_.end()) throw std::out_of_range("GradientMap: no gradient for leaf");
  return it->second;
}

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

void Graph::check_id(NodeId id) const {
  if (!id.valid() || id.index >= nodes_.size()) throw std::out_of_range("Graph: node id out of range");
}

NodeId Graph::input(std::string name, Index rows, Index cols) {
  Node n{OpKind::Input, {}, {}, std::move(name)};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

NodeId Graph::parameter(std::string name, Index rows, Index cols) {
  Node n{OpKind::Parameter, {}, {}, std::move(name)};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

NodeId Graph::constant(Matrix value) {
  Node n{OpKind::Constant, {}, {}, "const"};
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.bound = true;
  n.stamp = 0;
  return push(std::move(n));
}

NodeId Graph::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

NodeId Graph::apply(OpKind kind, NodeId a, NodeId b) {
  if (is_leaf(kind)) throw std::invalid_argument("Graph::apply: leaf kinds are created via input/parameter/constant");
  check_id(a);
  if (is_binary(kind)) {
    check_id(b);
  } else if (b.valid()) {
    throw std::invalid_argument(std::string("Graph::apply: ") + op_name(kind) + " is unary");
  }
  return push(Node{kind, a, b, {}});
}

void Graph::bind(NodeId leaf, Matrix value) {
  check_id(leaf);
  Node& n = nodes_[leaf.index];
  if (n.kind != OpKind::Input && n.kind != OpKind::Parameter) {
    throw std::invalid_argument("Graph::bind: node is not an input or parameter");
  }
  if ((n.rows != Eigen::Dynamic && value.rows() != n.rows) ||
      (n.cols != Eigen::Dynamic && value.cols() != n.cols)) {
    std::ostringstream os;
    os << "Graph::bind: leaf '" << n.name << "' expects " << n.rows << "x" << n.cols << ", got "
       << shape_str(value);
    throw ShapeError(os.str());
  }
  n.value = std::move(value);
  n.bound = true;
  ++epoch_;
}

void Graph::bind(const Bindings& bindings) {
  for (const auto& [id, v] : bindings) bind(id, v);
}

std::vector<NodeId> Graph::parameters() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::Parameter) out.push_back(NodeId{i});
  }
  return out;
}

std::vector<NodeId> Graph::inputs(NodeId node) const {
  check_id(node);
  std::vector<NodeId> out;
  const Node& n = nodes_[node.index];
  if (n.a.valid()) out.push_back(n.a);
  if (n.b.valid()) out.push_back(n.b);
  return out;
}

std::vector<char> Graph::reachable(NodeId output) const {
  std::vector<char> need(output.index + 1, 0);
  need[output.index] = 1;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (!need[i]) continue;
    const Node& n = nodes_[i];
    if (n.a.valid()) need[n.a.index] = 1;
    if (n.b.valid()) need[n.b.index] = 1;
  }
  return need;
}

void Graph::compute(std::size_t i) {
  Node& n = nodes_[i];
  if (is_leaf(n.kind)) {
    if (!n.bound) throw UnboundLeafError("Graph: leaf '" + n.name + "' has no binding");
    return;
  }
  if (n.stamp == epoch_) return;
  const Matrix& a = nodes_[n.a.index].value;
  const Matrix* b = n.b.valid() ? &nodes_[n.b.index].value : nullptr;
  Matrix out;
  switch (n.kind) {
    case OpKind::Add:
      out = binary(a, *b, "add", [](auto x, auto y) { return x + y; });
      break;
    case OpKind::Sub:
      out = binary(a, *b, "sub", [](auto x, auto y) { return x - y; });
      break;
    case OpKind::Mul:
      out = binary(a, *b, "mul", [](auto x, auto y) { return x * y; });
      break;
    case OpKind::Div:
      out = binary(a, *b, "div", [](auto x, auto y) { return x / y; });
      break;
    case OpKind::MatMul:
      if (a.cols() != b->rows()) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " and " + shape_str(*b));
      }
      out = a * (*b);
      break;
    case OpKind::Relu:
      out = a.cwiseMax(0.0);
      break;
    case OpKind::Cos:
      out = a.array().cos().matrix();
      break;
    case OpKind::Sin:
      out = a.array().sin().matrix();
      break;
    case OpKind::Exp:
      out = a.array().exp().matrix();
      break;
    case OpKind::Log:
      out = a.array().log().matrix();
      break;
    case OpKind::Softplus:
      out = a.unaryExpr(&softplus_scalar);
      break;
    case OpKind::Sigmoid:
      out = a.unaryExpr(&sigmoid_scalar);
      break;
    case OpKind::Square:
      out = a.array().square().matrix();
      break;
    case OpKind::Abs:
      out = a.cwiseAbs();
      break;
    case OpKind::Sum:
      out = Matrix::Constant(1, 1, a.sum());
      break;
    case OpKind::Mean:
      if (a.size() == 0) throw ShapeError("mean: empty operand");
      out = Matrix::Constant(1, 1, a.mean());
      break;
    case OpKind::LogGamma:
      out = a.unaryExpr([](double x) { return pcuq::log_gamma(x); });
      break;
    case OpKind::Digamma:
      out = a.unaryExpr([](double x) { return pcuq::digamma(x); });
      break;
    case OpKind::Neg:
      out = -a;
      break;
    case OpKind::Step:
      out = a.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; });
      break;
    case OpKind::Sign:
      out = a.unaryExpr([](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); });
      break;
    default:
      throw UnsupportedOpError(std::string("Graph: unsupported op ") + op_name(n.kind));
  }
  n.value = std::move(out);
  n.stamp = epoch_;
}

const Matrix& Graph::value(NodeId node) {
  check_id(node);
  const auto need = reachable(node);
  for (std::size_t i = 0; i <= node.index; ++i) {
    if (need[i]) compute(i);
  }
  return nodes_[node.index].value;
}

GradientMap Graph::gradient(NodeId output) {
  const Matrix& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("gradient: output must be 1x1, got " + shape_str(out));
  }
  const auto need = reachable(output);
  std::vector<Matrix> adj(output.index + 1);
  adj[output.index] = Matrix::Ones(1, 1);

  auto accumulate = [&](NodeId id, Matrix g) {
    const Matrix& v = nodes_[id.index].value;
    g = reduce_to(g, v.rows(), v.cols());
    if (adj[id.index].size() == 0) {
      adj[id.index] = std::move(g);
    } else {
      adj[id.index] += g;
    }
  };

  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (!need[i] || adj[i].size() == 0) continue;
    const Node& n = nodes_[i];
    if (is_leaf(n.kind)) continue;
    const Matrix& g = adj[i];
    const Matrix& a = nodes_[n.a.index].value;
    const Matrix& y = n.value;
    switch (n.kind) {
      case OpKind::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case OpKind::Sub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case OpKind::Mul: {
        const Matrix& b = nodes_[n.b.index].value;
        accumulate(n.a, binary(g, b, "mul", [](auto x, auto z) { return x * z; }));
        accumulate(n.b, binary(g, a, "mul", [](auto x, auto z) { return x * z; }));
        break;
      }
      case OpKind::Div: {
        const Matrix& b = nodes_[n.b.index].value;
        accumulate(n.a, binary(g, b, "div", [](auto x, auto z) { return x / z; }));
        const Matrix gy = binary(g, y, "mul", [](auto x, auto z) { return x * z; });
        accumulate(n.b, binary(gy, b, "div", [](auto x, auto z) { return -x / z; }));
        break;
      }
      case OpKind::MatMul: {
        const Matrix& b = nodes_[n.b.index].value;
        accumulate(n.a, g * b.transpose());
        accumulate(n.b, a.transpose() * g);
        break;
      }
      case OpKind::Relu:
        accumulate(n.a, (g.array() * (a.array() > 0.0).cast<double>()).matrix());
        break;
      case OpKind::Cos:
        accumulate(n.a, (-g.array() * a.array().sin()).matrix());
        break;
      case OpKind::Sin:
        accumulate(n.a, (g.array() * a.array().cos()).matrix());
        break;
      case OpKind::Exp:
        accumulate(n.a, (g.array() * y.array()).matrix());
        break;
      case OpKind::Log:
        accumulate(n.a, (g.array() / a.array()).matrix());
        break;
      case OpKind::Softplus:
        accumulate(n.a, (g.array() * a.unaryExpr(&sigmoid_scalar).array()).matrix());
        break;
      case OpKind::Sigmoid:
        accumulate(n.a, (g.array() * y.array() * (1.0 - y.array())).matrix());
        break;
      case OpKind::Square:
        accumulate(n.a, (2.0 * g.array() * a.array()).matrix());
        break;
      case OpKind::Abs:
        accumulate(n.a, (g.array() * a.unaryExpr([](double x) {
                                          return static_cast<double>((x > 0.0) - (x < 0.0));
                                        }).array())
                            .matrix());
        break;
      case OpKind::Sum:
        accumulate(n.a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      case OpKind::Mean:
        accumulate(n.a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / static_cast<double>(a.size())));
        break;
      case OpKind::LogGamma:
        accumulate(n.a, (g.array() * a.unaryExpr([](double x) { return pcuq::digamma(x); }).array()).matrix());
        break;
      case OpKind::Digamma:
        accumulate(n.a, (g.array() * a.unaryExpr([](double x) { return pcuq::trigamma(x); }).array()).matrix());
        break;
      case OpKind::Neg:
        accumulate(n.a, -g);
        break;
      case OpKind::Step:
      case OpKind::Sign:
        break;  // zero almost everywhere
      default:
        throw UnsupportedOpError(std::string("gradient: unsupported op ") + op_name(n.kind));
    }
  }

  GradientMap grads;
  for (std::size_t i = 0; i <= output.index; ++i) {
    const Node& n = nodes_[i];
    if (n.kind != OpKind::Input && n.kind != OpKind::Parameter) continue;
    if (!n.bound) continue;
    if (adj[i].size() == 0) {
      grads.set(NodeId{i}, Matrix::Zero(n.value.rows(), n.value.cols()));
    } else {
      grads.set(NodeId{i}, std::move(adj[i]));
    }
  }
  // Parameters the output does not depend on still get a (zero) entry.
  for (std::size_t i = output.index + 1; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind == OpKind::Parameter && n.bound) grads.set(NodeId{i}, Matrix::Zero(n.value.rows(), n.value.cols()));
  }
  return grads;
}

NodeId Graph::directional_derivative(NodeId output, NodeId leaf, NodeId direction) {
  check_id(output);
  check_id(leaf);
  check_id(direction);
  const OpKind lk = nodes_[leaf.index].kind;
  if (lk != OpKind::Input && lk != OpKind::Parameter) {
    throw std::invalid_argument("directional_derivative: seed must be an input or parameter leaf");
  }
  const Node& ln = nodes_[leaf.index];
  const Node& dn = nodes_[direction.index];
  if (dn.kind == OpKind::Constant || dn.bound) {
    const Matrix& d = dn.value;
    if ((ln.rows != Eigen::Dynamic && d.rows() != ln.rows) || (ln.cols != Eigen::Dynamic && d.cols() != ln.cols) ||
        (ln.bound && (d.rows() != ln.value.rows() || d.cols() != ln.value.cols()))) {
      throw ShapeError("directional_derivative: direction shape " + shape_str(d) + " does not match leaf");
    }
  }

  // tangent[i] is the node holding d(node i)/d(leaf)·v; invalid means zero.
  const std::size_t last = output.index;
  std::vector<NodeId> tangent(last + 1);
  if (leaf.index <= last) tangent[leaf.index] = direction;

  auto T = [&](NodeId id) { return tangent[id.index]; };
  auto op = [&](OpKind k, NodeId a, NodeId b = {}) { return apply(k, a, b); };

  const auto need = reachable(output);
  for (std::size_t i = leaf.index + 1; i <= last; ++i) {
    if (!need[i]) continue;
    // Copy: apply() may reallocate nodes_.
    const OpKind kind = nodes_[i].kind;
    const NodeId a = nodes_[i].a;
    const NodeId b = nodes_[i].b;
    const NodeId self{i};
    if (is_leaf(kind)) continue;
    const NodeId ta = T(a);
    const NodeId tb = b.valid() ? T(b) : NodeId{};
    if (!ta.valid() && !tb.valid()) continue;

    NodeId t;
    switch (kind) {
      case OpKind::Add:
        t = !tb.valid() ? ta : !ta.valid() ? tb : op(OpKind::Add, ta, tb);
        break;
      case OpKind::Sub:
        t = !tb.valid() ? ta : !ta.valid() ? op(OpKind::Neg, tb) : op(OpKind::Sub, ta, tb);
        break;
      case OpKind::Mul: {
        NodeId l = ta.valid() ? op(OpKind::Mul, ta, b) : NodeId{};
        NodeId r = tb.valid() ? op(OpKind::Mul, a, tb) : NodeId{};
        t = !r.valid() ? l : !l.valid() ? r : op(OpKind::Add, l, r);
        break;
      }
      case OpKind::Div: {
        NodeId l = ta.valid() ? op(OpKind::Div, ta, b) : NodeId{};
        NodeId r = tb.valid() ? op(OpKind::Mul, self, op(OpKind::Div, tb, b)) : NodeId{};
        t = !r.valid() ? l : !l.valid() ? op(OpKind::Neg, r) : op(OpKind::Sub, l, r);
        break;
      }
      case OpKind::MatMul: {
        NodeId l = ta.valid() ? op(OpKind::MatMul, ta, b) : NodeId{};
        NodeId r = tb.valid() ? op(OpKind::MatMul, a, tb) : NodeId{};
        t = !r.valid() ? l : !l.valid() ? r : op(OpKind::Add, l, r);
        break;
      }
      case OpKind::Relu:
        t = op(OpKind::Mul, ta, op(OpKind::Step, a));
        break;
      case OpKind::Cos:
        t = op(OpKind::Neg, op(OpKind::Mul, ta, op(OpKind::Sin, a)));
        break;
      case OpKind::Sin:
        t = op(OpKind::Mul, ta, op(OpKind::Cos, a));
        break;
      case OpKind::Exp:
        t = op(OpKind::Mul, ta, self);
        break;
      case OpKind::Log:
        t = op(OpKind::Div, ta, a);
        break;
      case OpKind::Softplus:
        t = op(OpKind::Mul, ta, op(OpKind::Sigmoid, a));
        break;
      case OpKind::Sigmoid: {
        const NodeId one = constant(1.0);
        t = op(OpKind::Mul, ta, op(OpKind::Mul, self, op(OpKind::Sub, one, self)));
        break;
      }
      case OpKind::Square: {
        const NodeId two = constant(2.0);
        t = op(OpKind::Mul, two, op(OpKind::Mul, a, ta));
        break;
      }
      case OpKind::Abs:
        t = op(OpKind::Mul, ta, op(OpKind::Sign, a));
        break;
      case OpKind::Sum:
        t = op(OpKind::Sum, ta);
        break;
      case OpKind::Mean:
        t = op(OpKind::Mean, ta);
        break;
      case OpKind::LogGamma:
        t = op(OpKind::Mul, ta, op(OpKind::Digamma, a));
        break;
      case OpKind::Neg:
        t = op(OpKind::Neg, ta);
        break;
      case OpKind::Step:
      case OpKind::Sign:
        continue;  // piecewise constant
      case OpKind::Digamma:
        throw UnsupportedOpError("directional_derivative: second-order tangents through log_gamma are not supported");
      default:
        throw UnsupportedOpError(std::string("directional_derivative: unsupported op ") + op_name(kind));
    }
    tangent[i] = t;
  }

  if (tangent[last].valid()) return tangent[last];
  // Output does not depend on the leaf: exact zero of the output's shape.
  return op(OpKind::Sub, output, output);
}

// ---- expression handles ---------------------------------------------------

namespace {

Graph& same_graph(const Var& a, const Var& b) {
  if (&a.graph() != &b.graph()) throw std::invalid_argument("Var: operands belong to different graphs");
  return a.graph();
}

Var bin(OpKind k, const Var& a, const Var& b) {
  Graph& g = same_graph(a, b);
  return Var(g, g.apply(k, a.id(), b.id()));
}

Var un(OpKind k, const Var& a) { return Var(a.graph(), a.graph().apply(k, a.id())); }

Var lit(const Var& like, double v) { return Var(like.graph(), like.graph().constant(v)); }

}  // namespace

Var operator+(const Var& a, const Var& b) { return bin(OpKind::Add, a, b); }
Var operator-(const Var& a, const Var& b) { return bin(OpKind::Sub, a, b); }
Var operator*(const Var& a, const Var& b) { return bin(OpKind::Mul, a, b); }
Var operator/(const Var& a, const Var& b) { return bin(OpKind::Div, a, b); }
Var operator-(const Var& a) { return un(OpKind::Neg, a); }
Var operator+(const Var& a, double b) { return a + lit(a, b); }
Var operator+(double a, const Var& b) { return lit(b, a) + b; }
Var operator-(const Var& a, double b) { return a - lit(a, b); }
Var operator-(double a, const Var& b) { return lit(b, a) - b; }
Var operator*(const Var& a, double b) { return a * lit(a, b); }
Var operator*(double a, const Var& b) { return lit(b, a) * b; }
Var operator/(const Var& a, double b) { return a / lit(a, b); }
Var operator/(double a, const Var& b) { return lit(b, a) / b; }

Var matmul(const Var& a, const Var& b) { return bin(OpKind::MatMul, a, b); }
Var relu(const Var& x) { return un(OpKind::Relu, x); }
Var cos(const Var& x) { return un(OpKind::Cos, x); }
Var exp(const Var& x) { return un(OpKind::Exp, x); }
Var log(const Var& x) { return un(OpKind::Log, x); }
Var softplus(const Var& x) { return un(OpKind::Softplus, x); }
Var square(const Var& x) { return un(OpKind::Square, x); }
Var abs(const Var& x) { return un(OpKind::Abs, x); }
Var sum(const Var& x) { return un(OpKind::Sum, x); }
Var mean(const Var& x) { return un(OpKind::Mean, x); }
Var log_gamma(const Var& x) { return un(OpKind::LogGamma, x); }

Matrix evaluate(Graph& graph, const Bindings& bindings, NodeId output) {
  graph.bind(bindings);
  return graph.value(output);
}

GradientMap gradient(Graph& graph, const Bindings& bindings, NodeId output) {
  graph.bind(bindings);
  return graph.gradient(output);
}

Var directional_derivative(const Var& output, const Var& leaf, const Var& direction) {
  Graph& g = same_graph(output, leaf);
  same_graph(leaf, direction);
  return Var(g, g.directional_derivative(output.id(), leaf.id(), direction.id()));
}

Var directional_derivative(const Var& output, const Var& leaf, const Matrix& direction) {
  Graph& g = output.graph();
  return Var(g, g.directional_derivative(output.id(), leaf.id(), g.constant(direction)));
}

}  // namespace pcuq::ad
