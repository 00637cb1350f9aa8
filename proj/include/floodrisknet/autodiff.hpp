// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records the forward computation as a DAG of matrix nodes. Calling
// backward(loss) on a 1x1 node propagates adjoints in reverse creation order
// and accumulates the result into the bound Parameters' gradient buffers.
// Gradients are exact reverse-mode derivatives; the test suite checks every
// operation against central finite differences.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "floodrisknet/matrix.hpp"

namespace frn {

// A trainable matrix with its gradient and Adam state.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix moment1;
  Matrix moment2;
  std::int64_t step = 0;

  Parameter() = default;
  Parameter(std::string name_, Matrix init)
      : name(std::move(name_)),
        value(std::move(init)),
        grad(value.rows(), value.cols()),
        moment1(value.rows(), value.cols()),
        moment2(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

class Tape {
 public:
  // Opaque handle to a node on this tape.
  struct Var {
    std::int32_t id = -1;
  };

  Var constant(Matrix value);
  // Registers a leaf bound to `p`; repeated calls with the same Parameter
  // return the same node so shared weights accumulate one gradient.
  Var param(Parameter& p);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double c);
  // m + broadcast row (bias): `row` must be 1 x cols(m).
  Var add_row_broadcast(Var m, Var row);
  Var relu(Var a);
  Var row_l2_normalize(Var a);
  Var row_softmax(Var a);
  // Clamp into [-1, 1]; gradient is zero where clamping was active.
  Var clamp_unit(Var a);
  // C[i][j] = cos(a_i, b_j), built from normalize/matmul/clamp nodes.
  Var cross_cosine(Var a, Var b);
  // Symmetric D^{-1/2} (A + I) D^{-1/2} with self-loops; differentiable in A.
  Var normalize_adjacency(Var a);
  // D[i][k] = ||x_i - c_k||^2.
  Var pairwise_sqdist(Var x, Var c);
  // (1 + d/divisor)^(-(dof+1)/2) per entry.
  Var student_t_kernel(Var d, double divisor, double dof);
  // Divide each row by its sum (rows must sum to a positive value).
  Var row_normalize_sum(Var a);
  // Column vector of per-row log(sum(exp(x))) with max-subtraction.
  Var row_logsumexp(Var a);
  // Column vector holding the main diagonal (square input).
  Var diag_as_col(Var a);
  Var sum(Var a);
  Var mean(Var a);
  // KL(p || q) summed over all entries, with 0 log 0 = 0. `p` is a constant
  // distribution; throws NumericError when q <= 0 where p > 0.
  Var kl_div(const Matrix& p, Var q);

  const Matrix& value(Var v) const;
  double scalar(Var v) const;  // value of a 1x1 node

  // Reverse pass from a scalar loss node. Accumulates into Parameter::grad.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Parameter* bound = nullptr;
    std::function<void()> backward_fn;  // adds into the input nodes' grads
  };

  Var push(Matrix value, bool needs_grad);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  Matrix& grad_of(Var v);
  bool needs(Var v) const { return node(v).needs_grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, std::int32_t>> bound_params_;
};

using Var = Tape::Var;

}  // namespace frn
