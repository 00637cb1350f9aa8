#include "floodrisknet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "floodrisknet/errors.hpp"

namespace frn {

namespace {

void inplace_add(Matrix& dst, const Matrix& delta) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += delta.data()[i];
}

}  // namespace

Tape::Var Tape::push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Matrix& Tape::grad_of(Var v) { return node(v).grad; }

const Matrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) {
    throw std::invalid_argument("scalar: node is " + shape_string(m) + ", expected 1x1");
  }
  return m(0, 0);
}

Tape::Var Tape::constant(Matrix value) {
  check_finite(value, "constant");
  return push(std::move(value), false);
}

Tape::Var Tape::param(Parameter& p) {
  for (const auto& [bound, id] : bound_params_) {
    if (bound == &p) return Var{id};
  }
  check_finite(p.value, "param");
  Var v = push(p.value, true);
  node(v).bound = &p;
  bound_params_.emplace_back(&p, v.id);
  return v;
}

Tape::Var Tape::matmul(Var a, Var b) {
  Var out = push(frn::matmul(value(a), value(b)), needs(a) || needs(b));
  node(out).backward_fn = [this, a, b, out] {
    const Matrix& g = grad_of(out);
    if (needs(a)) inplace_add(grad_of(a), frn::matmul(g, frn::transpose(value(b))));
    if (needs(b)) inplace_add(grad_of(b), frn::matmul(frn::transpose(value(a)), g));
  };
  return out;
}

Tape::Var Tape::transpose(Var a) {
  Var out = push(frn::transpose(value(a)), needs(a));
  node(out).backward_fn = [this, a, out] {
    if (needs(a)) inplace_add(grad_of(a), frn::transpose(grad_of(out)));
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  Var out = push(frn::add(value(a), value(b)), needs(a) || needs(b));
  node(out).backward_fn = [this, a, b, out] {
    if (needs(a)) inplace_add(grad_of(a), grad_of(out));
    if (needs(b)) inplace_add(grad_of(b), grad_of(out));
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  Var out = push(frn::sub(value(a), value(b)), needs(a) || needs(b));
  node(out).backward_fn = [this, a, b, out] {
    const Matrix& g = grad_of(out);
    if (needs(a)) inplace_add(grad_of(a), g);
    if (needs(b)) {
      Matrix& gb = grad_of(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] -= g.data()[i];
    }
  };
  return out;
}

Tape::Var Tape::hadamard(Var a, Var b) {
  Var out = push(frn::hadamard(value(a), value(b)), needs(a) || needs(b));
  node(out).backward_fn = [this, a, b, out] {
    const Matrix& g = grad_of(out);
    if (needs(a)) inplace_add(grad_of(a), frn::hadamard(g, value(b)));
    if (needs(b)) inplace_add(grad_of(b), frn::hadamard(g, value(a)));
  };
  return out;
}

Tape::Var Tape::scale(Var a, double c) {
  Var out = push(frn::scale(value(a), c), needs(a));
  node(out).backward_fn = [this, a, c, out] {
    if (needs(a)) inplace_add(grad_of(a), frn::scale(grad_of(out), c));
  };
  return out;
}

Tape::Var Tape::add_row_broadcast(Var m, Var row) {
  const Matrix& mv = value(m);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != mv.cols()) {
    throw std::invalid_argument("add_row_broadcast: row is " + shape_string(rv) +
                                ", expected 1x" + std::to_string(mv.cols()));
  }
  Matrix out(mv.rows(), mv.cols());
  for (std::size_t i = 0; i < mv.rows(); ++i)
    for (std::size_t j = 0; j < mv.cols(); ++j) out(i, j) = mv(i, j) + rv(0, j);
  check_finite(out, "add_row_broadcast");
  Var o = push(std::move(out), needs(m) || needs(row));
  node(o).backward_fn = [this, m, row, o] {
    const Matrix& g = grad_of(o);
    if (needs(m)) inplace_add(grad_of(m), g);
    if (needs(row)) {
      Matrix& gr = grad_of(row);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
    }
  };
  return o;
}

Tape::Var Tape::relu(Var a) {
  Var out = push(frn::relu(value(a)), needs(a));
  node(out).backward_fn = [this, a, out] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(out);
    const Matrix& v = value(out);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v.data()[i] > 0.0) ga.data()[i] += g.data()[i];
    }
  };
  return out;
}

Tape::Var Tape::row_l2_normalize(Var a) {
  Var out = push(frn::row_l2_normalize(value(a)), needs(a));
  node(out).backward_fn = [this, a, out] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(out);
    const Matrix& y = value(out);
    const Matrix& x = value(a);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) sq += x(i, j) * x(i, j);
      if (sq == 0.0) continue;  // zero rows are held constant
      const double inv_norm = 1.0 / std::sqrt(sq);
      double dot = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < x.cols(); ++j) {
        ga(i, j) += (g(i, j) - dot * y(i, j)) * inv_norm;
      }
    }
  };
  return out;
}

Tape::Var Tape::row_softmax(Var a) {
  Var out = push(frn::row_softmax(value(a)), needs(a));
  node(out).backward_fn = [this, a, out] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(out);
    const Matrix& y = value(out);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) {
        ga(i, j) += y(i, j) * (g(i, j) - dot);
      }
    }
  };
  return out;
}

Tape::Var Tape::clamp_unit(Var a) {
  const Matrix& x = value(a);
  Matrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::clamp(out.data()[i], -1.0, 1.0);
  }
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(o);
    const Matrix& x = value(a);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(x.data()[i]) < 1.0) ga.data()[i] += g.data()[i];
    }
  };
  return o;
}

Tape::Var Tape::cross_cosine(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("cross_cosine: column counts differ");
  }
  Var na = row_l2_normalize(a);
  Var nb = row_l2_normalize(b);
  return clamp_unit(matmul(na, transpose(nb)));
}

Tape::Var Tape::normalize_adjacency(Var a) {
  const Matrix& av = value(a);
  if (av.rows() != av.cols()) {
    throw std::invalid_argument("normalize_adjacency: matrix must be square, got " +
                                shape_string(av));
  }
  const std::size_t n = av.rows();
  // M = A + I, d = row sums of M, N = D^{-1/2} M D^{-1/2}
  Matrix degree_inv_sqrt(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;  // self-loop
    for (std::size_t j = 0; j < n; ++j) d += av(i, j);
    if (d <= 0.0) {
      throw NumericError("normalize_adjacency: nonpositive degree at node " + std::to_string(i));
    }
    degree_inv_sqrt(i, 0) = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double m_ij = av(i, j) + (i == j ? 1.0 : 0.0);
      out(i, j) = m_ij * degree_inv_sqrt(i, 0) * degree_inv_sqrt(j, 0);
    }
  }
  check_finite(out, "normalize_adjacency");
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o, degree_inv_sqrt] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(o);
    const Matrix& av = value(a);
    const std::size_t n = av.rows();
    // row_term[p] = sum_j g_pj M_pj d_j^{-1/2}; col_term[p] = sum_i g_ip M_ip d_i^{-1/2}
    std::vector<double> row_term(n, 0.0), col_term(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double m_ij = av(i, j) + (i == j ? 1.0 : 0.0);
        row_term[i] += g(i, j) * m_ij * degree_inv_sqrt(j, 0);
        col_term[j] += g(i, j) * m_ij * degree_inv_sqrt(i, 0);
      }
    }
    Matrix& ga = grad_of(a);
    for (std::size_t p = 0; p < n; ++p) {
      const double dp = degree_inv_sqrt(p, 0);
      const double correction = 0.5 * dp * dp * dp * (row_term[p] + col_term[p]);
      for (std::size_t q = 0; q < n; ++q) {
        ga(p, q) += g(p, q) * dp * degree_inv_sqrt(q, 0) - correction;
      }
    }
  };
  return o;
}

Tape::Var Tape::pairwise_sqdist(Var x, Var c) {
  const Matrix& xv = value(x);
  const Matrix& cv = value(c);
  if (xv.cols() != cv.cols()) {
    throw std::invalid_argument("pairwise_sqdist: dimension mismatch, " + shape_string(xv) +
                                " vs " + shape_string(cv));
  }
  Matrix out(xv.rows(), cv.rows());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    for (std::size_t k = 0; k < cv.rows(); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < xv.cols(); ++j) {
        const double d = xv(i, j) - cv(k, j);
        s += d * d;
      }
      out(i, k) = s;
    }
  }
  check_finite(out, "pairwise_sqdist");
  Var o = push(std::move(out), needs(x) || needs(c));
  node(o).backward_fn = [this, x, c, o] {
    const Matrix& g = grad_of(o);
    const Matrix& xv = value(x);
    const Matrix& cv = value(c);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
      for (std::size_t k = 0; k < cv.rows(); ++k) {
        const double gik2 = 2.0 * g(i, k);
        if (gik2 == 0.0) continue;
        for (std::size_t j = 0; j < xv.cols(); ++j) {
          const double d = xv(i, j) - cv(k, j);
          if (needs(x)) grad_of(x)(i, j) += gik2 * d;
          if (needs(c)) grad_of(c)(k, j) -= gik2 * d;
        }
      }
    }
  };
  return o;
}

Tape::Var Tape::student_t_kernel(Var d, double divisor, double dof) {
  if (divisor <= 0.0 || dof <= 0.0) {
    throw std::invalid_argument("student_t_kernel: divisor and dof must be positive");
  }
  const Matrix& dv = value(d);
  const double expo = -(dof + 1.0) / 2.0;
  Matrix out(dv.rows(), dv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::pow(1.0 + dv.data()[i] / divisor, expo);
  }
  check_finite(out, "student_t_kernel");
  Var o = push(std::move(out), needs(d));
  node(o).backward_fn = [this, d, o, divisor, dof] {
    if (!needs(d)) return;
    const Matrix& g = grad_of(o);
    const Matrix& dv = value(d);
    Matrix& gd = grad_of(d);
    const double expo = -(dof + 3.0) / 2.0;
    const double factor = -(dof + 1.0) / (2.0 * divisor);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gd.data()[i] += g.data()[i] * factor * std::pow(1.0 + dv.data()[i] / divisor, expo);
    }
  };
  return o;
}

Tape::Var Tape::row_normalize_sum(Var a) {
  const Matrix& x = value(a);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j);
    if (s <= 0.0) {
      throw NumericError("row_normalize_sum: nonpositive row sum at row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / s;
  }
  check_finite(out, "row_normalize_sum");
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(o);
    const Matrix& y = value(o);
    const Matrix& x = value(a);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j);
      double dot = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += (g(i, j) - dot) / s;
    }
  };
  return o;
}

Tape::Var Tape::row_logsumexp(Var a) {
  const Matrix& x = value(a);
  if (x.cols() == 0) throw std::invalid_argument("row_logsumexp: empty rows");
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = x(i, 0);
    for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += std::exp(x(i, j) - mx);
    out(i, 0) = mx + std::log(s);
  }
  check_finite(out, "row_logsumexp");
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(o);
    const Matrix& lse = value(o);
    const Matrix& x = value(a);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) {
        ga(i, j) += g(i, 0) * std::exp(x(i, j) - lse(i, 0));
      }
    }
  };
  return o;
}

Tape::Var Tape::diag_as_col(Var a) {
  const Matrix& x = value(a);
  if (x.rows() != x.cols()) {
    throw std::invalid_argument("diag_as_col: matrix must be square, got " + shape_string(x));
  }
  Matrix out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) out(i, 0) = x(i, i);
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o] {
    if (!needs(a)) return;
    const Matrix& g = grad_of(o);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < g.rows(); ++i) ga(i, i) += g(i, 0);
  };
  return o;
}

Tape::Var Tape::sum(Var a) {
  const Matrix& x = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  Matrix out(1, 1, s);
  check_finite(out, "sum");
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o] {
    if (!needs(a)) return;
    const double g = grad_of(o)(0, 0);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
  };
  return o;
}

Tape::Var Tape::mean(Var a) {
  const Matrix& x = value(a);
  if (x.size() == 0) throw std::invalid_argument("mean: empty matrix");
  const double inv = 1.0 / static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  Matrix out(1, 1, s * inv);
  check_finite(out, "mean");
  Var o = push(std::move(out), needs(a));
  node(o).backward_fn = [this, a, o, inv] {
    if (!needs(a)) return;
    const double g = grad_of(o)(0, 0) * inv;
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
  };
  return o;
}

Tape::Var Tape::kl_div(const Matrix& p, Var q) {
  const Matrix& qv = value(q);
  if (!p.same_shape(qv)) {
    throw std::invalid_argument("kl_div: shape mismatch " + shape_string(p) + " vs " +
                                shape_string(qv));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi <= 0.0) continue;  // 0 log 0 = 0
    const double qi = qv.data()[i];
    if (qi <= 0.0) {
      throw NumericError("kl_div: q is zero where p > 0 (infinite divergence)");
    }
    s += pi * std::log(pi / qi);
  }
  Matrix out(1, 1, s);
  check_finite(out, "kl_div");
  Var o = push(std::move(out), needs(q));
  Matrix p_copy = p;
  node(o).backward_fn = [this, q, o, p_copy] {
    if (!needs(q)) return;
    const double g = grad_of(o)(0, 0);
    const Matrix& qv = value(q);
    Matrix& gq = grad_of(q);
    for (std::size_t i = 0; i < p_copy.size(); ++i) {
      const double pi = p_copy.data()[i];
      if (pi <= 0.0) continue;
      gq.data()[i] -= g * pi / qv.data()[i];
    }
  };
  return o;
}

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("backward: loss must be 1x1, got " + shape_string(lv));
  }
  if (!node(loss).needs_grad) return;  // no parameters reachable
  for (std::int32_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  node(loss).grad(0, 0) = 1.0;
  for (std::int32_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad && n.backward_fn) n.backward_fn();
  }
  for (const auto& [p, id] : bound_params_) {
    const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (g.empty()) continue;
    check_finite(g, "backward (parameter gradient)");
    inplace_add(p->grad, g);
  }
}

}  // namespace frn
