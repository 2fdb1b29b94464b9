#include "core/tape.hpp"

#include <cmath>

#include "core/error.hpp"

namespace vtp {

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + " shape mismatch: " + a.shape_str() + " vs " +
                         b.shape_str());
}
}  // namespace

const Tape::Node& Tape::node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
Tape::Node& Tape::node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

int Tape::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ContractError("variable does not belong to this tape (id " + std::to_string(v.id) + ")");
  return v.id;
}

Var Tape::push(Tensor value, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) {
  if (value.numel() == 0) throw ContractError("tape input must be non-empty");
  return push(std::move(value), nullptr);
}

Var Tape::param(Parameter& p) {
  if (p.value.numel() == 0) throw ContractError("parameter '" + p.name + "' is empty");
  if (!p.grad.same_shape(p.value)) p.grad = Tensor::zeros_like(p.value);
  Var v = push(p.value, nullptr);
  node(v.id).bound = &p;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = node(ia).value;
  const Tensor& B = node(ib).value;
  if (A.rank() != 2 || B.rank() != 2)
    throw DimensionError("matmul requires rank-2 operands, got " + A.shape_str() + " and " +
                         B.shape_str());
  if (A.cols() != B.rows())
    throw DimensionError("matmul inner extents differ: " + A.shape_str() + " x " + B.shape_str());
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor out = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double av = A.data[i * k + l];
      if (av == 0.0) continue;
      const double* brow = &B.data[l * m];
      double* orow = &out.data[i * m];
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  // dA += G B^T ; dB += A^T G
  return push(std::move(out), [ia, ib, n, k, m](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Av = t.node(ia).value;
    const Tensor& Bv = t.node(ib).value;
    Tensor& dA = t.node(ia).grad;
    Tensor& dB = t.node(ib).grad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < k; ++l) {
        double acc = 0.0;
        const double* grow = &G.data[i * m];
        const double* brow = &Bv.data[l * m];
        for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
        dA.data[i * k + l] += acc;
      }
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t i = 0; i < n; ++i) {
        const double av = Av.data[i * k + l];
        if (av == 0.0) continue;
        const double* grow = &G.data[i * m];
        double* drow = &dB.data[l * m];
        for (std::size_t j = 0; j < m; ++j) drow[j] += av * grow[j];
      }
  });
}

Var Tape::add(Var a, Var b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = node(ia).value;
  const Tensor& B = node(ib).value;
  require_same_shape(A, B, "add");
  Tensor out = A;
  out.add_in_place(B);
  return push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    t.node(ia).grad.add_in_place(G);
    t.node(ib).grad.add_in_place(G);
  });
}

Var Tape::sub(Var a, Var b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = node(ia).value;
  const Tensor& B = node(ib).value;
  require_same_shape(A, B, "sub");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= B.data[i];
  return push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    Tensor& dA = t.node(ia).grad;
    Tensor& dB = t.node(ib).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) {
      dA.data[i] += G.data[i];
      dB.data[i] -= G.data[i];
    }
  });
}

Var Tape::hadamard(Var a, Var b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = node(ia).value;
  const Tensor& B = node(ib).value;
  require_same_shape(A, B, "hadamard");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= B.data[i];
  return push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Av = t.node(ia).value;
    const Tensor& Bv = t.node(ib).value;
    Tensor& dA = t.node(ia).grad;
    Tensor& dB = t.node(ib).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) {
      dA.data[i] += G.data[i] * Bv.data[i];
      dB.data[i] += G.data[i] * Av.data[i];
    }
  });
}

Var Tape::smul(Var s, Var a) {
  const int is = check(s), ia = check(a);
  const Tensor& S = node(is).value;
  if (!S.is_scalar())
    throw DimensionError("smul left operand must be scalar, got " + S.shape_str());
  const double sv = S.data[0];
  Tensor out = node(ia).value;
  for (double& x : out.data) x *= sv;
  // da += s G ; ds += <G, a>
  return push(std::move(out), [is, ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Av = t.node(ia).value;
    const double sv = t.node(is).value.data[0];
    Tensor& dA = t.node(ia).grad;
    double acc = 0.0;
    for (std::size_t i = 0; i < G.data.size(); ++i) {
      dA.data[i] += sv * G.data[i];
      acc += G.data[i] * Av.data[i];
    }
    t.node(is).grad.data[0] += acc;
  });
}

Var Tape::sigmoid(Var a) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  // d/dx sigm(x) = y (1 - y), reuse the stored output
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Y = t.node(self).value;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i)
      dA.data[i] += G.data[i] * Y.data[i] * (1.0 - Y.data[i]);
  });
}

Var Tape::tanh(Var a) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  for (double& x : out.data) x = std::tanh(x);
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Y = t.node(self).value;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i)
      dA.data[i] += G.data[i] * (1.0 - Y.data[i] * Y.data[i]);
  });
}

Var Tape::exp(Var a) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  for (double& x : out.data) x = std::exp(x);
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Y = t.node(self).value;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) dA.data[i] += G.data[i] * Y.data[i];
  });
}

Var Tape::log(Var a) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  for (double& x : out.data) {
    if (x <= 0.0)
      throw DomainError("log requires strictly positive input, got " + std::to_string(x));
    x = std::log(x);
  }
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& X = t.node(ia).value;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) dA.data[i] += G.data[i] / X.data[i];
  });
}

Var Tape::abs(Var a) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  for (double& x : out.data) x = std::fabs(x);
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& X = t.node(ia).value;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) {
      const double s = X.data[i] > 0.0 ? 1.0 : (X.data[i] < 0.0 ? -1.0 : 0.0);
      dA.data[i] += G.data[i] * s;
    }
  });
}

Var Tape::scale(Var a, double c) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  for (double& x : out.data) x *= c;
  return push(std::move(out), [ia, c](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) dA.data[i] += c * G.data[i];
  });
}

Var Tape::softmax(Var a) {
  const int ia = check(a);
  const Tensor& X = node(ia).value;
  Tensor out = X;
  double mx = out.data[0];
  for (double x : out.data) mx = x > mx ? x : mx;  // max-subtraction for overflow safety
  double denom = 0.0;
  for (double& x : out.data) {
    x = std::exp(x - mx);
    denom += x;
  }
  for (double& x : out.data) x /= denom;
  // dx_i = y_i (g_i - sum_j g_j y_j)
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    const Tensor& Y = t.node(self).value;
    Tensor& dA = t.node(ia).grad;
    double dot = 0.0;
    for (std::size_t i = 0; i < G.data.size(); ++i) dot += G.data[i] * Y.data[i];
    for (std::size_t i = 0; i < G.data.size(); ++i)
      dA.data[i] += Y.data[i] * (G.data[i] - dot);
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows needs at least one part");
  std::vector<int> ids;
  ids.reserve(parts.size());
  std::size_t total_rows = 0;
  const std::size_t cols = node(check(parts[0])).value.cols();
  const std::size_t rank = node(parts[0].id).value.rank();
  for (Var p : parts) {
    const int id = check(p);
    const Tensor& v = node(id).value;
    if (v.cols() != cols || v.rank() != rank)
      throw DimensionError("concat_rows column mismatch: " + node(ids.empty() ? id : ids[0]).value.shape_str() +
                           " vs " + v.shape_str());
    ids.push_back(id);
    total_rows += v.rows();
  }
  Tensor out = rank == 1 ? Tensor::zeros({total_rows}) : Tensor::zeros({total_rows, cols});
  std::size_t off = 0;
  for (int id : ids) {
    const Tensor& v = node(id).value;
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += v.data.size();
  }
  return push(std::move(out), [ids](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    std::size_t off = 0;
    for (int id : ids) {
      Tensor& d = t.node(id).grad;
      for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += G.data[off + i];
      off += d.data.size();
    }
  });
}

Var Tape::slice_rows(Var a, std::size_t r0, std::size_t r1) {
  const int ia = check(a);
  const Tensor& X = node(ia).value;
  if (r0 >= r1 || r1 > X.rows())
    throw DimensionError("slice_rows [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") out of range for " + X.shape_str());
  const std::size_t cols = X.cols();
  Tensor out = X.rank() == 1 ? Tensor::zeros({r1 - r0}) : Tensor::zeros({r1 - r0, cols});
  std::copy(X.data.begin() + static_cast<std::ptrdiff_t>(r0 * cols),
            X.data.begin() + static_cast<std::ptrdiff_t>(r1 * cols), out.data.begin());
  return push(std::move(out), [ia, r0, cols](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) dA.data[r0 * cols + i] += G.data[i];
  });
}

Var Tape::sum(Var a) {
  const int ia = check(a);
  const Tensor& X = node(ia).value;
  double s = 0.0;
  for (double x : X.data) s += x;
  return push(Tensor::scalar(s), [ia](Tape& t, int self) {
    const double g = t.node(self).grad.data[0];
    Tensor& dA = t.node(ia).grad;
    for (double& d : dA.data) d += g;
  });
}

Var Tape::flip_grad(Var a) {
  const int ia = check(a);
  Tensor out = node(ia).value;
  return push(std::move(out), [ia](Tape& t, int self) {
    const Tensor& G = t.node(self).grad;
    Tensor& dA = t.node(ia).grad;
    for (std::size_t i = 0; i < G.data.size(); ++i) dA.data[i] -= G.data[i];
  });
}

void Tape::backward(Var root) {
  const int ir = check(root);
  if (!node(ir).value.is_scalar())
    throw ContractError("backward requires a scalar root, got " + node(ir).value.shape_str());
  // Fresh node adjoints each call; Parameter.grad accumulates across calls.
  for (Node& n : nodes_) n.grad = Tensor::zeros_like(n.value);
  node(ir).grad.data[0] = 1.0;
  for (int id = ir; id >= 0; --id) {
    Node& n = node(id);
    if (n.back) n.back(*this, id);
  }
  for (Node& n : nodes_)
    if (n.bound) n.bound->grad.add_in_place(n.grad);
}

}  // namespace vtp
