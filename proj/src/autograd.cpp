#include "mdug/autograd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mdug/kernels.hpp"

namespace mdug {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void add_into(Matrix& dst, const Matrix& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Graph::push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::constant(Matrix m) { return push(std::move(m), false); }

Var Graph::param(Parameter& p) {
  Var v = push(p.value, true);
  node(v).param = &p;
  return v;
}

Var Graph::embed(Parameter& table, std::span<const int> rows) {
  const int d = table.value.cols();
  Matrix out(static_cast<int>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < table.value.rows(), "embed: row index out of range");
    auto src = table.value.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)).begin());
  }
  Var v = push(std::move(out), true);
  std::vector<int> idx(rows.begin(), rows.end());
  node(v).back = [this, v, idx = std::move(idx), &table] {
    const Matrix& g = nodes_[v.id].grad;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = table.grad.row(idx[i]);
      auto src = g.row(static_cast<int>(i));
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  };
  return v;
}

Var Graph::matmul(Var a, Var b) {
  Matrix out;
  kernels::matmul(value(a), value(b), out);
  Var v = push(std::move(out), needs(a) || needs(b));
  node(v).back = [this, a, b, v] {
    const Matrix& g = nodes_[v.id].grad;
    if (needs(a)) kernels::matmul_nt(g, value(b), grad_buffer(a), true);
    if (needs(b)) kernels::matmul_tn(value(a), g, grad_buffer(b), true);
  };
  return v;
}

Var Graph::matmul_nt(Var a, Var b) {
  Matrix out;
  kernels::matmul_nt(value(a), value(b), out);
  Var v = push(std::move(out), needs(a) || needs(b));
  node(v).back = [this, a, b, v] {
    const Matrix& g = nodes_[v.id].grad;
    if (needs(a)) kernels::matmul(g, value(b), grad_buffer(a), true);
    if (needs(b)) kernels::matmul_tn(g, value(a), grad_buffer(b), true);
  };
  return v;
}

Var Graph::add(Var a, Var b) {
  require(value(a).same_shape(value(b)), "add: shape mismatch");
  Matrix out = value(a);
  add_into(out, value(b));
  Var v = push(std::move(out), needs(a) || needs(b));
  node(v).back = [this, a, b, v] {
    const Matrix& g = nodes_[v.id].grad;
    if (needs(a)) add_into(grad_buffer(a), g);
    if (needs(b)) add_into(grad_buffer(b), g);
  };
  return v;
}

Var Graph::add_row(Var a, Var row) {
  require(value(row).rows() == 1 && value(row).cols() == value(a).cols(), "add_row: bias must be 1 x cols");
  Matrix out = value(a);
  const auto r = value(row).row(0);
  for (int i = 0; i < out.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += r[j];
  }
  Var v = push(std::move(out), needs(a) || needs(row));
  node(v).back = [this, a, row, v] {
    const Matrix& g = nodes_[v.id].grad;
    if (needs(a)) add_into(grad_buffer(a), g);
    if (needs(row)) {
      auto dst = grad_buffer(row).row(0);
      for (int i = 0; i < g.rows(); ++i) {
        auto src = g.row(i);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
      }
    }
  };
  return v;
}

Var Graph::scale(Var a, double s) {
  Matrix out = value(a);
  for (double& x : out.flat()) x *= s;
  Var v = push(std::move(out), needs(a));
  node(v).back = [this, a, v, s] {
    const Matrix& g = nodes_[v.id].grad;
    Matrix& ga = grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += s * g.data()[i];
  };
  return v;
}

Var Graph::add_constant(Var a, const Matrix& c) {
  require(value(a).same_shape(c), "add_constant: shape mismatch");
  Matrix out = value(a);
  add_into(out, c);
  Var v = push(std::move(out), needs(a));
  node(v).back = [this, a, v] { add_into(grad_buffer(a), nodes_[v.id].grad); };
  return v;
}

Var Graph::softmax(Var a) {
  Matrix out;
  kernels::softmax_rows(value(a), out);
  Var v = push(std::move(out), needs(a));
  node(v).back = [this, a, v] {
    const Matrix& y = nodes_[v.id].value;
    const Matrix& g = nodes_[v.id].grad;
    Matrix& ga = grad_buffer(a);
    for (int i = 0; i < y.rows(); ++i) {
      auto yr = y.row(i);
      auto gr = g.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
      auto dst = ga.row(i);
      for (std::size_t j = 0; j < yr.size(); ++j) dst[j] += yr[j] * (gr[j] - dot);
    }
  };
  return v;
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  Matrix out;
  std::vector<double> mean, rstd;
  kernels::layer_norm_rows(value(x), value(gain), value(bias), eps, out, mean, rstd);
  Var v = push(std::move(out), needs(x) || needs(gain) || needs(bias));
  node(v).back = [this, x, gain, bias, v, mean = std::move(mean), rstd = std::move(rstd)] {
    const Matrix& xv = value(x);
    const Matrix& g = nodes_[v.id].grad;
    const auto gw = value(gain).row(0);
    const int n = xv.cols();
    for (int i = 0; i < xv.rows(); ++i) {
      auto xr = xv.row(i);
      auto gr = g.row(i);
      if (needs(gain) || needs(bias)) {
        auto dg = grad_buffer(gain).row(0);
        auto db = grad_buffer(bias).row(0);
        for (int j = 0; j < n; ++j) {
          dg[j] += gr[j] * (xr[j] - mean[i]) * rstd[i];
          db[j] += gr[j];
        }
      }
      if (needs(x)) {
        // dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double dxhat = gr[j] * gw[j];
          const double xhat = (xr[j] - mean[i]) * rstd[i];
          m1 += dxhat;
          m2 += dxhat * xhat;
        }
        m1 /= n;
        m2 /= n;
        auto dx = grad_buffer(x).row(i);
        for (int j = 0; j < n; ++j) {
          const double xhat = (xr[j] - mean[i]) * rstd[i];
          dx[j] += rstd[i] * (gr[j] * gw[j] - m1 - xhat * m2);
        }
      }
    }
  };
  return v;
}

Var Graph::gelu(Var x) {
  Matrix out;
  kernels::gelu(value(x), out);
  Var v = push(std::move(out), needs(x));
  node(v).back = [this, x, v] {
    Matrix d;
    kernels::gelu_grad(value(x), d);
    const Matrix& g = nodes_[v.id].grad;
    Matrix& gx = grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i] * d.data()[i];
  };
  return v;
}

Var Graph::dropout(Var x, double rate) {
  if (!training_ || rate <= 0.0) return x;
  require(rng_ != nullptr, "dropout in training mode needs an rng");
  require(rate < 1.0, "dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  Matrix mask(value(x).rows(), value(x).cols());
  for (double& m : mask.flat()) m = keep(*rng_) ? s : 0.0;
  Matrix out = value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
  Var v = push(std::move(out), needs(x));
  node(v).back = [this, x, v, mask = std::move(mask)] {
    const Matrix& g = nodes_[v.id].grad;
    Matrix& gx = grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i] * mask.data()[i];
  };
  return v;
}

Var Graph::slice_cols(Var x, int begin, int end) {
  const Matrix& xv = value(x);
  require(0 <= begin && begin < end && end <= xv.cols(), "slice_cols: bad range");
  Matrix out(xv.rows(), end - begin);
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = begin; j < end; ++j) out(i, j - begin) = xv(i, j);
  Var v = push(std::move(out), needs(x));
  node(v).back = [this, x, v, begin, end] {
    const Matrix& g = nodes_[v.id].grad;
    Matrix& gx = grad_buffer(x);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = begin; j < end; ++j) gx(i, j) += g(i, j - begin);
  };
  return v;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: nothing to concatenate");
  const int rows = value(parts[0]).rows();
  int cols = 0;
  bool ng = false;
  for (Var p : parts) {
    require(value(p).rows() == rows, "concat_cols: row mismatch");
    cols += value(p).cols();
    ng = ng || needs(p);
  }
  Matrix out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    off += pv.cols();
  }
  Var v = push(std::move(out), ng);
  std::vector<Var> ps(parts.begin(), parts.end());
  node(v).back = [this, v, ps = std::move(ps)] {
    const Matrix& g = nodes_[v.id].grad;
    int o = 0;
    for (Var p : ps) {
      const int w = value(p).cols();
      if (needs(p)) {
        Matrix& gp = grad_buffer(p);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < w; ++j) gp(i, j) += g(i, o + j);
      }
      o += w;
    }
  };
  return v;
}

Var Graph::gather_rows(Var x, std::span<const int> rows) {
  const Matrix& xv = value(x);
  Matrix out(static_cast<int>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < xv.rows(), "gather_rows: index out of range");
    auto src = xv.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)).begin());
  }
  Var v = push(std::move(out), needs(x));
  std::vector<int> idx(rows.begin(), rows.end());
  node(v).back = [this, x, v, idx = std::move(idx)] {
    const Matrix& g = nodes_[v.id].grad;
    Matrix& gx = grad_buffer(x);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = gx.row(idx[i]);
      auto src = g.row(static_cast<int>(i));
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  };
  return v;
}

Var Graph::weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
  require(scalars.size() == weights.size() && !scalars.empty(), "weighted_sum: size mismatch");
  double s = 0.0;
  bool ng = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(value(scalars[i]).size() == 1, "weighted_sum: operands must be 1 x 1");
    s += weights[i] * scalar(scalars[i]);
    ng = ng || needs(scalars[i]);
  }
  Var v = push(Matrix(1, 1, s), ng);
  std::vector<Var> vs(scalars.begin(), scalars.end());
  std::vector<double> ws(weights.begin(), weights.end());
  node(v).back = [this, v, vs = std::move(vs), ws = std::move(ws)] {
    const double g = nodes_[v.id].grad(0, 0);
    for (std::size_t i = 0; i < vs.size(); ++i)
      if (needs(vs[i])) grad_buffer(vs[i])(0, 0) += ws[i] * g;
  };
  return v;
}

Var Graph::bce_with_logits(Var logits, std::span<const int> gold, double pos_weight) {
  const Matrix& z = value(logits);
  require(z.cols() == 1 && z.rows() == static_cast<int>(gold.size()), "bce_with_logits: expects n x 1 logits");
  require(!gold.empty(), "bce_with_logits: empty batch");
  const int n = z.rows();
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    require(gold[i] == 0 || gold[i] == 1, "bce_with_logits: labels must be 0/1");
    // -[w y log σ(z) + (1-y) log(1-σ(z))]
    loss += gold[i] == 1 ? pos_weight * softplus(-z(i, 0)) : softplus(z(i, 0));
  }
  loss /= n;
  Var v = push(Matrix(1, 1, loss), needs(logits));
  std::vector<int> y(gold.begin(), gold.end());
  node(v).back = [this, logits, v, y = std::move(y), pos_weight] {
    const double g = nodes_[v.id].grad(0, 0);
    const Matrix& zv = value(logits);
    Matrix& gz = grad_buffer(logits);
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = sigmoid(zv(static_cast<int>(i), 0));
      const double d = y[i] == 1 ? pos_weight * (p - 1.0) : p;
      gz(static_cast<int>(i), 0) += g * d / n;
    }
  };
  return v;
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets) {
  const Matrix& z = value(logits);
  require(z.rows() == static_cast<int>(targets.size()) && !targets.empty(), "cross_entropy: one target per row");
  Matrix probs;
  kernels::softmax_rows(z, probs);
  double loss = 0.0;
  for (int i = 0; i < z.rows(); ++i) {
    require(targets[i] >= 0 && targets[i] < z.cols(), "cross_entropy: target out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : z.row(i)) mx = std::max(mx, x);
    double s = 0.0;
    for (double x : z.row(i)) s += std::exp(x - mx);
    loss += mx + std::log(s) - z(i, targets[i]);
  }
  loss /= z.rows();
  Var v = push(Matrix(1, 1, loss), needs(logits));
  std::vector<int> t(targets.begin(), targets.end());
  node(v).back = [this, logits, v, t = std::move(t), probs = std::move(probs)] {
    const double g = nodes_[v.id].grad(0, 0) / static_cast<double>(t.size());
    Matrix& gz = grad_buffer(logits);
    for (int i = 0; i < probs.rows(); ++i) {
      auto dst = gz.row(i);
      auto p = probs.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += g * p[j];
      dst[t[i]] -= g;
    }
  };
  return v;
}

void Graph::backward(Var loss) {
  require(value(loss).size() == 1, "backward: loss must be a 1 x 1 scalar");
  for (auto& n : nodes_) n.grad = Matrix();
  grad_buffer(loss)(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.back) n.back();
    if (n.param != nullptr) add_into(n.param->grad, n.grad);
  }
}

}  // namespace mdug
