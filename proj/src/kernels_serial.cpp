#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdug/kernels.hpp"

namespace mdug::kernels::serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  if (!accumulate) c = Matrix(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) += s;
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimensions differ");
  if (!accumulate) c = Matrix(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) += s;
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: inner dimensions differ");
  if (!accumulate) c = Matrix(a.cols(), b.cols());
  for (int i = 0; i < a.cols(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      c(i, j) += s;
    }
}

void softmax_rows(const Matrix& in, Matrix& out) {
  out = Matrix(in.rows(), in.cols());
  for (int i = 0; i < in.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < in.cols(); ++j) mx = std::max(mx, in(i, j));
    if (std::isinf(mx) && mx < 0) continue;
    double z = 0.0;
    for (int j = 0; j < in.cols(); ++j) z += std::exp(in(i, j) - mx);
    for (int j = 0; j < in.cols(); ++j) out(i, j) = std::exp(in(i, j) - mx) / z;
  }
}

void layer_norm_rows(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                     Matrix& out, std::vector<double>& mean, std::vector<double>& rstd) {
  const int n = x.cols();
  out = Matrix(x.rows(), n);
  mean.assign(x.rows(), 0.0);
  rstd.assign(x.rows(), 0.0);
  for (int i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += x(i, j);
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= n;
    mean[i] = mu;
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) out(i, j) = (x(i, j) - mu) * rstd[i] * gain(0, j) + bias(0, j);
  }
}

void gelu(const Matrix& in, Matrix& out) {
  out = Matrix(in.rows(), in.cols());
  const double c = std::sqrt(2.0 / M_PI);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = in.data()[i];
    out.data()[i] = 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * std::pow(x, 3))));
  }
}

void gelu_grad(const Matrix& in, Matrix& out) {
  out = Matrix(in.rows(), in.cols());
  const double c = std::sqrt(2.0 / M_PI);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = in.data()[i];
    const double t = std::tanh(c * (x + 0.044715 * std::pow(x, 3)));
    out.data()[i] = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3 * 0.044715 * x * x);
  }
}

}  // namespace mdug::kernels::serial
