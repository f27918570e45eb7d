#include "mdug/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <omp.h>

namespace mdug::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kParallelWork = 1L << 15;

void prepare(Matrix& c, int m, int n, bool accumulate) {
  if (accumulate) {
    if (c.rows() != m || c.cols() != n) throw std::invalid_argument("kernels: accumulate into wrong shape");
    return;
  }
  if (c.rows() != m || c.cols() != n) {
    c = Matrix(m, n);
  } else {
    c.fill(0.0);
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  prepare(c, m, n, accumulate);
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > kParallelWork)
  for (int i = 0; i < m; ++i) {
    double* crow = cp + static_cast<std::size_t>(i) * n;
    const double* arow = ap + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = bp + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimensions differ");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  prepare(c, m, n, accumulate);
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > kParallelWork)
  for (int i = 0; i < m; ++i) {
    const double* arow = ap + static_cast<std::size_t>(i) * k;
    double* crow = cp + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = bp + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: inner dimensions differ");
  const int k = a.rows(), m = a.cols(), n = b.cols();
  prepare(c, m, n, accumulate);
  const double* ap = a.data();
  const double* bp = b.data();
  double* cp = c.data();
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > kParallelWork)
  for (int i = 0; i < m; ++i) {
    double* crow = cp + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ap[static_cast<std::size_t>(p) * m + i];
      if (av == 0.0) continue;
      const double* brow = bp + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void softmax_rows(const Matrix& in, Matrix& out) {
  const int m = in.rows(), n = in.cols();
  if (!out.same_shape(in)) out = Matrix(m, n);
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n > kParallelWork)
  for (int i = 0; i < m; ++i) {
    auto src = in.row(i);
    auto dst = out.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : src) mx = std::max(mx, v);
    if (mx == -std::numeric_limits<double>::infinity()) {
      std::fill(dst.begin(), dst.end(), 0.0);
      continue;
    }
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      dst[j] = std::exp(src[j] - mx);
      z += dst[j];
    }
    const double inv = 1.0 / z;
    for (int j = 0; j < n; ++j) dst[j] *= inv;
  }
}

void layer_norm_rows(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                     Matrix& out, std::vector<double>& mean, std::vector<double>& rstd) {
  const int m = x.rows(), n = x.cols();
  if (gain.cols() != n || bias.cols() != n) throw std::invalid_argument("layer_norm: gain/bias width");
  if (!out.same_shape(x)) out = Matrix(m, n);
  mean.assign(m, 0.0);
  rstd.assign(m, 0.0);
  const double* g = gain.data();
  const double* b = bias.data();
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n > kParallelWork)
  for (int i = 0; i < m; ++i) {
    auto src = x.row(i);
    auto dst = out.row(i);
    double mu = 0.0;
    for (double v : src) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : src) var += (v - mu) * (v - mu);
    var /= n;
    const double r = 1.0 / std::sqrt(var + eps);
    mean[i] = mu;
    rstd[i] = r;
    for (int j = 0; j < n; ++j) dst[j] = (src[j] - mu) * r * g[j] + b[j];
  }
}

void gelu(const Matrix& in, Matrix& out) {
  if (!out.same_shape(in)) out = Matrix(in.rows(), in.cols());
  const long n = static_cast<long>(in.size());
  const double* src = in.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (long i = 0; i < n; ++i) {
    const double x = src[i];
    dst[i] = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  }
}

void gelu_grad(const Matrix& in, Matrix& out) {
  if (!out.same_shape(in)) out = Matrix(in.rows(), in.cols());
  const long n = static_cast<long>(in.size());
  const double* src = in.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (long i = 0; i < n; ++i) {
    const double x = src[i];
    const double u = kGeluC * (x + kGeluA * x * x * x);
    const double t = std::tanh(u);
    const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    dst[i] = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
  }
}

void set_num_threads(int n) {
  if (n > 0) {
    omp_set_num_threads(n);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace mdug::kernels
