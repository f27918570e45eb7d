#pragma once

// Dense numeric kernels behind the autograd ops.
//
// Two implementations share one interface: `kernels::` is the OpenMP version
// used by the models, `kernels::serial::` is a plain loop reference kept for
// tests and the benchmark. Parallel loops split over output rows only and every
// row is reduced in a fixed order, so results do not depend on thread count.

#include "mdug/matrix.hpp"

namespace mdug::kernels {

/// C = A * B (or C += A * B when accumulate). A: m x k, B: k x n.
void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
/// C = A * B^T. A: m x k, B: n x k.
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
/// C = A^T * B. A: k x m, B: k x n.
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

/// Row-wise softmax. Entries equal to -infinity map to exactly zero.
void softmax_rows(const Matrix& in, Matrix& out);

/// Row-wise layer normalisation; also returns per-row mean and 1/stddev for backward.
void layer_norm_rows(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                     Matrix& out, std::vector<double>& mean, std::vector<double>& rstd);

/// tanh-approximated GELU, elementwise.
void gelu(const Matrix& in, Matrix& out);
/// d gelu(x) / dx, elementwise.
void gelu_grad(const Matrix& in, Matrix& out);

/// Sets the OpenMP team size; n <= 0 restores the runtime default.
void set_num_threads(int n);
int max_threads();

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
void softmax_rows(const Matrix& in, Matrix& out);
void layer_norm_rows(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                     Matrix& out, std::vector<double>& mean, std::vector<double>& rstd);
void gelu(const Matrix& in, Matrix& out);
void gelu_grad(const Matrix& in, Matrix& out);

}  // namespace serial

}  // namespace mdug::kernels
