#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "mdug/kernels.hpp"
#include "support.hpp"

using namespace mdug;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.same_shape(b));
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

struct Shape {
  int m, k, n;
};

// Small shapes stay serial inside the parallel kernels; the large ones cross the threshold.
const Shape kShapes[] = {{1, 1, 1}, {3, 5, 2}, {17, 9, 23}, {64, 48, 80}, {130, 70, 65}};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels agree with the serial reference at every thread count") {
    for (int threads : {1, 2, 4}) {
      kernels::set_num_threads(threads);
      CAPTURE(threads);
      for (const auto& s : kShapes) {
        CAPTURE(s.m);
        const Matrix a = testing::random_matrix(s.m, s.k, 1);
        const Matrix b = testing::random_matrix(s.k, s.n, 2);
        const Matrix bt = testing::random_matrix(s.n, s.k, 3);
        const Matrix at = testing::random_matrix(s.k, s.m, 4);
        Matrix p, q;
        kernels::matmul(a, b, p);
        kernels::serial::matmul(a, b, q);
        CHECK(max_abs_diff(p, q) <= 1e-12);
        kernels::matmul_nt(a, bt, p);
        kernels::serial::matmul_nt(a, bt, q);
        CHECK(max_abs_diff(p, q) <= 1e-12);
        kernels::matmul_tn(at, b, p);
        kernels::serial::matmul_tn(at, b, q);
        CHECK(max_abs_diff(p, q) <= 1e-12);

        // Accumulating form adds onto existing contents.
        Matrix acc_p = testing::random_matrix(s.m, s.n, 5), acc_q = acc_p;
        kernels::matmul(a, b, acc_p, true);
        kernels::serial::matmul(a, b, acc_q, true);
        CHECK(max_abs_diff(acc_p, acc_q) <= 1e-12);

        kernels::softmax_rows(a, p);
        kernels::serial::softmax_rows(a, q);
        CHECK(max_abs_diff(p, q) <= 1e-12);
        kernels::gelu(a, p);
        kernels::serial::gelu(a, q);
        CHECK(max_abs_diff(p, q) <= 1e-12);
        kernels::gelu_grad(a, p);
        kernels::serial::gelu_grad(a, q);
        CHECK(max_abs_diff(p, q) <= 1e-12);

        const Matrix gain = testing::random_matrix(1, s.k, 6), bias = testing::random_matrix(1, s.k, 7);
        std::vector<double> mp, rp, mq, rq;
        kernels::layer_norm_rows(a, gain, bias, 1e-5, p, mp, rp);
        kernels::serial::layer_norm_rows(a, gain, bias, 1e-5, q, mq, rq);
        CHECK(max_abs_diff(p, q) <= 1e-12);
      }
    }
    kernels::set_num_threads(0);
  }

  TEST_CASE("results do not depend on the thread count") {
    const Matrix a = testing::random_matrix(150, 90, 8), b = testing::random_matrix(90, 70, 9);
    kernels::set_num_threads(1);
    Matrix one;
    kernels::matmul(a, b, one);
    kernels::set_num_threads(3);
    Matrix three;
    kernels::matmul(a, b, three);
    kernels::set_num_threads(0);
    CHECK(max_abs_diff(one, three) == 0.0);
  }

  TEST_CASE("matmul matches a hand product") {
    Matrix a(2, 2), b(2, 2), c;
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    b(0, 0) = 5; b(0, 1) = 6; b(1, 0) = 7; b(1, 1) = 8;
    kernels::matmul(a, b, c);
    CHECK(c(0, 0) == 19);
    CHECK(c(0, 1) == 22);
    CHECK(c(1, 0) == 43);
    CHECK(c(1, 1) == 50);
    CHECK_THROWS_AS(kernels::matmul(a, Matrix(3, 2), c), std::invalid_argument);
  }

  TEST_CASE("softmax zeroes masked entries and handles fully masked rows") {
    const double inf = std::numeric_limits<double>::infinity();
    Matrix x(2, 3), y;
    x(0, 1) = -inf;
    x(1, 0) = x(1, 1) = x(1, 2) = -inf;
    kernels::softmax_rows(x, y);
    CHECK(y(0, 0) == doctest::Approx(0.5));
    CHECK(y(0, 1) == 0.0);
    CHECK(y(1, 0) == 0.0);
    CHECK(y(1, 2) == 0.0);
  }
}
