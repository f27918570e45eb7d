#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "mdug/autograd.hpp"
#include "mdug/corpus.hpp"

namespace testing {

inline mdug::Matrix random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  mdug::Matrix m(rows, cols);
  for (double& v : m.flat()) v = n(rng);
  return m;
}

// Error of an analytic derivative against a numeric one. Relative when either side has
// magnitude above 1e-2, absolute (scaled by 1e-2) below that.
inline double grad_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1e-2, std::abs(analytic), std::abs(numeric)});
}

struct GradCheck {
  double max_error = 0.0;
  int checked = 0;
};

// Central differences with step h over up to `max_entries` entries of `target` (evenly spaced).
// `loss` must recompute the scalar from the current contents of `target`.
inline GradCheck check_entries(mdug::Matrix& target, const mdug::Matrix& analytic, const std::function<double()>& loss,
                               double h = 1e-3, int max_entries = 40) {
  GradCheck r;
  const std::size_t n = target.size();
  const std::size_t stride = std::max<std::size_t>(1, n / static_cast<std::size_t>(max_entries));
  for (std::size_t i = 0; i < n; i += stride) {
    const double saved = target.data()[i];
    target.data()[i] = saved + h;
    const double up = loss();
    target.data()[i] = saved - h;
    const double down = loss();
    target.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    r.max_error = std::max(r.max_error, grad_error(analytic.data()[i], numeric));
    ++r.checked;
  }
  return r;
}

inline mdug::GenConfig small_corpus_config(int n_train = 20, int n_dev = 8, int n_test = 8) {
  mdug::GenConfig c;
  c.n_train = n_train;
  c.n_dev = n_dev;
  c.n_test = n_test;
  return c;
}

}  // namespace testing
