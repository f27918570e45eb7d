#include <functional>
#include <limits>
#include <vector>

#include "doctest.h"
#include "mdug/autograd.hpp"
#include "mdug/optim.hpp"
#include "support.hpp"

using namespace mdug;

namespace {

using Builder = std::function<Var(Graph&, std::vector<Var>&)>;

// Projects an n x m result to a scalar with fixed random weights: u^T gelu(v) w.
Var scalarize(Graph& g, Var v, std::uint64_t seed) {
  const auto& val = g.value(v);
  Var u = g.constant(testing::random_matrix(1, val.rows(), seed));
  Var w = g.constant(testing::random_matrix(val.cols(), 1, seed + 1));
  return g.matmul(g.matmul(u, g.gelu(v)), w);
}

// Checks d loss / d p for every parameter p in `ps`.
double max_op_error(ParamSet& ps, const Builder& build) {
  auto run = [&](bool backward) {
    Graph g;
    std::vector<Var> in;
    for (auto& p : ps.all()) in.push_back(g.param(p));
    Var loss = build(g, in);
    if (backward) g.backward(loss);
    return g.scalar(loss);
  };
  ps.zero_grad();
  run(true);
  double worst = 0.0;
  for (auto& p : ps.all()) {
    const Matrix analytic = p.grad;
    worst = std::max(worst, testing::check_entries(p.value, analytic, [&] { return run(false); }).max_error);
  }
  return worst;
}

Parameter& add_random(ParamSet& ps, const char* name, int r, int c, std::uint64_t seed, double scale = 1.0) {
  Parameter& p = ps.add(name, r, c);
  p.value = testing::random_matrix(r, c, seed, scale);
  return p;
}

}  // namespace

TEST_SUITE("autograd") {
  TEST_CASE("matmul family") {
    ParamSet ps;
    add_random(ps, "a", 3, 4, 1);
    add_random(ps, "b", 4, 5, 2);
    add_random(ps, "c", 5, 4, 3);
    CHECK(max_op_error(ps, [](Graph& g, std::vector<Var>& v) {
            return scalarize(g, g.add(g.matmul(v[0], v[1]), g.matmul_nt(v[0], v[2])), 10);
          }) < 1e-4);
  }

  TEST_CASE("elementwise, broadcast and scaling") {
    ParamSet ps;
    add_random(ps, "a", 3, 4, 4);
    add_random(ps, "b", 3, 4, 5);
    add_random(ps, "row", 1, 4, 6);
    const Matrix c = testing::random_matrix(3, 4, 7);
    CHECK(max_op_error(ps, [&](Graph& g, std::vector<Var>& v) {
            Var x = g.add_row(g.add(v[0], g.scale(v[1], -1.7)), v[2]);
            return scalarize(g, g.add_constant(x, c), 11);
          }) < 1e-4);
  }

  TEST_CASE("softmax with a masked entry") {
    ParamSet ps;
    add_random(ps, "a", 3, 3, 8);
    Matrix mask(3, 3);
    mask(0, 2) = -std::numeric_limits<double>::infinity();
    CHECK(max_op_error(ps, [&](Graph& g, std::vector<Var>& v) {
            return scalarize(g, g.softmax(g.add_constant(v[0], mask)), 12);
          }) < 1e-4);
    Graph g;
    Var s = g.softmax(g.add_constant(g.constant(ps.at("a").value), mask));
    CHECK(g.value(s)(0, 2) == 0.0);
  }

  TEST_CASE("layer norm, gelu") {
    ParamSet ps;
    add_random(ps, "x", 4, 6, 9);
    add_random(ps, "gain", 1, 6, 10);
    add_random(ps, "bias", 1, 6, 11);
    CHECK(max_op_error(ps, [](Graph& g, std::vector<Var>& v) {
            return scalarize(g, g.gelu(g.layer_norm(v[0], v[1], v[2])), 13);
          }) < 1e-4);
  }

  TEST_CASE("slicing, concatenation and gathering") {
    ParamSet ps;
    add_random(ps, "x", 4, 6, 14);
    CHECK(max_op_error(ps, [](Graph& g, std::vector<Var>& v) {
            const Var parts[] = {g.slice_cols(v[0], 3, 6), g.slice_cols(v[0], 0, 2)};
            const int rows[] = {3, 0, 3};
            return scalarize(g, g.gather_rows(g.concat_cols(parts), rows), 15);
          }) < 1e-4);
  }

  TEST_CASE("losses") {
    ParamSet ps;
    add_random(ps, "z", 5, 1, 16);
    add_random(ps, "logits", 3, 7, 17);
    const std::vector<int> gold{1, 0, 0, 1, 0};
    const std::vector<int> targets{6, 0, 3};
    CHECK(max_op_error(ps, [&](Graph& g, std::vector<Var>& v) {
            const Var parts[] = {g.bce_with_logits(v[0], gold, 3.5), g.cross_entropy(v[1], targets)};
            const double w[] = {0.7, 1.3};
            return g.weighted_sum(parts, w);
          }) < 1e-4);
  }

  TEST_CASE("embedding lookup scatters into the table") {
    ParamSet ps;
    Parameter& table = add_random(ps, "table", 6, 4, 18);
    const std::vector<int> ids{2, 5, 2, 0};
    auto run = [&](bool backward) {
      Graph g;
      Var loss = scalarize(g, g.embed(table, ids), 19);
      if (backward) g.backward(loss);
      return g.scalar(loss);
    };
    ps.zero_grad();
    run(true);
    const Matrix analytic = table.grad;
    CHECK(testing::check_entries(table.value, analytic, [&] { return run(false); }).max_error < 1e-4);
    // Rows never looked up get no gradient.
    for (double v : table.grad.row(1)) CHECK(v == 0.0);
  }

  TEST_CASE("dropout is the identity outside training") {
    Graph g(false);
    Var x = g.constant(testing::random_matrix(3, 3, 20));
    CHECK(g.dropout(x, 0.5).id == x.id);
  }

  TEST_CASE("gradients accumulate across graphs") {
    ParamSet ps;
    Parameter& p = add_random(ps, "p", 2, 2, 21);
    ps.zero_grad();
    for (int k = 0; k < 2; ++k) {
      Graph g;
      g.backward(scalarize(g, g.param(p), 22));
    }
    const Matrix twice = p.grad;
    ps.zero_grad();
    Graph g;
    g.backward(scalarize(g, g.param(p), 22));
    for (std::size_t i = 0; i < twice.size(); ++i) CHECK(twice.data()[i] == doctest::Approx(2.0 * p.grad.data()[i]));
  }
}

TEST_SUITE("optim") {
  TEST_CASE("linear schedule warms up then decays to zero") {
    LinearSchedule s{1e-3, 100, 0.1};
    CHECK(s.at(0) < s.at(5));
    CHECK(s.at(10) == doctest::Approx(1e-3));
    CHECK(s.at(55) < s.at(10));
    CHECK(s.at(100) == doctest::Approx(0.0));
  }

  TEST_CASE("clip_grad_norm rescales to the bound") {
    ParamSet ps;
    Parameter& p = ps.add("p", 1, 2);
    p.grad(0, 0) = 3.0;
    p.grad(0, 1) = 4.0;
    CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0));
    CHECK(p.grad(0, 0) == doctest::Approx(0.6));
    CHECK(p.grad(0, 1) == doctest::Approx(0.8));
  }

  TEST_CASE("AdamW minimises a quadratic and clears gradients") {
    ParamSet ps;
    Parameter& p = ps.add("p", 1, 1);
    p.value(0, 0) = 5.0;
    AdamW opt(ps, {.weight_decay = 0.0});
    for (int i = 0; i < 2000; ++i) {
      p.grad(0, 0) = 2.0 * (p.value(0, 0) - 1.0);
      opt.step(1e-2);
      CHECK(p.grad(0, 0) == 0.0);
    }
    CHECK(p.value(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  }
}
