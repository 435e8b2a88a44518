/* Copyright 2026 The ragaxai Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include <random>

#include <numeric>

#include "ragaxai/nd/gradcheck.hpp"
#include "ragaxai/nd/nd.hpp"

namespace ragaxai::nd {
namespace {

using T = Tensor<double>;

T random_tensor(Shape shape, uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  T t(std::move(shape));
  for (double& v : t.values()) v = n(rng);
  return t;
}

std::vector<double> as_vector(const T& t) { return {t.values().begin(), t.values().end()}; }

// Weighted sum with fixed random weights so every output element matters.
Var<double> probe(Graph<double>& g, Var<double> y, uint64_t seed = 99) {
  return sum(mul(y, g.constant(random_tensor(y.shape(), seed))));
}

TEST(Graph, IdentityAndLinearity) {
  T x({1}, {3.0});
  Graph<double> g;
  Var<double> v = g.leaf(x);
  g.backward(v);
  EXPECT_DOUBLE_EQ(v.grad()[0], 1.0);

  Graph<double> g2;
  Var<double> in = g2.leaf(random_tensor({1, 4, 3, 2}, 1));
  Var<double> k = g2.leaf(T({1, 1, 2, 1}, {0.5, -2.0}));
  Var<double> b = g2.leaf(T({1}, {0.0}));
  g2.backward(sum(conv2d(in, k, b)));
  for (std::size_t i = 0; i < in.grad().size(); ++i) {
    EXPECT_DOUBLE_EQ(in.grad()[i], i % 2 == 0 ? 0.5 : -2.0);
  }
}

TEST(Conv2d, ClosedForms) {
  Graph<double> g(GradMode::kNoGrad);
  T x = random_tensor({1, 3, 4, 2}, 2);
  T eye({1, 1, 2, 2}, {1, 0, 0, 1});
  EXPECT_EQ(conv2d(g.leaf(x), g.leaf(eye), g.leaf(T({2}))).value(), x);

  T ones({1, 3, 3, 1}, 1.0);
  T k({3, 3, 1, 1}, 1.0);
  const T out = conv2d(g.leaf(ones), g.leaf(k), g.leaf(T({1}))).value();
  EXPECT_DOUBLE_EQ(out[4], 9.0);
  for (std::size_t corner : {0u, 2u, 6u, 8u}) EXPECT_DOUBLE_EQ(out[corner], 4.0);

  const T biased = conv2d(g.leaf(x), g.leaf(T({3, 3, 2, 4})), g.leaf(T({4}, 0.7))).value();
  for (double v : biased.values()) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(MaxPool, WindowsAndTies) {
  Graph<double> g;
  Var<double> x = g.leaf(T({1, 1, 4, 1}, {1, 5, 2, 4}));
  Var<double> y = maxpool_freq(x, 2);
  EXPECT_EQ(as_vector(y.value()), (std::vector<double>{5, 4}));
  EXPECT_EQ(maxpool_freq(x, 1).value(), x.value());

  Graph<double> g2;
  Var<double> c = g2.leaf(T({1, 2, 4, 1}, 3.0));
  Var<double> p = maxpool_freq(c, 2);
  for (double v : p.value().values()) EXPECT_DOUBLE_EQ(v, 3.0);
  g2.backward(sum(p));
  EXPECT_EQ(as_vector(c.grad()), (std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0}));

  Graph<double> g3;
  EXPECT_EQ(as_vector(maxpool_freq(g3.leaf(T({1, 1, 5, 1}, {1, 2, 3, 4, 9})), 2).value()),
            (std::vector<double>{2, 4, 9}));
}

TEST(BatchNorm, Examples) {
  Graph<double> g;
  T one({1}, 1.0), zero({1}, 0.0);
  Var<double> y = batchnorm_train(g.leaf(T({2, 1}, {1.0, 3.0})), g.leaf(one), g.leaf(zero));
  EXPECT_NEAR(y.value()[0], -1.0, 1e-4);
  EXPECT_NEAR(y.value()[1], 1.0, 1e-4);

  T x({4, 1}, {-1.0, 1.0, -1.0, 1.0});
  Var<double> same = batchnorm_train(g.leaf(x), g.leaf(one), g.leaf(zero));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(same.value()[i], x[i], 1e-3);

  Var<double> c = batchnorm_train(g.leaf(random_tensor({5, 3}, 4)), g.leaf(T({3}, 0.0)), g.leaf(T({3}, 2.5)));
  for (double v : c.value().values()) EXPECT_DOUBLE_EQ(v, 2.5);

  T rm({1}, 0.0), rv({1}, 1.0);
  batchnorm_train(g.leaf(T({2, 1}, {1.0, 3.0})), g.leaf(one), g.leaf(zero), &rm, &rv);
  EXPECT_NEAR(rm[0], 0.2, 1e-12);
  EXPECT_THROW(batchnorm_train(g.leaf(T({1, 1}, 1.0)), g.leaf(one), g.leaf(zero)), Error);
  Var<double> inf = batchnorm_infer(g.leaf(T({1, 1}, {3.0})), g.leaf(one), g.leaf(zero), T({1}, 2.0), T({1}, 4.0));
  EXPECT_NEAR(inf.value()[0], 0.5, 1e-5);
}

TEST(Lstm, ZeroParametersGiveZeroOutput) {
  Graph<double> g;
  const int H = 3;
  auto out = lstm_sequence(g.leaf(random_tensor({2, 5, 4}, 3)), g.leaf(T({4, 4 * H})), g.leaf(T({H, 4 * H})),
                           g.leaf(T({4 * H})));
  for (double v : out.outputs.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleStepByHand) {
  // D = H = 1, gates (i, f, g, o).
  Graph<double> g;
  const double x = 0.5;
  T wx({1, 4}, {0.1, 0.2, 0.3, 0.4});
  T bias({4}, {0.05, -0.05, 0.1, 0.0});
  auto out = lstm_sequence(g.leaf(T({1, 1, 1}, {x})), g.leaf(wx), g.leaf(T({1, 4}, 0.7)), g.leaf(bias));
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double i = sig(0.1 * x + 0.05), gg = std::tanh(0.3 * x + 0.1), o = sig(0.4 * x);
  const double c = i * gg;
  EXPECT_NEAR(out.outputs.value()[0], o * std::tanh(c), 1e-12);
  EXPECT_NEAR(out.final_cell[0], c, 1e-12);
}

TEST(Lstm, ConstantInputReachesFixedPoint) {
  Graph<double> g;
  const int H = 2;
  auto out = lstm_sequence(g.leaf(T({1, 60, 3})), g.leaf(T({3, 4 * H})), g.leaf(random_tensor({H, 4 * H}, 8, 0.2)),
                           g.leaf(random_tensor({4 * H}, 9, 0.5)));
  const T& y = out.outputs.value();
  for (int j = 0; j < H; ++j) EXPECT_NEAR(y[59 * H + j], y[58 * H + j], 1e-9);
}

TEST(Softmax, Examples) {
  const std::vector<double> uniform(12, 0.3);
  for (double p : softmax<double>(uniform)) EXPECT_NEAR(p, 1.0 / 12, 1e-15);
  const std::vector<double> z{std::log(1.0), std::log(3.0)};
  const auto p = softmax<double>(z);
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
  const auto shifted = softmax<double>(std::vector<double>{z[0] + 100, z[1] + 100});
  EXPECT_NEAR(shifted[0], p[0], 1e-14);
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> l(12);
    for (double& v : l) v = n(rng);
    const auto q = softmax<double>(l);
    EXPECT_NEAR(std::accumulate(q.begin(), q.end(), 0.0), 1.0, 1e-6);
  }
}

TEST(CrossEntropy, Examples) {
  std::vector<double> t(12, 0.0);
  t[3] = 1.0;
  std::vector<double> certain(12, 0.0);
  certain[3] = 1.0;
  EXPECT_NEAR(cce_loss<double>(certain, t), 0.0, 1e-11);
  const std::vector<double> uniform(12, 1.0 / 12);
  EXPECT_NEAR(cce_loss<double>(uniform, t), std::log(12.0), 1e-6);
  t[4] = 1.0;
  EXPECT_THROW(cce_loss<double>(uniform, t), Error);

  Graph<double> g;
  Var<double> z = g.leaf(T({1, 2}, 0.0));
  const std::vector<int> label{0};
  Var<double> loss = softmax_cross_entropy(z, std::span<const int>(label));
  EXPECT_NEAR(loss.value()[0], std::log(2.0), 1e-12);
  g.backward(loss);
  EXPECT_NEAR(z.grad()[0], -0.5, 1e-12);
  EXPECT_NEAR(z.grad()[1], 0.5, 1e-12);
}

TEST(GradCheck, SumOfSquaresAndConstant) {
  const auto r = finite_diff_check<double>([](Graph<double>&, Var<double> x) { return sum(mul(x, x)); },
                                           T({2}, {1.0, 2.0}));
  EXPECT_NEAR(r.analytic[0], 2.0, 1e-12);
  EXPECT_NEAR(r.analytic[1], 4.0, 1e-12);
  EXPECT_LE(r.max_rel_error(), 1e-4);
  const auto c = finite_diff_check<double>(
      [](Graph<double>& g, Var<double>) { return g.constant(T({1}, {4.0})); }, T({3}, 1.0));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(c.analytic[i], 0.0);
    EXPECT_EQ(c.numeric[i], 0.0);
  }
}

// Each layer is checked with respect to its input and every parameter.
class LayerGradients : public ::testing::Test {
 protected:
  static void expect_ok(const GradCheckReport& r, double tol = 1e-3) {
    EXPECT_LE(r.max_rel_error(), tol);
  }
};

TEST_F(LayerGradients, Conv2d) {
  const T x = random_tensor({2, 5, 4, 3}, 1), k = random_tensor({3, 3, 3, 2}, 2), b = random_tensor({2}, 3);
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) { return probe(g, conv2d(v, g.constant(k), g.constant(b))); }, x));
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) { return probe(g, conv2d(g.constant(x), v, g.constant(b))); }, k));
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) { return probe(g, conv2d(g.constant(x), g.constant(k), v)); }, b));
}

TEST_F(LayerGradients, PoolReluReshapeSlice) {
  const T x = random_tensor({2, 3, 5, 2}, 4);
  expect_ok(finite_diff_check<double>([](Graph<double>& g, Var<double> v) { return probe(g, maxpool_freq(v, 2)); }, x));
  expect_ok(finite_diff_check<double>([](Graph<double>& g, Var<double> v) { return probe(g, relu(v)); }, x));
  expect_ok(finite_diff_check<double>(
      [](Graph<double>& g, Var<double> v) { return probe(g, slice_time(reshape(v, {2, 3, 10}), 1, 3)); }, x));
  expect_ok(finite_diff_check<double>(
      [](Graph<double>& g, Var<double> v) { return mean(add(scale(v, 2.0), mul(v, v))); }, x));
}

TEST_F(LayerGradients, BatchNorm) {
  const T x = random_tensor({3, 4, 2}, 5), gm = random_tensor({2}, 6), bt = random_tensor({2}, 7);
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) {
        return probe(g, batchnorm_train(v, g.constant(gm), g.constant(bt)));
      },
      x));
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) {
        return probe(g, batchnorm_train(g.constant(x), v, g.constant(bt)));
      },
      gm));
  const T rm = random_tensor({2}, 8), rv({2}, {0.5, 2.0});
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) {
        return probe(g, batchnorm_infer(v, g.constant(gm), g.constant(bt), rm, rv));
      },
      x));
}

TEST_F(LayerGradients, DenseAndHeads) {
  const T x = random_tensor({3, 5}, 9), w = random_tensor({5, 4}, 10), b = random_tensor({4}, 11);
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) { return probe(g, dense(v, g.constant(w), g.constant(b))); }, x));
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) { return probe(g, dense(g.constant(x), v, g.constant(b))); }, w));
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) { return probe(g, dense(g.constant(x), g.constant(w), v)); }, b));
  const std::vector<int> labels{1, 3, 0};
  expect_ok(finite_diff_check<double>(
      [&](Graph<double>&, Var<double> v) { return softmax_cross_entropy(v, std::span<const int>(labels)); },
      random_tensor({3, 4}, 12, 2.0)));
  expect_ok(finite_diff_check<double>([](Graph<double>&, Var<double> v) { return pick(v, 2); },
                                      random_tensor({2, 4}, 13)));
  expect_ok(finite_diff_check<double>([](Graph<double>& g, Var<double> v) { return probe(g, last_timestep(v)); },
                                      random_tensor({2, 3, 4}, 14)));
}

GradCheckReport lstm_check(int steps, int which, uint64_t seed) {
  const int D = 3, H = 4;
  T x = random_tensor({2, steps, D}, seed), wx = random_tensor({D, 4 * H}, seed + 1, 0.4),
    wh = random_tensor({H, 4 * H}, seed + 2, 0.4), b = random_tensor({4 * H}, seed + 3, 0.2);
  std::array<T*, 4> inputs{&x, &wx, &wh, &b};
  return finite_diff_check<double>(
      [&](Graph<double>& g, Var<double> v) {
        std::array<Var<double>, 4> vars;
        for (int k = 0; k < 4; ++k) vars[static_cast<std::size_t>(k)] = k == which ? v : g.constant(*inputs[static_cast<std::size_t>(k)]);
        return probe(g, lstm_sequence(vars[0], vars[1], vars[2], vars[3]).outputs);
      },
      *inputs[static_cast<std::size_t>(which)]);
}

TEST_F(LayerGradients, LstmShort) {
  for (int which = 0; which < 4; ++which) expect_ok(lstm_check(6, which, 20), 1e-3);
}

TEST_F(LayerGradients, LstmHundredSteps) {
  for (int which = 0; which < 4; ++which) expect_ok(lstm_check(100, which, 30), 1e-2);
}

TEST(GradCheck, ParameterEntries) {
  Parameter<double> w("w", random_tensor({3, 2}, 40));
  Parameter<double> b("b", random_tensor({2}, 41));
  const T x = random_tensor({4, 3}, 42);
  const std::vector<int> labels{0, 1, 1, 0};
  auto f = [&](Graph<double>& g) {
    return softmax_cross_entropy(dense(g.constant(x), g.param(w), g.param(b)), std::span<const int>(labels));
  };
  const auto r = finite_diff_check_params<double>(f, {&w, &b}, {{0, 0}, {0, 5}, {1, 1}});
  EXPECT_LE(r.max_rel_error(), 1e-6);
}

TEST(Determinism, RepeatedBackwardIsBitIdentical) {
  const T x = random_tensor({2, 6, 4, 1}, 50), k = random_tensor({3, 3, 1, 2}, 51);
  auto run = [&] {
    Graph<double> g;
    Var<double> v = g.leaf(x);
    g.backward(probe(g, relu(conv2d(v, g.constant(k), g.constant(T({2}))))));
    return v.grad();
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> p("p", T({2}, {1.0, -1.0}));
  p.grad = T({2}, {0.5, -3.0});
  Adam<double> opt(0.1);
  opt.step({&p});
  EXPECT_NEAR(p.value[0], 0.9, 1e-6);
  EXPECT_NEAR(p.value[1], -0.9, 1e-6);
  Parameter<double> frozen("f", T({1}, {2.0}), false);
  frozen.grad = T({1}, {1.0});
  opt = Adam<double>(0.1);
  opt.step({&frozen});
  EXPECT_EQ(frozen.value[0], 2.0);
}

}  // namespace
}  // namespace ragaxai::nd
