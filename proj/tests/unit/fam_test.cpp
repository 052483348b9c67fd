// Copyright 2026 The MMCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "mmcl/autodiff/gradcheck.hpp"
#include "mmcl/fam/fam.hpp"
#include "oracles.hpp"

namespace mmcl {
namespace {

Tensor to_tensor(const oracle::Rows& rows) {
  Tensor t(Shape{rows.size(), rows[0].size()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) t.at(i, j) = rows[i][j];
  return t;
}

oracle::Rows random_rows(RandomStream& r, std::size_t n, std::size_t d) {
  oracle::Rows rows(n, std::vector<double>(d));
  for (auto& row : rows)
    for (double& v : row) v = r.normal();
  return rows;
}

TEST(Contrastive, SinglePairIsZero) {
  const Tensor a = Tensor::matrix(1, 3, {1, 2, 3}), b = Tensor::matrix(1, 3, {-1, 0, 2});
  EXPECT_EQ(contrastive_loss_value(a, b, {0.1}), 0.0);
}

TEST(Contrastive, IdenticalUnitVectorsGiveLn3) {
  const Tensor u = Tensor::matrix(2, 2, {1, 0, 1, 0});
  for (double tau : {0.05, 0.1, 1.0, 7.0}) EXPECT_NEAR(contrastive_loss_value(u, u, {tau}), std::log(3.0), 1e-12);
}

TEST(Contrastive, OrthogonalNegatives) {
  const Tensor u = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const double expected = std::log1p(2.0 * std::exp(-10.0));
  EXPECT_NEAR(contrastive_loss_value(u, u, {0.1}), expected, 1e-14);
  EXPECT_NEAR(expected, 9.08e-5, 1e-7);
}

TEST(Contrastive, MatchesScalarOracle) {
  RandomStream r(5, "fam_oracle");
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + r.below(4), d = 1 + r.below(8);
    const double tau = r.uniform(0.05, 2.0);
    const auto g = random_rows(r, n, d), c = random_rows(r, n, d);
    EXPECT_NEAR(contrastive_loss_value(to_tensor(g), to_tensor(c), {tau}), oracle::contrastive(g, c, tau), 1e-10);
  }
}

TEST(Contrastive, ScaleInvariantInputs) {
  RandomStream r(6, "scale");
  const auto g = random_rows(r, 3, 4), c = random_rows(r, 3, 4);
  Tensor g2 = to_tensor(g);
  for (double& v : g2.values()) v *= 17.0;
  EXPECT_NEAR(contrastive_loss_value(to_tensor(g), to_tensor(c), {0.1}),
              contrastive_loss_value(g2, to_tensor(c), {0.1}), 1e-10);
}

TEST(Contrastive, PairedBatchPermutationInvariance) {
  RandomStream r(8, "perm");
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + r.below(6);
    const auto g = random_rows(r, n, 5), c = random_rows(r, n, 5);
    const auto order = r.permutation(n);
    oracle::Rows gp, cp;
    for (std::size_t i : order) gp.push_back(g[i]), cp.push_back(c[i]);
    EXPECT_NEAR(contrastive_loss_value(to_tensor(g), to_tensor(c), {0.1}),
                contrastive_loss_value(to_tensor(gp), to_tensor(cp), {0.1}), 1e-10);
  }
}

TEST(Contrastive, RescalingOneEmbeddingChangesNothing) {
  RandomStream r(9, "rescale");
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + r.below(5);
    auto g = random_rows(r, n, 4);
    const auto c = random_rows(r, n, 4);
    const double before = contrastive_loss_value(to_tensor(g), to_tensor(c), {0.1});
    const double k = std::exp(r.uniform(-5.0, 5.0));
    for (double& v : g[r.below(n)]) v *= k;
    EXPECT_NEAR(contrastive_loss_value(to_tensor(g), to_tensor(c), {0.1}), before, 1e-8);
  }
}

TEST(Contrastive, PositiveForEveryBatchAboveOne) {
  RandomStream r(10, "sign");
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + r.below(6);
    EXPECT_GT(contrastive_loss_value(to_tensor(random_rows(r, n, 3)), to_tensor(random_rows(r, n, 3)),
                                     {r.uniform(0.05, 1.0)}),
              0.0);
  }
}

TEST(Contrastive, GradientDescentLowersLoss) {
  RandomStream r(11, "descent");
  Tensor g = to_tensor(random_rows(r, 6, 4)), c = to_tensor(random_rows(r, 6, 4));
  const double initial = contrastive_loss_value(g, c, {0.1});
  double last = initial;
  for (int step = 0; step < 50; ++step) {
    ad::Tape tape;
    const ad::Var vg = tape.leaf(g), vc = tape.leaf(c);
    const ad::Var loss = contrastive_loss(vg, vc, {0.1});
    last = loss.value().item();
    tape.backward(loss);
    const Tensor dg = vg.grad(), dc = vc.grad();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= 0.05 * dg[i], c[i] -= 0.05 * dc[i];
  }
  EXPECT_LT(contrastive_loss_value(g, c, {0.1}), initial);
  EXPECT_LT(last, initial);
}

TEST(Contrastive, Gradcheck) {
  RandomStream r(7, "gc");
  std::vector<Tensor> in = {to_tensor(random_rows(r, 3, 4)), to_tensor(random_rows(r, 3, 4))};
  const auto res = ad::gradcheck(
      [](ad::Tape&, std::span<const ad::Var> v) { return contrastive_loss(v[0], v[1], {0.1}); }, in);
  EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(Contrastive, ShapeAndTemperatureErrors) {
  EXPECT_THROW(contrastive_loss_value(Tensor(Shape{2, 3}, 1.0), Tensor(Shape{3, 3}, 1.0), {0.1}), DataError);
  EXPECT_THROW(contrastive_loss_value(Tensor(Shape{2, 3}, 1.0), Tensor(Shape{2, 3}, 1.0), {0.0}), ConfigError);
}

TEST(Contrastive, ZeroEmbeddingStaysFinite) {
  const Tensor z(Shape{2, 3});
  EXPECT_TRUE(std::isfinite(contrastive_loss_value(z, Tensor(Shape{2, 3}, 1.0), {0.1})));
}

TEST(Aligner, ZeroInputZeroBias) {
  const FeatureAligner al({4, 3, 5});
  ParameterSet p;
  al.init(p, 1);
  ad::Tape t;
  const BoundParameters bp(t, p);
  EXPECT_EQ(al.forward(bp, t.constant(Tensor(Shape{2, 4}))).value(), Tensor(Shape{2, 3}));
}

TEST(Aligner, IdentityLayersPassPositiveInput) {
  const FeatureAligner al({3, 3, 3});
  ParameterSet p;
  al.init(p, 1);
  p.set("align.w1", Tensor::identity(3));
  p.set("align.w2", Tensor::identity(3));
  ad::Tape t;
  const BoundParameters bp(t, p);
  const Tensor x = Tensor::matrix(1, 3, {0.5, 2.0, 1.0});
  EXPECT_EQ(al.forward(bp, t.constant(x)).value(), x);
  EXPECT_THROW(al.forward(bp, t.constant(Tensor(Shape{1, 4}))), ConfigError);
}

}  // namespace
}  // namespace mmcl
