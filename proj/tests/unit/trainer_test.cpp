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
#include <cstring>
#include <limits>
#include <string>

#include "mmcl/data/synth.hpp"
#include "mmcl/train/trainer.hpp"

namespace mmcl {
namespace {

ModelConfig tiny_config(std::size_t classes) {
  ModelConfig mc;
  mc.backbone.channels = {6, 6};
  mc.backbone.temporal_kernel = 3;
  mc.backbone.class_count = classes;
  mc.extractor.channels = {4, 6};
  mc.composite_m = 3;
  mc.crop_height = 8;
  mc.crop_width = 8;
  mc.text_dim = 8;
  return mc;
}

SynthData tiny_data(std::size_t per_class) {
  SynthSpec spec;
  spec.class_count = 3;
  spec.train_per_class = per_class;
  spec.test_per_class = 1;
  spec.frames = 8;
  spec.image_size = 16;
  spec.text_dim = 8;
  spec.seed = 5;
  return synth_dataset(spec);
}

TrainerConfig quick(double lr, std::size_t batch) {
  TrainerConfig tc;
  tc.schedule.base_lr = lr;
  tc.schedule.epochs = 4;
  tc.schedule.batch_size = batch;
  tc.schedule.warmup_epochs = 0;
  tc.schedule.decay_epochs = {};
  tc.seed = 9;
  return tc;
}

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

class TrainerTest : public ::testing::Test {
 protected:
  TrainerTest()
      : data(tiny_data(4)),
        model(tiny_config(3), *data.train.topology),
        prepared(prepare_data(data.train, model.config(), true, true)) {}

  SynthData data;
  MmclModel model;
  PreparedData prepared;
};

TEST_F(TrainerTest, ZeroLearningRateLeavesEveryParameterUnchanged) {
  const ParameterSet init = model.init(3);
  Trainer t(model, quick(0.0, 5), init);
  for (std::size_t e = 0; e < 2; ++e) t.train_epoch(prepared, e);
  ASSERT_EQ(t.params().size(), init.size());
  std::size_t buffers = 0;
  for (const auto& [name, value] : init.items()) {
    if (is_buffer(name)) {
      ++buffers;
      EXPECT_FALSE(same_bits(value, t.params().at(name))) << name;
    } else {
      EXPECT_TRUE(same_bits(value, t.params().at(name))) << name;
    }
  }
  EXPECT_GT(buffers, 0u);
}

TEST_F(TrainerTest, SameSeedGivesIdenticalMetricsAndWeights) {
  Trainer a(model, quick(0.05, 5), model.init(3));
  Trainer b(model, quick(0.05, 5), model.init(3));
  for (std::size_t e = 0; e < 2; ++e) {
    const EpochMetrics ma = a.train_epoch(prepared, e);
    const EpochMetrics mb = b.train_epoch(prepared, e);
    ASSERT_EQ(ma.batches.size(), mb.batches.size());
    for (std::size_t i = 0; i < ma.batches.size(); ++i) {
      EXPECT_EQ(ma.batches[i].total, mb.batches[i].total);
      EXPECT_EQ(ma.batches[i].l_c, mb.batches[i].l_c);
      EXPECT_EQ(ma.batches[i].l_r, mb.batches[i].l_r);
    }
    EXPECT_EQ(ma.train_top1, mb.train_top1);
  }
  for (const auto& [name, value] : a.params().items()) EXPECT_TRUE(same_bits(value, b.params().at(name))) << name;
}

TEST_F(TrainerTest, BatchTotalCombinesTheThreeTerms) {
  Trainer t(model, quick(0.05, 5), model.init(3));
  const EpochMetrics m = t.train_epoch(prepared, 0);
  EXPECT_EQ(m.batches.size(), 3u);  // 12 samples in batches of 5
  for (const BatchRecord& r : m.batches) {
    ASSERT_TRUE(r.l_c && r.l_r);
    EXPECT_NEAR(r.total, r.l_cls + 0.1 * *r.l_c + 0.2 * *r.l_r, 1e-12);
  }
}

TEST_F(TrainerTest, DisabledTermsAreNotReported) {
  TrainerConfig tc = quick(0.05, 5);
  tc.loss = {0.0, 0.0};
  Trainer t(model, tc, model.init(3));
  const EpochMetrics m = t.train_epoch(prepare_data(data.train, model.config(), false, false), 0);
  EXPECT_FALSE(m.l_c.has_value());
  EXPECT_FALSE(m.l_r.has_value());
  EXPECT_EQ(m.total, m.l_cls);
}

TEST_F(TrainerTest, EnabledTermNeedsPreparedModality) {
  Trainer t(model, quick(0.05, 5), model.init(3));
  EXPECT_THROW(t.train_epoch(prepare_data(data.train, model.config(), false, true), 0), UsageError);
  EXPECT_THROW(t.train_epoch(prepare_data(data.train, model.config(), true, false), 0), UsageError);
}

TEST_F(TrainerTest, FrozenZeroRefinementReproducesSkeletonScores) {
  TrainerConfig tc = quick(0.05, 5);
  tc.frm_trainable = false;
  Trainer t(model, tc, model.init(3));
  std::size_t calls = 0, identical = 0;
  t.set_score_hook([&](const Tensor& s_m, const Tensor* s_r) {
    ++calls;
    if (s_r && same_bits(s_m, *s_r)) ++identical;
  });
  for (std::size_t e = 0; e < 2; ++e) t.train_epoch(prepared, e);
  EXPECT_EQ(calls, 6u);
  EXPECT_EQ(identical, calls);
}

TEST_F(TrainerTest, NonFiniteLossNamesTermAndBatch) {
  ParameterSet p = model.init(3);
  for (double& v : p.at("head.b").values()) v = std::numeric_limits<double>::quiet_NaN();
  Trainer t(model, quick(0.05, 5), p);
  try {
    t.train_epoch(prepared, 0);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0 batch 0"), std::string::npos) << msg;
  }
}

TEST(TrainerOverfit, SingleSampleLossFallsBelowOneHundredth) {
  SynthData d = tiny_data(1);
  d.train.samples.erase(d.train.samples.begin() + 1, d.train.samples.end());
  const MmclModel model(tiny_config(3), *d.train.topology);
  const PreparedData prepared = prepare_data(d.train, model.config(), true, true);
  TrainerConfig tc = quick(0.05, 1);
  tc.schedule.epochs = 300;
  Trainer t(model, tc, model.init(4));
  double l_cls = 1.0;
  std::size_t step = 0;
  for (; step < 300 && l_cls >= 0.01; ++step) l_cls = t.train_epoch(prepared, step).l_cls;
  EXPECT_LT(l_cls, 0.01) << "after " << step << " steps";
}

}  // namespace
}  // namespace mmcl
