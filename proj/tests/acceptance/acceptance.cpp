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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//   acceptance [--workdir DIR] [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mmcl/data/synth.hpp"
#include "mmcl/io/manifest.hpp"
#include "mmcl/train/gradient_suite.hpp"
#include "mmcl/train/run.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mmcl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

oracle::Rows random_rows(RandomStream& r, std::size_t n, std::size_t d) {
  oracle::Rows rows(n, std::vector<double>(d));
  for (auto& row : rows)
    for (double& v : row) v = r.normal();
  return rows;
}

Tensor to_tensor(const oracle::Rows& rows) {
  Tensor t(Shape{rows.size(), rows[0].size()});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), t.data() + i * t.dim(1));
  return t;
}

ModelConfig model_for(const Dataset& d) {
  ModelConfig mc;
  mc.backbone.class_count = d.class_count;
  return mc;
}

// 1 ------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto results = run_gradient_suite(20, 2024);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_case;
  for (const auto& r : results) {
    if (!(r.max_rel_error <= worst)) worst = r.max_rel_error, worst_case = r.name;
  }
  return {worst < 1e-4 && secs < 60.0,
          fmt("%zu cases x 20 instances, max rel error %.3g (%s), %.1f s", results.size(), worst, worst_case.c_str(),
              secs)};
}

// 2 ------------------------------------------------------------------------

Outcome contrastive_oracle() {
  RandomStream r(77, "acceptance/contrastive");
  const ContrastiveConfig cfg;
  double worst = 0.0;
  for (int b = 0; b < 50; ++b) {
    const std::size_t n = 1 + r.below(4), d = 1 + r.below(8);
    const auto g = random_rows(r, n, d), c = random_rows(r, n, d);
    const double got = contrastive_loss_value(to_tensor(g), to_tensor(c), cfg);
    worst = std::max(worst, std::abs(got - oracle::contrastive(g, c, cfg.temperature)));
  }
  const Tensor same = Tensor::matrix(2, 3, {0.3, -1.2, 2.0, 0.3, -1.2, 2.0});
  const double ln3 = contrastive_loss_value(same, same, cfg);
  return {worst <= 1e-10 && std::abs(ln3 - std::log(3.0)) <= 1e-9,
          fmt("50 batches max |diff| %.3g; identical N=2 gives %.12f", worst, ln3)};
}

// 3 ------------------------------------------------------------------------

Outcome frm_identity() {
  SynthSpec spec;
  spec.seed = 3;
  const SynthData d = synth_dataset(spec);
  const MmclModel model(model_for(d.train), *d.train.topology);
  const PreparedData prepared = prepare_data(d.train, model.config(), true, true);
  TrainerConfig tc;
  tc.frm_trainable = false;
  tc.seed = 3;
  Trainer trainer(model, tc, model.init(3));
  std::size_t batches = 0, identical = 0;
  trainer.set_score_hook([&](const Tensor& s_m, const Tensor* s_r) {
    ++batches;
    if (s_r && s_r->shape() == s_m.shape() && std::memcmp(s_r->data(), s_m.data(), s_m.numel() * sizeof(double)) == 0)
      ++identical;
  });
  trainer.train_epoch(prepared, 0);
  return {batches > 0 && identical == batches,
          fmt("%zu of %zu batches bitwise identical over one epoch of %zu samples", identical, batches,
              prepared.samples.size())};
}

// 4 ------------------------------------------------------------------------

Outcome refine_oracle() {
  RandomStream r(78, "acceptance/refine");
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + r.below(4), C = 1 + r.below(6);
    const bool residual = k % 2 == 0;
    std::vector<double> f(n), s(C);
    for (double& v : f) v = r.normal();
    for (double& v : s) v = r.normal();
    std::vector<oracle::Rows> m(n, oracle::Rows(C, std::vector<double>(C)));
    RefinementParams params = RefinementParams::zeros(n, C, residual);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < C; ++a)
        for (std::size_t b = 0; b < C; ++b) params.matrices.at(i, a, b) = m[i][a][b] = r.normal();
    const auto got = refine_scores(TextFeatureVector{f, "x"}, params, s);
    const auto want = oracle::refine(f, m, s, residual);
    for (std::size_t c = 0; c < C; ++c) worst = std::max(worst, std::abs(got[c] - want[c]));
  }
  return {worst <= 1e-12, fmt("100 instances max |diff| %.3g", worst)};
}

// 5 ------------------------------------------------------------------------

Outcome overfit() {
  SynthSpec spec;
  spec.class_count = 3;
  spec.train_per_class = 20;
  spec.test_per_class = 1;
  spec.noise = 0.0;
  spec.seed = 5;
  const SynthData d = synth_dataset(spec);
  const MmclModel model(model_for(d.train), *d.train.topology);
  const PreparedData prepared = prepare_data(d.train, model.config(), false, false);
  TrainerConfig tc;
  tc.loss = {0.0, 0.0};
  tc.schedule.epochs = 200;
  tc.schedule.decay_epochs = {150, 183};
  tc.seed = 5;
  Trainer trainer(model, tc, model.init(5));
  const auto skeletons = d.train.skeletons();
  const auto t0 = Clock::now();
  double acc = 0.0;
  std::size_t epoch = 0;
  while (epoch < tc.schedule.epochs && acc < 0.95) {
    trainer.train_epoch(prepared, epoch++);
    acc = evaluate_topk(model, trainer.params(), skeletons, d.train.labels(), {1}).at(1);
  }
  const double secs = seconds_since(t0);
  return {acc >= 0.95 && secs < 300.0,
          fmt("%zu samples, train top-1 %.3f after %zu epochs, %.1f s", d.train.size(), acc, epoch, secs)};
}

// 6 ------------------------------------------------------------------------

double co_learning_run(std::uint64_t seed, LossWeights w) {
  SynthSpec spec;
  spec.seed = seed;
  const SynthData d = synth_dataset(spec);
  const MmclModel model(model_for(d.train), *d.train.topology);
  const PreparedData prepared = prepare_data(d.train, model.config(), w.lambda1 > 0, w.lambda2 > 0);
  TrainerConfig tc;
  tc.loss = w;
  tc.seed = seed;
  Trainer trainer(model, tc, model.init(seed));
  for (std::size_t e = 0; e < tc.schedule.epochs; ++e) trainer.train_epoch(prepared, e);
  const auto skeletons = d.test.skeletons();
  return evaluate_topk(model, trainer.params(), skeletons, d.test.labels(), {1}).at(1);
}

Outcome co_learning() {
  const auto t0 = Clock::now();
  std::string per_seed;
  double sum_base = 0.0, sum_full = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double base = co_learning_run(seed, {0.0, 0.0});
    const double full = co_learning_run(seed, {0.1, 0.2});
    sum_base += base;
    sum_full += full;
    per_seed += fmt(" seed%llu %.2f->%.2f", static_cast<unsigned long long>(seed), 100 * base, 100 * full);
    std::fprintf(stderr, "  co-learning seed %llu: baseline %.4f, co-learning %.4f\n",
                 static_cast<unsigned long long>(seed), base, full);
  }
  const double gain = (sum_full - sum_base) / 5.0 * 100.0;
  return {gain >= 1.0, fmt("mean top-1 %.2f%% -> %.2f%% (gain %+.2f pp);%s; %.0f s", sum_base / 5 * 100,
                           sum_full / 5 * 100, gain, per_seed.c_str(), seconds_since(t0))};
}

// 7 ------------------------------------------------------------------------

Outcome sampling() {
  const bool a = uniform_sample_indices(10, 5) == std::vector<std::size_t>{1, 3, 5, 7, 9};
  const bool b = uniform_sample_indices(3, 5) == std::vector<std::size_t>{0, 0, 1, 2, 2};
  std::size_t shapes = 0, good = 0;
  for (std::size_t m : {1, 2, 5, 8})
    for (std::size_t h : {3, 16})
      for (std::size_t w : {1, 4, 7, 64}) {
        std::vector<FloatImage> crops(m, FloatImage(h, w));
        const TemporalCompositeImage img = concat_temporal(crops);
        ++shapes;
        good += img.image.width == m * w && img.image.height == h && img.m == m ? 1 : 0;
      }
  return {a && b && good == shapes,
          fmt("(10,5) %s, (3,5) %s, composite width m*w on %zu/%zu shapes", a ? "ok" : "wrong", b ? "ok" : "wrong",
              good, shapes)};
}

// 8 ------------------------------------------------------------------------

Outcome transfer() {
  SynthSpec spec;
  spec.seed = 8;
  spec.train_per_class = 4;
  const SynthData d = synth_dataset(spec);
  const MmclModel model(model_for(d.train), *d.train.topology);
  TrainerConfig tc;
  tc.schedule.epochs = 2;
  tc.schedule.decay_epochs = {};
  tc.seed = 8;
  Trainer trainer(model, tc, model.init(8));
  const PreparedData prepared = prepare_data(d.train, model.config(), true, true);
  for (std::size_t e = 0; e < 2; ++e) trainer.train_epoch(prepared, e);

  const auto skeletons = d.test.skeletons();
  const auto labels = d.test.labels();
  const std::vector<std::size_t> ks = {1, 2};
  const AccuracyMap direct = evaluate_topk(model, trainer.params(), skeletons, labels, ks);
  const JointMapping identity = JointMapping::identity(d.test.topology->joint_count());
  const AccuracyMap moved = zero_shot_transfer(model, trainer.params(), skeletons, labels, identity, d.test.topology,
                                               std::nullopt, ks);
  std::vector<TextFeatureVector> text;
  for (const Sample& s : d.test.samples) text.push_back(*s.text);
  const TransferRefinement zero{RefinementParams::zeros(model.config().text_dim, model.class_count(), true), text};
  const AccuracyMap refined =
      zero_shot_transfer(model, trainer.params(), skeletons, labels, identity, d.test.topology, zero, ks);
  const Tensor scores = predict_scores(model, trainer.params(), skeletons);
  const bool rows_equal = refine_score_rows(scores, text, zero.params) == scores;
  return {direct == moved && moved == refined && rows_equal,
          fmt("top-1 direct %.4f, identity transfer %.4f, zero-refined %.4f, refined rows %s", direct.at(1),
              moved.at(1), refined.at(1), rows_equal ? "bitwise equal" : "differ")};
}

// 9 ------------------------------------------------------------------------

StreamResult stream_of(Tensor scores, double weight) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < scores.dim(0); ++i) ids.push_back("s" + std::to_string(i));
  return {Modality::kJoint, std::move(ids), std::move(scores), weight};
}

Outcome ensemble() {
  RandomStream r(79, "acceptance/ensemble");
  auto random_softmax = [&](std::size_t n, std::size_t c) {
    Tensor t(Shape{n, c});
    for (double& v : t.values()) v = 3.0 * r.normal();
    return softmax_rows(t);
  };
  const Tensor one = random_softmax(40, 6);
  const std::vector<StreamResult> single = {stream_of(one, 1.0)};
  const bool identity = ensemble_scores(single) == one;

  std::vector<StreamResult> four;
  for (Modality m : kAllModalities) {
    four.push_back(stream_of(random_softmax(40, 6), r.uniform(0.1, 2.0)));
    four.back().kind = m;
  }
  const auto base = argmax_rows(ensemble_scores(four));
  bool invariant = true;
  for (double k : {1e-3, 0.5, 7.0, 1e4}) {
    auto scaled = four;
    for (auto& s : scaled) s.weight *= k;
    invariant = invariant && argmax_rows(ensemble_scores(scaled)) == base;
  }

  const std::vector<StreamResult> two = {stream_of(Tensor::matrix(1, 2, {0.6, 0.4}), 1.0),
                                         stream_of(Tensor::matrix(1, 2, {0.2, 0.8}), 1.0)};
  const bool example = argmax_rows(ensemble_scores(two)) == std::vector<std::size_t>{1};
  return {identity && invariant && example,
          fmt("single-stream identity %s, argmax under weight scaling %s, (0.6,0.4)+(0.2,0.8) -> class %zu",
              identity ? "exact" : "broken", invariant ? "invariant" : "changed",
              argmax_rows(ensemble_scores(two))[0])};
}

// 10 -----------------------------------------------------------------------

std::vector<std::uint8_t> bytes_of(const fs::path& p) { return io::read_file(p); }

Outcome determinism(const fs::path& work) {
  fs::remove_all(work / "determinism");
  SynthSpec spec;
  spec.seed = 10;
  spec.train_per_class = 6;
  spec.test_per_class = 4;
  const SynthData d = synth_dataset(spec);
  const fs::path data = work / "determinism" / "data";
  RunConfig cfg;
  cfg.train_manifest = io::write_dataset(d.train, data, "train").string();
  cfg.test_manifest = io::write_dataset(d.test, data, "test").string();
  cfg.trainer.schedule.epochs = 3;
  cfg.trainer.schedule.warmup_epochs = 1;
  cfg.trainer.schedule.decay_epochs = {2};
  cfg.trainer.seed = 10;
  cfg.topk = {1, 2};

  // Same config means the same output directory, so the first run is moved
  // aside before the second one writes.
  cfg.output_dir = (work / "determinism" / "run").string();
  const fs::path first = work / "determinism" / "first";
  const TrainSummary a = run_training(cfg);
  fs::rename(cfg.output_dir, first);
  const TrainSummary b = run_training(cfg);

  const bool metrics = bytes_of(first / a.metrics_path.filename()) == bytes_of(b.metrics_path);
  std::size_t files = 0, same = 0;
  for (const auto& e : fs::directory_iterator(first / "checkpoint")) {
    ++files;
    const fs::path other = b.checkpoint_dir / e.path().filename();
    if (fs::exists(other) && bytes_of(e.path()) == bytes_of(other)) ++same;
  }
  std::size_t other_files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b.checkpoint_dir)) ++other_files;
  return {metrics && files > 0 && same == files && other_files == files,
          fmt("metrics files %s; %zu/%zu checkpoint files identical", metrics ? "identical" : "differ", same, files)};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "mmcl_acceptance";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--workdir DIR] [--only N]\n");
      return 1;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"contrastive oracle", contrastive_oracle},
      {"refinement identity", frm_identity},
      {"refinement oracle", refine_oracle},
      {"overfit", overfit},
      {"co-learning gain", co_learning},
      {"sampling and composites", sampling},
      {"transfer invariance", transfer},
      {"ensemble properties", ensemble},
      {"determinism", [&] { return determinism(work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%2zu] %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
