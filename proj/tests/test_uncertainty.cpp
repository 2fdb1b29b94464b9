#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/rng.hpp"
#include "core/uncertainty.hpp"

using namespace vtp;

namespace {

GaussianStep step_of(double mx, double my, std::array<double, 4> sigma) {
  GaussianStep g;
  g.mean = {mx, my};
  g.sigma = sigma;
  return g;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.hidden = 4;
  cfg.attention_width = 3;
  return cfg;
}

std::vector<Tensor> track(Rng& rng, std::size_t l = 5) {
  std::vector<Tensor> xs;
  for (std::size_t i = 0; i < l; ++i)
    xs.push_back(Tensor::column({rng.uniform() - 0.5, rng.uniform() - 0.5}));
  return xs;
}

// Brute-force oracle: the combination formula written the direct way,
// E[y y^T] - E[y] E[y]^T + mean aleatoric.
StepMoments oracle_step(const McBatch& batch, std::size_t t) {
  const double M = static_cast<double>(batch.samples.size());
  StepMoments s;
  double ex = 0, ey = 0;
  std::array<double, 4> eyy{0, 0, 0, 0}, ale{0, 0, 0, 0};
  for (const auto& sample : batch.samples) {
    const GaussianStep& g = sample[t];
    ex += g.mean[0];
    ey += g.mean[1];
    eyy[0] += g.mean[0] * g.mean[0];
    eyy[1] += g.mean[0] * g.mean[1];
    eyy[2] += g.mean[1] * g.mean[0];
    eyy[3] += g.mean[1] * g.mean[1];
    for (int k = 0; k < 4; ++k) ale[static_cast<std::size_t>(k)] += g.sigma[static_cast<std::size_t>(k)];
  }
  ex /= M;
  ey /= M;
  s.mean = {ex, ey};
  for (auto& v : eyy) v /= M;
  for (auto& v : ale) v /= M;
  s.epistemic_raw = {eyy[0] - ex * ex, eyy[1] - ex * ey, eyy[2] - ey * ex, eyy[3] - ey * ey};
  s.aleatoric = ale;
  for (std::size_t k = 0; k < 4; ++k) s.total_raw[k] = s.epistemic_raw[k] + ale[k];
  return s;
}

}  // namespace

TEST_CASE("single-sample batch: epistemic exactly zero, total equals the one aleatoric") {
  McBatch batch;
  batch.horizon = 2;
  batch.samples = {{step_of(0.4, -1.0, {2, 0.5, 0.5, 3}), step_of(1, 1, {1, 0, 0, 1})}};
  batch.seeds = {0};
  PredictionMoments pm = combine_moments(batch);
  for (const StepMoments& s : pm.steps) {
    CHECK(s.epistemic == std::array<double, 4>{0, 0, 0, 0});  // exact, not approximate
    CHECK(s.epistemic_raw == std::array<double, 4>{0, 0, 0, 0});
    CHECK(s.total == s.aleatoric);
  }
  CHECK(pm.steps[0].total == std::array<double, 4>{2, 0.5, 0.5, 3});
}

TEST_CASE("two samples with means (1,0) and (-1,0), zero aleatoric: spread [[1,0],[0,0]]") {
  McBatch batch;
  batch.horizon = 1;
  batch.samples = {{step_of(1, 0, {0, 0, 0, 0})}, {step_of(-1, 0, {0, 0, 0, 0})}};
  batch.seeds = {0, 1};
  PredictionMoments pm = combine_moments(batch);
  CHECK(pm.steps[0].mean == std::array<double, 2>{0, 0});
  CHECK(pm.steps[0].total[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pm.steps[0].total[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(pm.steps[0].total[3] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("three equal means with identity aleatoric: total is the identity") {
  McBatch batch;
  batch.horizon = 1;
  batch.samples = {{step_of(2, 3, {1, 0, 0, 1})},
                   {step_of(2, 3, {1, 0, 0, 1})},
                   {step_of(2, 3, {1, 0, 0, 1})}};
  batch.seeds = {0, 1, 2};
  PredictionMoments pm = combine_moments(batch);
  CHECK(pm.steps[0].total == std::array<double, 4>{1, 0, 0, 1});
}

TEST_CASE("combine_moments matches the brute-force oracle within 1e-12 for M up to 10") {
  Rng rng(404);
  for (std::size_t M : {1u, 2u, 3u, 10u}) {
    McBatch batch;
    batch.horizon = 3;
    for (std::size_t j = 0; j < M; ++j) {
      std::vector<GaussianStep> seq;
      for (std::size_t t = 0; t < 3; ++t) {
        const double b11 = std::exp(0.5 * rng.normal());
        const double b22 = std::exp(0.5 * rng.normal());
        const double b21 = rng.normal();
        seq.push_back(step_of(rng.normal(), rng.normal(),
                              {b11 * b11, b11 * b21, b11 * b21, b21 * b21 + b22 * b22}));
      }
      batch.samples.push_back(seq);
      batch.seeds.push_back(j);
    }
    PredictionMoments pm = combine_moments(batch);
    for (std::size_t t = 0; t < 3; ++t) {
      StepMoments want = oracle_step(batch, t);
      CAPTURE(M);
      CAPTURE(t);
      CHECK(pm.steps[t].mean[0] == doctest::Approx(want.mean[0]).epsilon(1e-12));
      CHECK(pm.steps[t].mean[1] == doctest::Approx(want.mean[1]).epsilon(1e-12));
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::fabs(pm.steps[t].epistemic_raw[k] - want.epistemic_raw[k]) < 1e-12);
        CHECK(std::fabs(pm.steps[t].total_raw[k] - want.total_raw[k]) < 1e-12);
      }
    }
  }
}

TEST_CASE("epistemic part is PSD for random batches") {
  Rng rng(505);
  for (int rep = 0; rep < 200; ++rep) {
    McBatch batch;
    batch.horizon = 1;
    const std::size_t M = 2 + rng.below(8);
    for (std::size_t j = 0; j < M; ++j) {
      batch.samples.push_back({step_of(rng.normal(), rng.normal(), {0, 0, 0, 0})});
      batch.seeds.push_back(j);
    }
    PredictionMoments pm = combine_moments(batch);
    // The closed-form 2x2 eigenvalue is tr/2 - sqrt(disc): for a PSD matrix
    // the two terms can cancel, so the recomputed minimum carries ~1e-16
    // rounding dust even after the clip. Assert down to that noise floor.
    CHECK(min_eigenvalue(pm.steps[0].epistemic) >= -1e-14);
    CHECK(min_eigenvalue(pm.steps[0].epistemic_raw) > -1e-12);
  }
}

TEST_CASE("generalized variance: hand values") {
  CHECK(generalized_variance({1, 0, 0, 1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(generalized_variance({4, 2, 2, 2}) == doctest::Approx(2.0).epsilon(1e-15));  // sqrt(8-4)
  CHECK(generalized_variance({3, 0, 0, 5}) == doctest::Approx(std::sqrt(15.0)).epsilon(1e-15));
}

TEST_CASE("mc_forward determinism and seed independence") {
  ModelConfig cfg = tiny_config();
  cfg.recurrent_dropout = 0.3;
  cfg.attention_dropout = 0.3;
  ModelParams params = ModelParams::create(cfg, 31);
  Rng rng(1);
  std::vector<Tensor> xs = track(rng);

  McBatch a = mc_forward(params, xs, nullptr, 3, 5, 777);
  McBatch b = mc_forward(params, xs, nullptr, 3, 5, 777);
  REQUIRE(a.samples.size() == 5);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(a.samples[j][t].mean == b.samples[j][t].mean);
      CHECK(a.samples[j][t].sigma == b.samples[j][t].sigma);
    }
  // Growing M preserves the prefix: per-sample streams derive from the index.
  McBatch c = mc_forward(params, xs, nullptr, 3, 8, 777);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t t = 0; t < 3; ++t) CHECK(a.samples[j][t].mean == c.samples[j][t].mean);
  // With dropout active, different passes genuinely differ.
  bool differ = false;
  for (std::size_t t = 0; t < 3 && !differ; ++t)
    differ = a.samples[0][t].mean != a.samples[1][t].mean;
  CHECK(differ);
}

TEST_CASE("all dropout rates zero: M passes identical and epistemic below 1e-12") {
  ModelConfig cfg = tiny_config();
  cfg.recurrent_dropout = 0.0;
  cfg.attention_dropout = 0.0;
  ModelParams params = ModelParams::create(cfg, 13);
  Rng rng(2);
  std::vector<Tensor> xs = track(rng);
  McBatch batch = mc_forward(params, xs, nullptr, 4, 20, 99);
  for (std::size_t j = 1; j < batch.samples.size(); ++j)
    for (std::size_t t = 0; t < 4; ++t) {
      CHECK(batch.samples[j][t].mean == batch.samples[0][t].mean);
      CHECK(batch.samples[j][t].sigma == batch.samples[0][t].sigma);
    }
  PredictionMoments pm = combine_moments(batch);
  for (const StepMoments& s : pm.steps) {
    // The M-sample mean of identical values rounds (20x is inexact), so the
    // centered deviations are ~1e-19 rather than bit-zero; only M=1 is exact.
    for (double v : s.epistemic) CHECK(std::fabs(v) < 1e-12);
    CHECK(generalized_variance(s.epistemic) < 1e-12);
  }
}

TEST_CASE("psd clip floors a tiny negative eigenvalue and keeps raw alongside") {
  McBatch batch;
  batch.horizon = 1;
  // Construct near-degenerate means so the raw epistemic would be rank 1.
  batch.samples = {{step_of(1.0, 1.0, {0, 0, 0, 0})}, {step_of(-1.0, -1.0, {0, 0, 0, 0})}};
  batch.seeds = {0, 1};
  PredictionMoments pm = combine_moments(batch);
  CHECK(min_eigenvalue(pm.steps[0].epistemic) >= 0.0);
  CHECK(pm.steps[0].epistemic[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pm.steps[0].epistemic[1] == doctest::Approx(1.0).epsilon(1e-12));
}
