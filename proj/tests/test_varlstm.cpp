#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/model_config.hpp"
#include "core/rng.hpp"
#include "core/varlstm.hpp"

using namespace vtp;

namespace {

// Small helper: weights with explicit contents for hand-worked cases.
struct CellFixture {
  Parameter W;
  Parameter b;
  CellFixture(std::size_t p, std::size_t d, double wfill = 0.0)
      : W("W", Tensor::filled({4 * p, d + p}, wfill)), b("b", Tensor::zeros({4 * p, 1})) {}
  LstmWeightsVar lease(Tape& t, std::size_t p) { return {t.param(W), t.param(b), p}; }
};

Var ones_mask(Tape& t, std::size_t p) { return t.input(Tensor::filled({p, 1}, 1.0)); }

}  // namespace

TEST_CASE("zero weights and biases are a fixed point") {
  Tape t;
  CellFixture cell(3, 2);
  LstmWeightsVar w = cell.lease(t, 3);
  LstmStateVar st{t.input(Tensor::zeros({3, 1})), t.input(Tensor::zeros({3, 1}))};
  Var x = t.input(Tensor::column({0.7, -0.3}));
  LstmStateVar next = lstm_step(t, w, x, st, ones_mask(t, 3));
  for (double v : t.value(next.c).data) CHECK(v == 0.0);
  for (double v : t.value(next.h).data) CHECK(v == 0.0);
}

TEST_CASE("scalar cell with +10 input/modulation biases matches hand evaluation") {
  // p = d = 1, W = 0, bias_i = bias_g = +10: i = sigm(10), g = tanh(10),
  // f, o = sigm(0) = 0.5; from zero state c1 = sigm(10) tanh(10) and
  // h1 = 0.5 tanh(c1).
  Tape t;
  Parameter W("W", Tensor::zeros({4, 2}));
  Parameter b("b", Tensor::column({10.0, 0.0, 0.0, 10.0}));  // [i; f; o; g]
  LstmWeightsVar w{t.param(W), t.param(b), 1};
  LstmStateVar st{t.input(Tensor::zeros({1, 1})), t.input(Tensor::zeros({1, 1}))};
  LstmStateVar next = lstm_step(t, w, t.input(Tensor::column({0.42})), st, ones_mask(t, 1));
  const double sig10 = 1.0 / (1.0 + std::exp(-10.0));
  const double c1 = sig10 * std::tanh(10.0);
  CHECK(t.value(next.c).data[0] == doctest::Approx(c1).epsilon(1e-12));
  CHECK(t.value(next.h).data[0] == doctest::Approx(0.5 * std::tanh(c1)).epsilon(1e-12));
}

TEST_CASE("all-zero recurrent mask makes the step independent of the previous state") {
  Rng rng(3);
  ModelConfig cfg;
  cfg.hidden = 4;
  Tape t;
  Parameter W("W", Tensor::zeros({16, 6}));
  for (double& x : W.value.data) x = rng.uniform() - 0.5;
  Parameter b("b", Tensor::zeros({16, 1}));
  LstmWeightsVar w{t.param(W), t.param(b), 4};
  Var zero_mask = t.input(Tensor::zeros({4, 1}));
  Var x = t.input(Tensor::column({0.3, -0.9}));
  LstmStateVar a{t.input(Tensor::column({1, 2, 3, 4})), t.input(Tensor::zeros({4, 1}))};
  LstmStateVar bst{t.input(Tensor::column({-4, 0, 7, 1})), t.input(Tensor::zeros({4, 1}))};
  LstmStateVar na = lstm_step(t, w, x, a, zero_mask);
  LstmStateVar nb = lstm_step(t, w, x, bst, zero_mask);
  CHECK(bit_equal(t.value(na.h), t.value(nb.h)));
  CHECK(bit_equal(t.value(na.c), t.value(nb.c)));
}

TEST_CASE("run_lstm of length one equals a single step, empty input rejected") {
  Rng rng(11);
  Parameter W("W", Tensor::zeros({8, 4}));
  for (double& x : W.value.data) x = rng.uniform() - 0.5;
  Parameter b("b", Tensor::zeros({8, 1}));

  Tape t;
  LstmWeightsVar w{t.param(W), t.param(b), 2};
  Var mask = ones_mask(t, 2);
  Var x = t.input(Tensor::column({0.5, 0.25}));
  std::vector<Var> hs = run_lstm(t, w, {x}, mask);
  LstmStateVar st{t.input(Tensor::zeros({2, 1})), t.input(Tensor::zeros({2, 1}))};
  LstmStateVar single = lstm_step(t, w, x, st, mask);
  CHECK(bit_equal(t.value(hs[0]), t.value(single.h)));
  CHECK_THROWS_AS(run_lstm(t, w, {}, mask), ContractError);
}

TEST_CASE("hidden states stay inside (-1, 1)") {
  Rng rng(17);
  Parameter W("W", Tensor::zeros({12, 5}));
  for (double& x : W.value.data) x = 6.0 * (rng.uniform() - 0.5);
  Parameter b("b", Tensor::zeros({12, 1}));
  Tape t;
  LstmWeightsVar w{t.param(W), t.param(b), 3};
  Var mask = ones_mask(t, 3);
  std::vector<Var> xs;
  for (int i = 0; i < 10; ++i)
    xs.push_back(t.input(Tensor::column({5.0 * (rng.uniform() - 0.5), 5.0 * (rng.uniform() - 0.5)})));
  for (Var h : run_lstm(t, w, xs, mask))
    for (double v : t.value(h).data) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
}

TEST_CASE("masks are sampled once per sequence and reused bit-exactly at each step") {
  // With dropout active, two sequences that share a mask draw must apply the
  // identical mask at every step: a sequence of identical inputs through
  // zero weights with nonzero recurrent state wouldn't distinguish steps, so
  // instead verify via the mask product directly.
  ModelConfig cfg;
  cfg.hidden = 64;
  cfg.recurrent_dropout = 0.5;
  Rng rng(7);
  MaskSet ms = sample_masks(cfg, ForwardMode::Train, rng);
  // The MaskSet carries one tensor per role; the forward pass lifts each to
  // a single tape leaf, so constancy across steps holds by construction.
  // Verify the sampled mask has the inverted-dropout structure.
  int kept = 0;
  for (double v : ms.dec_dh.data) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0).epsilon(1e-15)));
    kept += v != 0.0;
  }
  CHECK(kept > 10);  // rate 0.5 on 64 entries: all-drop has probability 2^-64
  CHECK(kept < 54);
}

TEST_CASE("expectation preservation of inverted dropout") {
  // Over many draws, mean of (h o d_h) approximates h entrywise.
  ModelConfig cfg;
  cfg.hidden = 8;
  cfg.recurrent_dropout = 0.3;
  Rng rng(123);
  std::vector<double> h = {1.0, -2.0, 0.5, 3.0, -0.25, 1.5, -1.0, 2.0};
  std::vector<double> acc(8, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    MaskSet ms = sample_masks(cfg, ForwardMode::Train, rng);
    for (int j = 0; j < 8; ++j) acc[static_cast<std::size_t>(j)] += h[static_cast<std::size_t>(j)] * ms.enc_fwd_dh.data[static_cast<std::size_t>(j)];
  }
  for (int j = 0; j < 8; ++j) {
    const double mean = acc[static_cast<std::size_t>(j)] / draws;
    // SE of the masked value: |h| sqrt(rate/(1-rate)) / sqrt(draws)
    const double se = std::fabs(h[static_cast<std::size_t>(j)]) * std::sqrt(0.3 / 0.7) / std::sqrt(static_cast<double>(draws));
    CHECK(std::fabs(mean - h[static_cast<std::size_t>(j)]) < 3.5 * se);
  }
}

TEST_CASE("same seed gives identical mask draws, different seeds disagree") {
  ModelConfig cfg;
  cfg.hidden = 32;
  cfg.recurrent_dropout = 0.2;
  Rng a(5), b(5), c(6);
  MaskSet ma = sample_masks(cfg, ForwardMode::Train, a);
  MaskSet mb = sample_masks(cfg, ForwardMode::Train, b);
  MaskSet mc = sample_masks(cfg, ForwardMode::Train, c);
  CHECK(bit_equal(ma.enc_fwd_dh, mb.enc_fwd_dh));
  CHECK(bit_equal(ma.dec_dh, mb.dec_dh));
  CHECK(bit_equal(ma.attn_da, mb.attn_da));
  bool any_diff = !bit_equal(ma.enc_fwd_dh, mc.enc_fwd_dh) || !bit_equal(ma.dec_dh, mc.dec_dh) ||
                  !bit_equal(ma.attn_da, mc.attn_da);
  CHECK(any_diff);
}

TEST_CASE("rate 0 and rate 1 mask edge cases") {
  ModelConfig cfg;
  cfg.hidden = 4;
  cfg.recurrent_dropout = 0.0;
  Rng rng(1);
  MaskSet m0 = sample_masks(cfg, ForwardMode::Train, rng);
  for (double v : m0.enc_fwd_dh.data) CHECK(v == 1.0);
  cfg.recurrent_dropout = 1.0;
  MaskSet m1 = sample_masks(cfg, ForwardMode::Train, rng);
  for (double v : m1.enc_fwd_dh.data) CHECK(v == 0.0);
}
