#include "core/model.hpp"

#include <cmath>

#include "core/error.hpp"

namespace vtp {

namespace {

Tensor uniform_init(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
  for (double& x : t.data) x = bound * (2.0 * rng.uniform() - 1.0);
  return t;
}

Tensor lstm_bias(std::size_t p, bool forget_one) {
  Tensor b = Tensor::zeros({4 * p, 1});
  if (forget_one)
    for (std::size_t i = p; i < 2 * p; ++i) b.data[i] = 1.0;
  return b;
}

}  // namespace

ModelParams ModelParams::create(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t p = cfg.hidden;
  const std::size_t m = cfg.attention_width;
  const std::size_t d = ModelConfig::kFeatures;
  const std::size_t e = cfg.init_extent();
  Rng rng(seed);
  ModelParams mp;
  mp.cfg = cfg;
  mp.enc_fwd_W = Parameter("enc_fwd.W", uniform_init({4 * p, d + p}, rng));
  mp.enc_fwd_b = Parameter("enc_fwd.b", lstm_bias(p, cfg.forget_bias_one));
  mp.enc_bwd_W = Parameter("enc_bwd.W", uniform_init({4 * p, d + p}, rng));
  mp.enc_bwd_b = Parameter("enc_bwd.b", lstm_bias(p, cfg.forget_bias_one));
  mp.dec_W = Parameter("dec.W", uniform_init({4 * p, (d + 2 * p) + p}, rng));
  mp.dec_b = Parameter("dec.b", lstm_bias(p, cfg.forget_bias_one));
  mp.attn_Wh = Parameter("attn.W_h", uniform_init({m, 2 * p}, rng));
  mp.attn_Ws = Parameter("attn.W_s", uniform_init({m, p}, rng));
  mp.attn_v = Parameter("attn.v", uniform_init({1, m}, rng));
  mp.init_W = Parameter("init.W", uniform_init({p, e}, rng));
  mp.init_b = Parameter("init.b", Tensor::zeros({p, 1}));
  mp.head_Wmu = Parameter("head.W_mu", uniform_init({d, p}, rng));
  mp.head_bmu = Parameter("head.b_mu", Tensor::zeros({d, 1}));
  mp.head_Wsig = Parameter("head.W_sigma", uniform_init({3, p}, rng));
  mp.head_bsig = Parameter("head.b_sigma", Tensor::zeros({3, 1}));
  return mp;
}

std::vector<Parameter*> ModelParams::all() {
  return {&enc_fwd_W, &enc_fwd_b, &enc_bwd_W, &enc_bwd_b, &dec_W,    &dec_b,
          &attn_Wh,   &attn_Ws,   &attn_v,    &init_W,    &init_b,   &head_Wmu,
          &head_bmu,  &head_Wsig, &head_bsig};
}

std::vector<const Parameter*> ModelParams::all() const {
  auto* self = const_cast<ModelParams*>(this);
  std::vector<const Parameter*> out;
  for (Parameter* p : self->all()) out.push_back(p);
  return out;
}

Parameter* ModelParams::find(std::string_view name) {
  for (Parameter* p : all())
    if (p->name == name) return p;
  return nullptr;
}

void ModelParams::zero_grad() {
  for (Parameter* p : all()) p->zero_grad();
}

ModelVars lease_params(Tape& t, ModelParams& params,
                       const std::function<Var(std::string_view, Var)>& hook) {
  auto lease = [&](Parameter& p) {
    Var v = t.param(p);
    return hook ? hook(p.name, v) : v;
  };
  ModelVars mv;
  mv.enc_fwd = {lease(params.enc_fwd_W), lease(params.enc_fwd_b), params.cfg.hidden};
  mv.enc_bwd = {lease(params.enc_bwd_W), lease(params.enc_bwd_b), params.cfg.hidden};
  mv.dec = {lease(params.dec_W), lease(params.dec_b), params.cfg.hidden};
  mv.attn = {lease(params.attn_Wh), lease(params.attn_Ws), lease(params.attn_v)};
  mv.init_W = lease(params.init_W);
  mv.init_b = lease(params.init_b);
  mv.head_Wmu = lease(params.head_Wmu);
  mv.head_bmu = lease(params.head_bmu);
  mv.head_Wsig = lease(params.head_Wsig);
  mv.head_bsig = lease(params.head_bsig);
  return mv;
}

ForwardGraph model_forward(Tape& t, const ModelVars& mv, const ModelConfig& cfg,
                           const std::vector<Tensor>& xs, const Tensor* psi,
                           std::size_t horizon, const MaskSet& masks,
                           const FeedbackPlan* feedback) {
  if (xs.empty()) throw ContractError("model_forward requires a non-empty input sequence");
  if (horizon == 0) throw ContractError("model_forward requires horizon >= 1");
  for (const Tensor& x : xs)
    if (x.rows() != ModelConfig::kFeatures || x.cols() != 1)
      throw DimensionError("input positions must be (2x1) columns, got " + x.shape_str());
  if (feedback && feedback->size() != horizon)
    throw ContractError("feedback plan length must equal the horizon");

  const std::size_t p = cfg.hidden;
  std::vector<Var> x_vars;
  x_vars.reserve(xs.size());
  for (const Tensor& x : xs) x_vars.push_back(t.input(x));

  // Bidirectional encoding; annotations are forward/backward concatenations.
  Var enc_fwd_mask = t.input(masks.enc_fwd_dh);
  Var enc_bwd_mask = t.input(masks.enc_bwd_dh);
  std::vector<Var> hf = run_lstm(t, mv.enc_fwd, x_vars, enc_fwd_mask);
  std::vector<Var> x_rev(x_vars.rbegin(), x_vars.rend());
  std::vector<Var> hb_rev = run_lstm(t, mv.enc_bwd, x_rev, enc_bwd_mask);
  std::vector<Var> annotations(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j)
    annotations[j] = t.concat_rows({hf[j], hb_rev[xs.size() - 1 - j]});

  // Decoder init from the final forward state and the intention one-hot,
  // jointly masked: s_0 = tanh(W_init (eta o d_eta) + b_init).
  Var eta = hf.back();
  if (cfg.labeled) {
    Tensor psi_col = psi ? *psi : Tensor::zeros({cfg.intention_classes, 1});
    if (psi_col.rows() != cfg.intention_classes || psi_col.cols() != 1)
      throw DimensionError("intention one-hot must be (" + std::to_string(cfg.intention_classes) +
                           "x1), got " + psi_col.shape_str());
    eta = t.concat_rows({eta, t.input(psi_col)});
  }
  Var eta_masked = t.hadamard(eta, t.input(masks.init_deta));
  Var s0 = t.tanh(t.add(t.matmul(mv.init_W, eta_masked), mv.init_b));

  // Attention cache over the masked annotations.
  Var da_mask = t.input(masks.attn_da);
  AttentionContextCache cache = attention_prepare(t, mv.attn, annotations, da_mask);

  // Recursive decode. Step 0 consumes the last observed position; later
  // steps consume the previous predicted mean unless the plan overrides it.
  ForwardGraph graph;
  graph.steps.reserve(horizon);
  Var dec_mask = t.input(masks.dec_dh);
  LstmStateVar state{s0, t.input(Tensor::zeros({p, 1}))};
  Var prev_mean = x_vars.back();
  for (std::size_t k = 0; k < horizon; ++k) {
    if (k > 0) {
      prev_mean = graph.steps.back().mu;
      if (feedback && (*feedback)[k].has_value()) prev_mean = t.input(*(*feedback)[k]);
    }
    AttentionStep att = attention_step(t, mv.attn, cache, state.h);
    Var dec_in = t.concat_rows({prev_mean, att.context});
    state = lstm_step(t, mv.dec, dec_in, state, dec_mask);
    DecodeStepVars step;
    step.mu = t.add(t.matmul(mv.head_Wmu, state.h), mv.head_bmu);
    step.head = t.add(t.matmul(mv.head_Wsig, state.h), mv.head_bsig);
    step.alphas = att.alphas;
    graph.steps.push_back(step);
  }
  return graph;
}

GaussianStep gaussian_from_head(const Tensor& mu, const Tensor& head) {
  if (mu.numel() != 2 || head.numel() != 3)
    throw DimensionError("gaussian head expects (2x1) mean and (3x1) head, got " + mu.shape_str() +
                         " and " + head.shape_str());
  GaussianStep g;
  g.mean = {mu.data[0], mu.data[1]};
  g.b11 = std::exp(head.data[0]);
  g.b22 = std::exp(head.data[1]);
  g.b21 = head.data[2];
  // Sigma = B B^T, guaranteed symmetric positive definite since b11,b22 > 0.
  g.sigma = {g.b11 * g.b11, g.b11 * g.b21, g.b11 * g.b21, g.b21 * g.b21 + g.b22 * g.b22};
  return g;
}

PredictResult predict_once(ModelParams& params, const std::vector<Tensor>& xs, const Tensor* psi,
                           std::size_t horizon, ForwardMode mode, Rng& rng) {
  Tape t;
  ModelVars mv = lease_params(t, params);
  MaskSet masks = sample_masks(params.cfg, mode, rng);
  ForwardGraph graph = model_forward(t, mv, params.cfg, xs, psi, horizon, masks);
  PredictResult out;
  out.steps.reserve(horizon);
  out.alphas.reserve(horizon * xs.size());
  for (std::size_t k = 0; k < graph.steps.size(); ++k) {
    const DecodeStepVars& s = graph.steps[k];
    for (double v : t.value(s.mu).data)
      if (!std::isfinite(v))
        throw NumericError("non-finite mean head output at step " + std::to_string(k + 1));
    for (double v : t.value(s.head).data)
      if (!std::isfinite(v))
        throw NumericError("non-finite covariance head output at step " + std::to_string(k + 1));
    out.steps.push_back(gaussian_from_head(t.value(s.mu), t.value(s.head)));
    const Tensor& a = t.value(s.alphas);
    out.alphas.insert(out.alphas.end(), a.data.begin(), a.data.end());
  }
  return out;
}

}  // namespace vtp
