#include "vtp/vtp.h"

#include <cstring>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/commands.hpp"
#include "core/error.hpp"
#include "core/pipeline.hpp"
#include "core/runconfig.hpp"
#include "core/tensor.hpp"
#include "core/uncertainty.hpp"

// Opaque handle bodies. A model is a loaded checkpoint; a prediction holds
// per-step moments already denormalized to raw meters.
struct vtp_model {
  vtp::Checkpoint ck;
};

struct vtp_prediction {
  std::int64_t delta_s = 0;
  std::vector<vtp::StepMoments> steps;
};

namespace {

thread_local std::string g_last_error;

vtp_status fail(vtp_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

vtp_status fail(const vtp::Error& e) {
  switch (e.kind()) {
    case vtp::ErrorKind::Contract: return fail(VTP_CONTRACT_ERROR, e.what());
    case vtp::ErrorKind::Data: return fail(VTP_DATA_ERROR, e.what());
    case vtp::ErrorKind::Numeric: return fail(VTP_NUMERIC_ERROR, e.what());
  }
  return fail(VTP_CONTRACT_ERROR, e.what());
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Wraps an entry point body: converts exceptions into status codes.
template <typename Fn>
vtp_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const vtp::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(VTP_CONTRACT_ERROR, e.what());
  } catch (...) {
    return fail(VTP_CONTRACT_ERROR, "unknown error");
  }
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

std::string required(const char* s, const char* what) {
  if (!s || !*s) throw vtp::ContractError(std::string(what) + " is required");
  return s;
}

void deliver(char** out_json, const std::string& text) {
  if (out_json) *out_json = dup_string(text);
}

}  // namespace

extern "C" {

const char* vtp_version(void) { return "0.1.0"; }

const char* vtp_last_error(void) { return g_last_error.c_str(); }

void vtp_string_free(char* s) { delete[] s; }

vtp_status vtp_ingest(const char* csv_path, const char* config_json, const char* out_dir,
                      char** out_json) {
  return guarded([&]() -> vtp_status {
    const vtp::RunConfig rc = vtp::parse_run_config(str_or_empty(config_json));
    deliver(out_json, vtp::cmd_ingest(required(csv_path, "csv_path"), rc,
                                      required(out_dir, "out_dir")));
    return VTP_OK;
  });
}

vtp_status vtp_synth(const char* config_json, const char* out_dir, char** out_json) {
  return guarded([&]() -> vtp_status {
    const vtp::RunConfig rc = vtp::parse_run_config(str_or_empty(config_json));
    deliver(out_json, vtp::cmd_synth(rc, required(out_dir, "out_dir")));
    return VTP_OK;
  });
}

vtp_status vtp_train(const char* dataset_path, const char* config_json, const char* out_dir,
                     const char* resume_checkpoint, vtp_progress_fn progress, void* user,
                     char** out_json) {
  return guarded([&]() -> vtp_status {
    const vtp::RunConfig rc = vtp::parse_run_config(str_or_empty(config_json));
    vtp::ProgressFn bridge;
    if (progress) {
      bridge = [progress, user](const vtp::EpochLog& lg) {
        return progress(lg.epoch, lg.train_loss, lg.val_loss, user) == 0;
      };
    }
    deliver(out_json,
            vtp::cmd_train(required(dataset_path, "dataset_path"), rc,
                           required(out_dir, "out_dir"), str_or_empty(resume_checkpoint),
                           bridge));
    return VTP_OK;
  });
}

vtp_status vtp_predict(const char* checkpoint_path, const char* input_csv,
                       const char* dataset_path, const char* split, long window_index,
                       const char* config_json, const char* out_dir, char** out_json) {
  return guarded([&]() -> vtp_status {
    const vtp::RunConfig rc = vtp::parse_run_config(str_or_empty(config_json));
    deliver(out_json,
            vtp::cmd_predict(required(checkpoint_path, "checkpoint_path"),
                             str_or_empty(input_csv), str_or_empty(dataset_path),
                             str_or_empty(split), window_index, rc,
                             required(out_dir, "out_dir")));
    return VTP_OK;
  });
}

vtp_status vtp_evaluate(const char* checkpoint_path, const char* dataset_path, const char* split,
                        const char* config_json, const char* out_dir, char** out_json) {
  return guarded([&]() -> vtp_status {
    const vtp::RunConfig rc = vtp::parse_run_config(str_or_empty(config_json));
    deliver(out_json,
            vtp::cmd_evaluate(required(checkpoint_path, "checkpoint_path"),
                              required(dataset_path, "dataset_path"), required(split, "split"),
                              rc, required(out_dir, "out_dir")));
    return VTP_OK;
  });
}

vtp_status vtp_gradcheck(const char* config_json, const char* sabotage, char** out_json) {
  return guarded([&]() -> vtp_status {
    const vtp::RunConfig rc = vtp::parse_run_config(str_or_empty(config_json));
    deliver(out_json, vtp::cmd_gradcheck(rc, str_or_empty(sabotage)));
    return VTP_OK;
  });
}

vtp_status vtp_model_open(const char* checkpoint_path, vtp_model** out_model) {
  return guarded([&]() -> vtp_status {
    if (!out_model) throw vtp::ContractError("out_model is required");
    vtp::Checkpoint ck = vtp::load_checkpoint(required(checkpoint_path, "checkpoint_path"));
    *out_model = new vtp_model{std::move(ck)};
    return VTP_OK;
  });
}

void vtp_model_close(vtp_model* model) { delete model; }

int vtp_model_input_len(const vtp_model* model) {
  return model ? static_cast<int>(model->ck.input_len) : 0;
}

int vtp_model_horizon(const vtp_model* model) {
  return model ? static_cast<int>(model->ck.horizon) : 0;
}

double vtp_model_step_seconds(const vtp_model* model) {
  return model ? static_cast<double>(model->ck.delta_s) : 0;
}

int vtp_model_intention_classes(const vtp_model* model) {
  return model ? static_cast<int>(model->ck.model.intention_classes) : 0;
}

vtp_status vtp_model_predict(vtp_model* model, const double* xy, size_t n_points,
                             int intention_class, int mc_samples, uint64_t seed,
                             vtp_prediction** out_pred) {
  return guarded([&]() -> vtp_status {
    if (!model) throw vtp::ContractError("model handle is required");
    if (!out_pred) throw vtp::ContractError("out_pred is required");
    if (!xy) throw vtp::ContractError("xy is required");
    if (mc_samples < 1) throw vtp::ContractError("mc_samples must be >= 1");
    const vtp::Checkpoint& ck = model->ck;
    const size_t l = ck.input_len;
    if (n_points < l)
      throw vtp::ContractError("need at least " + std::to_string(l) + " points, got " +
                               std::to_string(n_points));

    // Latest input_len points, normalized under the model's statistics.
    std::vector<vtp::Tensor> xs;
    xs.reserve(l);
    for (size_t i = n_points - l; i < n_points; ++i) {
      double e = xy[2 * i], n = xy[2 * i + 1];
      vtp::normalize_point(ck.norm, e, n);
      xs.push_back(vtp::Tensor::column({e, n}));
    }

    vtp::Tensor psi;
    const vtp::Tensor* psi_ptr = nullptr;
    if (intention_class >= 0) {
      if (!ck.model.labeled)
        throw vtp::ContractError("this model does not condition on an intention class");
      if (static_cast<size_t>(intention_class) >= ck.model.intention_classes)
        throw vtp::ContractError("intention_class " + std::to_string(intention_class) +
                                 " outside [0, " +
                                 std::to_string(ck.model.intention_classes) + ")");
      psi = vtp::Tensor::zeros({ck.model.intention_classes, 1});
      psi.data[static_cast<size_t>(intention_class)] = 1.0;
      psi_ptr = &psi;
    }

    const vtp::McBatch batch = vtp::mc_forward(model->ck.params, xs, psi_ptr, ck.horizon,
                                               static_cast<size_t>(mc_samples), seed);
    vtp::PredictionMoments pm = vtp::combine_moments(batch);
    for (vtp::StepMoments& st : pm.steps) {
      vtp::denormalize_point(ck.norm, st.mean[0], st.mean[1]);
      vtp::denormalize_covariance(ck.norm, st.epistemic.data());
      vtp::denormalize_covariance(ck.norm, st.epistemic_raw.data());
      vtp::denormalize_covariance(ck.norm, st.aleatoric.data());
      vtp::denormalize_covariance(ck.norm, st.total.data());
      vtp::denormalize_covariance(ck.norm, st.total_raw.data());
    }
    *out_pred = new vtp_prediction{ck.delta_s, std::move(pm.steps)};
    return VTP_OK;
  });
}

void vtp_prediction_free(vtp_prediction* pred) { delete pred; }

int vtp_prediction_steps(const vtp_prediction* pred) {
  return pred ? static_cast<int>(pred->steps.size()) : 0;
}

namespace {

// Shared bounds check for the per-step accessors (k is 1-based).
vtp_status step_at(const vtp_prediction* pred, int k, const vtp::StepMoments** out) {
  if (!pred) return fail(VTP_CONTRACT_ERROR, "prediction handle is required");
  if (k < 1 || static_cast<size_t>(k) > pred->steps.size())
    return fail(VTP_CONTRACT_ERROR, "step " + std::to_string(k) + " outside [1, " +
                                        std::to_string(pred->steps.size()) + "]");
  *out = &pred->steps[static_cast<size_t>(k - 1)];
  return VTP_OK;
}

}  // namespace

vtp_status vtp_prediction_mean(const vtp_prediction* pred, int k, double* out_xy) {
  const vtp::StepMoments* st = nullptr;
  const vtp_status rc = step_at(pred, k, &st);
  if (rc != VTP_OK) return rc;
  if (!out_xy) return fail(VTP_CONTRACT_ERROR, "out_xy is required");
  out_xy[0] = st->mean[0];
  out_xy[1] = st->mean[1];
  return VTP_OK;
}

vtp_status vtp_prediction_cov(const vtp_prediction* pred, int k, double* out_cov) {
  const vtp::StepMoments* st = nullptr;
  const vtp_status rc = step_at(pred, k, &st);
  if (rc != VTP_OK) return rc;
  if (!out_cov) return fail(VTP_CONTRACT_ERROR, "out_cov is required");
  for (int i = 0; i < 4; ++i) out_cov[i] = st->total[static_cast<size_t>(i)];
  return VTP_OK;
}

vtp_status vtp_prediction_epistemic(const vtp_prediction* pred, int k, double* out_cov) {
  const vtp::StepMoments* st = nullptr;
  const vtp_status rc = step_at(pred, k, &st);
  if (rc != VTP_OK) return rc;
  if (!out_cov) return fail(VTP_CONTRACT_ERROR, "out_cov is required");
  for (int i = 0; i < 4; ++i) out_cov[i] = st->epistemic[static_cast<size_t>(i)];
  return VTP_OK;
}

}  // extern "C"
