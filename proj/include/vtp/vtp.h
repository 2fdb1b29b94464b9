/*
 * vtp - vessel trajectory prediction engine.
 *
 * C API over the C++ core. All entry points return a vtp_status; every
 * other output travels through out-parameters. Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * vtp_string_free(). Handles are opaque and must be released with their
 * matching close/free function. The library never prints; diagnostics
 * for the most recent failure on the calling thread are available via
 * vtp_last_error().
 */
#ifndef VTP_H
#define VTP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VTP_API __declspec(dllexport)
#else
#define VTP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum vtp_status {
  VTP_OK = 0,
  VTP_CONTRACT_ERROR = 1, /* API misuse, bad configuration, shape mismatch */
  VTP_DATA_ERROR = 2,     /* unreadable or malformed input data */
  VTP_NUMERIC_ERROR = 3   /* numerical failure at runtime */
} vtp_status;

/* Version of the library, e.g. "0.1.0". Static storage; do not free. */
VTP_API const char* vtp_version(void);

/* Message for the most recent error on this thread. Static storage. */
VTP_API const char* vtp_last_error(void);

/* Releases a string returned through a char** out-parameter. */
VTP_API void vtp_string_free(char* s);

/*
 * Batch commands. Each takes a JSON run-configuration string (NULL or ""
 * selects the built-in defaults; unknown keys are rejected) plus paths,
 * performs the work, and returns a JSON summary through out_json when that
 * parameter is non-NULL.
 */

/* Builds a windowed dataset from a raw AIS CSV export. */
VTP_API vtp_status vtp_ingest(const char* csv_path, const char* config_json,
                              const char* out_dir, char** out_json);

/* Generates a synthetic dataset (scenarios: "lines", "crossroad"). */
VTP_API vtp_status vtp_synth(const char* config_json, const char* out_dir, char** out_json);

/* Progress callback: called once per epoch with the metrics row. Return
 * nonzero to request a clean early stop after the current epoch. */
typedef int (*vtp_progress_fn)(int epoch, double train_loss, double val_loss, void* user);

/* Trains a model on a dataset produced by vtp_ingest/vtp_synth. */
VTP_API vtp_status vtp_train(const char* dataset_path, const char* config_json,
                             const char* out_dir, const char* resume_checkpoint,
                             vtp_progress_fn progress, void* user, char** out_json);

/* Runs prediction for one input track (CSV path) or one dataset window. */
VTP_API vtp_status vtp_predict(const char* checkpoint_path, const char* input_csv,
                               const char* dataset_path, const char* split, long window_index,
                               const char* config_json, const char* out_dir, char** out_json);

/* Evaluates a checkpoint on one split of a dataset. */
VTP_API vtp_status vtp_evaluate(const char* checkpoint_path, const char* dataset_path,
                                const char* split, const char* config_json, const char* out_dir,
                                char** out_json);

/* Verifies analytic gradients of the full model against finite differences.
 * sabotage names one parameter whose gradient is deliberately corrupted to
 * prove the check catches bad rules; pass NULL for an honest run. */
VTP_API vtp_status vtp_gradcheck(const char* config_json, const char* sabotage, char** out_json);

/*
 * Embedding interface: load a trained model once, predict many times.
 */

typedef struct vtp_model vtp_model;       /* opaque */
typedef struct vtp_prediction vtp_prediction; /* opaque */

VTP_API vtp_status vtp_model_open(const char* checkpoint_path, vtp_model** out_model);
VTP_API void vtp_model_close(vtp_model* model);

/* Model metadata. */
VTP_API int vtp_model_input_len(const vtp_model* model);    /* points consumed */
VTP_API int vtp_model_horizon(const vtp_model* model);      /* steps predicted */
VTP_API double vtp_model_step_seconds(const vtp_model* model);
VTP_API int vtp_model_intention_classes(const vtp_model* model); /* 0 if unlabeled */

/*
 * Predicts from the last input_len positions of a track.
 * xy: input_len pairs of projected easting/northing metres, row-major.
 * intention_class: class index, or -1 when unknown/unlabeled.
 * mc_samples: Monte Carlo passes (>= 1); seed fixes the sampled masks.
 */
VTP_API vtp_status vtp_model_predict(vtp_model* model, const double* xy, size_t n_points,
                                     int intention_class, int mc_samples, uint64_t seed,
                                     vtp_prediction** out_pred);

VTP_API void vtp_prediction_free(vtp_prediction* pred);
VTP_API int vtp_prediction_steps(const vtp_prediction* pred);
/* Per-step accessors take k in [1, steps]; step k lies k*step_seconds
 * ahead of the last input point, matching the step column of the CLI
 * artifacts. */
/* Mean position at step k: out_xy[0]=easting, out_xy[1]=northing. */
VTP_API vtp_status vtp_prediction_mean(const vtp_prediction* pred, int k, double* out_xy);
/* Total covariance at step k, row-major 2x2 in out_cov[4]. */
VTP_API vtp_status vtp_prediction_cov(const vtp_prediction* pred, int k, double* out_cov);
/* Epistemic (between-pass) part of the covariance, row-major 2x2. */
VTP_API vtp_status vtp_prediction_epistemic(const vtp_prediction* pred, int k, double* out_cov);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VTP_H */
