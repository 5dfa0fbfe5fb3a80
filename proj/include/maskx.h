/*
 * maskx — mask explanations for image classifiers in shearlet, wavelet, and
 * pixel representations, with explanation-quality metrics.
 *
 * C API over the C++ core. All functions return MASKX_OK (0) on success or a
 * maskx_status error code; maskx_last_error() returns a thread-local message
 * for the most recent failure on the calling thread. Objects are opaque
 * handles released with the matching *_free function. Handles are safe to
 * share across threads for const access (predict, metrics, curves); creation
 * and destruction of one handle must not race with itself.
 */

#ifndef MASKX_H
#define MASKX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum maskx_status {
  MASKX_OK = 0,
  MASKX_ERR_INVALID_ARGUMENT = 1,
  MASKX_ERR_IO = 2,
  MASKX_ERR_FORMAT = 3,
  MASKX_ERR_SHAPE_MISMATCH = 4,
  MASKX_ERR_NUMERIC = 5,
  MASKX_ERR_DEGENERATE = 6,
  MASKX_ERR_UNSUPPORTED = 7,
  MASKX_ERR_INTERNAL = 8
} maskx_status;

const char* maskx_version(void);
const char* maskx_last_error(void);

/* ---- images ------------------------------------------------------------ */

typedef struct maskx_image maskx_image;

/* PNG (8-bit gray/RGB) or binary PGM. target_h/target_w <= 0 keeps the native
 * size; otherwise the image is bilinearly resized. */
maskx_status maskx_image_load(const char* path, int target_h, int target_w, maskx_image** out);

/* data is row-major per channel (planar), values in [0,1]; channels 1 or 3. */
maskx_status maskx_image_create(int height, int width, int channels, const double* data,
                                maskx_image** out);

/* 8-bit PNG; values clamped to [0,1], quantized round-half-up. */
maskx_status maskx_image_save_png(const maskx_image* img, const char* path);

int maskx_image_height(const maskx_image* img);
int maskx_image_width(const maskx_image* img);
int maskx_image_channels(const maskx_image* img);
const double* maskx_image_data(const maskx_image* img);
void maskx_image_free(maskx_image* img);

/* ---- synthetic dataset -------------------------------------------------- */

/* Writes n PNGs plus labels.csv (filename,label,patch_x,patch_y,patch_size)
 * into out_dir. Classes are balanced; byte-deterministic given the seed. */
maskx_status maskx_dataset_generate(const char* out_dir, int n, uint64_t seed);

/* Single sample without touching the filesystem. */
maskx_status maskx_dataset_sample(uint64_t seed, int index, maskx_image** image, int* label);

/* ---- classifier --------------------------------------------------------- */

typedef struct maskx_model maskx_model;

typedef struct maskx_train_stats {
  double initial_loss;
  double final_loss;
  double train_accuracy;
  double test_accuracy;
  int epochs_run;
} maskx_train_stats;

/* Trains the built-in classifier on a dataset directory (labels.csv + PNGs).
 * The last floor(n * holdout_fraction) samples are held out for the test
 * accuracy. stats may be NULL. */
maskx_status maskx_model_train_dir(const char* data_dir, int epochs, uint64_t seed,
                                   double holdout_fraction, maskx_model** out,
                                   maskx_train_stats* stats);

maskx_status maskx_model_save(const maskx_model* model, const char* path);
maskx_status maskx_model_load(const char* path, maskx_model** out);

int maskx_model_num_classes(const maskx_model* model);
int maskx_model_input_height(const maskx_model* model);
int maskx_model_input_width(const maskx_model* model);
int maskx_model_input_channels(const maskx_model* model);

/* probs must hold maskx_model_num_classes(model) doubles. */
maskx_status maskx_model_predict(const maskx_model* model, const maskx_image* img, double* probs);

void maskx_model_free(maskx_model* model);

/* ---- explanations -------------------------------------------------------- */

typedef enum maskx_method {
  MASKX_METHOD_SHEARLETX = 0,
  MASKX_METHOD_WAVELETX = 1,
  MASKX_METHOD_CARTOONX = 2,
  MASKX_METHOD_PIXEL = 3,
  MASKX_METHOD_SMOOTH_PIXEL = 4
} maskx_method;

typedef struct maskx_explain_config {
  maskx_method method;
  double lambda1;    /* mask sparsity weight */
  double lambda2;    /* spatial energy weight (shearletx/waveletx) */
  int steps;         /* optimizer steps, default 300 */
  double lr;         /* Adam learning rate, default 0.1 */
  int mc_samples;    /* Monte Carlo samples per step, default 16 */
  double area;       /* area target, smooth_pixel only */
  uint64_t seed;
} maskx_explain_config;

/* Fills cfg with the per-method defaults. */
maskx_status maskx_explain_config_defaults(maskx_method method, maskx_explain_config* cfg);

typedef struct maskx_result maskx_result;

maskx_status maskx_explain(const maskx_model* model, const maskx_image* img,
                           const maskx_explain_config* cfg, maskx_result** out);

/* Masked-and-synthesized image (values may leave [0,1]; saving clamps). */
maskx_status maskx_result_explanation(const maskx_result* res, maskx_image** out);

/* Per-pixel max-projection of the mask, single channel in [0,1]. */
maskx_status maskx_result_mask_heatmap(const maskx_result* res, maskx_image** out);

int maskx_result_target_class(const maskx_result* res);
double maskx_result_retained_probability(const maskx_result* res);

/* Borrowed pointer to steps objective values; valid while res lives. */
const double* maskx_result_loss_trace(const maskx_result* res, int* n);

typedef struct maskx_metrics {
  double retained_probability;
  double cp_entropy;
  double cp_l1;
  double cp_l1_pixel;
  double hallucination_score;
  int degenerate; /* 1 when any sub-metric is undefined (value NaN) */
} maskx_metrics;

maskx_status maskx_result_metrics(const maskx_result* res, const maskx_model* model,
                                  maskx_metrics* out);

/* Full MetricsReport as a JSON object; free with maskx_string_free. */
maskx_status maskx_result_metrics_json(const maskx_result* res, const maskx_model* model,
                                       char** out);

void maskx_result_free(maskx_result* res);
void maskx_string_free(char* s);

/* ---- insertion / deletion curves ---------------------------------------- */

typedef enum maskx_curve_mode {
  MASKX_CURVE_REPRESENTATION = 0,
  MASKX_CURVE_PIXEL = 1
} maskx_curve_mode;

/* fractions/values must hold steps+1 doubles; insertion != 0 selects the
 * insertion curve, otherwise deletion. */
maskx_status maskx_curve(const maskx_result* res, const maskx_model* model, int insertion,
                         maskx_curve_mode mode, int steps, double* fractions, double* values);

/* ---- debugging ----------------------------------------------------------- */

/* Analyzes img in the method's representation and dumps the coefficients as a
 * flat little-endian float64 file with a 16-byte header (magic "MXC1", plane
 * count, height, width as u32). */
maskx_status maskx_coeffs_dump(const maskx_image* img, maskx_method method, const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MASKX_H */
