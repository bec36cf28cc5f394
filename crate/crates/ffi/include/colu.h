#ifndef COLU_H
#define COLU_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ColuStatus {
  COLU_STATUS_OK = 0,
  COLU_STATUS_DOMAIN = 1,
  COLU_STATUS_ARGUMENT = 2,
  COLU_STATUS_SHAPE = 3,
  COLU_STATUS_USAGE = 4,
  COLU_STATUS_CONFIG = 5,
  COLU_STATUS_FORMAT = 6,
  COLU_STATUS_IO = 7,
  COLU_STATUS_NULL_POINTER = 8,
  COLU_STATUS_PANIC = 9,
} ColuStatus;

typedef enum ColuKind {
  COLU_KIND_COLU = 0,
  COLU_KIND_RELU = 1,
  COLU_KIND_SWISH = 2,
  COLU_KIND_SIGMOID = 3,
  COLU_KIND_MISH = 4,
  COLU_KIND_ELU = 5,
  COLU_KIND_SELU = 6,
  COLU_KIND_TANH = 7,
  COLU_KIND_SOFTPLUS = 8,
} ColuKind;

typedef enum ColuArch {
  COLU_ARCH_DEPTH_SWEEP = 0,
  COLU_ARCH_SMALL_CNN8 = 1,
  COLU_ARCH_VGG13 = 2,
  COLU_ARCH_RESNET9 = 3,
} ColuArch;

typedef enum ColuDataset {
  COLU_DATASET_MNIST = 0,
  COLU_DATASET_FASHION_MNIST = 1,
  COLU_DATASET_CIFAR10 = 2,
  COLU_DATASET_SYNTHETIC = 3,
} ColuDataset;

/**
 * Opaque network handle.
 */
typedef struct ColuNetwork ColuNetwork;

/**
 * Opaque training configuration handle.
 */
typedef struct ColuTrainConfig ColuTrainConfig;

/**
 * Activation kind (a `ColuKind` value) plus the ELU alpha, which other
 * kinds ignore.
 */
typedef struct ColuActivation {
  int32_t kind;
  double alpha;
} ColuActivation;

typedef struct ColuProperties {
  double global_min_x;
  double global_min_f;
  bool bounded_below;
  bool bounded_above;
  bool monotonic;
  bool saturates_above;
  bool kink_at_zero;
} ColuProperties;

typedef struct ColuTrainResult {
  double final_accuracy;
  double final_loss;
  size_t epochs;
  size_t param_count;
} ColuTrainResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *colu_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *colu_version(void);

/**
 * # Safety
 * `out` must be valid for one write.
 */
enum ColuStatus colu_eval(struct ColuActivation act, double x, double *out);

/**
 * # Safety
 * `out` must be valid for one write.
 */
enum ColuStatus colu_derivative(struct ColuActivation act, double x, double *out);

/**
 * Elementwise value of `n` inputs. On a non-finite input returns
 * `Domain` and the message names its index.
 *
 * # Safety
 * `xs` and `out` must each hold `n` doubles.
 */
enum ColuStatus colu_eval_batch(struct ColuActivation act, const double *xs, size_t n, double *out);

/**
 * Elementwise derivative; see [`colu_eval_batch`].
 *
 * # Safety
 * `xs` and `out` must each hold `n` doubles.
 */
enum ColuStatus colu_derivative_batch(struct ColuActivation act,
                                      const double *xs,
                                      size_t n,
                                      double *out);

/**
 * Global minimum of the activation over `[lo, hi]`.
 *
 * # Safety
 * `x_min` and `f_min` must be valid for one write each.
 */
enum ColuStatus colu_global_minimum(struct ColuActivation act,
                                    double lo,
                                    double hi,
                                    double *x_min,
                                    double *f_min);

/**
 * # Safety
 * `props` must be valid for one write.
 */
enum ColuStatus colu_classify(struct ColuActivation act, struct ColuProperties *props);

/**
 * Builds a network (`arch` is a `ColuArch` value) for `channels x height x width` inputs with ten
 * outputs. `depth` is used by `DepthSweep` only. The handle must be
 * released with `colu_network_free`.
 *
 * # Safety
 * `net` must be valid for one write.
 */
enum ColuStatus colu_network_build(int32_t arch,
                                   size_t depth,
                                   struct ColuActivation act,
                                   size_t channels,
                                   size_t height,
                                   size_t width,
                                   double width_mult,
                                   uint64_t seed,
                                   struct ColuNetwork **net);

/**
 * # Safety
 * `net` must be NULL or a handle from `colu_network_build` not yet freed.
 */
void colu_network_free(struct ColuNetwork *net);

/**
 * # Safety
 * `net` must be a live handle and `count` valid for one write.
 */
enum ColuStatus colu_network_param_count(const struct ColuNetwork *net, size_t *count);

/**
 * Number of outputs per sample (the logits width).
 *
 * # Safety
 * `net` must be a live handle and `outputs` valid for one write.
 */
enum ColuStatus colu_network_outputs(const struct ColuNetwork *net, size_t *outputs);

/**
 * Eval-mode forward pass over `batch` samples laid out N x C x H x W.
 * `out_len` must equal `batch` times the output width.
 *
 * # Safety
 * `net` must be a live handle; `x` must hold `batch * C * H * W` doubles
 * and `out` must hold `out_len`.
 */
enum ColuStatus colu_network_forward(struct ColuNetwork *net,
                                     const double *x,
                                     size_t batch,
                                     double *out,
                                     size_t out_len);

/**
 * New configuration with the default protocol (CoLU, small_cnn8, MNIST,
 * lr 0.001, decay 1e-4, momentum 0.9, L2 1e-4, batch 64, 30 epochs).
 */
struct ColuTrainConfig *colu_train_config_new(void);

/**
 * # Safety
 * `cfg` must be NULL or a handle from `colu_train_config_new` not yet freed.
 */
void colu_train_config_free(struct ColuTrainConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum ColuStatus colu_train_config_set_activation(struct ColuTrainConfig *cfg,
                                                 struct ColuActivation act);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum ColuStatus colu_train_config_set_arch(struct ColuTrainConfig *cfg,
                                           int32_t arch,
                                           size_t depth,
                                           double width_mult);

/**
 * Sets the dataset (a `ColuDataset` value); `data_dir` may be NULL for
 * the synthetic set.
 *
 * # Safety
 * `cfg` must be a live handle; `data_dir` NULL or a NUL-terminated string.
 */
enum ColuStatus colu_train_config_set_dataset(struct ColuTrainConfig *cfg,
                                              int32_t dataset,
                                              const char *data_dir);

/**
 * Sets the optimizer: initial rate, decay, momentum and L2 factor.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum ColuStatus colu_train_config_set_sgd(struct ColuTrainConfig *cfg,
                                          double lr,
                                          double decay,
                                          double momentum,
                                          double l2);

/**
 * Sets epochs, batch size, seed and the training subset (0 = all).
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum ColuStatus colu_train_config_set_schedule(struct ColuTrainConfig *cfg,
                                               size_t epochs,
                                               size_t batch_size,
                                               uint64_t seed,
                                               size_t subset);

/**
 * Runs training to completion.
 *
 * # Safety
 * `cfg` must be a live handle and `result` valid for one write.
 */
enum ColuStatus colu_train(const struct ColuTrainConfig *cfg, struct ColuTrainResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLU_H */
