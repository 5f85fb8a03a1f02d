#ifndef GGMM_SR_H
#define GGMM_SR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GgmmStatus {
  GGMM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GGMM_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument or configuration value, or too little data.
   */
  GGMM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unreadable or malformed image.
   */
  GGMM_STATUS_IMAGE = 3,
  /**
   * Model file failed to parse or validate.
   */
  GGMM_STATUS_MODEL = 4,
  /**
   * Filesystem error.
   */
  GGMM_STATUS_IO = 5,
  /**
   * Factorization or other numerical failure.
   */
  GGMM_STATUS_NUMERICAL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  GGMM_STATUS_INTERNAL = 7,
} GgmmStatus;

/**
 * Opaque grayscale image with values in `[0, 1]`.
 */
typedef struct GgmmImage GgmmImage;

/**
 * Opaque trained joint patch model.
 */
typedef struct GgmmModel GgmmModel;

/**
 * Training parameters. Obtain defaults from [`ggmm_train_config_default`].
 */
typedef struct GgmmTrainConfig {
  /**
   * LR patch side.
   */
  size_t tau;
  /**
   * Magnification factor.
   */
  size_t q;
  size_t stride_train;
  size_t stride_recon;
  /**
   * Aggregation window decay.
   */
  double gamma;
  /**
   * Number of mixture components.
   */
  size_t components;
  size_t max_outer_iters;
  size_t fp_inner_iters;
  double rel_tol;
  /**
   * Covariance ridge; negative selects the data-scaled default.
   */
  double cov_reg;
  /**
   * Fixed shape parameter; zero or negative leaves the shape free.
   */
  double fix_beta;
  uint64_t seed;
} GgmmTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ggmm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ggmm_version(void);

/**
 * Creates an image from `width * height` row-major values.
 *
 * # Safety
 * `pixels` must point to `width * height` readable doubles and `out` must be
 * writable.
 */
enum GgmmStatus ggmm_image_new(size_t width,
                               size_t height,
                               const double *pixels,
                               struct GgmmImage **out);

/**
 * Reads an 8-bit PGM (P2 or P5) file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum GgmmStatus ggmm_image_load(const char *path, struct GgmmImage **out);

/**
 * Writes a binary 8-bit PGM.
 *
 * # Safety
 * `image` must be a live handle and `path` a NUL-terminated string.
 */
enum GgmmStatus ggmm_image_save(const struct GgmmImage *image, const char *path);

/**
 * Width in pixels, 0 for a null handle.
 *
 * # Safety
 * `image` must be null or a live handle.
 */
size_t ggmm_image_width(const struct GgmmImage *image);

/**
 * Height in pixels, 0 for a null handle.
 *
 * # Safety
 * `image` must be null or a live handle.
 */
size_t ggmm_image_height(const struct GgmmImage *image);

/**
 * Copies the row-major pixel values into `dst`, which holds `len` doubles;
 * `len` must equal width * height.
 *
 * # Safety
 * `image` must be a live handle and `dst` must point to `len` writable doubles.
 */
enum GgmmStatus ggmm_image_copy_pixels(const struct GgmmImage *image, double *dst, size_t len);

/**
 * Releases an image. Null is ignored.
 *
 * # Safety
 * `image` must be null or a handle not yet freed.
 */
void ggmm_image_free(struct GgmmImage *image);

/**
 * Block-averages by `q` and adds Gaussian noise of standard deviation
 * `noise_sigma` drawn from `seed`.
 *
 * # Safety
 * `hr` must be a live handle and `out` writable.
 */
enum GgmmStatus ggmm_degrade(const struct GgmmImage *hr,
                             size_t q,
                             double noise_sigma,
                             uint64_t seed,
                             struct GgmmImage **out);

/**
 * Pixel replication by `q`.
 *
 * # Safety
 * `lr` must be a live handle and `out` writable.
 */
enum GgmmStatus ggmm_upsample_nearest(const struct GgmmImage *lr, size_t q, struct GgmmImage **out);

/**
 * PSNR in dB; `+inf` for identical images.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` writable.
 */
enum GgmmStatus ggmm_psnr(const struct GgmmImage *a,
                          const struct GgmmImage *b,
                          double peak,
                          double *out);

/**
 * Default training parameters.
 */
struct GgmmTrainConfig ggmm_train_config_default(void);

/**
 * Trains a joint model on a full HR/LR pair (no cropping). `config` may be
 * null for defaults. If `final_nll` is non-null it receives the last mean
 * negative log-likelihood.
 *
 * # Safety
 * `hr` and `lr` must be live handles, `config` null or readable, `out`
 * writable, `final_nll` null or writable.
 */
enum GgmmStatus ggmm_model_train(const struct GgmmImage *hr,
                                 const struct GgmmImage *lr,
                                 const struct GgmmTrainConfig *config,
                                 struct GgmmModel **out,
                                 double *final_nll);

/**
 * Reads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum GgmmStatus ggmm_model_load(const char *path, struct GgmmModel **out);

/**
 * Writes a model JSON file.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum GgmmStatus ggmm_model_save(const struct GgmmModel *model, const char *path);

/**
 * Number of mixture components, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ggmm_model_components(const struct GgmmModel *model);

/**
 * Copies the component shape parameters into `dst` (`len` must equal the
 * component count).
 *
 * # Safety
 * `model` must be a live handle and `dst` must point to `len` writable doubles.
 */
enum GgmmStatus ggmm_model_betas(const struct GgmmModel *model, double *dst, size_t len);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void ggmm_model_free(struct GgmmModel *model);

/**
 * Reconstructs an HR image of `q` times the LR size.
 *
 * # Safety
 * `lr` and `model` must be live handles and `out` writable.
 */
enum GgmmStatus ggmm_super_resolve(const struct GgmmImage *lr,
                                   const struct GgmmModel *model,
                                   struct GgmmImage **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GGMM_SR_H */
