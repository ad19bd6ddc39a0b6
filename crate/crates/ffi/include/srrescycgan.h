#ifndef SRRESCYCGAN_H
#define SRRESCYCGAN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SrcycStatus {
  SRCYC_STATUS_OK = 0,
  SRCYC_STATUS_NULL_POINTER = 1,
  SRCYC_STATUS_INVALID_ARGUMENT = 2,
  SRCYC_STATUS_IO = 3,
  SRCYC_STATUS_CHECKPOINT = 4,
  SRCYC_STATUS_SHAPE = 5,
  SRCYC_STATUS_INTERNAL = 6,
  SRCYC_STATUS_PANIC = 7,
} SrcycStatus;

// Opaque handle to a loaded SR generator.
typedef struct SrcycModel SrcycModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *srcyc_version(void);

// Message for the last failed call on this thread, or null. The pointer stays
// valid until the next call on the same thread.
const char *srcyc_last_error_message(void);

// Loads the SR generator from a training checkpoint. On success `*out` owns a
// handle to release with `srcyc_model_free`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SrcycStatus srcyc_model_load(const char *path, struct SrcycModel **out);

// Releases a handle from `srcyc_model_load`. Null is ignored.
//
// # Safety
// `model` must come from `srcyc_model_load` and not be used afterwards.
void srcyc_model_free(struct SrcycModel *model);

// Upscaling factor of the loaded model.
//
// # Safety
// `model` must be a live handle and `scale` a valid pointer.
enum SrcycStatus srcyc_model_scale(const struct SrcycModel *model, size_t *scale);

// Super-resolves a `channels×height×width` image into `out`, which must hold
// `channels·(scale·height)·(scale·width)` floats. A nonzero `ensemble`
// averages over the 8 flips/rotations.
//
// # Safety
// `data` must point to `channels·height·width` floats and `out` to `out_len`.
enum SrcycStatus srcyc_super_resolve(const struct SrcycModel *model,
                                     const float *data,
                                     size_t channels,
                                     size_t height,
                                     size_t width,
                                     bool ensemble,
                                     float *out,
                                     size_t out_len);

// Noise standard deviation estimate in 8-bit units.
//
// # Safety
// `data` must point to `channels·height·width` floats.
enum SrcycStatus srcyc_estimate_noise_sigma(const float *data,
                                            size_t channels,
                                            size_t height,
                                            size_t width,
                                            double *sigma);

// PSNR in dB with peak 1.0; identical images give +infinity.
//
// # Safety
// `a` and `b` must each point to `channels·height·width` floats.
enum SrcycStatus srcyc_psnr(const float *a,
                            const float *b,
                            size_t channels,
                            size_t height,
                            size_t width,
                            double *value);

// Mean SSIM over channels.
//
// # Safety
// `a` and `b` must each point to `channels·height·width` floats.
enum SrcycStatus srcyc_ssim(const float *a,
                            const float *b,
                            size_t channels,
                            size_t height,
                            size_t width,
                            double *value);

// Bicubic downsample by `scale`, Gaussian noise of `sigma` (8-bit units) and
// JPEG at `jpeg_quality` (0 disables it). `out` must hold
// `channels·(height/scale)·(width/scale)` floats.
//
// # Safety
// `data` must point to `channels·height·width` floats and `out` to `out_len`.
enum SrcycStatus srcyc_degrade(const float *data,
                               size_t channels,
                               size_t height,
                               size_t width,
                               size_t scale,
                               double sigma,
                               uint8_t jpeg_quality,
                               uint64_t seed,
                               float *out,
                               size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRRESCYCGAN_H */
