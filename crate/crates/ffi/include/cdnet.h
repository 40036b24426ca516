#ifndef CDNET_H
#define CDNET_H

/* Generated by cbindgen from the cdnet-ffi crate; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every entry point.
 */
typedef enum CdnetStatus {
  /**
   * The call succeeded.
   */
  CDNET_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CDNET_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was malformed (bad mode, bad fraction, bad UTF-8, ...).
   */
  CDNET_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Tensor dimensions did not line up.
   */
  CDNET_STATUS_SHAPE_MISMATCH = 3,
  /**
   * A computation produced NaN or infinity.
   */
  CDNET_STATUS_NON_FINITE = 4,
  /**
   * The filesystem said no.
   */
  CDNET_STATUS_IO = 5,
  /**
   * An image file could not be decoded or encoded.
   */
  CDNET_STATUS_IMAGE = 6,
  /**
   * A checkpoint file was missing, truncated, or corrupt.
   */
  CDNET_STATUS_CHECKPOINT = 7,
  /**
   * A run configuration was invalid.
   */
  CDNET_STATUS_CONFIG = 8,
  /**
   * Training-specific state was invalid.
   */
  CDNET_STATUS_TRAINING = 9,
  /**
   * The caller's buffer is too small for the requested copy.
   */
  CDNET_STATUS_BUFFER_TOO_SMALL = 10,
  /**
   * The library panicked; see `cdnet_last_error` for details.
   */
  CDNET_STATUS_PANIC = 11,
} CdnetStatus;

/**
 * Opaque image handle: one batch entry, three channels for color
 * images, one channel for masks. Values live in `[0, 1]`.
 */
typedef struct CdnetImage CdnetImage;

/**
 * Opaque handle to a trained repair network.
 */
typedef struct CdnetNetwork CdnetNetwork;

/**
 * Restoration strategy for [`cdnet_decompress`] and [`cdnet_inpaint`].
 *
 * Any value other than the two constants below is rejected with
 * `InvalidArgument`, so garbage cannot select a strategy by accident.
 */
typedef uint32_t CdnetMode;

/**
 * Similar-texture selection plus threshold blending.
 */
#define CDNET_MODE_SELECTION 0

/**
 * Plain bilinear upscale of the thumbnail; references are ignored.
 */
#define CDNET_MODE_BASELINE 1

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cdnet_version(void);

/**
 * Message for the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing call on the same
 * thread. Never returns null; before any failure it is the empty string.
 */
const char *cdnet_last_error(void);

/**
 * Loads a PNG as a 256 x 256 RGB image, resizing if needed.
 *
 * On success `*out` owns the image; release it with `cdnet_image_free`.
 */
enum CdnetStatus cdnet_image_load(const char *path, struct CdnetImage **out);

/**
 * Loads a PNG as an RGB image at an arbitrary square size.
 */
enum CdnetStatus cdnet_image_load_sized(const char *path, size_t size, struct CdnetImage **out);

/**
 * Loads a grayscale PNG as a binary single-channel mask
 * (1 = pixel present, 0 = pixel missing).
 */
enum CdnetStatus cdnet_mask_load(const char *path, struct CdnetImage **out);

/**
 * Saves an image as a PNG. Three-channel handles are written as RGB,
 * single-channel handles as binary grayscale masks.
 */
enum CdnetStatus cdnet_image_save(const struct CdnetImage *image, const char *path);

/**
 * Builds an image from planar float data: `3 * height * width` values
 * in channel-major order (all red rows, then green, then blue),
 * each in `[0, 1]`.
 */
enum CdnetStatus cdnet_image_from_rgb(const float *data,
                                      size_t height,
                                      size_t width,
                                      struct CdnetImage **out);

/**
 * Copies an image's planar float data into `buffer`.
 *
 * `len` is the buffer capacity in floats; `channels * height * width`
 * are required (3 per pixel for color images, 1 for masks).
 */
enum CdnetStatus cdnet_image_to_rgb(const struct CdnetImage *image, float *buffer, size_t len);

/**
 * Reports an image's channel count, height, and width.
 */
enum CdnetStatus cdnet_image_dims(const struct CdnetImage *image,
                                  size_t *channels,
                                  size_t *height,
                                  size_t *width);

/**
 * Releases an image handle. Passing null is a no-op.
 */
void cdnet_image_free(struct CdnetImage *image);

/**
 * Builds a mask that removes a band along one border.
 *
 * `side` is one of `"left"`, `"right"`, `"top"`, `"bottom"`;
 * `fraction` in `[0, 1]` is the share of the image the band covers.
 */
enum CdnetStatus cdnet_mask_edge(const char *side,
                                 double fraction,
                                 size_t height,
                                 size_t width,
                                 struct CdnetImage **out);

/**
 * Builds a mask that removes the rectangle
 * `[y0, y0 + hole_height) x [x0, x0 + hole_width)`.
 */
enum CdnetStatus cdnet_mask_rect(size_t x0,
                                 size_t y0,
                                 size_t hole_height,
                                 size_t hole_width,
                                 size_t height,
                                 size_t width,
                                 struct CdnetImage **out);

/**
 * Builds a reproducible free-form stroke mask covering roughly
 * `fraction` of the image. The same seed always yields the same mask.
 */
enum CdnetStatus cdnet_mask_irregular(uint64_t seed,
                                      double fraction,
                                      size_t height,
                                      size_t width,
                                      struct CdnetImage **out);

/**
 * Loads a trained network from a checkpoint file.
 *
 * On success `*out` owns the network; release it with
 * `cdnet_network_free`. Optimizer state in the checkpoint is ignored.
 */
enum CdnetStatus cdnet_network_load(const char *path, struct CdnetNetwork **out);

/**
 * Releases a network handle. Passing null is a no-op.
 */
void cdnet_network_free(struct CdnetNetwork *network);

/**
 * Reports how many trainable parameters the network holds.
 */
enum CdnetStatus cdnet_network_param_count(const struct CdnetNetwork *network, size_t *count);

/**
 * Compresses a damaged image into a repaired thumbnail at one eighth
 * of the input resolution.
 *
 * Pixels missing under `mask` are zeroed before inference, so the
 * hole contents need not be meaningful.
 */
enum CdnetStatus cdnet_compress(const struct CdnetNetwork *network,
                                const struct CdnetImage *image,
                                const struct CdnetImage *mask,
                                struct CdnetImage **out);

/**
 * Restores a full-resolution image from a repaired thumbnail.
 *
 * Selection mode requires `damaged` and `mask`; `truth` is optional and
 * supplies cleaner references when the original is at hand. Baseline
 * mode upscales the thumbnail alone and rejects a non-null `truth`.
 * `threshold` controls how aggressively known pixels overwrite the
 * selected texture (0 keeps the pure selection).
 */
enum CdnetStatus cdnet_decompress(const struct CdnetImage *thumbnail,
                                  const struct CdnetImage *damaged,
                                  const struct CdnetImage *mask,
                                  const struct CdnetImage *truth,
                                  CdnetMode mode,
                                  double threshold,
                                  struct CdnetImage **out);

/**
 * Repairs a damaged image end to end: compress to a thumbnail, then
 * restore full resolution. Equivalent to `cdnet_compress` followed by
 * `cdnet_decompress` with the same image as the damaged reference.
 *
 * `truth` is optional (selection mode only, see `cdnet_decompress`).
 * If `out_thumbnail` is non-null it receives the intermediate
 * thumbnail as a separately owned handle.
 */
enum CdnetStatus cdnet_inpaint(const struct CdnetNetwork *network,
                               const struct CdnetImage *image,
                               const struct CdnetImage *mask,
                               const struct CdnetImage *truth,
                               CdnetMode mode,
                               double threshold,
                               struct CdnetImage **out_restored,
                               struct CdnetImage **out_thumbnail);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDNET_H */
