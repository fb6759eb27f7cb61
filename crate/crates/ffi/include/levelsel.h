#ifndef LEVELSEL_H
#define LEVELSEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Grayscale image, stored with its synthetic frame if one was requested.
 */
typedef struct LsImage LsImage;

/**
 * Saliency map on the Khalimsky grid of an image.
 */
typedef struct LsSaliency LsSaliency;

typedef int32_t LsStatus;

#define LS_OK 0

/**
 * A required pointer argument was null.
 */
#define LS_ERR_NULL 1

#define LS_ERR_IO 2

/**
 * Input bytes could not be decoded.
 */
#define LS_ERR_FORMAT 3

#define LS_ERR_INVALID_ARGUMENT 4

/**
 * A Rust panic was caught at the boundary.
 */
#define LS_ERR_PANIC 5

/**
 * An internal consistency check failed.
 */
#define LS_ERR_INTERNAL 6

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread; empty if none. Valid until the next call
 * that fails on the same thread.
 */
const char *ls_last_error_message(void);

/**
 * Library version, static string.
 */
const char *ls_version(void);

/**
 * Image from `width * height` row-major values. With `median_frame`, a one-pixel frame at the
 * border median is added before analysis.
 *
 * # Safety
 * `data` must point to `width * height` readable doubles; `out` must be writable.
 */
LsStatus ls_image_new(size_t width,
                      size_t height,
                      const double *data,
                      bool median_frame,
                      struct LsImage **out);

/**
 * Image read from a PGM or PNG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
LsStatus ls_image_load(const char *path, bool median_frame, struct LsImage **out);

/**
 * Width without the frame; 0 for a null handle.
 *
 * # Safety
 * `img` must be null or a live handle.
 */
size_t ls_image_width(const struct LsImage *img);

/**
 * Height without the frame; 0 for a null handle.
 *
 * # Safety
 * `img` must be null or a live handle.
 */
size_t ls_image_height(const struct LsImage *img);

/**
 * # Safety
 * `img` must be null or a handle not yet freed.
 */
void ls_image_free(struct LsImage *img);

/**
 * Fixed-λ simplification. Writes `width * height` region means into `out` and the number of
 * regions into `regions` (may be null).
 *
 * # Safety
 * `img` must be a live handle; `out` must hold `out_len` writable doubles.
 */
LsStatus ls_simplify(const struct LsImage *img,
                     double lambda,
                     uint64_t min_area,
                     double *out,
                     size_t out_len,
                     size_t *regions);

/**
 * Saliency map of `img` after removing shapes under `min_area` pixels.
 *
 * # Safety
 * `img` must be a live handle; `out` must be writable.
 */
LsStatus ls_saliency_compute(const struct LsImage *img, uint64_t min_area, struct LsSaliency **out);

/**
 * # Safety
 * `sal` must be a live handle and `path` a NUL-terminated string.
 */
LsStatus ls_saliency_write(const struct LsSaliency *sal, const char *path);

/**
 * Reads a SALIENCY file. `frame` is the number of synthetic rings the source image had
 * (1 for a median-framed image).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
LsStatus ls_saliency_read(const char *path, size_t frame, struct LsSaliency **out);

/**
 * Khalimsky grid width (2W+1, frame included); 0 for a null handle.
 *
 * # Safety
 * `sal` must be null or a live handle.
 */
size_t ls_saliency_kwidth(const struct LsSaliency *sal);

/**
 * Khalimsky grid height (2H+1, frame included); 0 for a null handle.
 *
 * # Safety
 * `sal` must be null or a live handle.
 */
size_t ls_saliency_kheight(const struct LsSaliency *sal);

/**
 * Borrowed pointer to `kwidth * kheight` face values, valid until the handle is freed.
 *
 * # Safety
 * `sal` must be null or a live handle.
 */
const double *ls_saliency_data(const struct LsSaliency *sal);

/**
 * Largest saliency value; 0 for a null handle.
 *
 * # Safety
 * `sal` must be null or a live handle.
 */
double ls_saliency_max(const struct LsSaliency *sal);

/**
 * # Safety
 * `sal` must be null or a handle not yet freed.
 */
void ls_saliency_free(struct LsSaliency *sal);

/**
 * Partition at threshold `t`: regions are pixels joined across edges with saliency `<= t`.
 * Writes one label per pixel (frame excluded) and the region count (may be null).
 *
 * # Safety
 * `sal` must be a live handle; `labels` must hold `len` writable values.
 */
LsStatus ls_threshold(const struct LsSaliency *sal,
                      double t,
                      uint32_t *labels,
                      size_t len,
                      size_t *regions);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* LEVELSEL_H */
