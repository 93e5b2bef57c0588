#ifndef PERTURBSHIELD_H
#define PERTURBSHIELD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Longest kernel set a [`PsConfig`] can carry.
 */
#define PS_MAX_KERNELS 16

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_IO = 2,
  PS_STATUS_UNSUPPORTED_FORMAT = 3,
  PS_STATUS_INVALID_DIMENSIONS = 4,
  PS_STATUS_INVALID_PARAMETER = 5,
  PS_STATUS_CHANNEL_MISMATCH = 6,
  PS_STATUS_INTERNAL = 7,
} PsStatus;

typedef enum PsColorSpace {
  PS_COLOR_SPACE_RGB = 0,
  PS_COLOR_SPACE_GRAY = 1,
} PsColorSpace;

typedef enum PsDefense {
  PS_DEFENSE_ADAPTIVE_GAUSSIAN = 0,
  PS_DEFENSE_ADAPTIVE_GK = 1,
  PS_DEFENSE_FAST_ADAPTIVE_GK = 2,
  PS_DEFENSE_GK_MEANS = 3,
  PS_DEFENSE_FAST_GK_MEANS = 4,
  PS_DEFENSE_KMEANS = 5,
  PS_DEFENSE_BIT_DEPTH = 6,
  PS_DEFENSE_JPEG = 7,
  PS_DEFENSE_MEDIAN = 8,
  PS_DEFENSE_GAUSSIAN = 9,
  PS_DEFENSE_NONE = 10,
} PsDefense;

/**
 * Opaque edge detection result.
 */
typedef struct PsEdges PsEdges;

/**
 * Opaque image handle.
 */
typedef struct PsRaster PsRaster;

/**
 * Pipeline parameters. Fill with [`ps_config_default`] and override fields.
 */
typedef struct PsConfig {
  enum PsDefense defense;
  double lambda_v;
  uint8_t alpha;
  /**
   * The first `n_kernels` entries are used.
   */
  size_t kernels[PS_MAX_KERNELS];
  size_t n_kernels;
  size_t colors;
  uint8_t bits;
  uint8_t quality;
  size_t median_size;
  size_t gaussian_size;
  uint64_t seed;
  size_t soft_size;
  size_t sample_stride;
} PsConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Copies `len` bytes of interleaved samples into a new raster.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum PsStatus ps_raster_new(uint32_t width,
                            uint32_t height,
                            enum PsColorSpace colorspace,
                            const uint8_t *data,
                            size_t len,
                            struct PsRaster **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PsStatus ps_raster_load(const char *path, struct PsRaster **out);

/**
 * Writes PNG, PPM or PGM depending on the extension of `path`.
 *
 * # Safety
 * `raster` must be a live handle and `path` a NUL-terminated string.
 */
enum PsStatus ps_raster_save(const struct PsRaster *raster, const char *path);

/**
 * Releases a raster. NULL is ignored.
 *
 * # Safety
 * `raster` must come from this library and not be used afterwards.
 */
void ps_raster_free(struct PsRaster *raster);

/**
 * # Safety
 * `raster` must be NULL or a live handle.
 */
uint32_t ps_raster_width(const struct PsRaster *raster);

/**
 * # Safety
 * `raster` must be NULL or a live handle.
 */
uint32_t ps_raster_height(const struct PsRaster *raster);

/**
 * # Safety
 * `raster` must be NULL or a live handle.
 */
size_t ps_raster_channels(const struct PsRaster *raster);

/**
 * Borrowed pointer to the interleaved samples; `len` receives their count.
 * Valid while the handle lives.
 *
 * # Safety
 * `raster` must be NULL or a live handle; `len` NULL or writable.
 */
const uint8_t *ps_raster_data(const struct PsRaster *raster, size_t *len);

/**
 * Fills `out` with the default (headline) configuration.
 *
 * # Safety
 * `out` must be writable.
 */
enum PsStatus ps_config_default(struct PsConfig *out);

/**
 * Runs the configured defense.
 *
 * # Safety
 * `input` must be a live handle, `config` readable and `out` writable.
 */
enum PsStatus ps_defend(const struct PsRaster *input,
                        const struct PsConfig *config,
                        struct PsRaster **out);

/**
 * Auto-threshold Canny on the luminance of `input`.
 *
 * # Safety
 * `input` must be a live handle and `out` writable.
 */
enum PsStatus ps_canny(const struct PsRaster *input,
                       double lambda_v,
                       size_t soft_size,
                       struct PsEdges **out);

/**
 * Copies the binary mask (`soft = false`) or the soft map into a new raster.
 *
 * # Safety
 * `edges` must be a live handle and `out` writable.
 */
enum PsStatus ps_edges_map(const struct PsEdges *edges, bool soft, struct PsRaster **out);

/**
 * Writes the hysteresis thresholds (magnitude bins). Either pointer may be NULL.
 *
 * # Safety
 * `edges` must be a live handle.
 */
enum PsStatus ps_edges_thresholds(const struct PsEdges *edges, uint32_t *t_low, uint32_t *t_high);

/**
 * # Safety
 * `edges` must come from [`ps_canny`] and not be used afterwards.
 */
void ps_edges_free(struct PsEdges *edges);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERTURBSHIELD_H */
