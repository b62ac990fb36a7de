#ifndef TREEMEM_H
#define TREEMEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every exported function.
 */
typedef enum TmStatus {
  TM_STATUS_OK = 0,
  TM_STATUS_NULL_POINTER = 1,
  TM_STATUS_INVALID_ARGUMENT = 2,
  TM_STATUS_CONFIG = 3,
  /**
   * A predicted IoU outside [0, 1].
   */
  TM_STATUS_DOMAIN = 4,
  /**
   * The decode callback failed or broke the response contract.
   */
  TM_STATUS_BACKEND = 5,
  TM_STATUS_BUFFER_TOO_SMALL = 6,
  TM_STATUS_PANIC = 7,
} TmStatus;

/**
 * Opaque single-object tracker.
 */
typedef struct TmTracker TmTracker;

/**
 * Search and memory hyperparameters.
 */
typedef struct TmHyperparams {
  size_t pathways;
  size_t memory_frames;
  double epsilon;
  double delta_conf;
  double delta_iou;
  double w_low;
  double w_high;
  /**
   * Decimal places for the distinct-IoU test; negative disables rounding.
   */
  int32_t iou_rounding_decimals;
} TmHyperparams;

/**
 * One decode call handed to the C callback. All pointers are valid only
 * for the duration of the call.
 */
typedef struct TmDecodeRequest {
  uint32_t object_id;
  uint32_t time;
  uint32_t width;
  uint32_t height;
  /**
   * Number of memory entries, prompt first, ascending frame index.
   */
  size_t bank_len;
  const uint32_t *bank_frames;
  const double *bank_weights;
  /**
   * `bank_len` masks back to back, each `width * height` bytes.
   */
  const uint8_t *bank_masks;
} TmDecodeRequest;

/**
 * Filled in by the callback.
 */
typedef struct TmDecodeResponse {
  /**
   * Shared by all three candidates.
   */
  double occlusion_score;
  double ious[3];
  /**
   * Three masks back to back, each `width * height` bytes; zeroed on entry.
   */
  uint8_t *masks;
} TmDecodeResponse;

/**
 * Decode callback; returns 0 on success.
 */
typedef int32_t (*TmDecodeFn)(void *user,
                              const struct TmDecodeRequest *request,
                              struct TmDecodeResponse *response);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf`, and returns the buffer size needed (0 when there is no error).
 * Truncates when `cap` is too small. `buf` may be null to query the size.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t tm_last_error(char *buf, size_t cap);

/**
 * Library version, a static NUL-terminated string.
 */
const char *tm_version(void);

/**
 * # Safety
 * `out` must be null or point to a writable `TmHyperparams`.
 */
enum TmStatus tm_hyperparams_default(struct TmHyperparams *out);

/**
 * `TM_STATUS_CONFIG` with the violated constraint as the error message.
 *
 * # Safety
 * `h` must be null or point to a valid `TmHyperparams`.
 */
enum TmStatus tm_hyperparams_validate(const struct TmHyperparams *h);

/**
 * Modulation weights by ascending-occlusion rank, written to `out[0..n]`.
 *
 * # Safety
 * `occlusion_scores` and `out` must point to `n` readable / writable doubles.
 */
enum TmStatus tm_modulation_weights(const double *occlusion_scores,
                                    size_t n,
                                    double w_low,
                                    double w_high,
                                    double *out);

/**
 * Region similarity J (IoU; 1 when both masks are empty).
 *
 * # Safety
 * `pred` and `gt` must point to `width * height` bytes; `out` to a double.
 */
enum TmStatus tm_region_j(const uint8_t *pred,
                          const uint8_t *gt,
                          uint32_t width,
                          uint32_t height,
                          double *out);

/**
 * Contour accuracy F with a boundary tolerance of `tolerance` pixels.
 *
 * # Safety
 * As for [`tm_region_j`].
 */
enum TmStatus tm_contour_f(const uint8_t *pred,
                           const uint8_t *gt,
                           uint32_t width,
                           uint32_t height,
                           uint32_t tolerance,
                           double *out);

/**
 * Run-length encodes a mask into `buf` (NUL-terminated). `*needed` gets the
 * required size including the NUL; `TM_STATUS_BUFFER_TOO_SMALL` if `cap`
 * is less.
 *
 * # Safety
 * `bits` must point to `width * height` bytes, `buf` to `cap` writable bytes
 * (or be null with `cap == 0`), `needed` to a `size_t`.
 */
enum TmStatus tm_mask_encode_rle(const uint8_t *bits,
                                 uint32_t width,
                                 uint32_t height,
                                 char *buf,
                                 size_t cap,
                                 size_t *needed);

/**
 * Decodes a run-length string into `out[0 .. width * height]`.
 *
 * # Safety
 * `rle` must be a NUL-terminated string; `out` must point to
 * `width * height` writable bytes.
 */
enum TmStatus tm_mask_decode_rle(const char *rle, uint32_t width, uint32_t height, uint8_t *out);

/**
 * Creates a tracker from a prompt mask at frame 0. Free with [`tm_tracker_free`].
 *
 * # Safety
 * `h` must point to valid hyperparameters, `prompt` to `width * height`
 * bytes, `out` to a writable pointer. `user` must stay valid for the
 * tracker's lifetime.
 */
enum TmStatus tm_tracker_new(const struct TmHyperparams *h,
                             uint32_t object_id,
                             const uint8_t *prompt,
                             uint32_t width,
                             uint32_t height,
                             TmDecodeFn decode,
                             void *user,
                             struct TmTracker **out);

/**
 * Advances the tracker by one frame. On failure the tracker is unchanged.
 *
 * # Safety
 * `tracker` must come from [`tm_tracker_new`] and not be freed.
 */
enum TmStatus tm_tracker_step(struct TmTracker *tracker);

/**
 * Current time (0 right after creation) and best cumulative score.
 *
 * # Safety
 * `tracker` as for [`tm_tracker_step`]; outputs may be null.
 */
enum TmStatus tm_tracker_status(const struct TmTracker *tracker,
                                uint32_t *time,
                                double *best_score);

/**
 * Writes the best pathway's masks, frame 0 first, into `masks` and their
 * predicted IoUs into `ious` (may be null). Both hold `time + 1` entries.
 *
 * # Safety
 * `masks` must point to `cap_frames * width * height` writable bytes and
 * `ious`, if not null, to `cap_frames` doubles.
 */
enum TmStatus tm_tracker_masklet(const struct TmTracker *tracker,
                                 uint8_t *masks,
                                 double *ious,
                                 size_t cap_frames);

/**
 * # Safety
 * `tracker` must be null or come from [`tm_tracker_new`]; it is invalid afterwards.
 */
void tm_tracker_free(struct TmTracker *tracker);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEMEM_H */
