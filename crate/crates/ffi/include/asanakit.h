#ifndef ASANAKIT_H
#define ASANAKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AsanaKind {
  ASANA_KIND_HAND = 0,
  ASANA_KIND_BODY = 1,
} AsanaKind;

typedef enum AsanaStatus {
  ASANA_STATUS_OK = 0,
  ASANA_STATUS_NULL_ARGUMENT = 1,
  ASANA_STATUS_INVALID_ARGUMENT = 2,
  ASANA_STATUS_IO = 3,
  ASANA_STATUS_PARSE = 4,
  ASANA_STATUS_VERSION_MISMATCH = 5,
  ASANA_STATUS_BAD_FRAME = 6,
  ASANA_STATUS_MODEL = 7,
  ASANA_STATUS_BUFFER_TOO_SMALL = 8,
  ASANA_STATUS_PANIC = 99,
} AsanaStatus;

/*
 The outcome of checking one frame against a profile.
 */
typedef struct AsanaCorrection AsanaCorrection;

/*
 A trained classifier.
 */
typedef struct AsanaModel AsanaModel;

/*
 A pose profile.
 */
typedef struct AsanaProfile AsanaProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *asana_version(void);

/*
 Copies the calling thread's last error message (empty after a success).

 # Safety
 `buf` must point to `cap` writable bytes or be null; `needed` may be null.
 */
enum AsanaStatus asana_last_error(char *buf, size_t cap, size_t *needed);

/*
 Loads a model file written by `asanakit train`.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum AsanaStatus asana_model_load(const char *path, struct AsanaModel **out);

/*
 # Safety
 `model` must come from [`asana_model_load`] and not be used afterwards.
 */
void asana_model_free(struct AsanaModel *model);

/*
 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum AsanaStatus asana_model_kind(const struct AsanaModel *model, enum AsanaKind *out);

/*
 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum AsanaStatus asana_model_class_count(const struct AsanaModel *model, size_t *out);

/*
 Copies the name of class `index`.

 # Safety
 `model` must be a live handle; `buf` must point to `cap` writable bytes.
 */
enum AsanaStatus asana_model_class_name(const struct AsanaModel *model,
                                        size_t index,
                                        char *buf,
                                        size_t cap,
                                        size_t *needed);

/*
 Classifies one frame of `len` values (`x, y, confidence` per landmark).
 `label` receives the class index and `score` its score.

 # Safety
 `landmarks` must point to `len` readable doubles; `label` and `score`
 must be writable (either may be null to skip it).
 */
enum AsanaStatus asana_model_predict(const struct AsanaModel *model,
                                     const double *landmarks,
                                     size_t len,
                                     double min_confidence,
                                     size_t *label,
                                     double *score);

/*
 Loads a YAML pose profile.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum AsanaStatus asana_profile_load(const char *path, struct AsanaProfile **out);

/*
 # Safety
 `profile` must come from [`asana_profile_load`] and not be used afterwards.
 */
void asana_profile_free(struct AsanaProfile *profile);

/*
 Checks one frame against a profile. The frame is read with the
 profile's landmark layout.

 # Safety
 `landmarks` must point to `len` readable doubles; `out` must be writable.
 */
enum AsanaStatus asana_evaluate(const struct AsanaProfile *profile,
                                const double *landmarks,
                                size_t len,
                                double min_confidence,
                                struct AsanaCorrection **out);

/*
 # Safety
 `correction` must come from [`asana_evaluate`] and not be used afterwards.
 */
void asana_correction_free(struct AsanaCorrection *correction);

/*
 `out` receives 1 if every constraint was met, else 0.

 # Safety
 `correction` must be a live handle; `out` must be writable.
 */
enum AsanaStatus asana_correction_is_correct(const struct AsanaCorrection *correction,
                                             int32_t *out);

/*
 Number of deviations.

 # Safety
 `correction` must be a live handle; `out` must be writable.
 */
enum AsanaStatus asana_correction_count(const struct AsanaCorrection *correction, size_t *out);

/*
 Reads deviation `index`: its excess beyond tolerance and its message.

 # Safety
 `correction` must be a live handle; `excess` may be null; `buf` must
 point to `cap` writable bytes.
 */
enum AsanaStatus asana_correction_get(const struct AsanaCorrection *correction,
                                      size_t index,
                                      double *excess,
                                      char *buf,
                                      size_t cap,
                                      size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASANAKIT_H */
