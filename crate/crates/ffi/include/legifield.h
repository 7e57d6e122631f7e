#ifndef LEGIFIELD_H
#define LEGIFIELD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LfPlanner {
  LF_PLANNER_POTENTIAL_FIELD = 0,
  LF_PLANNER_BASELINE = 1,
} LfPlanner;

typedef enum LfStatus {
  LF_STATUS_OK = 0,
  LF_STATUS_NULL_POINTER = 1,
  LF_STATUS_INVALID_UTF8 = 2,
  LF_STATUS_PARSE = 3,
  LF_STATUS_VALIDATION = 4,
  LF_STATUS_IO = 5,
  LF_STATUS_UNKNOWN_TARGET = 6,
  LF_STATUS_DEGENERATE_SCENE = 7,
  LF_STATUS_NOT_CONVERGED = 8,
  LF_STATUS_BUFFER_TOO_SMALL = 9,
  LF_STATUS_INTERNAL = 10,
} LfStatus;

/**
 * Opaque scene handle.
 */
typedef struct LfScene LfScene;

/**
 * Opaque trajectory handle.
 */
typedef struct LfTrajectory LfTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a scene file. On success `*out` receives a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LfStatus lf_scene_load(const char *path, struct LfScene **out);

/**
 * Parses a scene from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LfStatus lf_scene_from_json(const char *json, struct LfScene **out);

/**
 * Generates the seeded cluttered scene in the default workspace.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LfStatus lf_scene_generate_cluttered(size_t n,
                                          uint64_t seed,
                                          double min_gap,
                                          struct LfScene **out);

/**
 * Generates an evenly spaced row of `n` objects.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LfStatus lf_scene_generate_uncluttered(double spacing, size_t n, struct LfScene **out);

/**
 * Number of objects, or 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or a live handle.
 */
size_t lf_scene_object_count(const struct LfScene *scene);

/**
 * Writes the clutteredness ξ and divergence D of the scene.
 *
 * # Safety
 * `scene` must be a live handle; `xi` and `divergence` valid pointers.
 */
enum LfStatus lf_scene_measure(const struct LfScene *scene, double *xi, double *divergence);

/**
 * # Safety
 * `scene` must be null or a handle not yet freed.
 */
void lf_scene_free(struct LfScene *scene);

/**
 * Plans a trajectory to `target`. `config_json` may be null for defaults or
 * a JSON object overriding any part of the run configuration.
 *
 * A planner stall returns `NotConverged` and still hands back the partial
 * trajectory in `*out`; so does running out of iterations.
 *
 * # Safety
 * `scene` must be a live handle, `config_json` null or NUL-terminated, and
 * `out` a valid pointer.
 */
enum LfStatus lf_plan(const struct LfScene *scene,
                      uint32_t target,
                      enum LfPlanner planner,
                      const char *config_json,
                      struct LfTrajectory **out);

/**
 * Number of waypoints, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t lf_trajectory_len(const struct LfTrajectory *traj);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
bool lf_trajectory_converged(const struct LfTrajectory *traj);

/**
 * Copies the waypoints as `x0, y0, z0, x1, ...` into `buf`, which must hold
 * `3 * lf_trajectory_len(traj)` doubles.
 *
 * # Safety
 * `traj` must be a live handle and `buf` valid for `capacity` writes.
 */
enum LfStatus lf_trajectory_waypoints(const struct LfTrajectory *traj,
                                      double *buf,
                                      size_t capacity);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void lf_trajectory_free(struct LfTrajectory *traj);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next `lf_*` call on the same thread.
 */
const char *lf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEGIFIELD_H */
