#ifndef EH_UPLINK_H
#define EH_UPLINK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Values 2 to 4 match the command-line exit codes.
typedef enum EhStatus {
  EH_STATUS_OK = 0,
  EH_STATUS_FAILED = 1,
  EH_STATUS_CONFIG_ERROR = 2,
  EH_STATUS_NUMERICAL_FAULT = 3,
  EH_STATUS_ORACLE_TOO_LARGE = 4,
  EH_STATUS_NULL_POINTER = 5,
  EH_STATUS_INVALID_ARGUMENT = 6,
  EH_STATUS_BUFFER_TOO_SMALL = 7,
  EH_STATUS_PANIC = 8,
} EhStatus;

// Opaque experiment configuration.
typedef struct EhConfig EhConfig;

// Opaque running simulation.
typedef struct EhEnv EhEnv;

// Outcome of [`eh_run_experiment`]. Absent losses are NaN.
typedef struct EhRunSummary {
  uint64_t steps;
  double final_reward;
  double final_p_loss;
  double final_train_loss;
} EhRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// NUL-terminated crate version. Static storage; do not free.
const char *eh_version(void);

// Copies the last error message of this thread into `buf`.
//
// # Safety
// `buf` must be valid for `len` bytes or null; `needed` must be null or
// writable.
enum EhStatus eh_last_error(char *buf, size_t len, size_t *needed);

// Default configuration.
//
// # Safety
// `out` must be writable.
enum EhStatus eh_config_default(struct EhConfig **out);

// Parses a `key = value` document.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum EhStatus eh_config_parse(const char *text, struct EhConfig **out);

// Loads a config file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum EhStatus eh_config_load(const char *path, struct EhConfig **out);

// Serializes a config; the text parses back to an equal config.
//
// # Safety
// `cfg` must be a live handle; see [`eh_last_error`] for the buffer rules.
enum EhStatus eh_config_to_text(const struct EhConfig *cfg, char *buf, size_t len, size_t *needed);

// # Safety
// `cfg` must be null or a handle not yet freed.
void eh_config_free(struct EhConfig *cfg);

// Runs the configured algorithm and writes its metric file.
//
// # Safety
// `cfg` must be a live handle; `out` must be null or writable.
enum EhStatus eh_run_experiment(const struct EhConfig *cfg, struct EhRunSummary *out);

// Simulation of the config's scenario under `seed`.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum EhStatus eh_env_new(const struct EhConfig *cfg, uint64_t seed, struct EhEnv **out);

// # Safety
// `env` must be null or a handle not yet freed.
void eh_env_free(struct EhEnv *env);

// Number of UEs, or 0 for a null handle.
//
// # Safety
// `env` must be null or a live handle.
size_t eh_env_n_ues(const struct EhEnv *env);

// Current slot index, or 0 for a null handle.
//
// # Safety
// `env` must be null or a live handle.
uint64_t eh_env_time(const struct EhEnv *env);

// Writes the N battery levels into `out`.
//
// # Safety
// `env` must be a live handle; `out` must be valid for `len` writes.
enum EhStatus eh_env_batteries(const struct EhEnv *env, uint32_t *out, size_t len);

// Executes one slot scheduling the `k` distinct UE indices in `selected`.
//
// # Safety
// `env` must be a live handle; `selected` must be valid for `k` reads;
// `sum_rate` must be null or writable.
enum EhStatus eh_env_step(struct EhEnv *env, const size_t *selected, size_t k, double *sum_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EH_UPLINK_H */
