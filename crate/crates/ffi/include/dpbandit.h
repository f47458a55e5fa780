#ifndef DPBANDIT_H
#define DPBANDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum DpbStatus {
  DPB_STATUS_OK = 0,
  DPB_STATUS_INVALID_ARGUMENT = 1,
  DPB_STATUS_NULL_POINTER = 2,
  DPB_STATUS_SENSITIVITY_VIOLATION = 3,
  DPB_STATUS_EMPTY_COUNTER = 4,
  DPB_STATUS_PROTOCOL_VIOLATION = 5,
  DPB_STATUS_DIMENSION_MISMATCH = 6,
  DPB_STATUS_CONFIG = 7,
  DPB_STATUS_IO = 8,
  DPB_STATUS_INTERNAL = 9,
  DPB_STATUS_PANIC = 10,
} DpbStatus;

// Bandit policy: UCB, private UCB, OFUL or reward-private linear UCB.
typedef struct DpbPolicy DpbPolicy;

// Private continual counter of a stream of values in [0, 1].
typedef struct DpbTreeCounter DpbTreeCounter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *dpb_last_error(void);

// Creates a counter with privacy budget `eps`; `eps = INFINITY` disables
// noise.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum DpbStatus dpb_counter_new(double eps, uint64_t seed, struct DpbTreeCounter **out);

// # Safety
// `counter` must be NULL or a handle from [`dpb_counter_new`] not yet
// freed.
void dpb_counter_free(struct DpbTreeCounter *counter);

// Appends `y` in [0, 1].
//
// # Safety
// `counter` must be a live handle.
enum DpbStatus dpb_counter_add(struct DpbTreeCounter *counter, double y);

// Writes the noisy running sum to `out`.
//
// # Safety
// `counter` must be a live handle and `out` writable.
enum DpbStatus dpb_counter_release(struct DpbTreeCounter *counter, double *out);

// Number of values added, or 0 for a NULL handle.
//
// # Safety
// `counter` must be NULL or a live handle.
uint64_t dpb_counter_len(const struct DpbTreeCounter *counter);

// High-probability radius of a counter's noise after `t` values.
//
// # Safety
// `out` must be writable.
enum DpbStatus dpb_noise_bound(uint64_t t, double eps, double delta_fail, double *out);

// Max-information bound, in bits, of ε-DP gathering over `horizon` rounds.
//
// # Safety
// `out` must be writable.
enum DpbStatus dpb_max_info_bound(double eps, uint64_t horizon, double beta, double *out);

// `max((alpha - beta) / 2^k, 0)`.
double dpb_pvalue_correction(double alpha, double beta, double k);

// UCB1 with confidence parameter `delta`.
//
// # Safety
// `out` must be writable.
enum DpbStatus dpb_policy_ucb_new(size_t arms, double delta, struct DpbPolicy **out);

// Private UCB with total budget `eps` split evenly across arms.
//
// # Safety
// `out` must be writable.
enum DpbStatus dpb_policy_privucb_new(size_t arms,
                                      size_t horizon,
                                      double eps,
                                      double delta,
                                      uint64_t seed,
                                      struct DpbPolicy **out);

// OFUL when `eps <= 0`, reward-private linear UCB with budget `eps`
// otherwise.
//
// # Safety
// `out` must be writable.
enum DpbStatus dpb_policy_linucb_new(size_t arms,
                                     size_t dim,
                                     size_t horizon,
                                     double lambda,
                                     double delta,
                                     double eps,
                                     uint64_t seed,
                                     struct DpbPolicy **out);

// # Safety
// `policy` must be NULL or a live handle.
void dpb_policy_free(struct DpbPolicy *policy);

// Chooses a 0-based arm for 1-based `round`. Linear policies read
// `arms * dim` context values, arm-major, from `contexts`; other policies
// ignore it and accept NULL.
//
// # Safety
// `policy` must be a live handle, `arm` writable, and `contexts` readable
// for `arms * dim` doubles when the policy is linear.
enum DpbStatus dpb_policy_select(struct DpbPolicy *policy,
                                 size_t round,
                                 const double *contexts,
                                 size_t *arm);

// Feeds back the reward of `arm`; linear policies also read the arm's
// `dim` context values from `context`.
//
// # Safety
// `policy` must be a live handle; `context` must be readable for `dim`
// doubles when the policy is linear.
enum DpbStatus dpb_policy_observe(struct DpbPolicy *policy,
                                  size_t arm,
                                  const double *context,
                                  double reward);

// Runs the experiment in the config file at `config_path`, writing outputs
// to `out_dir` (or the config's `out` when NULL).
//
// # Safety
// `config_path` must be a NUL-terminated string; `out_dir` NULL or one.
enum DpbStatus dpb_run_experiment(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPBANDIT_H */
