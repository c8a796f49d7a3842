#ifndef STSDISCORD_H
#define STSDISCORD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every `sd_*` call.
 */
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_PARAMETER = 2,
  SD_STATUS_DOMAIN = 3,
  SD_STATUS_NUMERIC = 4,
  SD_STATUS_POLE = 5,
  SD_STATUS_INCONSISTENT = 6,
  SD_STATUS_DEGENERATE = 7,
  SD_STATUS_ESTIMATION = 8,
  SD_STATUS_IO = 9,
  SD_STATUS_FORMAT = 10,
  SD_STATUS_PANIC = 99,
} SdStatus;

typedef enum SdInfoKind {
  SD_INFO_KIND_QUANTUM = 0,
  SD_INFO_KIND_CLASSICAL = 1,
} SdInfoKind;

typedef enum SdMethod {
  SD_METHOD_INVERSION = 0,
  SD_METHOD_BAYES = 1,
} SdMethod;

/**
 * Opaque homodyne dataset.
 */
typedef struct SdDataset SdDataset;

/**
 * Discord estimate with its uncertainty and resource count.
 */
typedef struct SdEstimate {
  double d_hat;
  double var_d;
  double ns_hat;
  double nt_hat;
  double var_ns;
  double var_nt;
  enum SdMethod method;
  uint64_t resources_m;
} SdEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sd_version(void);

/**
 * Binary entropy `h(x)` in nats, `x >= 1/2`.
 */
enum SdStatus sd_binary_entropy(double x, double *out);

/**
 * Gaussian discord of the STS `(n_s, n_t)`.
 */
enum SdStatus sd_sts_discord(double n_s, double n_t, double *out);

/**
 * Squeezed and anti-squeezed quadrature variances (vacuum = 1).
 */
enum SdStatus sd_quadrature_variances(double n_s, double n_t, double *s_sq, double *s_asq);

/**
 * `(n_s, n_t)` recovered from the two quadrature variances.
 */
enum SdStatus sd_invert_variances(double s_sq, double s_asq, double *n_s, double *n_t);

/**
 * Effective `(n_s, n_t)` of squeezing `r`, parasitic gain `gamma` and
 * detection efficiency `eta`.
 */
enum SdStatus sd_effective_photons(double r, double gamma, double eta, double *n_s, double *n_t);

/**
 * Discord of a symmetric two-mode covariance matrix with diagonal blocks
 * `a·I` and off-diagonal block `diag(c, -c)`, vacuum variance 1/2.
 */
enum SdStatus sd_cm_discord(double a, double c, double *out);

/**
 * Per-shot variance bound on the discord.
 */
enum SdStatus sd_crb_discord(double r, double gamma, double eta, enum SdInfoKind kind, double *out);

/**
 * `10·log10(m·var_d / bound_per_shot)`.
 */
enum SdStatus sd_noise_ratio_db(double var_d, uint64_t m, double bound_per_shot, double *out);

/**
 * Simulates `m_q` shots per setting of the STS `(n_s, n_t)`.
 */
enum SdStatus sd_dataset_simulate(double n_s,
                                  double n_t,
                                  size_t m_q,
                                  uint64_t seed,
                                  struct SdDataset **out);

/**
 * Simulates the state produced by `(r, gamma, eta)`.
 */
enum SdStatus sd_dataset_simulate_physical(double r,
                                           double gamma,
                                           double eta,
                                           size_t m_q,
                                           uint64_t seed,
                                           struct SdDataset **out);

/**
 * Reads a dataset CSV and its `.meta.json` sidecar.
 */
enum SdStatus sd_dataset_load(const char *path, struct SdDataset **out);

/**
 * Writes a dataset CSV and its `.meta.json` sidecar.
 */
enum SdStatus sd_dataset_save(const struct SdDataset *ds, const char *path);

/**
 * Shots per setting, or 0 for a null handle.
 */
size_t sd_dataset_m_q(const struct SdDataset *ds);

/**
 * Releases a dataset. Null is ignored.
 */
void sd_dataset_free(struct SdDataset *ds);

/**
 * Inversion estimate with `mc_trials` Monte Carlo draws.
 */
enum SdStatus sd_estimate_inversion(const struct SdDataset *ds,
                                    uint64_t mc_trials,
                                    double max_rejection_rate,
                                    uint64_t seed,
                                    struct SdEstimate *out);

/**
 * Block-wise Bayesian estimate on a `grid_points`² posterior grid spanning
 * `grid_width_sigma` prior standard deviations.
 */
enum SdStatus sd_estimate_bayes(const struct SdDataset *ds,
                                size_t n_blocks,
                                size_t grid_points,
                                double grid_width_sigma,
                                uint64_t mc_trials,
                                double max_rejection_rate,
                                uint64_t seed,
                                struct SdEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STSDISCORD_H */
