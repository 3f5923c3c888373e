#ifndef DENSEWLAN_H
#define DENSEWLAN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum DwStatus {
  DW_STATUS_OK = 0,
  DW_STATUS_NULL_POINTER = 1,
  /**
   * Argument is not valid UTF-8, not finite, or out of range.
   */
  DW_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unknown key, unparsable value, or a failed validation.
   */
  DW_STATUS_INVALID_CONFIG = 3,
  /**
   * Quadrature or optimizer failure.
   */
  DW_STATUS_NUMERIC_FAILURE = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  DW_STATUS_INTERNAL = 5,
} DwStatus;

/**
 * Opaque network configuration.
 */
typedef struct DwConfig DwConfig;

/**
 * Link metrics at one operating point.
 */
typedef struct DwLinkReport {
  /**
   * Density of active links per unit area.
   */
  double active_density;
  double stp;
  double sdt;
  /**
   * Nonzero when the STP expression was clamped into [0, 1].
   */
  uint8_t flagged;
} DwLinkReport;

/**
 * Outcome of the joint association and PCS optimization.
 */
typedef struct DwJapoReport {
  size_t n_ap;
  size_t n_sta;
  /**
   * Mean relaxed weight of the chosen AP-STA pairs.
   */
  double xi_star;
  /**
   * Optimized PCS threshold, mW.
   */
  double gamma_star;
  double sdt_star;
  /**
   * Throughput at the configured threshold.
   */
  double sdt_fixed;
  /**
   * Upper bound on the PCS threshold, mW.
   */
  double pcs_bound;
  size_t newton_iterations;
  /**
   * 0 stationary, 1 bound, 2 stagnated, 3 line search failed, 4 iteration cap.
   */
  uint32_t newton_stop;
  /**
   * Nonzero when the association step converged.
   */
  uint8_t association_converged;
} DwJapoReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns a new handle holding the default configuration. Free it with
 * `dw_config_free`.
 */
struct DwConfig *dw_config_new(void);

/**
 * Returns an independent copy of `cfg`, or null if `cfg` is null.
 *
 * # Safety
 * `cfg` must be null or a live handle from this library.
 */
struct DwConfig *dw_config_clone(const struct DwConfig *cfg);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `cfg` must be null or a live handle that is not used afterwards.
 */
void dw_config_free(struct DwConfig *cfg);

/**
 * Sets one key using the config-file syntax, e.g. `("pcs", "-70")` in dBm.
 * The handle is unchanged on failure.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum DwStatus dw_config_set(struct DwConfig *cfg, const char *key, const char *value);

/**
 * Checks the whole configuration.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum DwStatus dw_config_validate(const struct DwConfig *cfg);

/**
 * Copies the SHA-256 content hash (64 hex digits plus NUL) into `buf`.
 * Needs `len >= 65`.
 *
 * # Safety
 * `cfg` must be a live handle; `buf` must hold `len` bytes.
 */
enum DwStatus dw_config_hash(const struct DwConfig *cfg, char *buf, size_t len);

/**
 * Copies this thread's last error message into `buf`, truncated and
 * NUL-terminated. Returns the full message length in bytes, so a return
 * value `>= len` means truncation. `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t dw_last_error_message(char *buf, size_t len);

/**
 * Probability that a contending node wins the channel.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_access_probability(const struct DwConfig *cfg, double *out);

/**
 * Full-duplex throughput density at association weight `xi` in [0, 1].
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_sdt_fd(const struct DwConfig *cfg, double xi, struct DwLinkReport *out);

/**
 * Mean rate under strongest-signal-first association at the configured
 * threshold.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_ssf_mean_rate(const struct DwConfig *cfg, struct DwLinkReport *out);

/**
 * Joint association and PCS optimization on the network drawn from the
 * configured seed.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_japo(const struct DwConfig *cfg, struct DwJapoReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DENSEWLAN_H */
