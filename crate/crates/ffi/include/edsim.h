#ifndef EDSIM_H
#define EDSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  EDSIM_STATUS_OK = 0,
  EDSIM_STATUS_NULL_POINTER = 1,
  EDSIM_STATUS_INVALID_ARGUMENT = 2,
  EDSIM_STATUS_IO = 3,
  EDSIM_STATUS_PARSE = 4,
  EDSIM_STATUS_SEMANTIC = 5,
  EDSIM_STATUS_PRICES = 6,
  EDSIM_STATUS_OUT_OF_RANGE = 7,
  EDSIM_STATUS_AGGREGATE = 8,
  EDSIM_STATUS_PANIC = 9,
} EdsimStatus;

typedef enum {
  EDSIM_REASON_PRICE_LOW = 0,
  EDSIM_REASON_WORKLOAD_HIGH = 1,
  EDSIM_REASON_OFF = 2,
} EdsimReason;

/**
 * Hourly price series handle.
 */
typedef struct EdsimPrices EdsimPrices;

/**
 * Result handle of one simulation run.
 */
typedef struct EdsimResult EdsimResult;

/**
 * Scenario handle.
 */
typedef struct EdsimScenario EdsimScenario;

/**
 * Parameters of one simulation run.
 */
typedef struct {
  uint32_t planned_lead_time;
  double safety_stock;
  uint32_t fop_period;
  double energy_factor;
  double capacity_factor;
  uint64_t seed;
  uint64_t replication;
  uint32_t days;
  uint32_t warmup_days;
  bool setup_energy;
  bool dispatch_enabled;
} EdsimSimParams;

/**
 * Cost KPIs in CU per day.
 */
typedef struct {
  double wip;
  double fgi;
  double tardiness;
  double energy;
  double prod_logistics;
  double overall;
  double service_level;
} EdsimKpis;

typedef struct {
  uint64_t decisions;
  uint64_t price_exceeded;
  uint64_t switch_offs;
  double utilization;
} EdsimMachineKpis;

typedef struct {
  bool machine_on;
  EdsimReason reason;
  double price;
  double energy_threshold;
  double workload;
  double workload_threshold;
} EdsimDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call into the library.
 */
const char *edsim_last_error(void);

/**
 * The bundled eight-item, four-machine scenario.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
EdsimStatus edsim_scenario_default(EdsimScenario **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
EdsimStatus edsim_scenario_load(const char *path, EdsimScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 * Null is ignored.
 */
void edsim_scenario_free(EdsimScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle or null.
 */
size_t edsim_scenario_machine_count(const EdsimScenario *scenario);

/**
 * Expected processing and setup minutes per day on machine `machine`.
 *
 * # Safety
 * `scenario` must be a live handle; `processing` and `setup` valid pointers.
 */
EdsimStatus edsim_scenario_expected_load(const EdsimScenario *scenario,
                                         size_t machine,
                                         double *processing,
                                         double *setup);

/**
 * Counts validation findings by severity.
 *
 * # Safety
 * `scenario` must be a live handle; `hard` and `warnings` valid pointers.
 */
EdsimStatus edsim_scenario_validate(const EdsimScenario *scenario, size_t *hard, size_t *warnings);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
EdsimStatus edsim_prices_load(const char *path, EdsimPrices **out);

/**
 * Seeded synthetic hourly series of `days` days starting 2023-01-01.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
EdsimStatus edsim_prices_synthetic(size_t days, uint64_t seed, EdsimPrices **out);

/**
 * Series from `len` hourly prices in CU/MWh starting 2023-01-01.
 *
 * # Safety
 * `hourly` must point to `len` doubles and `out` be a valid pointer.
 */
EdsimStatus edsim_prices_from_hourly(const double *hourly, size_t len, EdsimPrices **out);

/**
 * # Safety
 * `prices` must be a live handle or null.
 */
size_t edsim_prices_hours(const EdsimPrices *prices);

/**
 * # Safety
 * `prices` must come from this library and not be used afterwards.
 * Null is ignored.
 */
void edsim_prices_free(EdsimPrices *prices);

/**
 * Fills `out` with the library defaults (400 days, 150 warm-up days,
 * dispatching on).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
EdsimStatus edsim_sim_params_default(EdsimSimParams *out);

/**
 * Runs one replication.
 *
 * # Safety
 * `scenario` and `prices` must be live handles; `params` and `out` valid
 * pointers.
 */
EdsimStatus edsim_simulate(const EdsimScenario *scenario,
                           const EdsimPrices *prices,
                           const EdsimSimParams *params,
                           EdsimResult **out);

/**
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
EdsimStatus edsim_result_kpis(const EdsimResult *result, EdsimKpis *out);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
size_t edsim_result_machine_count(const EdsimResult *result);

/**
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
EdsimStatus edsim_result_machine(const EdsimResult *result, size_t machine, EdsimMachineKpis *out);

/**
 * # Safety
 * `result` must come from this library and not be used afterwards.
 * Null is ignored.
 */
void edsim_result_free(EdsimResult *result);

/**
 * Evaluates the dispatching rule for a machine of `daily_capacity`
 * minutes at `now_minutes`. The queue is given as `len` pairs of planned
 * processing and setup minutes.
 *
 * # Safety
 * `prices` must be a live handle; `processing` and `setup` must point to
 * `len` doubles (either may be null when `len` is 0); `out` valid.
 */
EdsimStatus edsim_decide_state(const EdsimPrices *prices,
                               double now_minutes,
                               double daily_capacity,
                               const double *processing,
                               const double *setup,
                               size_t len,
                               double energy_factor,
                               double capacity_factor,
                               EdsimDecision *out);

/**
 * Non-dominated subset of `len` (energy, logistics) cost pairs. Writes
 * the input indices of the front, sorted by energy, into `indices`
 * (capacity `len`) and their count into `front_len`.
 *
 * # Safety
 * `energy` and `logistics` must point to `len` doubles, `indices` to room
 * for `len` values and `front_len` be valid.
 */
EdsimStatus edsim_pareto_front(const double *energy,
                               const double *logistics,
                               size_t len,
                               size_t *indices,
                               size_t *front_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDSIM_H */
