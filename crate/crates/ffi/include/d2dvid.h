/* C interface to the d2dvid VBR streaming simulator. */

#ifndef D2DVID_H
#define D2DVID_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Spectrum-sharing mode codes used in [`DvSlot::mode`] and
// [`dv_scenario_set_forced_mode`].
#define DV_MODE_CELLULAR 0

// See [`DV_MODE_CELLULAR`].
#define DV_MODE_DEDICATED 1

// See [`DV_MODE_CELLULAR`].
#define DV_MODE_REUSE 2

// "No forced mode": the engine selects per slot.
#define DV_MODE_SELECT -1

// Result of every API call.
typedef enum DvStatus {
  // Success.
  DV_STATUS_OK = 0,
  // A required pointer argument was null.
  DV_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  DV_STATUS_INVALID_UTF8 = 2,
  // Config file missing, malformed, or semantically invalid.
  DV_STATUS_CONFIG = 3,
  // The simulation rejected the scenario.
  DV_STATUS_SIM = 4,
  // An index or enum value was out of range.
  DV_STATUS_OUT_OF_RANGE = 5,
  // Internal panic; details in the last-error message.
  DV_STATUS_INTERNAL = 6,
} DvStatus;

// A finished simulation. Opaque; release with [`dv_result_free`].
typedef struct DvResult DvResult;

// A loaded, validated scenario. Opaque; release with [`dv_scenario_free`].
typedef struct DvScenario DvScenario;

// Per-receiver tallies for a whole run.
typedef struct DvReceiverSummary {
  // Playback slots of this receiver's video.
  uint32_t slots;
  uint32_t underflow_events;
  uint32_t clip_events;
  double underflow_probability;
  double clipped_bits;
  // Mean buffer utilization in `[0, 1]`.
  double mean_buffer_utilization;
} DvReceiverSummary;

// Whole-run tallies.
typedef struct DvSummary {
  // Total simulated slots (the longer of the two videos).
  uint32_t slots;
  // Slots spent in each mode.
  uint32_t mode_cellular;
  uint32_t mode_dedicated;
  uint32_t mode_reuse;
  struct DvReceiverSummary c1;
  struct DvReceiverSummary d2;
  // Mean per-slot sum rate in bits/s.
  double mean_total_rate;
} DvSummary;

// One slot of the run.
typedef struct DvSlot {
  // Slot index, starting at 1.
  uint32_t t;
  // `DV_MODE_*` code of the chosen mode.
  int mode;
  // 1 = both receivers inside their windows, 2 = one, 3 = neither.
  uint8_t priority;
  uint8_t underflow_c1;
  uint8_t underflow_d2;
  uint8_t clip_c1;
  uint8_t clip_d2;
  double p_b1;
  double p_b2;
  double p_d;
  double r1;
  double r2;
  double alpha1;
  double beta1;
  double alpha2;
  double beta2;
  // Cumulative delivered bits after this slot.
  double a1;
  double a2;
} DvSlot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the current thread's last error message (NUL-terminated) into
// `buf`. Returns the full message length in bytes (excluding the NUL), which
// may exceed `cap`; the copy is truncated to fit. A zero return means no
// error has been recorded. `buf` may be null to query the length alone.
//
// # Safety
// `buf` must be null or point to at least `cap` writable bytes.
size_t dv_last_error(char *buf, size_t cap);

// Loads and validates a scenario from a TOML config file. On success writes
// a new handle to `out`.
//
// # Safety
// `config_path` must point to a NUL-terminated string; `out` must be a valid
// pointer to pointer-sized storage.
enum DvStatus dv_scenario_load(const char *config_path, struct DvScenario **out);

// Overrides the fading seed.
//
// # Safety
// `scenario` must be a live handle from [`dv_scenario_load`].
enum DvStatus dv_scenario_set_seed(struct DvScenario *scenario, uint64_t seed);

// Pins every slot to one mode (`DV_MODE_CELLULAR`/`DEDICATED`/`REUSE`) or
// restores per-slot selection (`DV_MODE_SELECT`).
//
// # Safety
// `scenario` must be a live handle from [`dv_scenario_load`].
enum DvStatus dv_scenario_set_forced_mode(struct DvScenario *scenario, int mode);

// Releases a scenario handle. Null is a no-op.
//
// # Safety
// `scenario` must be null or a live handle; it is dead afterwards.
void dv_scenario_free(struct DvScenario *scenario);

// Runs the scenario to completion. On success writes a new result handle to
// `out`.
//
// # Safety
// `scenario` must be a live handle; `out` must point to pointer-sized
// storage.
enum DvStatus dv_run(const struct DvScenario *scenario, struct DvResult **out);

// Copies the run's summary into `out`.
//
// # Safety
// `result` must be a live handle; `out` must point to a [`DvSummary`].
enum DvStatus dv_result_summary(const struct DvResult *result, struct DvSummary *out);

// Number of simulated slots in the result.
//
// # Safety
// `result` must be null or a live handle (null yields 0).
uint32_t dv_result_slot_count(const struct DvResult *result);

// Copies slot `index` (0-based, `< dv_result_slot_count`) into `out`.
//
// # Safety
// `result` must be a live handle; `out` must point to a [`DvSlot`].
enum DvStatus dv_result_slot(const struct DvResult *result, uint32_t index, struct DvSlot *out);

// Releases a result handle. Null is a no-op.
//
// # Safety
// `result` must be null or a live handle; it is dead afterwards.
void dv_result_free(struct DvResult *result);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* D2DVID_H */
