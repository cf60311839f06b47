/* C interface to the MCJC ground-state engine. */
#ifndef MCJC_H
#define MCJC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(MCJC_BUILDING_LIBRARY)
#define MCJC_API __attribute__((visibility("default")))
#else
#define MCJC_API
#endif

/* Return codes. Every function returning int uses these. */
enum mcjc_status {
  MCJC_OK = 0,
  MCJC_ERR_INVALID_ARGUMENT = 1,
  MCJC_ERR_CONFIG = 2,
  MCJC_ERR_DIMENSION = 3,
  MCJC_ERR_CONVERGENCE = 4,
  MCJC_ERR_IO = 5,
  MCJC_ERR_INTERNAL = 6,
  MCJC_ERR_NULL_POINTER = 7,
  MCJC_ERR_JOB_FAILED = 8 /* sweep finished but some jobs failed */
};

enum mcjc_species { MCJC_QUBIT = 0, MCJC_CAVITY = 1 };

typedef struct mcjc_params_s* mcjc_params_t;
typedef struct mcjc_state_s* mcjc_state_t;

MCJC_API const char* mcjc_version(void);
/* Message of the last failing call on this thread ("" if none). */
MCJC_API const char* mcjc_last_error(void);
/* Frees strings returned through char** out-parameters. */
MCJC_API void mcjc_string_free(char* s);

/* Model parameters from a flat JSON object; unknown keys are rejected. */
MCJC_API int mcjc_params_from_json(const char* json, mcjc_params_t* out);
MCJC_API int mcjc_params_to_json(mcjc_params_t params, char** out);
MCJC_API void mcjc_params_free(mcjc_params_t params);

/* Lanczos ground state of sector N. */
MCJC_API int mcjc_ed_ground_state(mcjc_params_t params, int N, double* energy, double* residual);
/* {"params": {...}, "N": n[, "cap": c]} -> {params, N, energy, residual,
   iterations}. When out_dir is not NULL the record is also written to
   <out_dir>/ed/<hash>.json. */
MCJC_API int mcjc_ed_record(const char* request_json, const char* out_dir, char** record_json);

/* DMRG in sector N. sweep_json may be NULL for defaults; its target_charge
   is replaced by N. A non-converged run still returns MCJC_OK with the
   converged flag cleared. */
MCJC_API int mcjc_dmrg_run(mcjc_params_t params, const char* sweep_json, int N, mcjc_state_t* out);
MCJC_API int mcjc_state_energy(mcjc_state_t state, double* energy);
MCJC_API int mcjc_state_converged(mcjc_state_t state, int* converged);
MCJC_API int mcjc_state_num_cells(mcjc_state_t state, int* cells);
/* Entropy of the first `cut` chain sites, 1 <= cut < 2L. */
MCJC_API int mcjc_state_entropy(mcjc_state_t state, int cut, double* entropy);
/* n_q and n_r must each hold `len` >= L values. */
MCJC_API int mcjc_state_densities(mcjc_state_t state, double* n_q, double* n_r, size_t len);
/* Correlation table over the default window as JSON. */
MCJC_API int mcjc_state_correlations(mcjc_state_t state, char** table_json);
MCJC_API int mcjc_state_structure_factor(mcjc_state_t state, int species, double* value);
MCJC_API void mcjc_state_free(mcjc_state_t state);

/* Driver entry points; JSON in, JSON out. */
MCJC_API int mcjc_run_job(const char* job_json, const char* out_dir, int resume, char** record_json);
MCJC_API int mcjc_run_sweep(const char* sweep_json, const char* out_dir, int jobs, int resume, char** outcome_json);
MCJC_API int mcjc_analyze(const char* out_dir, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
