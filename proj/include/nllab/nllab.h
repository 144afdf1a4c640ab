/* C interface of the nllab library.
 *
 * Every function returns an nllab_status. On failure the message of the most recent
 * error on the calling thread is available from nllab_last_error(). Handles are opaque
 * and owned by the caller, who releases them with the matching *_free function.
 * Strings returned by the library stay valid until the owning handle is freed.
 */
#ifndef NLLAB_H
#define NLLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) && defined(NLLAB_BUILDING_LIBRARY)
#define NLLAB_API __declspec(dllexport)
#elif defined(_WIN32)
#define NLLAB_API __declspec(dllimport)
#elif defined(NLLAB_BUILDING_LIBRARY)
#define NLLAB_API __attribute__((visibility("default")))
#else
#define NLLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nllab_status {
  NLLAB_OK = 0,
  NLLAB_ERR_INVALID_INPUT = 1,  /* a precondition on an argument failed */
  NLLAB_ERR_INVALID_CONFIG = 2, /* malformed or inconsistent configuration */
  NLLAB_ERR_NUMERICAL = 3,      /* quadrature or linear solve did not converge */
  NLLAB_ERR_IO = 4,
  NLLAB_ERR_INTERNAL = 5
} nllab_status;

typedef struct nllab_config nllab_config;
typedef struct nllab_result nllab_result;
typedef struct nllab_measure nllab_measure;
typedef struct nllab_operator nllab_operator;

NLLAB_API const char* nllab_version(void);
NLLAB_API const char* nllab_last_error(void);
NLLAB_API const char* nllab_status_name(nllab_status status);

/* ---- configuration ---------------------------------------------------------------- */

NLLAB_API nllab_status nllab_config_load(const char* path, nllab_config** out);
/* base_dir resolves relative paths inside the text; NULL means the working directory. */
NLLAB_API nllab_status nllab_config_parse(const char* yaml_text, const char* base_dir, nllab_config** out);
NLLAB_API void nllab_config_free(nllab_config* config);
NLLAB_API nllab_status nllab_config_set_seed(nllab_config* config, uint64_t seed);
NLLAB_API nllab_status nllab_config_experiment(const nllab_config* config, const char** name);

/* ---- commands --------------------------------------------------------------------- */

/* command is "check-conditions", "solve" or "regularity". out_dir may be NULL to use the
 * directory named in the config; threads = 0 keeps the default. */
NLLAB_API nllab_status nllab_run(const nllab_config* config, const char* command, const char* out_dir, int threads,
                                 nllab_result** out);
NLLAB_API void nllab_result_free(nllab_result* result);
NLLAB_API const char* nllab_result_summary(const nllab_result* result); /* JSON text */
NLLAB_API const char* nllab_result_dir(const nllab_result* result);
NLLAB_API size_t nllab_result_file_count(const nllab_result* result);
NLLAB_API const char* nllab_result_file(const nllab_result* result, size_t index); /* NULL if out of range */

/* ---- measures --------------------------------------------------------------------- */

/* kind: "alpha_stable", "axes" or "cusp"; s is read for cusp only. */
NLLAB_API nllab_status nllab_measure_create(const char* kind, int dim, double alpha, double s, double normalization,
                                            nllab_measure** out);
NLLAB_API void nllab_measure_free(nllab_measure* measure);
/* mu(x, {r <= |y - x| < R}); x has dim coordinates. */
NLLAB_API nllab_status nllab_measure_annulus_mass(const nllab_measure* measure, const double* x, double r, double R,
                                                  double* mass);
/* rho^a (rho^-2 times the second moment in B_rho plus the mass outside B_rho), a the effective order. */
NLLAB_API nllab_status nllab_measure_k1_value(const nllab_measure* measure, double rho, double* value);

/* ---- discrete operator ------------------------------------------------------------ */

/* Grid [-box, box]^dim of spacing h with unknowns strictly inside B_domain(0). */
NLLAB_API nllab_status nllab_operator_create(const nllab_measure* measure, double h, double box, double domain,
                                             nllab_operator** out);
NLLAB_API void nllab_operator_free(nllab_operator* op);
NLLAB_API nllab_status nllab_operator_size(const nllab_operator* op, size_t* nodes, size_t* unknowns);
/* Coordinates of the k-th unknown (dim values). */
NLLAB_API nllab_status nllab_operator_unknown_point(const nllab_operator* op, size_t k, double* x);
/* (L u) at every unknown; u holds the unknowns, all other points carry the constant g. */
NLLAB_API nllab_status nllab_operator_apply(const nllab_operator* op, const double* u, double g, double* lu);

#ifdef __cplusplus
}
#endif

#endif /* NLLAB_H */
