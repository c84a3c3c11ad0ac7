#ifndef ROBUST_BVS_H
#define ROBUST_BVS_H

/* C interface to robust_bvs. All handles are opaque; every function that can
 * fail returns an rbvs_status and leaves a message for rbvs_last_error(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RBVS_API __declspec(dllexport)
#else
#define RBVS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the CLI exit codes. */
typedef enum rbvs_status {
  RBVS_OK = 0,
  RBVS_ERR_INTERNAL = 1,
  RBVS_ERR_CONFIG = 2,
  RBVS_ERR_DATA = 3,
  RBVS_ERR_NUMERIC = 4,
  RBVS_ERR_VALIDATION = 5
} rbvs_status;

typedef enum rbvs_format { RBVS_FORMAT_JSON = 0, RBVS_FORMAT_CSV = 1 } rbvs_format;
typedef enum rbvs_tier { RBVS_TIER_FAST = 0, RBVS_TIER_FULL = 1 } rbvs_tier;

typedef struct rbvs_config rbvs_config;
typedef struct rbvs_dataset rbvs_dataset;
typedef struct rbvs_report rbvs_report;

RBVS_API const char* rbvs_version(void);
/* Message of the last failure on this thread ("" if none). */
RBVS_API const char* rbvs_last_error(void);
/* Frees strings returned through char** out-parameters. */
RBVS_API void rbvs_free_string(char* s);

/* Configuration: same keys as the config file. */
RBVS_API rbvs_status rbvs_config_create(rbvs_config** out);
RBVS_API void rbvs_config_destroy(rbvs_config* config);
RBVS_API rbvs_status rbvs_config_set(rbvs_config* config, const char* key, const char* value);
RBVS_API rbvs_status rbvs_config_load_file(rbvs_config* config, const char* path);
/* Output format chosen by the configuration. */
RBVS_API rbvs_status rbvs_config_format(const rbvs_config* config, rbvs_format* out);
/* Output path ("" for standard output); the pointer lives as long as config. */
RBVS_API const char* rbvs_config_out_path(const rbvs_config* config);

/* Data: from the CSV named in config, or from column-major arrays.
 * x0 may be NULL when k0 = 0, x may be NULL when p = 0. */
RBVS_API rbvs_status rbvs_dataset_load_csv(const rbvs_config* config, rbvs_dataset** out);
RBVS_API rbvs_status rbvs_dataset_from_arrays(int n, const double* y, int k0, const double* x0, int p,
                                              const double* x, rbvs_dataset** out);
RBVS_API void rbvs_dataset_destroy(rbvs_dataset* data);

/* Analysis. With data = NULL the CSV named in config is read. */
RBVS_API rbvs_status rbvs_analyze(const rbvs_config* config, const rbvs_dataset* data, rbvs_report** out);
RBVS_API void rbvs_report_destroy(rbvs_report* report);
RBVS_API rbvs_status rbvs_report_render(const rbvs_report* report, rbvs_format format, char** out);
RBVS_API size_t rbvs_report_model_count(const rbvs_report* report);
/* Row i of the model table (probability descending). Any out pointer may be NULL. */
RBVS_API rbvs_status rbvs_report_model(const rbvs_report* report, size_t i, uint64_t* mask, double* log_bf,
                                       double* probability);
/* Inclusion probabilities into out[0 .. p-1]; p is written to *p_out. */
RBVS_API rbvs_status rbvs_report_inclusion(const rbvs_report* report, double* out, size_t capacity, int* p_out);
RBVS_API rbvs_status rbvs_report_hpm(const rbvs_report* report, uint64_t* mask);
RBVS_API rbvs_status rbvs_report_mpm(const rbvs_report* report, uint64_t* mask);

/* Bayes factors. */
RBVS_API rbvs_status rbvs_log_bf_recommended(int n, int k0, int ki, double q, double* out);
RBVS_API rbvs_status rbvs_log_bf_general(double a, double b, double rho, int n, int k0, int ki, double q,
                                         double* out);
RBVS_API rbvs_status rbvs_log_bf_sigma_known(double a, double b, double rho, int n, int ki, double sse0,
                                             double ssei, double sigma, double* out);

/* Runs the property suite; *text receives the per-property lines. Returns
 * RBVS_ERR_VALIDATION when any property fails. tsv_path may be NULL. */
RBVS_API rbvs_status rbvs_validate(rbvs_tier tier, const char* tsv_path, char** text);

#ifdef __cplusplus
}
#endif

#endif
