/* perclab C interface.  Every call returns a perc_status; on failure
   perc_last_error() holds a message for the calling thread. */
#ifndef PERCLAB_H
#define PERCLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PERCLAB_BUILDING_LIBRARY)
#    define PERC_API __declspec(dllexport)
#  else
#    define PERC_API __declspec(dllimport)
#  endif
#else
#  define PERC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum perc_status {
  PERC_OK = 0,
  PERC_ERR_USAGE = 1,
  PERC_ERR_INVARIANT = 2,
  PERC_ERR_BUDGET = 3,
  PERC_ERR_IO = 4,
  PERC_ERR_CONFIG_MISMATCH = 5,
  PERC_ERR_REGION_TOO_LARGE = 6,
  PERC_ERR_NONPOSITIVE = 7,
  PERC_ERR_TOUCHES_BOUNDARY = 8,
  PERC_ERR_NULL = 9,
  PERC_ERR_INTERNAL = 10
} perc_status;

typedef struct perc_experiment perc_experiment;
typedef struct perc_result perc_result;
typedef struct perc_config perc_config;

PERC_API const char* perc_version(void);
PERC_API const char* perc_last_error(void);
PERC_API const char* perc_status_name(perc_status s);

/* experiments */
PERC_API perc_status perc_experiment_create(perc_experiment** out);
PERC_API void perc_experiment_destroy(perc_experiment* e);
PERC_API perc_status perc_experiment_set(perc_experiment* e, const char* key, const char* value);
PERC_API perc_status perc_experiment_load_file(perc_experiment* e, const char* path);
PERC_API perc_status perc_experiment_apply_environment(perc_experiment* e);
PERC_API perc_status perc_experiment_hash(const perc_experiment* e, char* buf, size_t len);
/* A run that fails still yields a result carrying the JSON error record. */
PERC_API perc_status perc_experiment_run(const perc_experiment* e, perc_result** out);

PERC_API const char* perc_result_csv(const perc_result* r);
PERC_API const char* perc_result_json(const perc_result* r);
PERC_API const char* perc_result_error(const perc_result* r);
PERC_API int perc_result_exit_code(const perc_result* r);
PERC_API void perc_result_destroy(perc_result* r);

/* merges CSV files into out_path; NULL out_path only validates */
PERC_API perc_status perc_merge_files(const char* const* paths, size_t count, const char* out_path);

/* configurations on B(radius); orientation 0 = horizontal, 1 = vertical */
PERC_API perc_status perc_config_create(int radius, perc_config** out);
PERC_API perc_status perc_config_sample(int radius, double p, uint64_t seed, uint64_t replica, perc_config** out);
PERC_API void perc_config_destroy(perc_config* c);
PERC_API perc_status perc_config_edge_count(const perc_config* c, size_t* out);
PERC_API perc_status perc_config_set_edge(perc_config* c, int x, int y, int orientation, int open);
PERC_API perc_status perc_config_get_edge(const perc_config* c, int x, int y, int orientation, int* open);

/* T_n; *defined = 0 when the origin does not reach distance m */
PERC_API perc_status perc_observable_t(const perc_config* c, int n, int m, int64_t* value, int* defined);
PERC_API perc_status perc_observable_s(const perc_config* c, int n, int64_t* value);
PERC_API perc_status perc_arm_event(const perc_config* c, int m, int n, int open_arms, int closed_arms,
                                    int* holds, int* open_count, int* closed_count);
PERC_API perc_status perc_bubble_summary(const perc_config* c, size_t* sets, size_t* nonsingle);

PERC_API perc_status perc_fit_exponent(const int* n, const double* estimate, const double* stderr_, size_t count,
                                       double* slope, double* slope_se);

#ifdef __cplusplus
}
#endif

#endif
