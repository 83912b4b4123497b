/* C interface to the jeda domain-adaptation toolkit.
 *
 * All functions return jeda_status; on failure jeda_last_error() holds a
 * human-readable message for the calling thread. Objects are opaque
 * handles owned by the library and released with their _free function.
 * Strings returned through char** are released with jeda_string_free.
 */

#ifndef JEDA_H
#define JEDA_H

#ifdef _WIN32
#define JEDA_API __declspec(dllexport)
#else
#define JEDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jeda_status {
    JEDA_OK = 0,
    JEDA_ERR_USAGE = 1, /* bad arguments or invalid configuration */
    JEDA_ERR_DATA = 2,  /* unreadable or malformed input data */
    JEDA_ERR_CHECK = 3  /* an invariant, assertion or numerical check failed */
} jeda_status;

typedef struct jeda_config jeda_config;

JEDA_API const char* jeda_version(void);
JEDA_API const char* jeda_last_error(void);
JEDA_API void jeda_string_free(char* s);

/* Configuration: defaults, a config file, or inline text; individual
 * keys can then be overridden. */
JEDA_API jeda_status jeda_config_create(jeda_config** out);
JEDA_API jeda_status jeda_config_load(const char* path, jeda_config** out);
JEDA_API jeda_status jeda_config_parse(const char* text, jeda_config** out);
JEDA_API jeda_status jeda_config_set(jeda_config* cfg, const char* key, const char* value);
JEDA_API jeda_status jeda_config_serialize(const jeda_config* cfg, char** out_text);
JEDA_API void jeda_config_free(jeda_config* cfg);

/* Runs one training experiment per configured seed; writes config.echo,
 * per-seed metrics.csv and checkpoint.txt, and summary.txt under the
 * output directory (out_dir overrides the config's run.out_dir when
 * non-NULL). */
JEDA_API jeda_status jeda_train(const jeda_config* cfg, const char* out_dir);

/* Verifies the 0-1-loss bound chain over the configured synthetic
 * dataset; writes bound.csv and bound_summary.txt. Returns
 * JEDA_ERR_CHECK if any inequality is violated. */
JEDA_API jeda_status jeda_verify_bound(const jeda_config* cfg, const char* out_dir);

/* Plots. run_dir is a directory produced by jeda_train. */
JEDA_API jeda_status jeda_plot_boundary(const char* run_dir, int seed_index,
                                        const char* out_svg);
JEDA_API jeda_status jeda_plot_curves(const char* out_svg);
JEDA_API jeda_status jeda_plot_marginal(const char* metrics_csv, const char* out_svg);

/* Finite-difference verification of every differentiable op. The report
 * table is returned through report_out (optional); *passed is 1 when all
 * ops meet their thresholds. Returns JEDA_ERR_CHECK on failure. */
JEDA_API jeda_status jeda_grad_check(char** report_out, int* passed);

/* Timing of the core kernels and a few training steps. */
JEDA_API jeda_status jeda_bench(char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* JEDA_H */
