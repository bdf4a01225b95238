/* C API for the hypochain shared library.
 *
 * Conventions: every function returns an hc_status; HC_OK is 0. Output
 * strings are heap-allocated JSON owned by the caller; release them with
 * hc_string_free. hc_last_error() returns a thread-local message describing
 * the most recent failure in the calling thread.
 */
#ifndef HYPOCHAIN_H
#define HYPOCHAIN_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct hc_model hc_model; /* opaque */

typedef enum hc_status {
    HC_OK = 0,
    HC_ERR_ARGUMENT = 1,      /* bad arguments / config schema errors */
    HC_ERR_MODEL = 2,         /* model structure or hypothesis failures */
    HC_ERR_NUMERIC = 3,       /* non-finite values, blow-ups, degeneracies */
    HC_ERR_IO = 4,            /* file system problems */
    HC_ERR_CHECKS_FAILED = 5, /* experiment ran, assertion-tagged checks failed */
    HC_ERR_INTERNAL = 6
} hc_status;

const char* hc_version(void);
const char* hc_last_error(void);
void hc_string_free(char* s);

/* Model registry. params_json may be NULL for model defaults. */
hc_status hc_model_create(const char* key, const char* params_json, hc_model** out);
void hc_model_free(hc_model* model);

/* Structure + Hormander validation; report is a JSON document. */
hc_status hc_model_validate(const hc_model* model, char** report_json);

/* Smallest singular value of the weak Hormander (H1) product. */
hc_status hc_model_h1(const hc_model* model, double* lambda_out);

/* Limit objects (A, Q, A Q A^T, q_n, |det A|) as JSON. */
hc_status hc_model_limits(const hc_model* model, char** limits_json);

/* Run one experiment subcommand against a JSON config (the config file's
 * contents, not a path). overrides_json may be NULL; recognized keys:
 * seed, n_paths, steps, workers, out_dir. On HC_OK and HC_ERR_CHECKS_FAILED
 * a summary document is returned. */
hc_status hc_run(const char* subcommand, const char* config_json, const char* overrides_json,
                 char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* HYPOCHAIN_H */
