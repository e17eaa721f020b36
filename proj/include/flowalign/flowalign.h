/* C interface to the flowalign library.
 *
 * All entry points return fa_status; anything other than FA_OK leaves a
 * message retrievable with fa_last_error() (thread local). Contexts are
 * opaque and must be released with fa_context_destroy().
 */
#ifndef FLOWALIGN_H
#define FLOWALIGN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  FA_OK = 0,
  FA_ERR_INVALID_ARG = 1,
  FA_ERR_IO = 2,
  FA_ERR_NUMERIC = 3,
  FA_ERR_INTERNAL = 4
} fa_status;

typedef struct fa_context fa_context;

const char* fa_version(void);

/* Message from the last failing call on this thread; never NULL. */
const char* fa_last_error(void);

/* Create a context from a config file (NULL or "" for defaults). */
fa_status fa_context_create(const char* config_path, fa_context** out);
void fa_context_destroy(fa_context* ctx);

/* Override a single config key, e.g. "edit.omega" = "7.5". */
fa_status fa_context_set(fa_context* ctx, const char* key, const char* value);

/* Read back a config value into buf (truncated if needed, always
 * NUL-terminated when cap > 0). */
fa_status fa_context_get(const fa_context* ctx, const char* key, char* buf,
                         size_t cap);

/* Train a model per the config and write model.falb, loss_curve.csv and
 * manifest.txt into out_dir. */
fa_status fa_train(fa_context* ctx, const char* out_dir);

/* Sample n per class via the configured field; writes samples.csv. */
fa_status fa_generate(fa_context* ctx, int n_samples, const char* out_dir);

/* Run the configured editing method over the task suite; writes metrics.csv
 * and manifest.txt. Pass reverse = 1 to score the reconstruction direction
 * as the forward edit (roles swapped). */
fa_status fa_edit(fa_context* ctx, int reverse, const char* out_dir);

/* Sweep one axis ("omega", "zeta" or "method") over comma-separated values. */
fa_status fa_sweep(fa_context* ctx, const char* axis, const char* values,
                   const char* out_dir);

/* Optimal-control verification battery. Writes oc_report.csv; *n_failed
 * (optional) receives the number of failing checks. */
fa_status fa_verify_oc(const char* out_dir, int* n_failed);

/* Trajectory-regularized generator distillation; writes distill_trace.csv
 * and distill_result.csv. */
fa_status fa_distill(fa_context* ctx, const char* out_dir);

/* Render a metrics CSV into an SVG scatter. Context-free. */
fa_status fa_export_plot(const char* metrics_csv, const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif /* FLOWALIGN_H */
