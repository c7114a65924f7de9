/*
 * memspm — memory-assisted sub-prototype mining engine, C interface.
 *
 * Opaque handles, integer status codes, JSON strings for structured data.
 * Strings returned through out-parameters are heap-allocated; release them
 * with memspm_string_free. Handles are released with their _close function.
 * All functions are thread-compatible: a handle may only be used from one
 * thread at a time, and memspm_last_error is thread-local.
 */
#ifndef MEMSPM_H
#define MEMSPM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MEMSPM_API __declspec(dllexport)
#else
#define MEMSPM_API __attribute__((visibility("default")))
#endif

typedef enum memspm_status {
  MEMSPM_OK = 0,
  MEMSPM_ERR_INVALID_ARGUMENT = 1, /* bad config, bad handle, contract violation */
  MEMSPM_ERR_IO = 2,               /* file unreadable or unwritable */
  MEMSPM_ERR_FORMAT = 3,           /* malformed file contents */
  MEMSPM_ERR_DOMAIN = 4,           /* degenerate numeric input (e.g. zero query) */
  MEMSPM_ERR_NUMERIC = 5,          /* non-finite loss or diverged run */
  MEMSPM_ERR_INTERNAL = 6
} memspm_status;

typedef struct memspm_dataset_t memspm_dataset_t;
typedef struct memspm_engine_t memspm_engine_t;

MEMSPM_API const char* memspm_version(void);
MEMSPM_API const char* memspm_status_name(memspm_status status);
/* detail message for the most recent failure on this thread; never NULL */
MEMSPM_API const char* memspm_last_error(void);
MEMSPM_API void memspm_string_free(char* s);

/* ---- datasets -------------------------------------------------------- */

/* Generate the planted synthetic benchmark described by spec_json (defaults
 * for missing fields), write both domains, and return generation stats. */
MEMSPM_API memspm_status memspm_generate(const char* spec_json, const char* source_path,
                                         const char* target_path, char** stats_json_out);

MEMSPM_API memspm_status memspm_dataset_open(const char* path, memspm_dataset_t** out);
MEMSPM_API memspm_status memspm_dataset_import_csv(const char* path, int domain,
                                                   memspm_dataset_t** out);
MEMSPM_API memspm_status memspm_dataset_save(const memspm_dataset_t* ds, const char* path);
/* labels move to the hidden ground-truth channel; the copy is unlabeled */
MEMSPM_API memspm_status memspm_dataset_hide_labels(const memspm_dataset_t* ds,
                                                    memspm_dataset_t** out);
/* Filter to a registered benchmark split. scenario: "PDA" | "OSDA" | "UniDA";
 * dataset_name: office31 | officehome | visda | domainnet; role: 0 keeps the
 * source classes labeled, 1 keeps the target classes with labels hidden. */
MEMSPM_API memspm_status memspm_dataset_apply_split(const memspm_dataset_t* ds,
                                                    const char* scenario,
                                                    const char* dataset_name, int role,
                                                    memspm_dataset_t** out);
MEMSPM_API void memspm_dataset_close(memspm_dataset_t* ds);

MEMSPM_API int64_t memspm_dataset_count(const memspm_dataset_t* ds);
MEMSPM_API int64_t memspm_dataset_dim(const memspm_dataset_t* ds);
MEMSPM_API int64_t memspm_dataset_num_classes(const memspm_dataset_t* ds);
MEMSPM_API int memspm_dataset_domain(const memspm_dataset_t* ds); /* 0 source, 1 target */

/* ---- engine ---------------------------------------------------------- */

MEMSPM_API memspm_status memspm_engine_create(const char* config_json, memspm_engine_t** out);
MEMSPM_API memspm_status memspm_engine_load(const char* checkpoint_path, memspm_engine_t** out);
MEMSPM_API memspm_status memspm_engine_save(const memspm_engine_t* engine,
                                            const char* checkpoint_path);
MEMSPM_API memspm_status memspm_engine_config(const memspm_engine_t* engine, char** json_out);
MEMSPM_API void memspm_engine_close(memspm_engine_t* engine);

/* Adapt the engine on a labeled source and an unlabeled target. train_json
 * may be NULL for defaults; history_csv_path may be NULL to skip the log. */
MEMSPM_API memspm_status memspm_train(memspm_engine_t* engine, const memspm_dataset_t* source,
                                      const memspm_dataset_t* target, const char* train_json,
                                      const char* history_csv_path);

/* Score the engine on a target with ground truth (public or hidden labels).
 * eval_json may be NULL; metrics land in metrics_json_out. */
MEMSPM_API memspm_status memspm_evaluate(const memspm_engine_t* engine,
                                         const memspm_dataset_t* source,
                                         const memspm_dataset_t* target, const char* eval_json,
                                         char** metrics_json_out);

/* Write usage/assignment/projection/decoding reports under out_dir. */
MEMSPM_API memspm_status memspm_inspect(const memspm_engine_t* engine,
                                        const memspm_dataset_t* data, const char* out_dir,
                                        char** report_json_out);

/* Finite-difference verification of the full objective's gradients on seeded
 * random instances. config_json may be NULL for defaults. */
MEMSPM_API memspm_status memspm_gradcheck(const char* config_json, char** report_json_out);

/* Addressing diagnostics for one query vector of length dim. */
MEMSPM_API memspm_status memspm_engine_address(const memspm_engine_t* engine, const double* query,
                                               int64_t dim, char** result_json_out);

#ifdef __cplusplus
}
#endif

#endif /* MEMSPM_H */
