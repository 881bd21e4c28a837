#ifndef GFSML_H
#define GFSML_H

/* C interface to the generalized few-shot multi-label benchmark core.
 *
 * Conventions:
 *   - Every fallible call returns gfsml_status; nonzero means failure and
 *     gfsml_last_error() holds the message (thread-local, valid until the
 *     next failing call on the same thread).
 *   - Structured inputs and outputs are JSON strings. Returned strings are
 *     heap-allocated; release them with gfsml_string_free().
 *   - Handles are opaque and single-owner; free with the matching *_free().
 *     A handle may be read from several threads but not mutated concurrently.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gfsml_status {
  GFSML_OK = 0,
  GFSML_ERR_IO = 1,         /* file missing / unreadable / unwritable */
  GFSML_ERR_PARSE = 2,      /* malformed CSV or JSON */
  GFSML_ERR_INVALID = 3,    /* bad argument or config value */
  GFSML_ERR_INFEASIBLE = 4, /* requested split or episode cannot be built */
  GFSML_ERR_INTERNAL = 5,
} gfsml_status;

typedef struct gfsml_dataset gfsml_dataset;
typedef struct gfsml_partition gfsml_partition;
typedef struct gfsml_model gfsml_model;

const char* gfsml_version(void);
const char* gfsml_last_error(void);
void gfsml_string_free(char* s);

/* ------------------------------------------------------------- dataset -- */

/* Synthesize a desk-scale corpus. config_json keys (all optional):
 *   n_trn_classes, n_val_classes, n_tst_classes, count_trn, count_val,
 *   count_tst, n_not_finding, n_sources, dim, separation, noise, co_label.
 * NULL or "{}" takes every default. Unknown keys are rejected. */
gfsml_status gfsml_dataset_synth(const char* config_json, uint64_t seed,
                                 gfsml_dataset** out);

/* Load a corpus from a vocabulary file (one class name per line) and a
 * metadata CSV `id,source,age,labels` ('|'-separated label names, empty =
 * not finding). embeddings_csv (`id,v0,...`) may be NULL. options_json keys:
 * min_age (default 10), max_age (default 80). */
gfsml_status gfsml_dataset_load(const char* vocab_path, const char* metadata_csv,
                                const char* embeddings_csv, const char* options_json,
                                gfsml_dataset** out);

/* Write the corpus back out in the same formats. embeddings_csv may be NULL
 * to skip; writing embeddings for a dataset that has none is an error. */
gfsml_status gfsml_dataset_save(const gfsml_dataset* ds, const char* vocab_path,
                                const char* metadata_csv, const char* embeddings_csv);

/* Corpus statistics as JSON: example counts, label cardinality/density,
 * per-class and per-source frequency tables, co-occurrence matrix.
 * options_json: {"denominator": "labeled" | "all"} picks whether cardinality
 * and density average over labeled examples only (default) or all examples. */
gfsml_status gfsml_dataset_stats(const gfsml_dataset* ds, const char* options_json,
                                 char** json_out);

void gfsml_dataset_free(gfsml_dataset* ds);

/* ----------------------------------------------------------- partition -- */

/* Build the class split and example pools. options_json keys (optional):
 *   n_tst (default 5), n_val (default 3),
 *   val_reserve (0.1), tst_reserve (0.2),
 *   notfinding_val (0.1), notfinding_tst (0.3). */
gfsml_status gfsml_partition_build(const gfsml_dataset* ds, const char* options_json,
                                   uint64_t seed, gfsml_partition** out);

/* Manifest round trip. Loading verifies every example id against `ds`. */
gfsml_status gfsml_partition_save(const gfsml_dataset* ds, const gfsml_partition* part,
                                  const char* path);
gfsml_status gfsml_partition_load(const gfsml_dataset* ds, const char* path,
                                  gfsml_partition** out);

/* Summary JSON: class names per split, pool sizes, fractions, seed, warnings. */
gfsml_status gfsml_partition_describe(const gfsml_dataset* ds, const gfsml_partition* part,
                                      char** json_out);

void gfsml_partition_free(gfsml_partition* part);

/* ------------------------------------------------------------ episodes -- */

/* Sample `count` episodes from the stream seeded by `seed` and return them
 * as one JSON document. spec_json keys: n_seen, n_unseen, k_trn, k_tst,
 * phase ("meta-train" | "meta-val" | "meta-test"). */
gfsml_status gfsml_episodes_sample(const gfsml_dataset* ds, const gfsml_partition* part,
                                   const char* spec_json, uint64_t seed, int64_t count,
                                   char** json_out);

/* ------------------------------------------------------------ training -- */

/* Train a model. config_json:
 *   {"method": "batchbased" | "protonet-ml",
 *    "encoder": {"hidden": [64,64], "output_dim": 128},        (optional)
 *    "train":   {... any TrainConfig key ...},                 (optional)
 *    "val_spec": {"n_seen":2,"n_unseen":1,"k_trn":30,"k_tst":30}} (optional)
 * train keys: batch_size, lr, max_epochs, stop_metric, patience,
 * episodes_trn, episodes_val, episodes_tst, t_steps, ptc_trn, lr_head.
 * Early stopping monitors mean HM on a fixed meta-val episode set. */
gfsml_status gfsml_train(const gfsml_dataset* ds, const gfsml_partition* part,
                         const char* config_json, uint64_t seed, gfsml_model** out);

/* Checkpoints round-trip bit-exactly. */
gfsml_status gfsml_model_save(const gfsml_model* model, const char* path);
gfsml_status gfsml_model_load(const char* path, gfsml_model** out);

/* Checkpoint summary JSON without the raw parameter payload. */
gfsml_status gfsml_model_describe(const gfsml_model* model, char** json_out);

void gfsml_model_free(gfsml_model* model);

/* ---------------------------------------------------------- evaluation -- */

/* Evaluate the model and return a report JSON (format "gfsml-report-v1",
 * one entry per grid cell). options_json:
 *   {"phase": "meta-test",           (default)
 *    "episodes": N,                  (default: the model's episodes_tst)
 *    "seed": S, "workers": W,        (defaults 0 and 1)
 *    "spec": {"n_seen":2,"n_unseen":1,"k_trn":30,"k_tst":30}
 *      — or —
 *    "grid": {"n_way":[...], "n_unseen":[...], "k":[...]},
 *    "per_episode_csv": "path"}      (single-spec only)
 * Exactly one of "spec" / "grid" may be present; omitting both evaluates the
 * model's own validation spec at the chosen phase. */
gfsml_status gfsml_evaluate(const gfsml_dataset* ds, const gfsml_partition* part,
                            const gfsml_model* model, const char* options_json,
                            char** json_out);

/* Render a report JSON as the fixed-width text table (percent, two decimals,
 * "value ± ci95"). */
gfsml_status gfsml_report_render(const char* report_json, char** text_out);

/* -------------------------------------------------------------- hashing -- */

/* FNV-1a 64 content hash of a file as 16 lowercase hex characters. */
gfsml_status gfsml_file_hash(const char* path, char** hex_out);

#ifdef __cplusplus
}
#endif

#endif /* GFSML_H */
