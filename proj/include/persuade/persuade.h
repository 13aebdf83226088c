/*
 * Copyright 2026 The Persuade Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PERSUADE_PERSUADE_H
#define PERSUADE_PERSUADE_H

#include <stddef.h>

#if defined(PERSUADE_BUILDING_LIBRARY)
#define PSD_API __attribute__((visibility("default")))
#else
#define PSD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values are stable. */
typedef enum psd_status {
    PSD_OK = 0,
    PSD_PARSE_ERROR = 1,
    PSD_VALIDATION_ERROR = 2,
    PSD_SHAPE_ERROR = 3,
    PSD_NUMERICAL_ERROR = 4,
    PSD_DECODE_ERROR = 5,
    PSD_BACKEND_UNAVAILABLE = 6,
    PSD_VOCAB_ERROR = 7,
    PSD_EMPTY_CORPUS = 8,
    PSD_DIVERGENCE_ERROR = 9,
    PSD_EMPTY_POOL = 10,
    PSD_ORACLE_ERROR = 11,
    PSD_DEGENERATE_ERROR = 12,
    PSD_LENGTH_MISMATCH = 13,
    PSD_MISSING_TAGS = 14,
    PSD_DUPLICATE_ID = 15,
    PSD_ROSTER_TOO_SMALL = 16,
    PSD_NO_ASSIGNMENT = 17,
    PSD_INSUFFICIENT_ANNOTATIONS = 18,
    PSD_DIMENSION_MISMATCH = 19,
    PSD_STRATEGY_NOT_IN_FINAL_LABELS = 20,
    PSD_UNKNOWN_ROUND = 21,
    PSD_ROUND_NOT_CLOSABLE = 22,
    PSD_NOT_FOUND = 23,
    PSD_IO_ERROR = 24,
    PSD_INVALID_ARGUMENT = 25,
    PSD_TAXONOMY_MISMATCH = 26,
    PSD_CONFLICT = 27,
    PSD_UNAUTHORIZED = 28,
    PSD_INTERNAL_ERROR = 99
} psd_status;

typedef struct psd_service psd_service;
typedef struct psd_server psd_server;

PSD_API const char* psd_version(void);
PSD_API const char* psd_status_name(psd_status status);
/* Message of the last failure on the calling thread; "" after success. */
PSD_API const char* psd_last_error(void);
/* Frees strings returned through char** out-parameters. NULL is ignored. */
PSD_API void psd_string_free(char* s);

/*
 * Opens (or creates) a service rooted at data_dir. config_json may be NULL or
 * a JSON object overlaying <data_dir>/config.json (keys: extractors, taxonomy,
 * roster, model, train, k, retrain, seed).
 */
PSD_API psd_status psd_service_open(const char* data_dir, const char* config_json, psd_service** out);
PSD_API void psd_service_close(psd_service* svc);

/* Every call below writes a JSON document to *out_json on success. */
PSD_API psd_status psd_ingest(psd_service* svc, const char* manifest_path, char** out_json);
/* request_json: NULL, {"k": n} or {"ids": [...]}. */
PSD_API psd_status psd_open_round(psd_service* svc, const char* request_json, char** out_json);
/* PSD_NOT_FOUND when no round is open. */
PSD_API psd_status psd_current_round(psd_service* svc, int* round_t);
PSD_API psd_status psd_pending_assignments(psd_service* svc, int round_t, const char* annotator_id, char** out_json);
PSD_API psd_status psd_submit_annotation(psd_service* svc, const char* record_json, char** out_json);
PSD_API psd_status psd_submit_mask(psd_service* svc, const char* mask_json, char** out_json);
PSD_API psd_status psd_round_status(psd_service* svc, int round_t, char** out_json);
PSD_API psd_status psd_close_round(psd_service* svc, int round_t, char** out_json);
PSD_API psd_status psd_train(psd_service* svc, char** out_json);
PSD_API psd_status psd_evaluate(psd_service* svc, const char* split, char** out_json);
/* Top-k of the current pool under the published checkpoint. */
PSD_API psd_status psd_select_batch(psd_service* svc, size_t k, char** out_json);
PSD_API psd_status psd_analyze(psd_service* svc, char** out_json);
PSD_API psd_status psd_state(psd_service* svc, char** out_json);
PSD_API psd_status psd_latest_metrics(psd_service* svc, char** out_json);
PSD_API psd_status psd_taxonomy(psd_service* svc, char** out_json);

/* Service-free helpers. */
PSD_API psd_status psd_select_from_manifest(const char* checkpoint_path, const char* manifest_path, size_t k,
                                            const char* extractors, char** out_json);
PSD_API psd_status psd_replay_ledger(const char* ledger_path, char** out_state_json);
/* Entropy (nats) of a sigmoid vector after normalisation; ln(n) when all zero. */
PSD_API psd_status psd_uncertainty(const double* probs, size_t n, double* out);

/*
 * REST server. token_file may be NULL to disable authentication. port 0 binds
 * a free port, reported through bound_port.
 */
PSD_API psd_status psd_server_start(psd_service* svc, const char* host, int port, const char* token_file,
                                    psd_server** out, int* bound_port);
PSD_API void psd_server_stop(psd_server* server);
/* Blocks until the process is interrupted. */
PSD_API psd_status psd_serve(psd_service* svc, const char* host, int port, const char* token_file);

#ifdef __cplusplus
}
#endif

#endif
