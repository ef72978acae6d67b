// Copyright 2026 The pricenego Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// C interface to the negotiation engine. Every handle is opaque and owned by
// the caller; strings returned through `char**` are UTF-8 JSON unless noted
// and must be released with pn_string_free. Functions return PN_OK or an
// error code, with a description in pn_last_error() (thread-local, valid
// until the next call on the same thread).

#ifndef PRICENEGO_H_
#define PRICENEGO_H_

#include <stddef.h>

#if defined(PN_BUILDING_LIBRARY)
#define PN_API __attribute__((visibility("default")))
#else
#define PN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pn_status {
  PN_OK = 0,
  PN_ERR_INVALID_ARGUMENT = 1,
  PN_ERR_IO = 2,
  PN_ERR_PARSE = 3,
  PN_ERR_INVARIANT = 4,
  PN_ERR_STATE = 5,
  PN_ERR_NOT_FOUND = 6,
  PN_ERR_NO_DATA = 7,
  PN_ERR_NUMERIC = 8,
  PN_ERR_INTERNAL = 9
} pn_status;

typedef struct pn_corpus pn_corpus;
typedef struct pn_model pn_model;
typedef struct pn_service pn_service;
typedef struct pn_server pn_server;

PN_API const char* pn_version(void);
PN_API const char* pn_last_error(void);
PN_API const char* pn_status_name(pn_status status);
PN_API void pn_string_free(char* s);

// {"scenarios": path, "catalog": path?, "dialogues": path?,
//  "word_vectors": path?, "word_dim": int?}
// At least one of scenarios and catalog is required. Without a catalog the
// scenarios' items serve as one. Without word vectors,
// hashed vectors of word_dim (default 300) are used.
PN_API pn_status pn_corpus_open(const char* config_json, pn_corpus** out);
PN_API void pn_corpus_free(pn_corpus* corpus);
// {"scenarios", "catalog_items", "dialogues", "labeled_dialogues", "agreed"}
PN_API pn_status pn_corpus_stats(const pn_corpus* corpus, char** stats_json);

// Fresh model with vocabularies built from the corpus. `config_json` holds
// model hyperparameters (may be NULL or "{}"); feature_dim defaults to the
// catalog's image feature length.
PN_API pn_status pn_model_create(const pn_corpus* corpus, const char* config_json, pn_model** out);
PN_API pn_status pn_model_load(const char* path, pn_model** out);
PN_API pn_status pn_model_save(const pn_model* model, const char* path);
PN_API void pn_model_free(pn_model* model);
// {"config", "stages", "parameters", "catalog_path", "word_vectors_path"}
PN_API pn_status pn_model_info(const pn_model* model, char** info_json);

// Training stages. `train_json` is a training config (NULL for defaults);
// `metrics_csv` may be NULL. Reports carry per-epoch losses or rewards.
PN_API pn_status pn_train_ove(pn_model* model, const pn_corpus* corpus, const char* train_json,
                              const char* metrics_csv, char** report_json);
PN_API pn_status pn_train_sl(pn_model* model, const pn_corpus* corpus, const char* train_json,
                             const char* metrics_csv, char** report_json);
PN_API pn_status pn_train_rl(pn_model* model, const pn_corpus* corpus, const char* train_json,
                             const char* metrics_csv, char** report_json);

// Item JSON in catalog format. Result: {"estimate", "unclamped",
// "neighbors": [{"id", "score", "weight"}]}.
PN_API pn_status pn_estimate(const pn_model* model, const pn_corpus* corpus, const char* item_json,
                             char** result_json);

// {"n": int, "seed": int?, "sample": bool?, "temperature": num?,
//  "max_turns": int?} Writes n transcripts (scenarios cycled in file
// order) to out_path as JSONL; returns a summary.
PN_API pn_status pn_selfplay(const pn_model* model, const pn_corpus* corpus, const char* options_json,
                             const char* out_path, char** summary_json);

// Metric report for generated vs human dialogues. scenarios_path may be NULL,
// in which case offer consistency is judged without listing prices.
PN_API pn_status pn_evaluate(const char* generated_path, const char* human_path, const char* scenarios_path,
                             char** report_json);

// {"log_path": str?, "idle_timeout_seconds": num?, "max_turns": int?,
//  "first_mover": "buyer"|"seller"?}. The model and corpus must outlive the
// service.
PN_API pn_status pn_service_create(const pn_model* model, const pn_corpus* corpus, const char* options_json,
                                   pn_service** out);
PN_API void pn_service_free(pn_service* service);
// {"session_id", "human_role", "agent_role", "messages": [...]}
PN_API pn_status pn_service_create_session(pn_service* service, const char* scenario_id, const char* human_role,
                                           char** session_json);
// JSON array of messages produced in response.
PN_API pn_status pn_service_handle(pn_service* service, const char* session_id, const char* message_json,
                                   char** messages_json);
PN_API pn_status pn_service_rate(pn_service* service, const char* session_id, const char* rating_json);
PN_API pn_status pn_service_scenario(const pn_service* service, const char* scenario_id, char** summary_json);
PN_API pn_status pn_service_expire_idle(pn_service* service, size_t* expired);

// Serves the HTTP protocol on a background thread. Port 0 picks a free port,
// reported through bound_port.
PN_API pn_status pn_server_start(pn_service* service, const char* host, int port, pn_server** out, int* bound_port);
// Blocks until the server stops.
PN_API pn_status pn_server_wait(pn_server* server);
PN_API void pn_server_stop(pn_server* server);
PN_API void pn_server_free(pn_server* server);

// Replays a session log against the scenarios and checks recorded outcomes.
PN_API pn_status pn_replay(const char* log_path, const char* scenarios_path, char** report_json);
// {phase: [legal action names]}
PN_API pn_status pn_legal_actions(char** table_json);

#ifdef __cplusplus
}
#endif

#endif  // PRICENEGO_H_
