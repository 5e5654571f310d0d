/*
 * otto.h
 *
 * C API of the otto autotuning framework: an opaque-handle, error-code
 * surface over the server, the application-side client and the experiment
 * harness. All functions are thread-safe unless noted; the last error
 * message is thread-local.
 *
 * This source file is part of the otto project.
 *
 * Copyright 2026 the otto authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OTTO_H
#define OTTO_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum otto_status {
  OTTO_OK = 0,
  OTTO_EINVAL = 1,    /* bad argument or malformed input */
  OTTO_EIO = 2,       /* storage or socket failure */
  OTTO_EPROTO = 3,    /* malformed frame or payload */
  OTTO_ESTATE = 4,    /* operation illegal in the current state */
  OTTO_ENUMERIC = 5,  /* numerical failure (singular fit, non-finite data) */
  OTTO_EINTERNAL = 6  /* unexpected internal error */
} otto_status;

/* Library version, static storage. */
const char* otto_version(void);

/* Message of the calling thread's most recent failure ("" when none). */
const char* otto_last_error(void);

/* Frees strings returned through char** out-parameters. */
void otto_string_free(char* s);

/*
 * Validates an application description (JSON). Returns OTTO_OK and
 * *problems_out = NULL when valid; OTTO_EINVAL with *problems_out = a
 * newline-joined problem list (caller frees) when not. Parse failures
 * return OTTO_EINVAL with *problems_out = NULL and otto_last_error() set.
 */
otto_status otto_description_validate(const char* description_json, char** problems_out);

/* ---------------------------------------------------------------- server */

typedef struct otto_server otto_server;

typedef struct otto_server_options {
  const char* storage_dir;  /* required: per-app CSV files live here */
  unsigned short port;      /* TCP port; 0 picks an ephemeral port */
  double heartbeat_seconds; /* <= 0 means the default (5 s) */
  const char* log_level;    /* "error"|"warn"|"info"|"debug", NULL = "warn" */
} otto_server_options;

/* Starts a server (recovering persisted sessions) plus its TCP endpoint. */
otto_status otto_server_start(const otto_server_options* options, otto_server** out);

/* The bound TCP port (after start). 0 on a NULL handle. */
unsigned short otto_server_port(const otto_server* server);

/* Stops, joins and frees. The handle is invalid afterwards. */
otto_status otto_server_stop(otto_server* server);

/* ---------------------------------------------------------------- client */

typedef struct otto_client otto_client;

/*
 * Starts the application-side handler. description_json is returned to the
 * server on request; broker_address is "host:port" (the OTTO_BROKER
 * environment variable overrides it); client_id must be unique per process
 * participating in the application.
 */
otto_status otto_client_start(const char* app_name, const char* description_json,
                              const char* broker_address, const char* client_id,
                              otto_client** out);

/*
 * The configuration to run next, given the current input's features.
 * features has n_features entries in description order (NULL iff 0);
 * knobs_out receives n_knobs values in description order.
 */
otto_status otto_client_get_config(otto_client* client, const double* features,
                                   size_t n_features, double* knobs_out, size_t n_knobs);

/* Reports one evaluated (config, features, metrics) triple. */
otto_status otto_client_report(otto_client* client, const double* knobs, size_t n_knobs,
                               const double* features, size_t n_features,
                               const double* metrics, size_t n_metrics);

/*
 * Selector requirements as JSON:
 *   {"rank": {"efp": "<name>", "direction": "minimize"|"maximize"},
 *    "constraints": [{"efp": "<name>", "op": "le"|"ge",
 *                     "threshold": <num>, "priority": <int>} ...]}
 */
otto_status otto_client_set_requirements(otto_client* client, const char* requirements_json);

/* 1 once a knowledge broadcast is installed, else 0. */
int otto_client_has_knowledge(const otto_client* client);

/* Publishes bye, joins the service thread and frees the handle. */
otto_status otto_client_stop(otto_client* client);

/* --------------------------------------------------------------- harness */

/* Runs an experiment spec file; outputs land under out_dir. */
otto_status otto_harness_run(const char* spec_path, const char* out_dir,
                             unsigned long long seed);

#ifdef __cplusplus
}
#endif

#endif /* OTTO_H */
