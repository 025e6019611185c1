#ifndef LIVEREC_H
#define LIVEREC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define LR_API __attribute__((visibility("default")))
#else
#define LR_API
#endif

typedef enum lr_status {
  LR_OK = 0,
  LR_INVALID_ARGUMENT = 1,
  LR_UNKNOWN_LANGUAGE = 2,
  LR_SUPERSEDED = 3,
  LR_UNAVAILABLE = 4,
  LR_IO = 5,
  LR_ENGINE = 6,
  LR_INTERNAL = 7
} lr_status;

typedef struct lr_engine lr_engine;
typedef struct lr_server lr_server;

/* Zero-initialise, then set what you need; NULL / 0 fields keep defaults. */
typedef struct lr_engine_options {
  /* Scratch directory for agents, sources and artifacts ("liverec-work"). */
  const char *work_dir;
  /* mock-adapter executable; defaults to $LIVEREC_MOCK_ADAPTER, then the
     one built next to the library. */
  const char *mock_adapter;
  /* Interpreter for the python backend ("python3"). */
  const char *python;
  /* Extra directory of backend manifests (*.json). */
  const char *backend_dir;
  /* Comma-separated backend ids to accept; NULL accepts all. */
  const char *languages;
  /* Snapshot limit per recording; 0 uses $LIVEREC_MAX_STEPS, then 80. */
  int max_steps;
} lr_engine_options;

LR_API const char *lr_status_str(lr_status status);
/* Message of the last failed call on this thread; never NULL. */
LR_API const char *lr_last_error(void);
/* Frees strings returned through char** out-parameters. */
LR_API void lr_string_free(char *text);

LR_API lr_status lr_engine_create(const lr_engine_options *options, lr_engine **out);
LR_API void lr_engine_destroy(lr_engine *engine);

/* Runs one probe and returns the ProbeResult JSON. Pipeline failures
   (compile errors, missing annotation, crashes) are LR_OK with the
   matching "outcome" in the JSON. */
LR_API lr_status lr_engine_probe(lr_engine *engine, const char *language, const char *source,
                                 char **result_json);
/* Last ProbeResult JSON for `language`, or the JSON literal null. */
LR_API lr_status lr_engine_latest(lr_engine *engine, const char *language, char **result_json);
/* [{id, description, available, reason}] */
LR_API lr_status lr_engine_list_backends(lr_engine *engine, char **backends_json);

/* HTTP + WebSocket server over the engine; port 0 picks a free port. The
   engine must outlive the server. */
LR_API lr_status lr_server_start(lr_engine *engine, const char *host, unsigned short port,
                                 lr_server **out);
LR_API unsigned short lr_server_port(const lr_server *server);
/* Blocks until lr_server_stop is called from another thread. */
LR_API void lr_server_wait(lr_server *server);
/* Closes the listener and all connections; idempotent. */
LR_API void lr_server_stop(lr_server *server);
/* Stops if needed and frees; no other thread may still use `server`. */
LR_API void lr_server_destroy(lr_server *server);

/* Benchmarks; each returns CSV text with a header row. */
LR_API lr_status lr_bench_replay(lr_engine *engine, const char *scenario_path, const char *language,
                                 char **csv);
LR_API lr_status lr_bench_steps(lr_engine *engine, const char *language, const int *steps,
                                size_t count, int repeat, char **csv);
LR_API lr_status lr_bench_compile(lr_engine *engine, const char *language, const int *locs,
                                  size_t count, char **csv);
/* `adapter_latency_ms` > 0 passes --latency to the adapter (mock only). */
LR_API lr_status lr_bench_latency(lr_engine *engine, const char *language, int n, int pause_ms,
                                  int adapter_latency_ms, char **csv);

#ifdef __cplusplus
}
#endif

#endif
