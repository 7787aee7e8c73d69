#ifndef RETROGRADE_H
#define RETROGRADE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define RG_API __attribute__((visibility("default")))
#else
#define RG_API
#endif

typedef struct rg_session rg_session;

typedef enum rg_status {
    RG_OK = 0,
    RG_ERR_PARSE = 1,
    RG_ERR_LOAD = 2,
    RG_ERR_RUNTIME = 3,
    RG_ERR_SCHEDULE = 4,
    RG_ERR_REPLAY = 5,
    RG_ERR_ENGINE = 6,
    RG_ERR_REQUEST = 7,
    RG_ERR_INTERNAL = 8,
    RG_ERR_INVALID_ARGUMENT = 9
} rg_status;

/* Strings returned through char** out-parameters are owned by the caller and
 * must be released with rg_free. */
RG_API void rg_free(char* p);

RG_API const char* rg_version(void);

/* Details of the last failure on the calling thread. The pointers stay valid
 * until the next API call on that thread. */
RG_API const char* rg_last_error(void);
RG_API const char* rg_last_error_code(void);

/* Opens a debug session. `source` may be NULL; otherwise it becomes the
 * program that a bare `load` request reloads. `constants_json` is an object
 * such as {"M":3,"N":5}, or NULL. */
RG_API rg_status rg_session_open(const char* source, const char* constants_json, rg_session** out);
RG_API void rg_session_close(rg_session* s);

/* Replay comparison after every request; off by default in release builds. */
RG_API rg_status rg_session_set_checks(rg_session* s, int on);

/* Executes one protocol line. The response (one JSON line) is always produced
 * when the line was handled, even if the request itself failed; `events`
 * receives the event lines emitted before it, newline-separated (may be
 * empty). `events` may be NULL. Returns RG_ERR_REQUEST after a shutdown
 * request. */
RG_API rg_status rg_session_request(rg_session* s, const char* line, char** response, char** events);

/* Serves the session over stdin/stdout, or over 127.0.0.1:port. */
RG_API rg_status rg_serve_stdio(rg_session* s);
RG_API rg_status rg_serve_tcp(rg_session* s, int port);

/* Runs a program to completion under a schedule and returns
 * {"outcome","state","path","log","schedule"}. */
RG_API rg_status rg_run(const char* source, const char* constants_json, const char* schedule_json,
                        char** out_json);

/* Re-executes the first `upto` entries recorded in `log_json`; returns the
 * same shape as rg_run. */
RG_API rg_status rg_replay(const char* source, const char* constants_json, const char* log_json,
                           uint64_t upto, char** out_json);

/* Runs a program under a schedule and generates reverse code for entry
 * `seq` (0: every entry). */
RG_API rg_status rg_revcode(const char* source, const char* constants_json,
                            const char* schedule_json, uint64_t seq, char** out_json);

/* Bounded-buffer benchmark. `config_json` fields: M, N, src, schedule
 * ("s-seq" | "s-opt" | schedule object), engines ("all" or names),
 * checkpoints (source lines), retention, check_back. */
RG_API rg_status rg_bench(const char* config_json, char** out_csv, char** out_json);

/* Source text of a built-in fixture ("bounded-buffer"). `values_json` is the
 * source array, or NULL for the default of length `n`. */
RG_API rg_status rg_fixture_source(const char* name, int64_t n, const char* values_json, char** out);

/* REPL helpers: a command line to a request (out is NULL for blank input),
 * and a response to display text. */
RG_API rg_status rg_repl_translate(const char* line, int64_t id, char** out_json);
RG_API rg_status rg_repl_render(const char* response_json, char** out_text);

#ifdef __cplusplus
}
#endif

#endif
