#ifndef TOPICMAP_H
#define TOPICMAP_H

/* Generated by cbindgen from the Rust sources; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum {
  /**
   * The call succeeded.
   */
  TM_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TM_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TM_INVALID_UTF8 = 2,
  /**
   * A file could not be read.
   */
  TM_IO_ERROR = 3,
  /**
   * The document is not well-formed or breaks an interchange rule.
   */
  TM_PARSE_ERROR = 4,
  /**
   * The query text has a syntax error.
   */
  TM_QUERY_ERROR = 5,
  /**
   * A model rule was violated.
   */
  TM_MODEL_ERROR = 6,
} TmStatus;

/**
 * An in-memory topic map. Opaque: create it with `tm_map_load`,
 * `tm_map_parse`, or `tm_map_merge`, release it with `tm_map_free`.
 */
typedef struct TmMap TmMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message for the most recent failing call on this thread. Never
 * null; empty before any failure. Valid until the next failing call on
 * the same thread — copy it if it must outlive that.
 */
const char *tm_last_error(void);

/**
 * Parse the XTM file at `path` into a new handle. Non-fatal parse
 * warnings are kept on the handle; read them with `tm_map_notes`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_map` must be a valid,
 * writable pointer.
 */
TmStatus tm_map_load(const char *path, TmMap **out_map);

/**
 * Parse an XTM document held in memory. `base_locator` is the IRI
 * relative references resolve against.
 *
 * # Safety
 * `xml` and `base_locator` must be NUL-terminated strings; `out_map`
 * must be a valid, writable pointer.
 */
TmStatus tm_map_parse(const char *xml, const char *base_locator, TmMap **out_map);

/**
 * Merge two maps into a new handle; the inputs stay usable and
 * unchanged. The handle's notes hold one `survivor <= absorbed
 * [reason]` line per merged pair.
 *
 * # Safety
 * `a` and `b` must be live handles; `out_map` must be a valid,
 * writable pointer.
 */
TmStatus tm_map_merge(const TmMap *a, const TmMap *b, TmMap **out_map);

/**
 * Release a handle. Null is a no-op.
 *
 * # Safety
 * `map` must be null or a handle produced by this library that has not
 * already been freed.
 */
void tm_map_free(TmMap *map);

/**
 * Number of topics in the map; 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t tm_map_topic_count(const TmMap *map);

/**
 * Number of associations in the map; 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t tm_map_association_count(const TmMap *map);

/**
 * Notes attached to the handle by the operation that produced it
 * (parse warnings, merge report). Possibly empty, one note per line.
 *
 * # Safety
 * `map` must be a live handle; `out_text` must be a valid, writable
 * pointer.
 */
TmStatus tm_map_notes(const TmMap *map, char **out_text);

/**
 * Run the structural validator. The text holds one `SEVERITY CODE
 * subject: message` line per finding, empty when the map is clean.
 *
 * # Safety
 * `map` must be a live handle; `out_text` must be a valid, writable
 * pointer.
 */
TmStatus tm_map_validate(const TmMap *map, char **out_text);

/**
 * Evaluate a query. `out_ids` receives one topic id per line (empty
 * when nothing matched). `out_notes`, when non-null, receives the
 * informational notes (unknown ids, skipped dangling references), one
 * per line.
 *
 * # Safety
 * `map` must be a live handle; `query` must be NUL-terminated;
 * `out_ids` must be valid and writable; `out_notes` may be null.
 */
TmStatus tm_map_query(const TmMap *map, const char *query, char **out_ids, char **out_notes);

/**
 * Search the name index. Output is one hit per line, best first:
 * `topic-id<TAB>score<TAB>occurrence-count`, at most `limit` lines.
 *
 * # Safety
 * `map` must be a live handle; `text` must be NUL-terminated;
 * `out_text` must be a valid, writable pointer.
 */
TmStatus tm_map_search(const TmMap *map, const char *text, size_t limit, char **out_text);

/**
 * Serialize the map as canonical XTM.
 *
 * # Safety
 * `map` must be a live handle; `out_text` must be a valid, writable
 * pointer.
 */
TmStatus tm_map_to_xtm(const TmMap *map, char **out_text);

/**
 * Serialize the map as the canonical JSON dump.
 *
 * # Safety
 * `map` must be a live handle; `out_text` must be a valid, writable
 * pointer.
 */
TmStatus tm_map_to_json(const TmMap *map, char **out_text);

/**
 * Release a string produced by this library. Null is a no-op.
 *
 * # Safety
 * `text` must be null or a string delivered through one of this
 * library's out-pointers, not already freed.
 */
void tm_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPICMAP_H */
