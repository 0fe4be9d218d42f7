/* ultraiso — isometries of finite-dimensional ultrametric normed spaces.
 *
 * C interface to the shared library. All structured data crosses this
 * boundary as JSON strings (the schemas are documented in README.md);
 * spaces and isometries persist behind opaque handles.
 *
 * Every function returning a status writes its result only on ULTRAISO_OK
 * or ULTRAISO_NEGATIVE; ultraiso_last_error() describes the most recent
 * failure on the calling thread. Strings returned through char** are
 * heap-allocated and must be released with ultraiso_string_free().
 */
#ifndef ULTRAISO_H
#define ULTRAISO_H

#include <stdint.h>

#if defined(_WIN32)
#define ULTRAISO_API __declspec(dllexport)
#else
#define ULTRAISO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ultraiso_status {
    ULTRAISO_OK = 0,        /* success / verified positive */
    ULTRAISO_NEGATIVE = 1,  /* verified negative result; details in the output JSON */
    ULTRAISO_BAD_INPUT = 2, /* malformed or inconsistent input */
    ULTRAISO_RANGE = 3,     /* valuation window, cap or depth bound exceeded */
    ULTRAISO_INTERNAL = 4
} ultraiso_status;

typedef struct ultraiso_space ultraiso_space;
typedef struct ultraiso_iso ultraiso_iso;

ULTRAISO_API uint32_t ultraiso_abi_version(void);
ULTRAISO_API const char* ultraiso_last_error(void);
ULTRAISO_API void ultraiso_string_free(char* s);

/* ---- spaces ---- */
ULTRAISO_API ultraiso_status ultraiso_space_parse(const char* json, ultraiso_space** out);
ULTRAISO_API void ultraiso_space_free(ultraiso_space* space);
/* Normalized descriptor plus the attainable norm values. */
ULTRAISO_API ultraiso_status ultraiso_space_describe(const ultraiso_space* space,
                                                     char** json_out);

/* ---- geometry ---- */
/* Ball-class representatives of the sphere; an unattainable radius yields an
 * empty decomposition, not an error. */
ULTRAISO_API ultraiso_status ultraiso_decompose(const ultraiso_space* space,
                                                const char* radius, int32_t depth,
                                                char** json_out);

/* ---- isometry trees ---- */
ULTRAISO_API ultraiso_status ultraiso_iso_parse(const ultraiso_space* space,
                                                const char* json, ultraiso_iso** out);
ULTRAISO_API void ultraiso_iso_free(ultraiso_iso* iso);
ULTRAISO_API ultraiso_status ultraiso_iso_to_json(const ultraiso_iso* iso,
                                                  char** json_out);
ULTRAISO_API ultraiso_status ultraiso_iso_random(const ultraiso_space* space,
                                                 int32_t depth, uint64_t seed,
                                                 ultraiso_iso** out);
ULTRAISO_API ultraiso_status ultraiso_iso_apply(const ultraiso_iso* iso,
                                                const char* point_json, char** json_out);
/* ULTRAISO_NEGATIVE on a verified failure; the report carries the witness. */
ULTRAISO_API ultraiso_status ultraiso_iso_verify(const ultraiso_iso* iso, int32_t depth,
                                                 char** report_json);
/* Composition second_applied . first_applied, refactored into a tree. */
ULTRAISO_API ultraiso_status ultraiso_iso_compose(const ultraiso_iso* first_applied,
                                                  const ultraiso_iso* second_applied,
                                                  int32_t depth, ultraiso_iso** out);
/* Factors a centred isometry given as {"map":[[x,y],...]} into a tree. */
ULTRAISO_API ultraiso_status ultraiso_iso_factor_pairs(const ultraiso_space* space,
                                                       const char* pairs_json,
                                                       int32_t depth, ultraiso_iso** out);

/* ---- classification ---- */
ULTRAISO_API ultraiso_status ultraiso_classify(const ultraiso_space* space, int32_t depth,
                                               char** json_out);

/* ---- oracle ---- */
ULTRAISO_API ultraiso_status ultraiso_census(const ultraiso_space* space, uint64_t cap,
                                             char** json_out);
ULTRAISO_API ultraiso_status ultraiso_enumerate(const ultraiso_space* space, uint64_t cap,
                                                char** json_out);

/* ---- sphere extension ---- */
/* ULTRAISO_NEGATIVE when obstructed; the report names the obstruction. */
ULTRAISO_API ultraiso_status ultraiso_tingley_extend(const char* spec_json, int32_t m,
                                                     int32_t depth, char** json_out);
ULTRAISO_API ultraiso_status ultraiso_tingley_obstruction(const char* space_json,
                                                          const char* space2_json,
                                                          const char* radius,
                                                          const char* radius_prime,
                                                          char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* ULTRAISO_H */
