#ifndef QOSSHARE_H
#define QOSSHARE_H

/* C interface to the qosshare library. Every call returns a status code;
   on failure qs_last_error() describes it (per thread). Strings handed out
   through char** parameters belong to the caller: release with
   qs_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QS_API __declspec(dllexport)
#else
#define QS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum qs_status {
    QS_OK = 0,
    QS_EVALIDATION = 2, /* schema or argument errors */
    QS_EINFEASIBLE = 3, /* QoS spec unsupportable */
    QS_ERUNTIME = 4     /* I/O and everything else */
};

typedef struct qs_scenario qs_scenario;

QS_API const char* qs_version(void);
QS_API const char* qs_last_error(void);
QS_API void qs_string_free(char* s);

QS_API int qs_scenario_load(const char* path, qs_scenario** out);
QS_API int qs_scenario_parse(const char* json_text, qs_scenario** out);
QS_API void qs_scenario_free(qs_scenario* sc);
QS_API int qs_scenario_name(const qs_scenario* sc, char** out);

/* JSON and human-readable reports; either output may be NULL. Returns
   QS_EINFEASIBLE (with both reports filled) when the domain is empty. */
QS_API int qs_validate(const qs_scenario* sc, char** report_json, char** report_text);
QS_API int qs_bounds(const qs_scenario* sc, char** report_json);

/* Runs every (policy, seed) cell into out_dir/<scenario>/[seed-N/]<policy>/.
   seeds == NULL uses the scenario's own seed. */
QS_API int qs_run(const qs_scenario* sc, const char* out_dir, const uint64_t* seeds, size_t n_seeds, int jobs,
                  int debug_slack);

/* a and b are run directories or frames.csv paths; writes the paired table. */
QS_API int qs_compare(const char* a, const char* b, char** csv);

QS_API int qs_export_polyhedron(const qs_scenario* sc, char** text);

#ifdef __cplusplus
}
#endif

#endif
