/* C API for the mean field game recovery library.
 *
 * All entry points are thread-safe with respect to distinct handles. Functions
 * return MFGGP_OK on success; on failure they return a status code and leave a
 * description retrievable through mfggp_last_error() (thread-local).
 */
#ifndef MFGGP_H
#define MFGGP_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mfggp_status {
  MFGGP_OK = 0,
  MFGGP_ERROR_INVALID_ARGUMENT = 1, /* malformed config or bad inputs */
  MFGGP_ERROR_SOLVER = 2,           /* factorization or optimization failure */
  MFGGP_ERROR_IO = 3,               /* unreadable config / unwritable output */
  MFGGP_ERROR_INTERNAL = 4
} mfggp_status;

/* Opaque result handle. */
typedef struct mfggp_result mfggp_result;

const char* mfggp_version(void);

/* Last error message on this thread; empty string if none. */
const char* mfggp_last_error(void);

/* Runs the experiment described by a JSON config document. output_dir
 * overrides the config's output directory when non-NULL. On success *out owns
 * a result handle; release it with mfggp_result_free. */
mfggp_status mfggp_run_json(const char* config_json, const char* output_dir,
                            mfggp_result** out);

/* Same, reading the config from a file. */
mfggp_status mfggp_run_file(const char* config_path, const char* output_dir,
                            mfggp_result** out);

/* Serialized result record (JSON). The pointer stays valid until the handle is
 * freed. */
const char* mfggp_result_json(const mfggp_result* result);

/* Fetches one numeric field by dotted path, e.g. "recovered.nu" or
 * "errors.v_minus_hbar". */
mfggp_status mfggp_result_number(const mfggp_result* result, const char* dotted_path,
                                 double* value);

void mfggp_result_free(mfggp_result* result);

#ifdef __cplusplus
}
#endif

#endif /* MFGGP_H */
