#ifndef PCLAB_H
#define PCLAB_H

/* C interface to the sparse preconditioner laboratory. All entry points
 * return a status code; on failure pclab_last_error() describes what
 * went wrong in the calling thread. Objects are opaque handles released
 * with their matching _free function. Strings returned through char**
 * outputs are heap-allocated and released with pclab_string_free. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pclab_status {
    PCLAB_OK = 0,
    PCLAB_ERR_ARGUMENT = 1, /* bad handle, shape, or parameter */
    PCLAB_ERR_FORMAT = 2,   /* malformed file, config, or name */
    PCLAB_ERR_NUMERIC = 3,  /* breakdown, non-finite values, lost SPD */
    PCLAB_ERR_IO = 4,       /* filesystem failure */
    PCLAB_ERR_INTERNAL = 5
} pclab_status;

typedef struct pclab_matrix pclab_matrix;
typedef struct pclab_model pclab_model;

const char* pclab_version(void);
const char* pclab_status_name(pclab_status status);

/* Message for the most recent failure in this thread; never NULL. */
const char* pclab_last_error(void);

/* ---- matrices ------------------------------------------------------- */

/* Matrix Market coordinate file, real, general or symmetric. */
pclab_status pclab_matrix_read(const char* path, pclab_matrix** out);
pclab_status pclab_matrix_write(const pclab_matrix* a, const char* path);

/* Sparse matrix from triplets (0-based indices, duplicates rejected). */
pclab_status pclab_matrix_from_coo(int64_t n_rows, int64_t n_cols, int64_t nnz,
                                   const int64_t* rows, const int64_t* cols,
                                   const double* values, pclab_matrix** out);

/* Poisson stencil on a dim-dimensional grid with edge m (dim 2 or 3).
 * variable_coeff != 0 draws per-cell conductivities log-uniform in
 * [0.1, 10] from coeff_seed; otherwise the constant-coefficient stencil
 * is produced and coeff_seed is ignored. */
pclab_status pclab_matrix_gen_poisson(int dim, int64_t m, int variable_coeff,
                                      uint64_t coeff_seed, pclab_matrix** out);

pclab_status pclab_matrix_shape(const pclab_matrix* a, int64_t* n_rows,
                                int64_t* n_cols, int64_t* nnz);
void pclab_matrix_free(pclab_matrix* a);

/* ---- models --------------------------------------------------------- */

pclab_status pclab_model_init(uint64_t seed, pclab_model** out);
pclab_status pclab_model_load(const char* path, pclab_model** out);
pclab_status pclab_model_save(const pclab_model* model, const char* path);
pclab_status pclab_model_param_count(const pclab_model* model, uint64_t* out);
void pclab_model_free(pclab_model* model);

/* ---- solving -------------------------------------------------------- */

/* Preconditioned conjugate gradient on the symmetric positive definite
 * matrix a. kind is one of "none", "jacobi", "ic0", "nic", "gnnic";
 * model is required for "nic"/"gnnic" and ignored otherwise. b and
 * x_out hold n entries. rel_tol <= 0 selects the default 1e-6;
 * max_iters <= 0 selects the default of 10 n. report_json_out may be
 * NULL; otherwise it receives the solve report (iterations, timings,
 * residuals) as JSON. */
pclab_status pclab_pcg_solve(const pclab_matrix* a, const double* b,
                             const char* kind, const pclab_model* model,
                             double rel_tol, int64_t max_iters, double* x_out,
                             char** report_json_out);

/* ---- experiment commands -------------------------------------------- */

/* command is one of gen, train, eval, crossscale, dropout, analyze;
 * config_json a JSON object (NULL means {}). Artifacts are written under
 * the configured output directory; the run summary (with the fully
 * resolved config) is returned through summary_json_out unless NULL. */
pclab_status pclab_run(const char* command, const char* config_json,
                       char** summary_json_out);

void pclab_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* PCLAB_H */
