#ifndef PTELAB_H
#define PTELAB_H

/* C interface to the pretest-estimation library.
 *
 * Every fallible call returns a ptelab_status; on failure the thread-local
 * message from ptelab_last_error() describes what went wrong. Output
 * parameters are written only on PTELAB_OK. Handles are created and released
 * by the matching _create/_destroy pair and must not cross threads while a
 * call on them is in flight.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  PTELAB_OK = 0,
  PTELAB_ERR_ARG = 1,     /* null handle or out pointer, malformed argument */
  PTELAB_ERR_DOMAIN = 2,  /* parameter outside the mathematical domain */
  PTELAB_ERR_NUMERIC = 3, /* convergence or conditioning failure */
  PTELAB_ERR_IO = 4       /* filesystem trouble */
} ptelab_status;

const char* ptelab_version(void);

/* Message for the most recent failure on this thread; empty after success. */
const char* ptelab_last_error(void);

/* ------------------------------------------------------------ distributions */

/* Inverse chi-square CDF. prob in [0, 1), df > 0. */
ptelab_status ptelab_chi2_quantile(double prob, double df, double* out);

/* Noncentral chi-square CDF at x with df degrees and noncentrality lambda. */
ptelab_status ptelab_noncentral_chi2_cdf(double x, double df, double lambda,
                                         double* out);

/* Pretest cutoff: upper alpha quantile of chi-square with p - r degrees.
 * alpha = 0 maps to +infinity, alpha = 1 to 0. */
ptelab_status ptelab_pretest_threshold(int p, int r, double alpha,
                                       double* out);

/* Acceptance probability gamma_j: noncentral chi-square with p - r + j
 * degrees and noncentrality delta_sq evaluated at the pretest cutoff. */
ptelab_status ptelab_gamma_j(int j, int p, int r, double alpha,
                             double delta_sq, double* out);

/* --------------------------------------------------------- scalar risk laws */

/* Information-weighted scalar risk of the unconstrained estimator (= p). */
ptelab_status ptelab_amse_scalar_u(int p, double* out);

/* Scalar risk of the constrained estimator: r + delta_sq. */
ptelab_status ptelab_amse_scalar_c(int p, int r, double delta_sq, double* out);

/* Scalar risk of the pretest estimator (closed form in gamma_2, gamma_4). */
ptelab_status ptelab_amse_scalar_pte(int p, int r, double alpha,
                                     double delta_sq, double* out);

/* -------------------------------------------- regression risk matrix (2x2) */

/* Risk matrix of the pretest estimator of (intercept, slope) under a local
 * slope perturbation delta, written row-major into out[4].
 * sigma_sq > 0 is the noise variance, x_bar0 and s0 > 0 the limiting
 * regressor mean and spread, alpha in [0, 1] the pretest level. */
ptelab_status ptelab_linreg_amse(double sigma_sq, double x_bar0, double s0,
                                 double delta, double alpha, double* out);

/* Largest absolute entry gap between the closed-form matrix above and the
 * generic projection-based route. Near machine epsilon when healthy. */
ptelab_status ptelab_linreg_amse_check(double sigma_sq, double x_bar0,
                                       double s0, double delta, double alpha,
                                       double* out_gap);

/* -------------------------------------------------------------- simulation */

typedef struct ptelab_sim_config ptelab_sim_config;
typedef struct ptelab_sim_result ptelab_sim_result;

/* Fresh configuration for the two-sample bivariate grid study. Defaults:
 * sizes {2000, 2000}, 2000 replications, alpha 0.05, grid points 0..9,
 * seed 1, per-block scaling, automatic thread count. */
ptelab_sim_config* ptelab_sim_config_create(void);
void ptelab_sim_config_destroy(ptelab_sim_config* cfg);

ptelab_status ptelab_sim_config_set_sizes(ptelab_sim_config* cfg,
                                          const long* n_i, int count);
ptelab_status ptelab_sim_config_set_reps(ptelab_sim_config* cfg, long reps);
ptelab_status ptelab_sim_config_set_alpha(ptelab_sim_config* cfg,
                                          double alpha);
ptelab_status ptelab_sim_config_set_ell_range(ptelab_sim_config* cfg,
                                              int ell_min, int ell_max);
ptelab_status ptelab_sim_config_set_seed(ptelab_sim_config* cfg,
                                         uint64_t seed);
/* threads = 0 picks one worker per hardware thread. */
ptelab_status ptelab_sim_config_set_threads(ptelab_sim_config* cfg,
                                            int threads);
/* name: "block" rescales each sample's error block by its own root size,
 * "total" uses the pooled root size for every block. */
ptelab_status ptelab_sim_config_set_scaling(ptelab_sim_config* cfg,
                                            const char* name);

/* Run the study. On success *out owns the result until
 * ptelab_sim_result_destroy. Deterministic in (config, seed). */
ptelab_status ptelab_sim_run(const ptelab_sim_config* cfg,
                             ptelab_sim_result** out);
void ptelab_sim_result_destroy(ptelab_sim_result* res);

typedef struct {
  const char* kind;      /* "scale" | "shape" | "cov" */
  int ell;               /* grid index */
  double delta_sq;       /* separation from the constraint at this index */
  const char* estimator; /* "U" | "C" | "PTE" */
  double empirical_amse_s;
  double se;             /* replication standard error of the scalar risk */
  double analytic_amse_s;
  long m_effective;      /* replications that survived exclusion */
} ptelab_sim_row;

/* Rows are kind-major, then grid index, then U/C/PTE. String fields point
 * into the result and stay valid until it is destroyed. */
long ptelab_sim_result_row_count(const ptelab_sim_result* res);
ptelab_status ptelab_sim_result_row(const ptelab_sim_result* res, long index,
                                    ptelab_sim_row* out);

/* Rejection frequency of the pretest: kind 0 scale, 1 shape, 2 cov;
 * ell_index counts from the configured ell_min. */
ptelab_status ptelab_sim_result_reject_frac(const ptelab_sim_result* res,
                                            int kind, int ell_index,
                                            double* out);

long ptelab_sim_result_excluded(const ptelab_sim_result* res);
double ptelab_sim_result_exclusion_rate(const ptelab_sim_result* res);
/* 1 when the exclusion rate breached the acceptable ceiling, else 0. */
int ptelab_sim_result_exclusion_breach(const ptelab_sim_result* res);

ptelab_status ptelab_sim_result_write_csv(const ptelab_sim_result* res,
                                          const char* path);
ptelab_status ptelab_sim_result_write_json(const ptelab_sim_result* res,
                                           const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PTELAB_H */
