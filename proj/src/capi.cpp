#include "ptelab.h"

#include <Eigen/Dense>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <string>
#include <utility>

#include "ptelab/errors.hpp"
#include "ptelab/matstat.hpp"
#include "ptelab/model_linreg.hpp"
#include "ptelab/montecarlo.hpp"
#include "ptelab/pte_core.hpp"
#include "ptelab/statfn.hpp"

namespace {

thread_local std::string g_last_error;

ptelab_status arg_error(const char* msg) {
  g_last_error = msg;
  return PTELAB_ERR_ARG;
}

// Runs the body, translating exceptions into status codes. The error string
// is thread-local so concurrent callers never see each other's messages.
template <typename Fn>
ptelab_status guarded(Fn&& body) {
  try {
    body();
    g_last_error.clear();
    return PTELAB_OK;
  } catch (const ptelab::domain_error& e) {
    g_last_error = e.what();
    return PTELAB_ERR_DOMAIN;
  } catch (const ptelab::numeric_error& e) {
    g_last_error = e.what();
    return PTELAB_ERR_NUMERIC;
  } catch (const ptelab::io_error& e) {
    g_last_error = e.what();
    return PTELAB_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PTELAB_ERR_NUMERIC;
  } catch (...) {
    g_last_error = "unknown failure";
    return PTELAB_ERR_NUMERIC;
  }
}

// The regression constraint pins the slope; the free direction is the
// intercept and the local perturbation moves the slope alone.
Eigen::MatrixXd slope_constraint() {
  Eigen::MatrixXd ups(2, 1);
  ups << 1.0, 0.0;
  return ups;
}

}  // namespace

struct ptelab_sim_config {
  ptelab::mc::SimConfig cfg;
};

struct ptelab_sim_result {
  ptelab::mc::SimResult res;
};

extern "C" {

const char* ptelab_version(void) { return "1.0.0"; }

const char* ptelab_last_error(void) { return g_last_error.c_str(); }

ptelab_status ptelab_chi2_quantile(double prob, double df, double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] { *out = ptelab::statfn::chi2_quantile(prob, df); });
}

ptelab_status ptelab_noncentral_chi2_cdf(double x, double df, double lambda,
                                         double* out) {
  if (!out) return arg_error("out is null");
  return guarded(
      [&] { *out = ptelab::statfn::noncentral_chi2_cdf(x, df, lambda); });
}

ptelab_status ptelab_pretest_threshold(int p, int r, double alpha,
                                       double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] { *out = ptelab::statfn::pte_threshold(p, r, alpha); });
}

ptelab_status ptelab_gamma_j(int j, int p, int r, double alpha,
                             double delta_sq, double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] {
    *out = ptelab::statfn::gamma_j({j, p, r, alpha, delta_sq});
  });
}

ptelab_status ptelab_amse_scalar_u(int p, double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] {
    if (p < 1) throw ptelab::domain_error("p must be positive");
    *out = static_cast<double>(p);
  });
}

ptelab_status ptelab_amse_scalar_c(int p, int r, double delta_sq,
                                   double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] {
    if (r < 1 || r >= p) throw ptelab::domain_error("need 1 <= r < p");
    if (!(delta_sq >= 0.0)) {
      throw ptelab::domain_error("delta_sq must be nonnegative");
    }
    *out = static_cast<double>(r) + delta_sq;
  });
}

ptelab_status ptelab_amse_scalar_pte(int p, int r, double alpha,
                                     double delta_sq, double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] {
    *out = ptelab::pte::amse_scalar_pte_closed(p, r, alpha, delta_sq);
  });
}

ptelab_status ptelab_linreg_amse(double sigma_sq, double x_bar0, double s0,
                                 double delta, double alpha, double* out) {
  if (!out) return arg_error("out is null");
  return guarded([&] {
    const Eigen::Matrix2d m =
        ptelab::linreg::amse_pte_linreg(sigma_sq, x_bar0, s0, delta, alpha);
    out[0] = m(0, 0);
    out[1] = m(0, 1);
    out[2] = m(1, 0);
    out[3] = m(1, 1);
  });
}

ptelab_status ptelab_linreg_amse_check(double sigma_sq, double x_bar0,
                                       double s0, double delta, double alpha,
                                       double* out_gap) {
  if (!out_gap) return arg_error("out_gap is null");
  return guarded([&] {
    const Eigen::Matrix2d direct =
        ptelab::linreg::amse_pte_linreg(sigma_sq, x_bar0, s0, delta, alpha);
    const Eigen::Matrix2d info =
        ptelab::linreg::information_matrix(x_bar0, s0, sigma_sq);
    Eigen::VectorXd tau(2);
    tau << 0.0, delta;
    const Eigen::MatrixXd general =
        ptelab::pte::amse_pte(ptelab::pte::EfficientCase{
            ptelab::matstat::SymPdMatrix(info), slope_constraint(), tau,
            alpha});
    *out_gap = (direct - general).cwiseAbs().maxCoeff();
  });
}

ptelab_sim_config* ptelab_sim_config_create(void) {
  try {
    return new ptelab_sim_config{};
  } catch (...) {
    return nullptr;
  }
}

void ptelab_sim_config_destroy(ptelab_sim_config* cfg) { delete cfg; }

ptelab_status ptelab_sim_config_set_sizes(ptelab_sim_config* cfg,
                                          const long* n_i, int count) {
  if (!cfg) return arg_error("config is null");
  if (!n_i || count < 1) return arg_error("sizes array is empty");
  return guarded([&] {
    cfg->cfg.n_i.assign(n_i, n_i + count);
  });
}

ptelab_status ptelab_sim_config_set_reps(ptelab_sim_config* cfg, long reps) {
  if (!cfg) return arg_error("config is null");
  return guarded([&] { cfg->cfg.reps = reps; });
}

ptelab_status ptelab_sim_config_set_alpha(ptelab_sim_config* cfg,
                                          double alpha) {
  if (!cfg) return arg_error("config is null");
  return guarded([&] { cfg->cfg.alpha = alpha; });
}

ptelab_status ptelab_sim_config_set_ell_range(ptelab_sim_config* cfg,
                                              int ell_min, int ell_max) {
  if (!cfg) return arg_error("config is null");
  return guarded([&] {
    cfg->cfg.ell_min = ell_min;
    cfg->cfg.ell_max = ell_max;
  });
}

ptelab_status ptelab_sim_config_set_seed(ptelab_sim_config* cfg,
                                         uint64_t seed) {
  if (!cfg) return arg_error("config is null");
  return guarded([&] { cfg->cfg.seed = seed; });
}

ptelab_status ptelab_sim_config_set_threads(ptelab_sim_config* cfg,
                                            int threads) {
  if (!cfg) return arg_error("config is null");
  return guarded([&] {
    if (threads < 0) throw ptelab::domain_error("threads must be >= 0");
    cfg->cfg.threads = threads;
  });
}

ptelab_status ptelab_sim_config_set_scaling(ptelab_sim_config* cfg,
                                            const char* name) {
  if (!cfg) return arg_error("config is null");
  if (!name) return arg_error("scaling name is null");
  return guarded([&] {
    if (std::strcmp(name, "block") == 0) {
      cfg->cfg.scaling = ptelab::mc::Scaling::block_root_n;
    } else if (std::strcmp(name, "total") == 0) {
      cfg->cfg.scaling = ptelab::mc::Scaling::total_root_n;
    } else {
      throw ptelab::domain_error("scaling must be 'block' or 'total'");
    }
  });
}

ptelab_status ptelab_sim_run(const ptelab_sim_config* cfg,
                             ptelab_sim_result** out) {
  if (!cfg) return arg_error("config is null");
  if (!out) return arg_error("out is null");
  return guarded([&] {
    auto result = std::make_unique<ptelab_sim_result>();
    result->res = ptelab::mc::run_simulation(cfg->cfg);
    *out = result.release();
  });
}

void ptelab_sim_result_destroy(ptelab_sim_result* res) { delete res; }

long ptelab_sim_result_row_count(const ptelab_sim_result* res) {
  return res ? static_cast<long>(res->res.rows.size()) : 0;
}

ptelab_status ptelab_sim_result_row(const ptelab_sim_result* res, long index,
                                    ptelab_sim_row* out) {
  if (!res) return arg_error("result is null");
  if (!out) return arg_error("out is null");
  if (index < 0 || index >= static_cast<long>(res->res.rows.size())) {
    return arg_error("row index out of range");
  }
  const ptelab::mc::SimRow& row = res->res.rows[static_cast<size_t>(index)];
  out->kind = row.kind.c_str();
  out->ell = row.ell;
  out->delta_sq = row.delta_sq;
  out->estimator = row.estimator.c_str();
  out->empirical_amse_s = row.empirical_amse_s;
  out->se = row.se;
  out->analytic_amse_s = row.analytic_amse_s;
  out->m_effective = row.m_effective;
  g_last_error.clear();
  return PTELAB_OK;
}

ptelab_status ptelab_sim_result_reject_frac(const ptelab_sim_result* res,
                                            int kind, int ell_index,
                                            double* out) {
  if (!res) return arg_error("result is null");
  if (!out) return arg_error("out is null");
  if (kind < 0 || kind > 2) return arg_error("kind must be 0, 1 or 2");
  const auto& fracs = res->res.reject_frac[static_cast<size_t>(kind)];
  if (ell_index < 0 || ell_index >= static_cast<int>(fracs.size())) {
    return arg_error("ell index out of range");
  }
  *out = fracs[static_cast<size_t>(ell_index)];
  g_last_error.clear();
  return PTELAB_OK;
}

long ptelab_sim_result_excluded(const ptelab_sim_result* res) {
  return res ? res->res.excluded : 0;
}

double ptelab_sim_result_exclusion_rate(const ptelab_sim_result* res) {
  return res ? res->res.exclusion_rate : 0.0;
}

int ptelab_sim_result_exclusion_breach(const ptelab_sim_result* res) {
  return res && res->res.exclusion_breach ? 1 : 0;
}

ptelab_status ptelab_sim_result_write_csv(const ptelab_sim_result* res,
                                          const char* path) {
  if (!res) return arg_error("result is null");
  if (!path) return arg_error("path is null");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ptelab::io_error(std::string("cannot open ") + path);
    res->res.write_csv(out);
    if (!out) throw ptelab::io_error(std::string("write failed on ") + path);
  });
}

ptelab_status ptelab_sim_result_write_json(const ptelab_sim_result* res,
                                           const char* path) {
  if (!res) return arg_error("result is null");
  if (!path) return arg_error("path is null");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ptelab::io_error(std::string("cannot open ") + path);
    res->res.write_json(out);
    if (!out) throw ptelab::io_error(std::string("write failed on ") + path);
  });
}

}  // extern "C"
