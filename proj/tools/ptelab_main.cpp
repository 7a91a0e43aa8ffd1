// Batch front-end over the shared library: probability curves, analytic risk
// tables, and the two-sample simulation study. Everything numerical lives
// behind the C interface; this file is argument plumbing and file output.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <ptelab.h>

#include "CLI11.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitBreach = 3;

// 17 significant digits round-trip through strtod exactly.
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_table_csv(const Table& t, std::ostream& out) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    out << (i ? "," : "") << t.columns[i];
  }
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << fmt17(row[i]);
    }
    out << '\n';
  }
}

void write_table_json(const Table& t, std::ostream& out) {
  out << "{\n  \"columns\": [";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    out << (i ? ", " : "") << '"' << t.columns[i] << '"';
  }
  out << "],\n  \"rows\": [\n";
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    out << "    [";
    for (std::size_t i = 0; i < t.rows[j].size(); ++i) {
      out << (i ? ", " : "") << fmt17(t.rows[j][i]);
    }
    out << (j + 1 < t.rows.size() ? "],\n" : "]\n");
  }
  out << "  ]\n}\n";
}

// Writes to the path when given, standard output otherwise.
int emit_table(const Table& t, const std::string& path,
               const std::string& format) {
  const bool json = format == "json";
  if (path.empty()) {
    if (json) {
      write_table_json(t, std::cout);
    } else {
      write_table_csv(t, std::cout);
    }
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open " << path << " for writing\n";
    return kExitDomain;
  }
  if (json) {
    write_table_json(t, out);
  } else {
    write_table_csv(t, out);
  }
  if (!out) {
    std::cerr << "write failed on " << path << '\n';
    return kExitDomain;
  }
  return 0;
}

int fail_api(const char* what) {
  std::cerr << what << ": " << ptelab_last_error() << '\n';
  return kExitDomain;
}

// Index-based grid; accumulating the step would drift over long ranges.
bool make_grid(double lo, double hi, double step, std::vector<double>* out) {
  if (!(step > 0.0) || hi < lo) return false;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out->push_back(lo + i * step);
  return true;
}

struct CommonOpts {
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  int threads = 0;
};

void add_common(CLI::App* sub, CommonOpts* c, const char* out_default_note) {
  sub->add_option("--out", c->out, out_default_note);
  sub->add_option("--format", c->format, "table format")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--seed", c->seed, "random seed (simulation only)");
  sub->add_option("--threads", c->threads,
                  "worker threads, 0 picks the hardware count")
      ->envname("PTE_LAB_THREADS");
}

struct CurveOpts {
  CommonOpts common;
  int p = 10;
  int r = 1;
  double alpha = 0.05;
  double grid_min = 0.0;
  double grid_max = 30.0;
  double grid_step = 0.5;
};

void add_curve_params(CLI::App* sub, CurveOpts* o) {
  sub->add_option("--p", o->p, "parameter dimension");
  sub->add_option("--r", o->r, "constrained dimension");
  sub->add_option("--alpha", o->alpha, "pretest level in [0,1]");
  sub->add_option("--grid-min", o->grid_min, "first separation value");
  sub->add_option("--grid-max", o->grid_max, "last separation value");
  sub->add_option("--grid-step", o->grid_step, "separation increment");
}

int run_gamma(const CurveOpts& o) {
  std::vector<double> grid;
  if (!make_grid(o.grid_min, o.grid_max, o.grid_step, &grid)) {
    std::cerr << "empty separation grid\n";
    return kExitDomain;
  }
  Table t{{"delta_sq", "gamma2", "gamma4"}, {}};
  for (double d2 : grid) {
    double g2 = 0.0, g4 = 0.0;
    if (ptelab_gamma_j(2, o.p, o.r, o.alpha, d2, &g2) != PTELAB_OK) {
      return fail_api("gamma");
    }
    if (ptelab_gamma_j(4, o.p, o.r, o.alpha, d2, &g4) != PTELAB_OK) {
      return fail_api("gamma");
    }
    t.rows.push_back({d2, g2, g4});
  }
  return emit_table(t, o.common.out, o.common.format);
}

int run_amse_curve(const CurveOpts& o) {
  std::vector<double> grid;
  if (!make_grid(o.grid_min, o.grid_max, o.grid_step, &grid)) {
    std::cerr << "empty separation grid\n";
    return kExitDomain;
  }
  Table t{{"delta_sq", "amse_u", "amse_c", "amse_pte"}, {}};
  for (double d2 : grid) {
    double u = 0.0, c = 0.0, pte = 0.0;
    if (ptelab_amse_scalar_u(o.p, &u) != PTELAB_OK ||
        ptelab_amse_scalar_c(o.p, o.r, d2, &c) != PTELAB_OK ||
        ptelab_amse_scalar_pte(o.p, o.r, o.alpha, d2, &pte) != PTELAB_OK) {
      return fail_api("amse-curve");
    }
    t.rows.push_back({d2, u, c, pte});
  }
  return emit_table(t, o.common.out, o.common.format);
}

struct LinRegOpts {
  CommonOpts common;
  double sigma_sq = 1.0;
  double x_bar0 = 0.0;
  double s0 = 1.0;
  double alpha = 0.05;
  double grid_min = 0.0;
  double grid_max = 3.0;
  double grid_step = 0.1;
  bool verify = false;
};

int run_linreg(const LinRegOpts& o) {
  std::vector<double> grid;
  if (!make_grid(o.grid_min, o.grid_max, o.grid_step, &grid)) {
    std::cerr << "empty slope grid\n";
    return kExitDomain;
  }
  Table t{{"delta", "amse_00", "amse_01", "amse_10", "amse_11"}, {}};
  for (double delta : grid) {
    double m[4] = {0, 0, 0, 0};
    if (ptelab_linreg_amse(o.sigma_sq, o.x_bar0, o.s0, delta, o.alpha, m) !=
        PTELAB_OK) {
      return fail_api("linreg-amse");
    }
    if (o.verify) {
      double gap = 0.0;
      if (ptelab_linreg_amse_check(o.sigma_sq, o.x_bar0, o.s0, delta,
                                   o.alpha, &gap) != PTELAB_OK) {
        return fail_api("linreg-amse");
      }
      if (!(gap <= 1e-10)) {
        std::cerr << "route disagreement " << fmt17(gap) << " at delta "
                  << fmt17(delta) << '\n';
        return kExitDomain;
      }
    }
    t.rows.push_back({delta, m[0], m[1], m[2], m[3]});
  }
  return emit_table(t, o.common.out, o.common.format);
}

struct SimOpts {
  CommonOpts common;
  long n1 = 2000;
  long n2 = 2000;
  long reps = 2000;
  double alpha = 0.05;
  int ell_min = 0;
  int ell_max = 9;
  std::string scaling = "block";
};

std::string strip_table_extension(const std::string& path) {
  for (const char* ext : {".csv", ".json"}) {
    const std::string e(ext);
    if (path.size() > e.size() &&
        path.compare(path.size() - e.size(), e.size(), e) == 0) {
      return path.substr(0, path.size() - e.size());
    }
  }
  return path;
}

struct SimRows {
  // [kind][ell offset] -> scalars in U, C, PTE order
  double empirical[3][3];
  double analytic[3][3];
  double se[3][3];
  double delta_sq;
  long m_effective;
};

int run_simulate(const SimOpts& o) {
  struct ConfigDeleter {
    void operator()(ptelab_sim_config* c) const {
      ptelab_sim_config_destroy(c);
    }
  };
  struct ResultDeleter {
    void operator()(ptelab_sim_result* r) const {
      ptelab_sim_result_destroy(r);
    }
  };
  std::unique_ptr<ptelab_sim_config, ConfigDeleter> cfg(
      ptelab_sim_config_create());
  if (!cfg) {
    std::cerr << "out of memory\n";
    return kExitDomain;
  }
  const long sizes[2] = {o.n1, o.n2};
  if (ptelab_sim_config_set_sizes(cfg.get(), sizes, 2) != PTELAB_OK ||
      ptelab_sim_config_set_reps(cfg.get(), o.reps) != PTELAB_OK ||
      ptelab_sim_config_set_alpha(cfg.get(), o.alpha) != PTELAB_OK ||
      ptelab_sim_config_set_ell_range(cfg.get(), o.ell_min, o.ell_max) !=
          PTELAB_OK ||
      ptelab_sim_config_set_seed(cfg.get(), o.common.seed) != PTELAB_OK ||
      ptelab_sim_config_set_threads(cfg.get(), o.common.threads) !=
          PTELAB_OK ||
      ptelab_sim_config_set_scaling(cfg.get(), o.scaling.c_str()) !=
          PTELAB_OK) {
    return fail_api("simulate");
  }

  ptelab_sim_result* raw = nullptr;
  if (ptelab_sim_run(cfg.get(), &raw) != PTELAB_OK) {
    return fail_api("simulate");
  }
  std::unique_ptr<ptelab_sim_result, ResultDeleter> res(raw);

  const std::string stem =
      strip_table_extension(o.common.out.empty() ? "sim" : o.common.out);
  const std::string main_path =
      stem + (o.common.format == "json" ? ".json" : ".csv");
  const ptelab_status wrote =
      o.common.format == "json"
          ? ptelab_sim_result_write_json(res.get(), main_path.c_str())
          : ptelab_sim_result_write_csv(res.get(), main_path.c_str());
  if (wrote != PTELAB_OK) return fail_api("simulate");

  // regroup the flat row list by kind and grid index
  const int n_ells = o.ell_max - o.ell_min + 1;
  const char* kind_names[3] = {"scale", "shape", "cov"};
  std::vector<SimRows> grouped(static_cast<std::size_t>(3 * n_ells));
  const long rows = ptelab_sim_result_row_count(res.get());
  for (long i = 0; i < rows; ++i) {
    ptelab_sim_row row;
    if (ptelab_sim_result_row(res.get(), i, &row) != PTELAB_OK) {
      return fail_api("simulate");
    }
    int kind = 0;
    while (kind < 3 && std::string(row.kind) != kind_names[kind]) ++kind;
    const int est = std::string(row.estimator) == "U"
                        ? 0
                        : (std::string(row.estimator) == "C" ? 1 : 2);
    SimRows& slot =
        grouped[static_cast<std::size_t>(kind * n_ells + row.ell - o.ell_min)];
    slot.empirical[0][est] = row.empirical_amse_s;
    slot.analytic[0][est] = row.analytic_amse_s;
    slot.se[0][est] = row.se;
    slot.delta_sq = row.delta_sq;
    slot.m_effective = row.m_effective;
  }

  // one curve file per kind and source, plotting-ready
  for (int kind = 0; kind < 3; ++kind) {
    for (int variant = 0; variant < 2; ++variant) {
      Table t{{"ell", "delta_sq", "amse_u", "amse_c", "amse_pte"}, {}};
      for (int e = 0; e < n_ells; ++e) {
        const SimRows& slot =
            grouped[static_cast<std::size_t>(kind * n_ells + e)];
        const double* vals =
            variant == 0 ? slot.empirical[0] : slot.analytic[0];
        t.rows.push_back({static_cast<double>(o.ell_min + e), slot.delta_sq,
                          vals[0], vals[1], vals[2]});
      }
      const std::string path = stem + "_" + kind_names[kind] + "_" +
                               (variant == 0 ? "empirical" : "analytic") +
                               ".csv";
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        std::cerr << "cannot open " << path << " for writing\n";
        return kExitDomain;
      }
      write_table_csv(t, out);
      if (!out) {
        std::cerr << "write failed on " << path << '\n';
        return kExitDomain;
      }
    }
  }

  // summary to standard output
  std::printf("%-6s %4s %12s %14s %14s %14s %10s\n", "kind", "ell",
              "delta_sq", "U(emp)", "C(emp)", "PTE(emp)", "reject");
  for (int kind = 0; kind < 3; ++kind) {
    for (int e = 0; e < n_ells; ++e) {
      const SimRows& slot =
          grouped[static_cast<std::size_t>(kind * n_ells + e)];
      double frac = 0.0;
      if (ptelab_sim_result_reject_frac(res.get(), kind, e, &frac) !=
          PTELAB_OK) {
        return fail_api("simulate");
      }
      std::printf("%-6s %4d %12.6f %14.6f %14.6f %14.6f %10.4f\n",
                  kind_names[kind], o.ell_min + e, slot.delta_sq,
                  slot.empirical[0][0], slot.empirical[0][1],
                  slot.empirical[0][2], frac);
    }
  }
  std::printf("excluded replications: %ld (rate %s)\n",
              ptelab_sim_result_excluded(res.get()),
              fmt17(ptelab_sim_result_exclusion_rate(res.get())).c_str());
  std::printf("results: %s plus 6 curve files at %s_*\n", main_path.c_str(),
              stem.c_str());

  if (ptelab_sim_result_exclusion_breach(res.get())) {
    std::cerr << "exclusion rate breached the acceptable ceiling\n";
    return kExitBreach;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("risk curves and simulation studies for pretest estimators");
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.set_config("--config", "",
                 "key-value file, one section per subcommand; command-line "
                 "flags win");

  CurveOpts gamma_opts;
  CLI::App* gamma =
      app.add_subcommand("gamma", "pretest acceptance probabilities");
  add_curve_params(gamma, &gamma_opts);
  add_common(gamma, &gamma_opts.common, "output path (stdout when empty)");

  CurveOpts curve_opts;
  CLI::App* curve =
      app.add_subcommand("amse-curve", "analytic scalar risk curves");
  add_curve_params(curve, &curve_opts);
  add_common(curve, &curve_opts.common, "output path (stdout when empty)");

  LinRegOpts lin_opts;
  CLI::App* lin = app.add_subcommand(
      "linreg-amse", "regression pretest risk matrices over a slope grid");
  lin->add_option("--sigma-sq", lin_opts.sigma_sq, "noise variance");
  lin->add_option("--x-bar0", lin_opts.x_bar0, "limiting regressor mean");
  lin->add_option("--s0", lin_opts.s0, "limiting regressor spread");
  lin->add_option("--alpha", lin_opts.alpha, "pretest level in [0,1]");
  lin->add_option("--grid-min", lin_opts.grid_min, "first slope value");
  lin->add_option("--grid-max", lin_opts.grid_max, "last slope value");
  lin->add_option("--grid-step", lin_opts.grid_step, "slope increment");
  lin->add_flag("--verify", lin_opts.verify)->group("");
  add_common(lin, &lin_opts.common, "output path (stdout when empty)");

  SimOpts sim_opts;
  CLI::App* sim =
      app.add_subcommand("simulate", "two-sample covariance grid study");
  sim->add_option("--n1", sim_opts.n1, "first sample size");
  sim->add_option("--n2", sim_opts.n2, "second sample size");
  sim->add_option("--M", sim_opts.reps, "replications per grid point");
  sim->add_option("--alpha", sim_opts.alpha, "pretest level in [0,1]");
  sim->add_option("--ell-min", sim_opts.ell_min, "first grid index");
  sim->add_option("--ell-max", sim_opts.ell_max, "last grid index");
  sim->add_option("--scaling", sim_opts.scaling,
                  "error normalization: block or total")
      ->check(CLI::IsMember({"block", "total"}));
  add_common(sim, &sim_opts.common, "output stem (default sim)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }

  if (gamma->parsed()) return run_gamma(gamma_opts);
  if (curve->parsed()) return run_amse_curve(curve_opts);
  if (lin->parsed()) return run_linreg(lin_opts);
  if (sim->parsed()) return run_simulate(sim_opts);
  std::cerr << "no subcommand given\n";
  return kExitUsage;
}
