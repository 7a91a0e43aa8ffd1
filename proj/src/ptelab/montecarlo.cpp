#include "ptelab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>
#include <utility>

#include "ptelab/errors.hpp"
#include "ptelab/format.hpp"
#include "ptelab/matstat.hpp"
#include "ptelab/pte_core.hpp"
#include "ptelab/rng.hpp"
#include "ptelab/statfn.hpp"

namespace ptelab::mc {

namespace {

constexpr std::uint64_t kGridStream = 0x67726964u;   // replication grid
constexpr std::uint64_t kFixedStream = 0x66697865u;  // fixed-alternative runs
constexpr double kExclusionCeiling = 1e-3;

const std::array<mcov::Constraint, 3> kKinds = {
    mcov::Constraint::scale, mcov::Constraint::shape, mcov::Constraint::cov};
const std::array<const char*, 3> kKindNames = {"scale", "shape", "cov"};

// Running compensated sum (Neumaier): resilient to cancellation so the
// reduction order fixed by replication index is also numerically stable.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

Eigen::MatrixXd gaussian_block(long n, const Eigen::MatrixXd& chol_lower,
                               Rng& rng) {
  const int k = static_cast<int>(chol_lower.rows());
  Eigen::MatrixXd out(n, k);
  Eigen::VectorXd z(k);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) z(j) = rng.normal();
    out.row(i) = (chol_lower * z).transpose();
  }
  return out;
}

// Per-block root sample sizes, laid out to match the flattened theta.
Eigen::VectorXd nu_inv_diag(const SimConfig& cfg) {
  const int d = matstat::dk(cfg.k);
  Eigen::VectorXd w(cfg.m * (d + 1));
  for (int i = 0; i < cfg.m; ++i) {
    const double root = std::sqrt(static_cast<double>(cfg.n_i[i]));
    w(i) = root;
    w.segment(cfg.m + i * d, d).setConstant(root);
  }
  return w;
}

long total_n(const SimConfig& cfg) {
  long n = 0;
  for (long v : cfg.n_i) n += v;
  return n;
}

mcov::MultiCovTheta anchor_theta(int m, int k) {
  std::vector<double> scales(m, 1.0);
  std::vector<matstat::ShapeMatrix> shapes(
      m, matstat::ShapeMatrix(Eigen::MatrixXd::Identity(k, k)));
  return mcov::MultiCovTheta(std::move(scales), std::move(shapes));
}

double analytic_scalar(int p, int r, double alpha, double delta_sq,
                       const std::string& estimator) {
  if (estimator == "U") return static_cast<double>(p);
  if (estimator == "C") return static_cast<double>(r) + delta_sq;
  return pte::amse_scalar_pte_closed(p, r, alpha, delta_sq);
}

void run_slots(const SimConfig& cfg, int ell, std::vector<RepResult>& slots) {
  const long reps = cfg.reps;
  unsigned workers = cfg.threads > 0
                         ? static_cast<unsigned>(cfg.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));
  if (workers <= 1) {
    for (long rep = 0; rep < reps; ++rep) {
      slots[rep] = run_replication(cfg, ell, rep);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (long rep = w; rep < reps; rep += workers) {
        slots[rep] = run_replication(cfg, ell, rep);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void SimConfig::validate() const {
  if (m != 2 || k != 2) {
    throw domain_error("montecarlo: the grid protocol is two bivariate samples");
  }
  if (static_cast<int>(n_i.size()) != m) {
    throw domain_error("montecarlo: need one sample size per sample");
  }
  for (long n : n_i) {
    if (n <= k) throw domain_error("montecarlo: sample sizes must exceed k");
  }
  if (reps < 1) throw domain_error("montecarlo: need at least one replication");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw domain_error("montecarlo: alpha outside [0, 1]");
  }
  if (ell_min < 0 || ell_max < ell_min) {
    throw domain_error("montecarlo: bad ell range");
  }
  if (threads < 0) throw domain_error("montecarlo: negative thread count");
}

mcov::MultiCovTheta grid_truth(int ell, long n) {
  const auto second = mcov::decompose_cov(mcov::sigma_ell(ell, n));
  std::vector<double> scales = {1.0, second.first};
  std::vector<matstat::ShapeMatrix> shapes;
  shapes.push_back(matstat::ShapeMatrix(Eigen::MatrixXd::Identity(2, 2)));
  shapes.push_back(second.second);
  return mcov::MultiCovTheta(std::move(scales), std::move(shapes));
}

TauFromEll tau_from_ell(int ell, const SimConfig& cfg) {
  cfg.validate();
  const long n = total_n(cfg);
  const mcov::MultiCovTheta anchor = anchor_theta(cfg.m, cfg.k);
  const Eigen::VectorXd diff =
      grid_truth(ell, n).flatten() - anchor.flatten();
  TauFromEll out;
  out.tau = nu_inv_diag(cfg).cwiseProduct(diff);
  const matstat::SymPdMatrix gamma0(mcov::information_matrix(anchor));
  for (int kind = 0; kind < 3; ++kind) {
    const Eigen::MatrixXd ups =
        mcov::constraint_matrix(kKinds[kind], cfg.m, cfg.k);
    out.delta_sq[kind] = pte::delta_vec(gamma0, ups, out.tau).squaredNorm();
  }
  return out;
}

RepResult run_replication(const SimConfig& cfg, int ell, long rep_index) {
  cfg.validate();
  if (rep_index < 0) throw domain_error("montecarlo: negative replication");
  const long n = total_n(cfg);
  const matstat::SymPdMatrix sig2 = mcov::sigma_ell(ell, n);
  const Eigen::MatrixXd chol2 =
      Eigen::LLT<Eigen::MatrixXd>(sig2.mat()).matrixL();
  const Eigen::MatrixXd chol1 = Eigen::MatrixXd::Identity(cfg.k, cfg.k);

  Rng rng = Rng::keyed(cfg.seed, kGridStream + static_cast<std::uint64_t>(ell),
                       static_cast<std::uint64_t>(rep_index));
  std::vector<Eigen::MatrixXd> data;
  data.push_back(gaussian_block(cfg.n_i[0], chol1, rng));
  data.push_back(gaussian_block(cfg.n_i[1], chol2, rng));

  RepResult out;
  const mcov::SampleSet set(std::move(data));
  if (set.any_rank_deficient()) {
    out.excluded = true;
    return out;
  }
  const Eigen::VectorXd truth = grid_truth(ell, n).flatten();
  try {
    const mcov::MultiCovTheta u = mcov::unconstrained_estimator(set);
    const Eigen::VectorXd u_flat = u.flatten();
    out.err[kSlotU] = u_flat - truth;
    for (int kind = 0; kind < 3; ++kind) {
      const mcov::MultiCovTheta c =
          mcov::constrained_estimator(set, kKinds[kind]);
      const Eigen::VectorXd c_flat = c.flatten();
      const double q = mcov::test_statistic(c, set, kKinds[kind]);
      const int r = mcov::constraint_rank(kKinds[kind], cfg.m, cfg.k);
      const double threshold = statfn::pte_threshold(u.p(), r, cfg.alpha);
      out.rejected[kind] = q > threshold;
      out.err[kSlotCScale + kind] = c_flat - truth;
      out.err[kSlotPteScale + kind] =
          pte::pte_combine(u_flat, c_flat, q, threshold) - truth;
    }
  } catch (const domain_error&) {
    out.excluded = true;
  } catch (const numeric_error&) {
    out.excluded = true;
  }
  return out;
}

SimResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  SimResult result;
  result.cfg = cfg;
  const int p = anchor_theta(cfg.m, cfg.k).p();
  const Eigen::MatrixXd gamma0 =
      mcov::information_matrix(anchor_theta(cfg.m, cfg.k));
  const Eigen::VectorXd wdiag = nu_inv_diag(cfg);
  std::vector<double> lambdas;
  const double tot = static_cast<double>(total_n(cfg));
  for (long v : cfg.n_i) lambdas.push_back(static_cast<double>(v) / tot);
  const Eigen::MatrixXd rn = mcov::rn_matrix(lambdas, cfg.m, cfg.k);

  for (int kind = 0; kind < 3; ++kind) {
    result.reject_frac[kind].assign(
        static_cast<std::size_t>(cfg.ell_max - cfg.ell_min + 1), 0.0);
  }

  // one pass per grid point: fill slots in parallel, reduce in index order
  std::vector<std::vector<SimRow>> per_kind_rows(3);
  for (int ell = cfg.ell_min; ell <= cfg.ell_max; ++ell) {
    std::vector<RepResult> slots(static_cast<std::size_t>(cfg.reps));
    run_slots(cfg, ell, slots);

    long included = 0;
    std::array<long, 3> rejections{};
    for (const auto& s : slots) {
      if (s.excluded) {
        ++result.excluded;
        continue;
      }
      ++included;
      for (int kind = 0; kind < 3; ++kind) {
        if (s.rejected[kind]) ++rejections[kind];
      }
    }

    const TauFromEll tau = tau_from_ell(ell, cfg);
    for (int kind = 0; kind < 3; ++kind) {
      if (included > 0) {
        result.reject_frac[kind][ell - cfg.ell_min] =
            static_cast<double>(rejections[kind]) /
            static_cast<double>(included);
      }
      const int r = mcov::constraint_rank(kKinds[kind], cfg.m, cfg.k);
      for (const char* est : {"U", "C", "PTE"}) {
        int slot = kSlotU;
        if (est[0] == 'C') slot = kSlotCScale + kind;
        if (est[0] == 'P') slot = kSlotPteScale + kind;

        std::vector<Eigen::MatrixXd> comp(
            2, Eigen::MatrixXd::Zero(p, p));  // sum and compensation
        std::vector<double> scalars;
        scalars.reserve(static_cast<std::size_t>(included));
        for (const auto& s : slots) {
          if (s.excluded) continue;
          Eigen::VectorXd e = wdiag.cwiseProduct(s.err[slot]);
          if (cfg.scaling == Scaling::total_root_n) e = rn * e;
          const Eigen::MatrixXd outer = e * e.transpose();
          // entrywise Neumaier accumulation
          for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
              const double v = outer(a, b);
              const double t = comp[0](a, b) + v;
              if (std::abs(comp[0](a, b)) >= std::abs(v)) {
                comp[1](a, b) += (comp[0](a, b) - t) + v;
              } else {
                comp[1](a, b) += (v - t) + comp[0](a, b);
              }
              comp[0](a, b) = t;
            }
          }
          scalars.push_back(e.dot(gamma0 * e));
        }

        SimRow row;
        row.kind = kKindNames[kind];
        row.ell = ell;
        row.delta_sq = tau.delta_sq[kind];
        row.estimator = est;
        row.m_effective = included;
        if (included > 0) {
          row.empirical_amse =
              (comp[0] + comp[1]) / static_cast<double>(included);
          KahanSum mean_sum;
          for (double v : scalars) mean_sum.add(v);
          const double mean = mean_sum.value() / included;
          row.empirical_amse_s = mean;
          if (included > 1) {
            KahanSum var_sum;
            for (double v : scalars) var_sum.add((v - mean) * (v - mean));
            row.se = std::sqrt(var_sum.value() /
                               (static_cast<double>(included) *
                                (static_cast<double>(included) - 1.0)));
          }
        } else {
          row.empirical_amse = Eigen::MatrixXd::Zero(p, p);
        }
        row.analytic_amse_s =
            analytic_scalar(p, r, cfg.alpha, tau.delta_sq[kind], est);
        per_kind_rows[kind].push_back(std::move(row));
      }
    }
  }
  for (auto& rows : per_kind_rows) {
    for (auto& row : rows) result.rows.push_back(std::move(row));
  }

  const double denom = static_cast<double>(cfg.reps) *
                       static_cast<double>(cfg.ell_max - cfg.ell_min + 1);
  result.exclusion_rate = static_cast<double>(result.excluded) / denom;
  result.exclusion_breach = result.exclusion_rate > kExclusionCeiling;
  return result;
}

void SimResult::write_csv(std::ostream& out) const {
  out << "kind,ell,delta_sq,estimator,empirical_amse_s,se,analytic_amse_s,"
         "M_effective\n";
  for (const auto& row : rows) {
    out << row.kind << ',' << fmt_int(row.ell) << ','
        << fmt_double(row.delta_sq) << ',' << row.estimator << ','
        << fmt_double(row.empirical_amse_s) << ',' << fmt_double(row.se)
        << ',' << fmt_double(row.analytic_amse_s) << ','
        << fmt_int(row.m_effective) << '\n';
  }
}

void SimResult::write_json(std::ostream& out) const {
  const char* scaling_name = cfg.scaling == Scaling::block_root_n ? "block_root_n" : "total_root_n";
  out << "{\n  \"config\": {"
      << "\"m\": " << fmt_int(cfg.m) << ", \"k\": " << fmt_int(cfg.k)
      << ", \"n_i\": [";
  for (std::size_t i = 0; i < cfg.n_i.size(); ++i) {
    if (i) out << ", ";
    out << fmt_int(cfg.n_i[i]);
  }
  out << "], \"M\": " << fmt_int(cfg.reps)
      << ", \"alpha\": " << fmt_double(cfg.alpha)
      << ", \"ell_min\": " << fmt_int(cfg.ell_min)
      << ", \"ell_max\": " << fmt_int(cfg.ell_max)
      << ", \"seed\": " << fmt_int(static_cast<std::int64_t>(cfg.seed))
      << ", \"scaling\": " << json_string(scaling_name) << "},\n";
  out << "  \"excluded\": " << fmt_int(excluded)
      << ",\n  \"exclusion_rate\": " << fmt_double(exclusion_rate)
      << ",\n  \"exclusion_breach\": "
      << (exclusion_breach ? "true" : "false") << ",\n";
  out << "  \"reject_frac\": {";
  for (int kind = 0; kind < 3; ++kind) {
    if (kind) out << ", ";
    out << json_string(kKindNames[kind]) << ": [";
    for (std::size_t i = 0; i < reject_frac[kind].size(); ++i) {
      if (i) out << ", ";
      out << fmt_double(reject_frac[kind][i]);
    }
    out << ']';
  }
  out << "},\n  \"rows\": [\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out << "    {\"kind\": " << json_string(row.kind)
        << ", \"ell\": " << fmt_int(row.ell)
        << ", \"delta_sq\": " << fmt_double(row.delta_sq)
        << ", \"estimator\": " << json_string(row.estimator)
        << ", \"empirical_amse_s\": " << fmt_double(row.empirical_amse_s)
        << ", \"se\": " << fmt_double(row.se)
        << ", \"analytic_amse_s\": " << fmt_double(row.analytic_amse_s)
        << ", \"M_effective\": " << fmt_int(row.m_effective)
        << ", \"empirical_amse\": [";
    for (int a = 0; a < row.empirical_amse.rows(); ++a) {
      if (a) out << ", ";
      out << '[';
      for (int b = 0; b < row.empirical_amse.cols(); ++b) {
        if (b) out << ", ";
        out << fmt_double(row.empirical_amse(a, b));
      }
      out << ']';
    }
    out << "]}" << (i + 1 < rows.size() ? "," : "") << '\n';
  }
  out << "  ]\n}\n";
}

FixedAlternativeReport fixed_alternative_check(const SimConfig& cfg,
                              const mcov::MultiCovTheta& alternative) {
  cfg.validate();
  if (alternative.m() != cfg.m || alternative.k() != cfg.k) {
    throw domain_error("montecarlo: alternative layout mismatch");
  }
  const double scale_gap =
      std::abs(alternative.scale(0) - alternative.scale(1));
  const double shape_gap =
      (alternative.shape(0).mat() - alternative.shape(1).mat())
          .cwiseAbs()
          .maxCoeff();
  if (scale_gap < 1e-9 || shape_gap < 1e-9) {
    throw domain_error(
        "montecarlo: alternative must break scale and shape homogeneity");
  }

  std::array<Eigen::MatrixXd, 2> chols;
  for (int i = 0; i < 2; ++i) {
    chols[i] = Eigen::LLT<Eigen::MatrixXd>(
                   Eigen::MatrixXd(alternative.sigma(i)))
                   .matrixL();
  }
  const Eigen::VectorXd wdiag = nu_inv_diag(cfg);

  FixedAlternativeReport report;
  std::array<long, 3> agree{};
  std::array<KahanSum, 3> gap_sum;
  for (long rep = 0; rep < cfg.reps; ++rep) {
    Rng rng = Rng::keyed(cfg.seed, kFixedStream,
                         static_cast<std::uint64_t>(rep));
    std::vector<Eigen::MatrixXd> data;
    data.push_back(gaussian_block(cfg.n_i[0], chols[0], rng));
    data.push_back(gaussian_block(cfg.n_i[1], chols[1], rng));
    const mcov::SampleSet set(std::move(data));
    if (set.any_rank_deficient()) {
      ++report.excluded;
      continue;
    }
    ++report.reps_effective;
    const mcov::MultiCovTheta u = mcov::unconstrained_estimator(set);
    const Eigen::VectorXd u_flat = u.flatten();
    for (int kind = 0; kind < 3; ++kind) {
      const mcov::MultiCovTheta c =
          mcov::constrained_estimator(set, kKinds[kind]);
      const double q = mcov::test_statistic(c, set, kKinds[kind]);
      const int r = mcov::constraint_rank(kKinds[kind], cfg.m, cfg.k);
      const double threshold = statfn::pte_threshold(u.p(), r, cfg.alpha);
      const Eigen::VectorXd pte_flat =
          pte::pte_combine(u_flat, c.flatten(), q, threshold);
      const double gap = wdiag.cwiseProduct(pte_flat - u_flat).norm();
      if (gap == 0.0) ++agree[kind];
      gap_sum[kind].add(gap);
      report.max_gap[kind] = std::max(report.max_gap[kind], gap);
    }
  }
  for (int kind = 0; kind < 3; ++kind) {
    if (report.reps_effective > 0) {
      report.agree_frac[kind] = static_cast<double>(agree[kind]) /
                                static_cast<double>(report.reps_effective);
      report.mean_gap[kind] =
          gap_sum[kind].value() / static_cast<double>(report.reps_effective);
    }
  }
  return report;
}

}  // namespace ptelab::mc
