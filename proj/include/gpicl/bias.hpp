#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "gpicl/kernels.hpp"
#include "gpicl/records.hpp"
#include "gpicl/taskgen.hpp"

namespace gpicl {

struct CandidateSet {
  std::vector<KernelSpec> kernels;
  NoiseSpec noise;

  void validate() const;
};

// Default candidates: Matern nu in {1/2, 3/2, 5/2} x l in {1, 8} plus SE with
// l in 1..8, all at unit variance.
CandidateSet default_candidate_set(double noise_variance = 1e-3);

// log N(y_hat | mu, var_f + noise + tau2) with (mu, var_f) from the candidate
// posterior at the query. tau2 = 0 recovers the unadjusted analysis.
double prediction_loglik(const KernelSpec& kernel, const NoiseSpec& noise,
                         const Eigen::MatrixXd& demos_x, const Eigen::VectorXd& demos_y,
                         const Eigen::VectorXd& query, double y_hat, double tau2);

// MLE of the pooled extra variance: maximizes sum_i log N(r_i | 0, v_i + tau2)
// by golden-section search on log tau2 over [1e-12, 1e6]. All-zero residuals
// return the lower bound exactly; all-zero variances return mean(r^2) exactly.
double fit_tau2(const Eigen::VectorXd& residuals, const Eigen::VectorXd& variances);

struct KernelScore {
  KernelSpec kernel;
  double total_loglik = 0.0;
  double mean_loglik = 0.0;
  long long count = 0;
};

struct BiasReport {
  std::vector<KernelScore> kernels;  // candidate order preserved
  std::optional<double> tau2;
  int argmax_index = 0;
  long long excluded = 0;  // failed or unparseable records

  const KernelScore& argmax() const { return kernels.at(argmax_index); }
};

// Scores every successful record under every candidate. With adjust set,
// first fits one pooled tau2 over all prediction-kernel residual pairs, then
// scores with it.
BiasReport bias_report(const std::vector<PredictionRecord>& records,
                       const CandidateSet& candidates, const TaskSet& taskset,
                       bool adjust);

// Rows = candidates; columns total_loglik, mean_loglik, count, tau2, is_argmax.
std::string bias_report_csv(const BiasReport& report);
// Mirror for plotting, mean logliks tagged with the symlog axis convention.
std::string bias_report_plot_json(const BiasReport& report);

}  // namespace gpicl
