#include "gpicl/bias.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gpicl/errors.hpp"
#include "gpicl/gp.hpp"

namespace gpicl {

namespace {

constexpr double kTau2Low = 1e-12;
constexpr double kTau2High = 1e6;

double gauss_logpdf(double r, double var) {
  return -0.5 * (std::log(2.0 * M_PI * var) + r * r / var);
}

}  // namespace

void CandidateSet::validate() const {
  if (kernels.empty()) throw InputDomainError("CandidateSet: no kernels");
  noise.validate();
  std::set<std::string> seen;
  for (const auto& k : kernels)
    if (!seen.insert(format_kernel_record(k)).second)
      throw InputDomainError("CandidateSet: duplicate kernel " + format_kernel_record(k));
}

CandidateSet default_candidate_set(double noise_variance) {
  CandidateSet set;
  set.noise = NoiseSpec{noise_variance};
  for (double nu : {0.5, 1.5, 2.5})
    for (double l : {1.0, 8.0}) set.kernels.push_back(matern(nu, l, 1.0));
  for (int l = 1; l <= 8; ++l)
    set.kernels.push_back(squared_exponential(static_cast<double>(l), 1.0));
  return set;
}

double prediction_loglik(const KernelSpec& kernel, const NoiseSpec& noise,
                         const Eigen::MatrixXd& demos_x, const Eigen::VectorXd& demos_y,
                         const Eigen::VectorXd& query, double y_hat, double tau2) {
  if (!std::isfinite(y_hat)) throw InputDomainError("prediction_loglik: y_hat not finite");
  if (tau2 < 0.0) throw InputDomainError("prediction_loglik: tau2 must be >= 0");
  const auto post = posterior_predictive(kernel, noise, demos_x, demos_y, query);
  return gauss_logpdf(y_hat - post.mean, post.variance_y + tau2);
}

double fit_tau2(const Eigen::VectorXd& residuals, const Eigen::VectorXd& variances) {
  const auto m = residuals.size();
  if (m < 1) throw InputDomainError("fit_tau2: empty inputs");
  if (variances.size() != m) throw InputDomainError("fit_tau2: length mismatch");
  if ((variances.array() < 0.0).any())
    throw InputDomainError("fit_tau2: negative variance");

  if ((variances.array() == 0.0).all())
    return std::clamp(residuals.squaredNorm() / static_cast<double>(m), kTau2Low, kTau2High);

  const auto objective_t2 = [&](double t2) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      sum += gauss_logpdf(residuals(i), variances(i) + t2);
    return sum;
  };
  const auto objective = [&](double log_tau2) { return objective_t2(std::exp(log_tau2)); };

  // Golden-section maximization on log tau2 to 1e-6 relative bracket width.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(kTau2Low), b = std::log(kTau2High);
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > 1e-6) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = objective(d);
    }
  }

  // Monotone objectives push the search onto an endpoint; compare and snap so
  // degenerate cases return the exact bound.
  double best_t2 = std::exp(0.5 * (a + b));
  double best = objective_t2(best_t2);
  for (double cand : {kTau2Low, kTau2High}) {
    const double v = objective_t2(cand);
    if (v >= best) {
      best = v;
      best_t2 = cand;
    }
  }
  return best_t2;
}

BiasReport bias_report(const std::vector<PredictionRecord>& records,
                       const CandidateSet& candidates, const TaskSet& taskset,
                       bool adjust) {
  candidates.validate();
  const auto n_kernels = candidates.kernels.size();

  // Group scoreable records per episode so each (episode, kernel) pair costs
  // one factorization via PrefixPosterior.
  std::map<std::string, std::vector<const PredictionRecord*>> by_episode;
  long long excluded = 0, scoreable = 0;
  for (const auto& r : records) {
    if (!r.y_hat) {
      ++excluded;
      continue;
    }
    by_episode[r.episode_id].push_back(&r);
    ++scoreable;
  }
  if (scoreable == 0) throw InputDomainError("bias_report: zero scoreable records");

  // Posterior means/variances per (record, kernel).
  std::vector<std::vector<double>> mu(n_kernels), var(n_kernels);
  std::vector<double> y(static_cast<std::size_t>(scoreable));
  for (auto& v : mu) v.resize(static_cast<std::size_t>(scoreable));
  for (auto& v : var) v.resize(static_cast<std::size_t>(scoreable));
  std::size_t idx = 0;
  for (const auto& [episode_id, eps_records] : by_episode) {
    const Episode& ep = taskset.episode_by_id(episode_id);
    for (std::size_t k = 0; k < n_kernels; ++k) {
      const PrefixPosterior prefix(candidates.kernels[k], candidates.noise, ep.x,
                                   ep.y_noisy);
      std::size_t j = idx;
      for (const auto* r : eps_records) {
        if (r->n < 0 || r->n >= ep.x.rows())
          throw DataError("bias_report: record n out of range for episode " + episode_id);
        const auto post = prefix.at(r->n, ep.x.row(r->n).transpose());
        mu[k][j] = post.mean;
        var[k][j] = post.variance_y;
        ++j;
      }
    }
    for (const auto* r : eps_records) y[idx++] = *r->y_hat;
  }

  BiasReport report;
  report.excluded = excluded;
  if (adjust) {
    // One pooled tau2 across all prediction-kernel pairs.
    const auto total = static_cast<Eigen::Index>(scoreable * n_kernels);
    Eigen::VectorXd rs(total), vs(total);
    Eigen::Index t = 0;
    for (std::size_t k = 0; k < n_kernels; ++k)
      for (std::size_t j = 0; j < static_cast<std::size_t>(scoreable); ++j, ++t) {
        rs(t) = y[j] - mu[k][j];
        vs(t) = var[k][j];
      }
    report.tau2 = fit_tau2(rs, vs);
  }

  const double tau2 = report.tau2.value_or(0.0);
  for (std::size_t k = 0; k < n_kernels; ++k) {
    KernelScore score;
    score.kernel = candidates.kernels[k];
    for (std::size_t j = 0; j < static_cast<std::size_t>(scoreable); ++j)
      score.total_loglik += gauss_logpdf(y[j] - mu[k][j], var[k][j] + tau2);
    score.count = scoreable;
    score.mean_loglik = score.total_loglik / static_cast<double>(scoreable);
    report.kernels.push_back(score);
  }
  report.argmax_index = static_cast<int>(
      std::max_element(report.kernels.begin(), report.kernels.end(),
                       [](const KernelScore& a, const KernelScore& b) {
                         return a.total_loglik < b.total_loglik;
                       }) -
      report.kernels.begin());
  return report;
}

std::string bias_report_csv(const BiasReport& report) {
  std::string out = "kernel,total_loglik,mean_loglik,count,tau2,is_argmax\n";
  const std::string tau2 = report.tau2 ? format_double(*report.tau2) : "";
  for (std::size_t i = 0; i < report.kernels.size(); ++i) {
    const auto& s = report.kernels[i];
    out += "\"" + format_kernel_record(s.kernel) + "\",";
    out += format_double(s.total_loglik) + ",";
    out += format_double(s.mean_loglik) + ",";
    out += std::to_string(s.count) + ",";
    out += tau2 + ",";
    out += (static_cast<int>(i) == report.argmax_index ? "1" : "0");
    out += '\n';
  }
  return out;
}

std::string bias_report_plot_json(const BiasReport& report) {
  nlohmann::ordered_json j;
  j["axis"] = "symlog";
  j["tau2"] = report.tau2 ? nlohmann::ordered_json(*report.tau2)
                          : nlohmann::ordered_json(nullptr);
  j["excluded"] = report.excluded;
  j["argmax_kernel"] = format_kernel_record(report.argmax().kernel);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : report.kernels) {
    nlohmann::ordered_json row;
    row["kernel"] = format_kernel_record(s.kernel);
    row["total_loglik"] = s.total_loglik;
    row["mean_loglik"] = s.mean_loglik;
    row["count"] = s.count;
    rows.push_back(std::move(row));
  }
  j["kernels"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace gpicl
