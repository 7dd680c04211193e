#include "gpicl/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "gpicl/errors.hpp"
#include "gpicl/kernels.hpp"
#include "gpicl/rng.hpp"

namespace gpicl {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Percentile with linear interpolation on the sorted sample.
double quantile(std::vector<double>& sorted, double p) {
  const auto m = sorted.size();
  if (m == 1) return sorted[0];
  const double pos = p * static_cast<double>(m - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= m) return sorted[m - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

std::vector<LearningCurvePoint> learning_curve(const std::vector<PredictionRecord>& records,
                                               int n_bootstrap, double ci_level,
                                               std::uint64_t seed) {
  if (records.empty()) throw InputDomainError("learning_curve: no records");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw InputDomainError("learning_curve: ci_level must be in (0,1)");
  if (n_bootstrap < 1) throw InputDomainError("learning_curve: n_bootstrap must be >= 1");

  // n -> episode -> abs errors of successful records.
  std::map<int, std::map<std::string, std::vector<double>>> groups;
  std::map<int, long long> failures;
  for (const auto& r : records) {
    failures.try_emplace(r.n, 0);
    if (!r.y_hat) {
      ++failures[r.n];
      continue;
    }
    groups[r.n][r.episode_id].push_back(r.abs_error());
  }

  std::vector<LearningCurvePoint> out;
  for (const auto& [n, fail_count] : failures) {
    LearningCurvePoint pt;
    pt.n = n;
    pt.failures = fail_count;
    const auto it = groups.find(n);
    if (it == groups.end() || it->second.empty()) {
      pt.mean_abs_error = pt.ci_low = pt.ci_high = kNan;
      out.push_back(pt);
      continue;
    }
    const auto& episodes = it->second;

    double sum = 0.0;
    long long count = 0;
    std::vector<std::pair<double, long long>> episode_sums;  // (sum, count) per episode
    episode_sums.reserve(episodes.size());
    for (const auto& [id, errs] : episodes) {
      double es = 0.0;
      for (double e : errs) es += e;
      episode_sums.emplace_back(es, static_cast<long long>(errs.size()));
      sum += es;
      count += static_cast<long long>(errs.size());
    }
    pt.count = count;
    pt.mean_abs_error = sum / static_cast<double>(count);

    // Cluster bootstrap: resample whole episodes with replacement.
    Rng rng(seed, static_cast<std::uint64_t>(n));
    const auto n_eps = episode_sums.size();
    std::vector<double> stats(static_cast<std::size_t>(n_bootstrap));
    for (int b = 0; b < n_bootstrap; ++b) {
      double bs = 0.0;
      long long bc = 0;
      for (std::size_t e = 0; e < n_eps; ++e) {
        const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_eps));
        bs += episode_sums[pick].first;
        bc += episode_sums[pick].second;
      }
      stats[static_cast<std::size_t>(b)] = bs / static_cast<double>(bc);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 0.5 * (1.0 - ci_level);
    pt.ci_low = quantile(stats, alpha);
    pt.ci_high = quantile(stats, 1.0 - alpha);
    out.push_back(pt);
  }
  return out;
}

CurveReport curve_report(std::vector<NamedCurve> curves,
                         std::optional<std::vector<double>> nn_bound,
                         std::optional<std::vector<double>> gp_ref) {
  if (curves.empty()) throw InputDomainError("curve_report: no curves");
  CurveReport report;
  for (const auto& pt : curves.front().points) report.n_values.push_back(pt.n);
  for (const auto& c : curves) {
    if (c.points.size() != report.n_values.size())
      throw InputDomainError("curve_report: mismatched n grids");
    for (std::size_t i = 0; i < c.points.size(); ++i)
      if (c.points[i].n != report.n_values[i])
        throw InputDomainError("curve_report: mismatched n grids");
  }
  if (nn_bound && nn_bound->size() != report.n_values.size())
    throw InputDomainError("curve_report: bound column length mismatch");
  if (gp_ref && gp_ref->size() != report.n_values.size())
    throw InputDomainError("curve_report: gp_ref column length mismatch");
  report.curves = std::move(curves);
  report.nn_bound = std::move(nn_bound);
  report.gp_ref = std::move(gp_ref);
  return report;
}

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

std::string curve_report_csv(const CurveReport& report) {
  std::string out = "n";
  for (const auto& c : report.curves)
    out += "," + c.predictor_id + "_mae," + c.predictor_id + "_lo," + c.predictor_id +
           "_hi";
  if (report.nn_bound) out += ",nn_bound";
  if (report.gp_ref) out += ",gp_ref";
  out += '\n';

  for (std::size_t i = 0; i < report.n_values.size(); ++i) {
    out += std::to_string(report.n_values[i]);
    for (const auto& c : report.curves) {
      const auto& pt = c.points[i];
      out += "," + cell(pt.mean_abs_error) + "," + cell(pt.ci_low) + "," + cell(pt.ci_high);
    }
    if (report.nn_bound) out += "," + cell((*report.nn_bound)[i]);
    if (report.gp_ref) out += "," + cell((*report.gp_ref)[i]);
    out += '\n';
  }
  return out;
}

std::string curve_report_plot_json(const CurveReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.n_values;
  nlohmann::ordered_json curves = nlohmann::ordered_json::array();
  for (const auto& c : report.curves) {
    nlohmann::ordered_json jc;
    jc["predictor_id"] = c.predictor_id;
    nlohmann::ordered_json mae = nlohmann::ordered_json::array(),
                           lo = nlohmann::ordered_json::array(),
                           hi = nlohmann::ordered_json::array(),
                           count = nlohmann::ordered_json::array(),
                           fails = nlohmann::ordered_json::array();
    for (const auto& pt : c.points) {
      mae.push_back(std::isnan(pt.mean_abs_error) ? nlohmann::ordered_json(nullptr)
                                                  : nlohmann::ordered_json(pt.mean_abs_error));
      lo.push_back(std::isnan(pt.ci_low) ? nlohmann::ordered_json(nullptr)
                                         : nlohmann::ordered_json(pt.ci_low));
      hi.push_back(std::isnan(pt.ci_high) ? nlohmann::ordered_json(nullptr)
                                          : nlohmann::ordered_json(pt.ci_high));
      count.push_back(pt.count);
      fails.push_back(pt.failures);
    }
    jc["mae"] = std::move(mae);
    jc["ci_low"] = std::move(lo);
    jc["ci_high"] = std::move(hi);
    jc["count"] = std::move(count);
    jc["failures"] = std::move(fails);
    curves.push_back(std::move(jc));
  }
  j["curves"] = std::move(curves);
  if (report.nn_bound) j["nn_bound"] = *report.nn_bound;
  if (report.gp_ref) j["gp_ref"] = *report.gp_ref;
  return j.dump(2) + "\n";
}

}  // namespace gpicl
