#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpicl/records.hpp"

namespace gpicl {

struct LearningCurvePoint {
  int n = 0;
  double mean_abs_error = 0.0;  // NaN when count == 0
  double ci_low = 0.0;
  double ci_high = 0.0;
  long long count = 0;     // successful records at this n
  long long failures = 0;  // records without y_hat
};

// Per-n mean absolute error with percentile-bootstrap CIs. Resampling is at
// the episode level (errors within one function are correlated); each n uses
// its own derived RNG stream so results don't depend on the n grid or
// ci_level.
std::vector<LearningCurvePoint> learning_curve(const std::vector<PredictionRecord>& records,
                                               int n_bootstrap = 1000,
                                               double ci_level = 0.95,
                                               std::uint64_t seed = 0);

struct NamedCurve {
  std::string predictor_id;
  std::vector<LearningCurvePoint> points;
};

struct CurveReport {
  std::vector<int> n_values;
  std::vector<NamedCurve> curves;
  std::optional<std::vector<double>> nn_bound;  // per n, when available (d=1)
  std::optional<std::vector<double>> gp_ref;    // GP-regression reference MAE
};

// All curves (and optional reference columns) must share one n grid.
CurveReport curve_report(std::vector<NamedCurve> curves,
                         std::optional<std::vector<double>> nn_bound,
                         std::optional<std::vector<double>> gp_ref);

// Header "n,<predictor>_mae,<predictor>_lo,<predictor>_hi,...,nn_bound,gp_ref"
// with reference columns present only when supplied; empty cells for n with
// zero successful records.
std::string curve_report_csv(const CurveReport& report);
std::string curve_report_plot_json(const CurveReport& report);

}  // namespace gpicl
