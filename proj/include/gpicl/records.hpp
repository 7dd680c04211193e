#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gpicl {

// Atomic evaluation unit: one predictor answer for one (episode, n) task.
// y_hat absent + error absent = unparseable completion; error present =
// transport/lookup failure (then y_hat is always absent).
struct PredictionRecord {
  std::string predictor_id;
  std::string episode_id;
  int n = 0;
  Eigen::VectorXd x_star;
  std::optional<double> y_hat;
  double y_target = 0.0;
  std::string raw_text;
  std::optional<std::string> error;

  double abs_error() const;  // requires y_hat
};

std::string record_to_line(const PredictionRecord& r);
PredictionRecord record_from_line(const std::string& line);

std::vector<PredictionRecord> load_records(const std::string& path);
void save_records(const std::vector<PredictionRecord>& records, const std::string& path);

}  // namespace gpicl
