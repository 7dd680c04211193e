#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>

namespace gpicl {

struct PromptText {
  std::string text;
  int n_demos = 0;
  int dims = 1;
};

struct ParsedPrediction {
  std::optional<double> value;
  std::optional<std::pair<std::size_t, std::size_t>> matched_span;  // [begin, end)
};

// Renders the regression prompt for d in 1..4: the d=1 number-predictor
// preamble with "X: {x}, Y: {y}" demo lines, or the d>=2 function-approximator
// preamble with "X0: ... X{d-1}: ..." fields. Ends with the query's ", Y:".
PromptText render_prompt(const Eigen::MatrixXd& demos_x, const Eigen::VectorXd& demos_y,
                         const Eigen::VectorXd& query, int dims, int decimals = 3);

// Last numeric literal (optional sign, digits with optional decimal point,
// optional exponent) anywhere in the completion; absent when there is none.
ParsedPrediction parse_prediction(const std::string& completion);

}  // namespace gpicl
