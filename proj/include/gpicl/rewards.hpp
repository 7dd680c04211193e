#pragma once

#include <Eigen/Core>
#include <string>

#include "gpicl/kernels.hpp"

namespace gpicl {

enum class RewardKind { kNegAbsError, kLogLik };

// Parseable rewards floor at parse_floor; completions without a parseable
// float score the strictly worse fail_value.
struct RewardConfig {
  RewardKind kind = RewardKind::kNegAbsError;
  double parse_floor = -10.0;
  double fail_value = -11.0;
  KernelSpec kernel;  // kLogLik only
  NoiseSpec noise;    // kLogLik only

  void validate() const {
    if (!(fail_value < parse_floor))
      throw InputDomainError("RewardConfig: fail_value must be < parse_floor");
  }
};

inline RewardConfig neg_abs_error_reward() { return {}; }

inline RewardConfig loglik_reward(const KernelSpec& kernel, const NoiseSpec& noise) {
  RewardConfig c;
  c.kind = RewardKind::kLogLik;
  c.parse_floor = -999.0;
  c.fail_value = -1000.0;
  c.kernel = kernel;
  c.noise = noise;
  return c;
}

struct RewardContext {
  Eigen::MatrixXd demos_x;
  Eigen::VectorXd demos_y;
  Eigen::VectorXd query;
  double y_target = 0.0;
};

// NegAbsError: max(-|v - y_target|, parse_floor) for the completion's last
// float v, fail_value when unparseable. LogLik: the parsed value's
// log-likelihood under the configured GP y-predictive, same capping scheme.
double reward(const RewardConfig& config, const std::string& completion,
              const RewardContext& context);

struct AdvantageVector {
  Eigen::VectorXd values;
};

// Group-relative normalization (r - mean) / population std; all-equal groups
// (std < 1e-12) map to zeros.
AdvantageVector advantages(const Eigen::VectorXd& rewards);

}  // namespace gpicl
