#include "gpicl/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "gpicl/bias.hpp"
#include "gpicl/prompt.hpp"

namespace gpicl {

double reward(const RewardConfig& config, const std::string& completion,
              const RewardContext& context) {
  config.validate();
  const auto parsed = parse_prediction(completion);
  if (!parsed.value) return config.fail_value;
  if (config.kind == RewardKind::kNegAbsError)
    return std::max(-std::abs(*parsed.value - context.y_target), config.parse_floor);
  // Overflowing literals ("1e999") parse to inf; their likelihood is the floor.
  if (!std::isfinite(*parsed.value)) return config.parse_floor;
  const double ll = prediction_loglik(config.kernel, config.noise, context.demos_x,
                                      context.demos_y, context.query, *parsed.value, 0.0);
  return std::max(ll, config.parse_floor);
}

AdvantageVector advantages(const Eigen::VectorXd& rewards) {
  if (rewards.size() < 1) throw InputDomainError("advantages: empty reward group");
  const double mean = rewards.mean();
  const double sd = std::sqrt((rewards.array() - mean).square().mean());
  AdvantageVector out;
  if (sd < 1e-12) {
    out.values = Eigen::VectorXd::Zero(rewards.size());
    return out;
  }
  out.values = (rewards.array() - mean) / sd;
  return out;
}

}  // namespace gpicl
