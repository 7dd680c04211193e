#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gpicl/kernels.hpp"
#include "gpicl/records.hpp"
#include "gpicl/taskgen.hpp"

namespace gpicl {

struct EndpointConfig {
  std::string base_url;      // e.g. http://host:port/v1
  std::string model_name;
  std::string api_key_env;   // environment variable holding the bearer key
  double temperature = 0.0;
  int max_tokens = 32;
  int timeout_ms = 30000;
  int max_retries = 3;
  int parallelism = 1;

  void validate() const;
};

enum class PredictorKind { kEndpoint, kGpMean, kNearestNeighbor, kReplay };

struct PredictorConfig {
  PredictorKind kind = PredictorKind::kGpMean;
  std::optional<EndpointConfig> endpoint;  // kEndpoint only
  KernelSpec kernel;                       // kGpMean only
  NoiseSpec noise;                         // kGpMean only
  std::string replay_path;                 // kReplay only
  int prompt_decimals = 3;                 // kEndpoint prompt rendering

  void validate() const;
};

struct PredictionOutcome {
  std::string raw_text;
  std::optional<double> value;
  std::optional<std::string> error;  // transport/lookup failure, value absent
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string id() const = 0;
  // episode_id/n identify the task for replay stores; pure predictors use
  // only the demos and query.
  virtual PredictionOutcome predict(const PrefixTask& task, const std::string& episode_id,
                                    int n) = 0;
};

std::unique_ptr<Predictor> make_predictor(const PredictorConfig& config);

struct RunSummary {
  long long total = 0;
  long long succeeded = 0;    // parseable value obtained
  long long unparseable = 0;  // completion without a numeric literal
  long long failed = 0;       // transport/lookup errors
  long long skipped = 0;      // keys already present from a previous run
};

// One record per (episode, n) over n_values. Appends journal lines to
// records_path as results land (skipping keys already on disk, so interrupted
// runs resume), then rewrites the file in canonical (episode_id, n) order on
// completion. parallelism > 1 issues that many predictor calls in flight.
RunSummary run_predictions(Predictor& predictor, const TaskSet& taskset,
                           const std::vector<int>& n_values,
                           const std::string& records_path, int parallelism = 1);

}  // namespace gpicl
