#include "gpicl/predictors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <httplib.h>
#include <json.hpp>

#include "gpicl/errors.hpp"
#include "gpicl/gp.hpp"
#include "gpicl/prompt.hpp"

namespace gpicl {

void EndpointConfig::validate() const {
  if (base_url.empty()) throw InputDomainError("EndpointConfig: base_url required");
  if (model_name.empty()) throw InputDomainError("EndpointConfig: model_name required");
  if (timeout_ms <= 0) throw InputDomainError("EndpointConfig: timeout_ms must be > 0");
  if (max_retries < 0) throw InputDomainError("EndpointConfig: max_retries must be >= 0");
  if (parallelism < 1) throw InputDomainError("EndpointConfig: parallelism must be >= 1");
}

void PredictorConfig::validate() const {
  if (kind == PredictorKind::kEndpoint) {
    if (!endpoint) throw InputDomainError("PredictorConfig: endpoint config required");
    endpoint->validate();
  } else if (endpoint) {
    throw InputDomainError("PredictorConfig: endpoint config only valid for kind=endpoint");
  }
  if (kind == PredictorKind::kGpMean) {
    kernel.validate();
    noise.validate();
  }
  if (kind == PredictorKind::kReplay && replay_path.empty())
    throw InputDomainError("PredictorConfig: replay_path required");
}

namespace {

class GpMeanPredictor final : public Predictor {
 public:
  GpMeanPredictor(const KernelSpec& kernel, const NoiseSpec& noise)
      : kernel_(kernel), noise_(noise) {}

  std::string id() const override { return "gp_mean(" + format_kernel_record(kernel_) + ")"; }

  PredictionOutcome predict(const PrefixTask& task, const std::string&, int) override {
    const auto post =
        posterior_predictive(kernel_, noise_, task.demos_x, task.demos_y, task.query);
    return {format_double(post.mean), post.mean, std::nullopt};
  }

 private:
  KernelSpec kernel_;
  NoiseSpec noise_;
};

class NearestNeighborPredictor final : public Predictor {
 public:
  std::string id() const override { return "1nn"; }

  PredictionOutcome predict(const PrefixTask& task, const std::string&, int) override {
    const auto n = task.demos_x.rows();
    if (n == 0) return {"", std::nullopt, std::nullopt};
    Eigen::Index best = 0;
    double best_d = (task.demos_x.row(0).transpose() - task.query).norm();
    for (Eigen::Index i = 1; i < n; ++i) {
      const double d = (task.demos_x.row(i).transpose() - task.query).norm();
      if (d < best_d) {  // ties keep the lowest index
        best_d = d;
        best = i;
      }
    }
    const double y = task.demos_y(best);
    return {format_double(y), y, std::nullopt};
  }
};

class ReplayPredictor final : public Predictor {
 public:
  explicit ReplayPredictor(const std::string& path) {
    for (auto& r : load_records(path)) {
      if (predictor_id_.empty()) predictor_id_ = r.predictor_id;
      store_[{r.episode_id, r.n}] = std::move(r);
    }
    if (store_.empty()) throw DataError("replay store is empty: " + path);
  }

  std::string id() const override { return predictor_id_; }

  PredictionOutcome predict(const PrefixTask&, const std::string& episode_id,
                            int n) override {
    const auto it = store_.find({episode_id, n});
    if (it == store_.end())
      throw LookupError("replay miss: no record for (" + episode_id + ", n=" +
                        std::to_string(n) + ")");
    return {it->second.raw_text, it->second.y_hat, it->second.error};
  }

 private:
  std::map<std::pair<std::string, int>, PredictionRecord> store_;
  std::string predictor_id_;
};

struct ParsedUrl {
  std::string host_port;  // scheme://host[:port] for the client
  std::string path_prefix;
};

ParsedUrl split_base_url(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  if (scheme == std::string::npos)
    throw InputDomainError("EndpointConfig: base_url needs a scheme: " + base_url);
  const auto slash = base_url.find('/', scheme + 3);
  if (slash == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, slash), prefix};
}

class EndpointPredictor final : public Predictor {
 public:
  EndpointPredictor(const EndpointConfig& config, int prompt_decimals)
      : config_(config), decimals_(prompt_decimals) {
    config_.validate();
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
  }

  std::string id() const override { return config_.model_name; }

  PredictionOutcome predict(const PrefixTask& task, const std::string&, int) override {
    const auto prompt = render_prompt(task.demos_x, task.demos_y, task.query,
                                      static_cast<int>(task.query.size()), decimals_);
    nlohmann::ordered_json body;
    body["model"] = config_.model_name;
    body["messages"] = nlohmann::ordered_json::array(
        {nlohmann::ordered_json{{"role", "user"}, {"content", prompt.text}}});
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;
    const std::string payload = body.dump();

    const auto url = split_base_url(config_.base_url);
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        // 250ms, 500ms, 1s, ... capped at 4s.
        const int delay = std::min(250 << (attempt - 1), 4000);
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
      httplib::Client client(url.host_port);
      client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
      client.set_read_timeout(0, config_.timeout_ms * 1000LL);
      client.set_write_timeout(0, config_.timeout_ms * 1000LL);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

      auto res = client.Post(url.path_prefix + "/chat/completions", headers, payload,
                             "application/json");
      if (!res) {
        last_error = "connection failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        return {"", std::nullopt, "http status " + std::to_string(res->status)};
      try {
        const auto j = nlohmann::json::parse(res->body);
        const std::string content =
            j.at("choices").at(0).at("message").at("content").get<std::string>();
        return {content, parse_prediction(content).value, std::nullopt};
      } catch (const nlohmann::json::exception& e) {
        return {res->body, std::nullopt, std::string("malformed response: ") + e.what()};
      }
    }
    return {"", std::nullopt,
            "retries exhausted after " + std::to_string(config_.max_retries + 1) +
                " attempts; last: " + last_error};
  }

 private:
  EndpointConfig config_;
  int decimals_;
  std::string api_key_;
};

}  // namespace

std::unique_ptr<Predictor> make_predictor(const PredictorConfig& config) {
  config.validate();
  switch (config.kind) {
    case PredictorKind::kEndpoint:
      return std::make_unique<EndpointPredictor>(*config.endpoint, config.prompt_decimals);
    case PredictorKind::kGpMean:
      return std::make_unique<GpMeanPredictor>(config.kernel, config.noise);
    case PredictorKind::kNearestNeighbor:
      return std::make_unique<NearestNeighborPredictor>();
    case PredictorKind::kReplay:
      return std::make_unique<ReplayPredictor>(config.replay_path);
  }
  throw InputDomainError("make_predictor: unknown kind");
}

RunSummary run_predictions(Predictor& predictor, const TaskSet& taskset,
                           const std::vector<int>& n_values,
                           const std::string& records_path, int parallelism) {
  if (parallelism < 1) throw InputDomainError("run_predictions: parallelism must be >= 1");
  for (int n : n_values)
    if (n < 0 || n >= taskset.config.n_points)
      throw InputDomainError("run_predictions: n=" + std::to_string(n) + " out of range");

  // Resume: collect keys already journaled from an interrupted run.
  std::vector<PredictionRecord> existing;
  {
    std::ifstream probe(records_path);
    if (probe.good()) {
      probe.close();
      existing = load_records(records_path);
    }
  }
  std::set<std::pair<std::string, int>> done;
  for (const auto& r : existing) done.emplace(r.episode_id, r.n);

  struct Key {
    const Episode* episode;
    int n;
  };
  std::vector<Key> todo;
  RunSummary summary;
  for (const auto& ep : taskset.episodes)
    for (int n : n_values) {
      ++summary.total;
      if (done.count({ep.episode_id, n})) {
        ++summary.skipped;
        continue;
      }
      todo.push_back({&ep, n});
    }

  std::ofstream journal(records_path, std::ios::binary | std::ios::app);
  if (!journal) throw DataError("cannot open for append: " + records_path);

  std::mutex sink_mutex;
  std::atomic<std::size_t> next{0};
  std::vector<PredictionRecord> fresh(todo.size());

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const auto& key = todo[i];
      const auto task = prefix_task(*key.episode, key.n);

      PredictionRecord rec;
      rec.predictor_id = predictor.id();
      rec.episode_id = key.episode->episode_id;
      rec.n = key.n;
      rec.x_star = task.query;
      rec.y_target = task.target;
      try {
        auto outcome = predictor.predict(task, key.episode->episode_id, key.n);
        rec.raw_text = std::move(outcome.raw_text);
        rec.y_hat = outcome.value;
        rec.error = std::move(outcome.error);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      fresh[i] = rec;

      std::lock_guard<std::mutex> lock(sink_mutex);
      journal << record_to_line(rec) << '\n';
      journal.flush();
    }
  };

  if (parallelism == 1 || todo.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    const auto n_threads = std::min(static_cast<std::size_t>(parallelism), todo.size());
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  journal.close();

  for (const auto& r : fresh) {
    if (r.error)
      ++summary.failed;
    else if (r.y_hat)
      ++summary.succeeded;
    else
      ++summary.unparseable;
  }

  // Canonicalize: one record per key, sorted, so an uninterrupted run and a
  // resumed run produce identical files.
  std::vector<PredictionRecord> all = std::move(existing);
  all.insert(all.end(), fresh.begin(), fresh.end());
  std::sort(all.begin(), all.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
    return std::tie(a.episode_id, a.n) < std::tie(b.episode_id, b.n);
  });
  const std::string tmp = records_path + ".tmp";
  save_records(all, tmp);
  if (std::rename(tmp.c_str(), records_path.c_str()) != 0)
    throw DataError("cannot replace records file: " + records_path);
  return summary;
}

}  // namespace gpicl
