#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gpicl/bias.hpp"
#include "gpicl/curves.hpp"
#include "gpicl/errors.hpp"
#include "gpicl/manifest.hpp"
#include "gpicl/nn_bound.hpp"
#include "gpicl/predictors.hpp"
#include "gpicl/records.hpp"
#include "gpicl/rewards.hpp"
#include "gpicl/taskgen.hpp"
#include "gpicl/version.hpp"

namespace {

using gpicl::DataError;
using gpicl::InputDomainError;
using gpicl::UsageError;
using ordered_json = nlohmann::ordered_json;

ordered_json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file: " + path);
  try {
    ordered_json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

const ordered_json& require_block(const ordered_json& config, const std::string& name) {
  if (!config.contains(name))
    throw UsageError("config is missing the \"" + name + "\" block");
  return config.at(name);
}

template <class T>
T require_field(const ordered_json& block, const std::string& block_name,
                const std::string& field) {
  if (!block.contains(field))
    throw UsageError("config is missing \"" + block_name + "." + field + "\"");
  try {
    return block.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError("config field \"" + block_name + "." + field + "\" has the wrong type");
  }
}

template <class T>
T optional_field(const ordered_json& block, const std::string& block_name,
                 const std::string& field, T fallback) {
  if (!block.contains(field)) return fallback;
  return require_field<T>(block, block_name, field);
}

gpicl::KernelSpec kernel_field(const ordered_json& block, const std::string& block_name,
                               const std::string& field) {
  const auto record = require_field<std::string>(block, block_name, field);
  try {
    return gpicl::parse_kernel_record(record);
  } catch (const InputDomainError& e) {
    throw UsageError("config field \"" + block_name + "." + field + "\": " + e.what());
  }
}

gpicl::GenConfig generation_config(const ordered_json& config) {
  const auto& g = require_block(config, "generation");
  gpicl::GenConfig c;
  c.kernel = kernel_field(g, "generation", "kernel");
  c.noise.noise_variance = optional_field<double>(g, "generation", "noise_variance", 0.001);
  c.dims = optional_field<int>(g, "generation", "dims", 1);
  c.n_functions = optional_field<int>(g, "generation", "n_functions", 200);
  c.n_points = optional_field<int>(g, "generation", "n_points", 50);
  c.input_low = optional_field<double>(g, "generation", "input_low", 0.0);
  c.input_high = optional_field<double>(g, "generation", "input_high", 29.0);
  c.seed = require_field<std::uint64_t>(g, "generation", "seed");
  try {
    c.validate();
  } catch (const InputDomainError& e) {
    throw UsageError(std::string("config block \"generation\": ") + e.what());
  }
  return c;
}

gpicl::PredictorConfig predictor_config(const ordered_json& config) {
  const auto& p = require_block(config, "predictor");
  const auto kind = require_field<std::string>(p, "predictor", "kind");
  gpicl::PredictorConfig c;
  c.prompt_decimals = optional_field<int>(p, "predictor", "prompt_decimals", 3);
  if (kind == "endpoint") {
    c.kind = gpicl::PredictorKind::kEndpoint;
    const auto& e = p.contains("endpoint") ? p.at("endpoint")
                                           : throw UsageError(
                                                 "config is missing \"predictor.endpoint\"");
    gpicl::EndpointConfig ec;
    ec.base_url = require_field<std::string>(e, "predictor.endpoint", "base_url");
    ec.model_name = require_field<std::string>(e, "predictor.endpoint", "model_name");
    ec.api_key_env = optional_field<std::string>(e, "predictor.endpoint", "api_key_env", "");
    ec.temperature = optional_field<double>(e, "predictor.endpoint", "temperature", 0.0);
    ec.max_tokens = optional_field<int>(e, "predictor.endpoint", "max_tokens", 32);
    ec.timeout_ms = optional_field<int>(e, "predictor.endpoint", "timeout_ms", 30000);
    ec.max_retries = optional_field<int>(e, "predictor.endpoint", "max_retries", 3);
    ec.parallelism = optional_field<int>(e, "predictor.endpoint", "parallelism", 1);
    c.endpoint = ec;
  } else if (kind == "gp_mean") {
    c.kind = gpicl::PredictorKind::kGpMean;
    c.kernel = kernel_field(p, "predictor", "kernel");
    c.noise.noise_variance = require_field<double>(p, "predictor", "noise_variance");
  } else if (kind == "nearest_neighbor") {
    c.kind = gpicl::PredictorKind::kNearestNeighbor;
  } else if (kind == "replay") {
    c.kind = gpicl::PredictorKind::kReplay;
    c.replay_path = require_field<std::string>(p, "predictor", "replay_path");
  } else {
    throw UsageError("config field \"predictor.kind\" must be one of endpoint, gp_mean, "
                     "nearest_neighbor, replay");
  }
  try {
    c.validate();
  } catch (const InputDomainError& e) {
    throw UsageError(std::string("config block \"predictor\": ") + e.what());
  }
  return c;
}

struct AnalysisOptions {
  int n_bootstrap = 1000;
  double ci_level = 0.95;
  std::uint64_t bootstrap_seed = 0;
  double candidate_noise_variance = 0.001;
  std::optional<std::vector<std::string>> candidates;
  bool adjust = false;
};

AnalysisOptions analysis_options(const ordered_json& config) {
  AnalysisOptions o;
  if (!config.contains("analysis")) return o;
  const auto& a = config.at("analysis");
  o.n_bootstrap = optional_field<int>(a, "analysis", "n_bootstrap", o.n_bootstrap);
  o.ci_level = optional_field<double>(a, "analysis", "ci_level", o.ci_level);
  o.bootstrap_seed =
      optional_field<std::uint64_t>(a, "analysis", "bootstrap_seed", o.bootstrap_seed);
  o.candidate_noise_variance = optional_field<double>(a, "analysis",
                                                      "candidate_noise_variance",
                                                      o.candidate_noise_variance);
  if (a.contains("candidates"))
    o.candidates = require_field<std::vector<std::string>>(a, "analysis", "candidates");
  o.adjust = optional_field<bool>(a, "analysis", "adjust", false);
  return o;
}

void check_sidecar(const std::string& path, bool force) {
  if (force) return;
  gpicl::verify_against_sidecar(path);
}

int cmd_generate(const std::string& config_path, const std::string& out_path) {
  const auto config = load_config_file(config_path);
  const auto gen = generation_config(config);
  const auto taskset = gpicl::generate_taskset(gen);
  gpicl::save_taskset(taskset, out_path);

  auto manifest = gpicl::make_manifest("generate", config);
  gpicl::add_output(manifest, out_path);
  gpicl::save_manifest(manifest, out_path + ".manifest.json");
  std::cout << "wrote " << taskset.episodes.size() << " episodes to " << out_path << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& taskset_path,
            const std::string& out_path, int n_min, int n_max, bool force) {
  const auto config = load_config_file(config_path);
  const auto pc = predictor_config(config);
  check_sidecar(taskset_path, force);
  const auto taskset = gpicl::load_taskset(taskset_path);

  if (n_max < 0) n_max = taskset.config.n_points - 1;
  if (n_min < 0 || n_min > n_max || n_max >= taskset.config.n_points)
    throw UsageError("bad n range [" + std::to_string(n_min) + ", " +
                     std::to_string(n_max) + "]");
  std::vector<int> n_values;
  for (int n = n_min; n <= n_max; ++n) n_values.push_back(n);

  const auto predictor = gpicl::make_predictor(pc);
  const int parallelism = pc.endpoint ? pc.endpoint->parallelism : 1;
  const auto summary =
      gpicl::run_predictions(*predictor, taskset, n_values, out_path, parallelism);

  auto manifest = gpicl::make_manifest("run", config);
  gpicl::add_input(manifest, taskset_path);
  gpicl::add_output(manifest, out_path);
  gpicl::save_manifest(manifest, out_path + ".manifest.json");

  std::cout << "total=" << summary.total << " succeeded=" << summary.succeeded
            << " unparseable=" << summary.unparseable << " failed=" << summary.failed
            << " skipped=" << summary.skipped << "\n";
  return summary.failed > 0 ? 3 : 0;
}

int cmd_analyze_curves(const ordered_json& config, const std::string& taskset_path,
                       const std::vector<std::string>& records_paths,
                       const std::string& gp_records_path, const std::string& out_prefix,
                       bool no_bound, bool literal_variance, bool force) {
  const auto opts = analysis_options(config);
  check_sidecar(taskset_path, force);
  const auto taskset = gpicl::load_taskset(taskset_path);

  auto curve_for = [&](const std::string& path) {
    check_sidecar(path, force);
    const auto records = gpicl::load_records(path);
    for (const auto& r : records) taskset.episode_by_id(r.episode_id);  // existence check
    gpicl::NamedCurve c;
    c.predictor_id = records.empty() ? path : records.front().predictor_id;
    c.points = gpicl::learning_curve(records, opts.n_bootstrap, opts.ci_level,
                                     opts.bootstrap_seed);
    return c;
  };

  std::vector<gpicl::NamedCurve> curves;
  for (const auto& path : records_paths) curves.push_back(curve_for(path));

  std::optional<std::vector<double>> bound;
  if (taskset.config.dims == 1 && !no_bound) {
    const double L = taskset.config.input_high - taskset.config.input_low;
    std::vector<double> values;
    for (const auto& pt : curves.front().points) {
      // The bound's n counts inputs on the interval: n demos plus the query.
      const int n_inputs = pt.n + 1;
      if (n_inputs < 2) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const gpicl::BoundQuery q{taskset.config.kernel, taskset.config.noise, n_inputs, L};
      values.push_back(gpicl::expected_1nn_mae(
          q, literal_variance ? gpicl::BoundIntegrand::kLiteralVariance
                              : gpicl::BoundIntegrand::kSqrtVariance));
    }
    bound = std::move(values);
  }

  std::optional<std::vector<double>> gp_ref;
  if (!gp_records_path.empty()) {
    const auto gp_curve = curve_for(gp_records_path);
    std::vector<double> values;
    for (const auto& pt : gp_curve.points) values.push_back(pt.mean_abs_error);
    gp_ref = std::move(values);
  }

  const auto report =
      gpicl::curve_report(std::move(curves), std::move(bound), std::move(gp_ref));
  const std::string csv_path = out_prefix + ".csv";
  const std::string plot_path = out_prefix + "_plot.json";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw DataError("cannot open for writing: " + csv_path);
    csv << gpicl::curve_report_csv(report);
    std::ofstream plot(plot_path, std::ios::binary);
    if (!plot) throw DataError("cannot open for writing: " + plot_path);
    plot << gpicl::curve_report_plot_json(report);
  }

  auto manifest = gpicl::make_manifest("analyze", config);
  gpicl::add_input(manifest, taskset_path);
  for (const auto& path : records_paths) gpicl::add_input(manifest, path);
  if (!gp_records_path.empty()) gpicl::add_input(manifest, gp_records_path);
  gpicl::add_output(manifest, csv_path);
  gpicl::add_output(manifest, plot_path);
  gpicl::save_manifest(manifest, out_prefix + ".manifest.json");
  std::cout << "wrote " << csv_path << " and " << plot_path << "\n";
  return 0;
}

int cmd_analyze_bias(const ordered_json& config, const std::string& taskset_path,
                     const std::vector<std::string>& records_paths, bool adjust_flag,
                     const std::string& out_prefix, bool force) {
  if (records_paths.size() != 1)
    throw UsageError("bias mode takes exactly one --records file");
  const auto opts = analysis_options(config);
  check_sidecar(taskset_path, force);
  check_sidecar(records_paths.front(), force);
  const auto taskset = gpicl::load_taskset(taskset_path);
  const auto records = gpicl::load_records(records_paths.front());
  for (const auto& r : records) taskset.episode_by_id(r.episode_id);

  gpicl::CandidateSet candidates;
  if (opts.candidates) {
    candidates.noise = gpicl::NoiseSpec{opts.candidate_noise_variance};
    for (const auto& record : *opts.candidates)
      candidates.kernels.push_back(gpicl::parse_kernel_record(record));
  } else {
    candidates = gpicl::default_candidate_set(opts.candidate_noise_variance);
  }

  const bool adjust = adjust_flag || opts.adjust;
  const auto report = gpicl::bias_report(records, candidates, taskset, adjust);

  const std::string csv_path = out_prefix + "_bias.csv";
  const std::string plot_path = out_prefix + "_bias_plot.json";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw DataError("cannot open for writing: " + csv_path);
    csv << gpicl::bias_report_csv(report);
    std::ofstream plot(plot_path, std::ios::binary);
    if (!plot) throw DataError("cannot open for writing: " + plot_path);
    plot << gpicl::bias_report_plot_json(report);
  }

  auto manifest = gpicl::make_manifest("analyze", config);
  gpicl::add_input(manifest, taskset_path);
  gpicl::add_input(manifest, records_paths.front());
  gpicl::add_output(manifest, csv_path);
  gpicl::add_output(manifest, plot_path);
  gpicl::save_manifest(manifest, out_prefix + ".manifest.json");

  std::cout << "argmax_kernel=" << gpicl::format_kernel_record(report.argmax().kernel);
  if (report.tau2) std::cout << " tau2=" << gpicl::format_double(*report.tau2);
  std::cout << " excluded=" << report.excluded << "\n";
  return 0;
}

int cmd_bound(const std::string& kernel_record, double noise_variance, double L,
              const std::string& n_list, bool literal_variance,
              const std::string& out_path) {
  const auto kernel = gpicl::parse_kernel_record(kernel_record);
  std::vector<int> ns;
  std::stringstream ss(n_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      ns.push_back(n);
    } catch (const std::exception&) {
      throw UsageError("--n entry is not an integer: " + item);
    }
  }
  if (ns.empty()) throw UsageError("--n needs a comma-separated list of input counts");

  std::string csv = "n,nn_bound\n";
  for (int n : ns) {
    gpicl::BoundQuery q{kernel, gpicl::NoiseSpec{noise_variance}, n, L};
    const double v = gpicl::expected_1nn_mae(
        q, literal_variance ? gpicl::BoundIntegrand::kLiteralVariance
                            : gpicl::BoundIntegrand::kSqrtVariance);
    csv += std::to_string(n) + "," + gpicl::format_double(v) + "\n";
  }
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + out_path);
    out << csv;
  }
  return 0;
}

int cmd_score(const std::string& config_path, const std::string& taskset_path,
              const std::string& requests_path, const std::string& out_path, bool force) {
  const auto config = load_config_file(config_path);
  const auto& r = require_block(config, "reward");
  const auto kind = require_field<std::string>(r, "reward", "kind");
  gpicl::RewardConfig rc;
  if (kind == "neg_abs_error") {
    rc = gpicl::neg_abs_error_reward();
  } else if (kind == "loglik") {
    rc = gpicl::loglik_reward(kernel_field(r, "reward", "kernel"),
                              gpicl::NoiseSpec{require_field<double>(r, "reward",
                                                                    "noise_variance")});
  } else {
    throw UsageError("config field \"reward.kind\" must be neg_abs_error or loglik");
  }
  rc.parse_floor = optional_field<double>(r, "reward", "parse_floor", rc.parse_floor);
  rc.fail_value = optional_field<double>(r, "reward", "fail_value", rc.fail_value);

  check_sidecar(taskset_path, force);
  const auto taskset = gpicl::load_taskset(taskset_path);

  std::ifstream in(requests_path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + requests_path);

  struct Request {
    std::string group_id;
    double reward = 0.0;
  };
  std::vector<Request> requests;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    std::string completion, episode_id, group_id;
    int n = 0;
    try {
      j = ordered_json::parse(line);
      completion = j.at("completion").get<std::string>();
      episode_id = j.at("episode_id").get<std::string>();
      n = j.at("n").get<int>();
      group_id = j.contains("group_id") ? j.at("group_id").get<std::string>()
                                        : episode_id + ":" + std::to_string(n);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("requests line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto& episode = taskset.episode_by_id(episode_id);
    const auto task = gpicl::prefix_task(episode, n);

    Request req;
    req.group_id = std::move(group_id);
    req.reward = gpicl::reward(rc, completion,
                               {task.demos_x, task.demos_y, task.query, task.target});
    requests.push_back(std::move(req));
  }

  // Advantages are group-relative: normalize within each group_id.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < requests.size(); ++i)
    groups[requests[i].group_id].push_back(i);
  std::vector<double> advantage(requests.size(), 0.0);
  for (const auto& [gid, idx] : groups) {
    Eigen::VectorXd rewards(static_cast<Eigen::Index>(idx.size()));
    for (Eigen::Index k = 0; k < rewards.size(); ++k)
      rewards(k) = requests[idx[static_cast<std::size_t>(k)]].reward;
    const auto adv = gpicl::advantages(rewards);
    for (Eigen::Index k = 0; k < rewards.size(); ++k)
      advantage[idx[static_cast<std::size_t>(k)]] = adv.values(k);
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + out_path);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    ordered_json j;
    j["group_id"] = requests[i].group_id;
    j["reward"] = requests[i].reward;
    j["advantage"] = advantage[i];
    out << j.dump() << '\n';
  }
  out.close();

  auto manifest = gpicl::make_manifest("score", config);
  gpicl::add_input(manifest, taskset_path);
  gpicl::add_input(manifest, requests_path);
  gpicl::add_output(manifest, out_path);
  gpicl::save_manifest(manifest, out_path + ".manifest.json");
  std::cout << "scored " << requests.size() << " requests\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP in-context regression harness"};
  app.set_version_flag("--version", std::string(gpicl::kVersion));
  app.require_subcommand(1);

  std::string config_path, taskset_path, out_path, out_prefix, mode, gp_records_path;
  std::vector<std::string> records_paths;
  std::string kernel_record, n_list = "2,5,10,25,50", requests_path;
  double noise_variance = 0.001, L = 29.0;
  int n_min = 0, n_max = -1;
  bool force = false, adjust = false, no_bound = false, literal_variance = false;

  auto* generate = app.add_subcommand("generate", "sample a task set from a GP prior");
  generate->add_option("--config", config_path, "config file (generation block)")
      ->required();
  generate->add_option("--out", out_path, "output taskset path")->required();

  auto* run = app.add_subcommand("run", "run a predictor over a task set");
  run->add_option("--config", config_path, "config file (predictor block)")->required();
  run->add_option("--taskset", taskset_path, "taskset path")->required();
  run->add_option("--out", out_path, "output records path")->required();
  run->add_option("--n-min", n_min, "smallest demo count");
  run->add_option("--n-max", n_max, "largest demo count (default n_points-1)");
  run->add_flag("--force", force, "skip manifest digest checks");

  auto* analyze = app.add_subcommand("analyze", "aggregate records into reports");
  analyze->add_option("--mode", mode, "curves or bias")->required();
  analyze->add_option("--config", config_path, "config file (analysis block)");
  analyze->add_option("--taskset", taskset_path, "taskset path")->required();
  analyze->add_option("--records", records_paths, "records file(s), one per predictor")
      ->required();
  analyze->add_option("--gp-records", gp_records_path,
                      "records file for the gp_ref column (curves mode)");
  analyze->add_option("--out-prefix", out_prefix, "output path prefix")->required();
  analyze->add_flag("--adjust", adjust, "fit the pooled tau2 correction (bias mode)");
  analyze->add_flag("--no-bound", no_bound, "omit the nn_bound column (curves mode)");
  analyze->add_flag("--literal-variance", literal_variance,
                    "integrate V(d) instead of sqrt(V(d)) in the bound");
  analyze->add_flag("--force", force, "skip manifest digest checks");

  auto* bound = app.add_subcommand("bound", "tabulate the expected 1-NN MAE bound");
  bound->add_option("--kernel", kernel_record, "kernel record, e.g. matern,0.5,8,0.001")
      ->required();
  bound->add_option("--noise-variance", noise_variance, "observation noise variance");
  bound->add_option("--L", L, "interval length");
  bound->add_option("--n", n_list, "comma-separated input counts");
  bound->add_flag("--literal-variance", literal_variance,
                  "integrate V(d) instead of sqrt(V(d))");
  bound->add_option("--out", out_path, "output CSV path (default stdout)");

  auto* score = app.add_subcommand("score", "batch-score completions with GRPO rewards");
  score->add_option("--config", config_path, "config file (reward block)")->required();
  score->add_option("--taskset", taskset_path, "taskset path")->required();
  score->add_option("--requests", requests_path, "request JSONL path")->required();
  score->add_option("--out", out_path, "output JSONL path")->required();
  score->add_flag("--force", force, "skip manifest digest checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help/--version exit 0; every other parse failure is a usage error.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(config_path, out_path);
    if (run->parsed())
      return cmd_run(config_path, taskset_path, out_path, n_min, n_max, force);
    if (analyze->parsed()) {
      const auto config = config_path.empty() ? ordered_json::object()
                                              : load_config_file(config_path);
      if (mode == "curves")
        return cmd_analyze_curves(config, taskset_path, records_paths, gp_records_path,
                                  out_prefix, no_bound, literal_variance, force);
      if (mode == "bias")
        return cmd_analyze_bias(config, taskset_path, records_paths, adjust, out_prefix,
                                force);
      throw UsageError("--mode must be curves or bias");
    }
    if (bound->parsed())
      return cmd_bound(kernel_record, noise_variance, L, n_list, literal_variance,
                       out_path);
    if (score->parsed())
      return cmd_score(config_path, taskset_path, requests_path, out_path, force);
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const gpicl::TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 3;
  } catch (const InputDomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
}
