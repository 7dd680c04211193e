#include "gpicl/taskgen.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gpicl/errors.hpp"
#include "gpicl/gp.hpp"
#include "gpicl/rng.hpp"
#include "gpicl/version.hpp"

namespace gpicl {

using ordered_json = nlohmann::ordered_json;

void GenConfig::validate() const {
  kernel.validate();
  noise.validate();
  if (dims < 1 || dims > 4) throw InputDomainError("GenConfig: dims must be in 1..4");
  if (n_functions < 1) throw InputDomainError("GenConfig: n_functions must be >= 1");
  if (n_points < 2) throw InputDomainError("GenConfig: n_points must be >= 2");
  if (!(input_low < input_high))
    throw InputDomainError("GenConfig: input_low must be < input_high");
}

const Episode& TaskSet::episode_by_id(const std::string& id) const {
  for (const auto& e : episodes)
    if (e.episode_id == id) return e;
  throw LookupError("unknown episode id: " + id);
}

namespace detail {

void resample_duplicates(Eigen::MatrixXd& x, std::uint64_t episode_seed, double lo,
                         double hi, int max_retries) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Eigen::Index dup = -1;
    for (Eigen::Index i = 0; i < x.rows() && dup < 0; ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if ((x.row(i) - x.row(j)).norm() == 0.0) {
          dup = i;
          break;
        }
    if (dup < 0) return;
    Rng rng(episode_seed, 8 + static_cast<std::uint64_t>(attempt));
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(dup, c) = rng.uniform(lo, hi);
  }
  throw NumericalError("resample_duplicates: duplicate inputs persist after retries");
}

}  // namespace detail

TaskSet generate_taskset(const GenConfig& config) {
  config.validate();
  TaskSet ts;
  ts.config = config;
  ts.format_version = kTaskSetFormatVersion;
  ts.episodes.reserve(config.n_functions);

  char idbuf[16];
  for (int e = 0; e < config.n_functions; ++e) {
    const std::uint64_t eseed = stream_seed(config.seed, static_cast<std::uint64_t>(e));
    Episode ep;
    std::snprintf(idbuf, sizeof(idbuf), "ep%04d", e);
    ep.episode_id = idbuf;
    ep.kernel = config.kernel;

    ep.x.resize(config.n_points, config.dims);
    Rng xin(eseed, 0);
    for (int i = 0; i < config.n_points; ++i)
      for (int c = 0; c < config.dims; ++c)
        ep.x(i, c) = xin.uniform(config.input_low, config.input_high);
    detail::resample_duplicates(ep.x, eseed, config.input_low, config.input_high, 10);

    ep.y_clean = sample_function(config.kernel, ep.x, stream_seed(eseed, 1));

    Rng nrng(eseed, 2);
    const double sd = std::sqrt(config.noise.noise_variance);
    ep.y_noisy.resize(config.n_points);
    for (int i = 0; i < config.n_points; ++i)
      ep.y_noisy(i) = ep.y_clean(i) + sd * nrng.normal();

    ts.episodes.push_back(std::move(ep));
  }
  return ts;
}

PrefixTask prefix_task(const Episode& episode, int n) {
  const auto total = static_cast<int>(episode.x.rows());
  if (n < 0 || n >= total)
    throw InputDomainError("prefix_task: n out of range [0, " + std::to_string(total - 1) +
                           "]");
  PrefixTask t;
  t.demos_x = episode.x.topRows(n);
  t.demos_y = episode.y_noisy.head(n);
  t.query = episode.x.row(n).transpose();
  t.target = episode.y_noisy(n);
  return t;
}

namespace {

ordered_json config_to_json(const GenConfig& c) {
  ordered_json j;
  j["kernel"] = format_kernel_record(c.kernel);
  j["noise_variance"] = c.noise.noise_variance;
  j["dims"] = c.dims;
  j["n_functions"] = c.n_functions;
  j["n_points"] = c.n_points;
  j["input_low"] = c.input_low;
  j["input_high"] = c.input_high;
  j["seed"] = c.seed;
  return j;
}

GenConfig config_from_json(const ordered_json& j) {
  GenConfig c;
  c.kernel = parse_kernel_record(j.at("kernel").get<std::string>());
  c.noise.noise_variance = j.at("noise_variance").get<double>();
  c.dims = j.at("dims").get<int>();
  c.n_functions = j.at("n_functions").get<int>();
  c.n_points = j.at("n_points").get<int>();
  c.input_low = j.at("input_low").get<double>();
  c.input_high = j.at("input_high").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

}  // namespace

std::string taskset_to_string(const TaskSet& ts) {
  std::string out;
  ordered_json header;
  header["format_version"] = ts.format_version;
  header["config"] = config_to_json(ts.config);
  out += header.dump();
  out += '\n';

  for (const auto& ep : ts.episodes) {
    ordered_json j;
    j["id"] = ep.episode_id;
    j["kernel"] = format_kernel_record(ep.kernel);
    ordered_json points = ordered_json::array();
    for (Eigen::Index i = 0; i < ep.x.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index c = 0; c < ep.x.cols(); ++c) row.push_back(ep.x(i, c));
      row.push_back(ep.y_clean(i));
      row.push_back(ep.y_noisy(i));
      points.push_back(std::move(row));
    }
    j["points"] = std::move(points);
    out += j.dump();
    out += '\n';
  }
  return out;
}

TaskSet taskset_from_stream(std::istream& in) {
  TaskSet ts;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw DataError("taskset: empty file");
  ++lineno;
  try {
    const auto header = ordered_json::parse(line);
    ts.format_version = header.at("format_version").get<int>();
    if (ts.format_version != kTaskSetFormatVersion)
      throw DataError("taskset: unsupported format_version " +
                      std::to_string(ts.format_version));
    ts.config = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("taskset line 1: " + std::string(e.what()));
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      Episode ep;
      ep.episode_id = j.at("id").get<std::string>();
      ep.kernel = parse_kernel_record(j.at("kernel").get<std::string>());
      const auto& points = j.at("points");
      const auto n = static_cast<Eigen::Index>(points.size());
      ep.x.resize(n, ts.config.dims);
      ep.y_clean.resize(n);
      ep.y_noisy.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = points.at(i);
        if (static_cast<int>(row.size()) != ts.config.dims + 2)
          throw DataError("taskset line " + std::to_string(lineno) +
                          ": point row has wrong arity");
        for (int c = 0; c < ts.config.dims; ++c) ep.x(i, c) = row.at(c).get<double>();
        ep.y_clean(i) = row.at(ts.config.dims).get<double>();
        ep.y_noisy(i) = row.at(ts.config.dims + 1).get<double>();
      }
      ts.episodes.push_back(std::move(ep));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("taskset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ts;
}

void save_taskset(const TaskSet& ts, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << taskset_to_string(ts);
  if (!out) throw DataError("write failed: " + path);
}

TaskSet load_taskset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  return taskset_from_stream(in);
}

}  // namespace gpicl
