#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gpicl/kernels.hpp"

namespace gpicl {

struct GenConfig {
  KernelSpec kernel;
  NoiseSpec noise;
  int dims = 1;
  int n_functions = 200;
  int n_points = 50;
  double input_low = 0.0;
  double input_high = 29.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const GenConfig&) const = default;
};

struct Episode {
  std::string episode_id;
  KernelSpec kernel;
  Eigen::MatrixXd x;         // n_points x dims, row order fixed at generation
  Eigen::VectorXd y_clean;
  Eigen::VectorXd y_noisy;
};

struct TaskSet {
  GenConfig config;
  int format_version = 1;
  std::vector<Episode> episodes;

  const Episode& episode_by_id(const std::string& id) const;
};

// One prediction task: the episode's first n points as demonstrations, point
// n as the query.
struct PrefixTask {
  Eigen::MatrixXd demos_x;  // n x dims
  Eigen::VectorXd demos_y;  // noisy outputs
  Eigen::VectorXd query;
  double target = 0.0;      // noisy output at the query
};

TaskSet generate_taskset(const GenConfig& config);
PrefixTask prefix_task(const Episode& episode, int n);

// Line-delimited text: a header line with config + format version, then one
// line per episode. Regenerating from the same config reproduces the bytes.
std::string taskset_to_string(const TaskSet& ts);
TaskSet taskset_from_stream(std::istream& in);
void save_taskset(const TaskSet& ts, const std::string& path);
TaskSet load_taskset(const std::string& path);

namespace detail {
// Replaces exact-duplicate rows by fresh uniform draws; attempt k draws from
// stream 8+k of the episode seed. Gives up after max_retries.
void resample_duplicates(Eigen::MatrixXd& x, std::uint64_t episode_seed, double lo,
                         double hi, int max_retries);
}  // namespace detail

}  // namespace gpicl
