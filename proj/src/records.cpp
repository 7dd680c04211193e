#include "gpicl/records.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "gpicl/errors.hpp"

namespace gpicl {

using ordered_json = nlohmann::ordered_json;

double PredictionRecord::abs_error() const {
  if (!y_hat) throw InputDomainError("abs_error: record has no y_hat");
  return std::abs(*y_hat - y_target);
}

std::string record_to_line(const PredictionRecord& r) {
  ordered_json j;
  j["predictor_id"] = r.predictor_id;
  j["episode_id"] = r.episode_id;
  j["n"] = r.n;
  ordered_json xs = ordered_json::array();
  for (Eigen::Index i = 0; i < r.x_star.size(); ++i) xs.push_back(r.x_star(i));
  j["x_star"] = std::move(xs);
  if (r.y_hat)
    j["y_hat"] = *r.y_hat;
  else
    j["y_hat"] = nullptr;
  j["y_target"] = r.y_target;
  j["raw_text"] = r.raw_text;
  if (r.error)
    j["error"] = *r.error;
  else
    j["error"] = nullptr;
  return j.dump();
}

PredictionRecord record_from_line(const std::string& line) {
  const auto j = ordered_json::parse(line);
  PredictionRecord r;
  r.predictor_id = j.at("predictor_id").get<std::string>();
  r.episode_id = j.at("episode_id").get<std::string>();
  r.n = j.at("n").get<int>();
  const auto& xs = j.at("x_star");
  r.x_star.resize(static_cast<Eigen::Index>(xs.size()));
  for (Eigen::Index i = 0; i < r.x_star.size(); ++i) r.x_star(i) = xs.at(i).get<double>();
  if (!j.at("y_hat").is_null()) r.y_hat = j.at("y_hat").get<double>();
  r.y_target = j.at("y_target").get<double>();
  r.raw_text = j.at("raw_text").get<std::string>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

std::vector<PredictionRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("records " + path + " line " + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return out;
}

void save_records(const std::vector<PredictionRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto& r : records) out << record_to_line(r) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace gpicl
