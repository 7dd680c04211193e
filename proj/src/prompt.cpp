#include "gpicl/prompt.hpp"

#include <cstdio>
#include <cstdlib>

#include "gpicl/errors.hpp"

namespace gpicl {

namespace {

constexpr const char* kPreamble1d =
    "You are a number predictor. I will give you a number, X, and then you need to "
    "predict a new number, Y. There may be noise in the true prediction. Your task is "
    "to provide your best estimate for Y. Provide that and only that, without any "
    "additional text.";

// The multi-dimensional preamble's "you need to the output value" reads oddly
// but is frozen: downstream goldens and endpoint transcripts byte-compare it.
constexpr const char* kPreambleNd =
    "You are a function approximator. I will give you a set of input variables (X), "
    "and then you need to the output value (Y). There may be noise in the true "
    "prediction. Your task is to provide your best estimate for Y. Provide that and "
    "only that, without any additional text.";

void append_number(std::string& out, double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  out += buf;
}

void append_x_fields(std::string& out, const Eigen::VectorXd& x, int dims, int decimals) {
  if (dims == 1) {
    out += "X: ";
    append_number(out, x(0), decimals);
    return;
  }
  for (int c = 0; c < dims; ++c) {
    if (c > 0) out += ", ";
    out += 'X';
    out += std::to_string(c);
    out += ": ";
    append_number(out, x(c), decimals);
  }
}

}  // namespace

PromptText render_prompt(const Eigen::MatrixXd& demos_x, const Eigen::VectorXd& demos_y,
                         const Eigen::VectorXd& query, int dims, int decimals) {
  if (dims < 1 || dims > 4) throw InputDomainError("render_prompt: dims must be in 1..4");
  if (decimals < 0) throw InputDomainError("render_prompt: decimals must be >= 0");
  if (query.size() != dims) throw InputDomainError("render_prompt: query/dims mismatch");
  const auto n = demos_x.rows();
  if (demos_y.size() != n) throw InputDomainError("render_prompt: |demos_y| != rows(demos_x)");
  if (n > 0 && demos_x.cols() != dims)
    throw InputDomainError("render_prompt: demos/dims mismatch");

  PromptText p;
  p.n_demos = static_cast<int>(n);
  p.dims = dims;
  p.text = dims == 1 ? kPreamble1d : kPreambleNd;
  for (Eigen::Index i = 0; i < n; ++i) {
    p.text += '\n';
    append_x_fields(p.text, demos_x.row(i).transpose(), dims, decimals);
    p.text += ", Y: ";
    append_number(p.text, demos_y(i), decimals);
  }
  p.text += '\n';
  append_x_fields(p.text, query, dims, decimals);
  p.text += ", Y:";
  return p;
}

ParsedPrediction parse_prediction(const std::string& completion) {
  // Single left-to-right scan for the last maximal numeric literal.
  ParsedPrediction out;
  const std::size_t len = completion.size();
  std::size_t i = 0;
  auto digit = [&](std::size_t k) {
    return k < len && completion[k] >= '0' && completion[k] <= '9';
  };
  while (i < len) {
    std::size_t j = i;
    if (completion[j] == '+' || completion[j] == '-') ++j;
    std::size_t mantissa = j;
    while (digit(mantissa)) ++mantissa;
    bool has_int = mantissa > j;
    std::size_t frac = mantissa;
    if (frac < len && completion[frac] == '.') {
      ++frac;
      while (digit(frac)) ++frac;
    }
    const bool has_digits = has_int || frac > mantissa + 1;
    if (!has_digits) {
      ++i;
      continue;
    }
    std::size_t end = frac;
    if (end < len && (completion[end] == 'e' || completion[end] == 'E')) {
      std::size_t ex = end + 1;
      if (ex < len && (completion[ex] == '+' || completion[ex] == '-')) ++ex;
      if (digit(ex)) {
        while (digit(ex)) ++ex;
        end = ex;
      }
    }
    out.matched_span = {i, end};
    i = end;
  }
  if (out.matched_span) {
    const auto [b, e] = *out.matched_span;
    out.value = std::strtod(completion.substr(b, e - b).c_str(), nullptr);
  }
  return out;
}

}  // namespace gpicl
