#include "gpicl/kernels.hpp"

#include <cstdio>
#include <cstdlib>

namespace gpicl {

std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string format_kernel_record(const KernelSpec& spec) {
  spec.validate();
  std::string out = spec.family == KernelFamily::kMatern ? "matern," : "se,";
  if (spec.family == KernelFamily::kMatern) out += format_double(spec.nu);
  out += ',';
  out += format_double(spec.lengthscale);
  out += ',';
  out += format_double(spec.output_variance);
  return out;
}

KernelSpec parse_kernel_record(const std::string& record) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : record) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  if (fields.size() != 4)
    throw InputDomainError("kernel record needs 4 comma-separated fields: " + record);

  auto num = [&](const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw InputDomainError("bad numeric field '" + s + "' in kernel record: " + record);
    return v;
  };

  KernelSpec spec;
  if (fields[0] == "matern") {
    spec.family = KernelFamily::kMatern;
    spec.nu = num(fields[1]);
  } else if (fields[0] == "se") {
    spec.family = KernelFamily::kSquaredExponential;
    if (!fields[1].empty())
      throw InputDomainError("se kernel record must leave nu empty: " + record);
  } else {
    throw InputDomainError("unknown kernel family '" + fields[0] + "' in record: " + record);
  }
  spec.lengthscale = num(fields[2]);
  spec.output_variance = num(fields[3]);
  spec.validate();
  return spec;
}

}  // namespace gpicl
