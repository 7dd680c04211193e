#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gpicl/errors.hpp"

namespace gpicl {

enum class KernelFamily { kMatern, kSquaredExponential };

// The squared-exponential exponent here is -delta^2 / (2*l), with the
// lengthscale unsquared in the denominator. That choice is deliberate and
// frozen (tests pin it); flip to false for the conventional
// -delta^2 / (2*l^2) form.
inline constexpr bool kSquaredExponentialUnsquaredLengthscale = true;

struct KernelSpec {
  KernelFamily family = KernelFamily::kSquaredExponential;
  double nu = 0.0;  // Matern smoothness, one of 0.5 / 1.5 / 2.5
  double lengthscale = 1.0;
  double output_variance = 1.0;

  void validate() const {
    if (!(lengthscale > 0.0))
      throw InputDomainError("KernelSpec: lengthscale must be > 0");
    if (!(output_variance > 0.0))
      throw InputDomainError("KernelSpec: output_variance must be > 0");
    if (family == KernelFamily::kMatern) {
      if (nu != 0.5 && nu != 1.5 && nu != 2.5)
        throw InputDomainError("KernelSpec: Matern nu must be 0.5, 1.5 or 2.5");
    } else if (nu != 0.0) {
      throw InputDomainError("KernelSpec: nu is Matern-only");
    }
  }

  bool operator==(const KernelSpec&) const = default;
};

struct NoiseSpec {
  double noise_variance = 0.0;

  void validate() const {
    if (!(noise_variance >= 0.0))
      throw InputDomainError("NoiseSpec: noise_variance must be >= 0");
  }

  bool operator==(const NoiseSpec&) const = default;
};

inline KernelSpec matern(double nu, double lengthscale, double output_variance) {
  KernelSpec s{KernelFamily::kMatern, nu, lengthscale, output_variance};
  s.validate();
  return s;
}

inline KernelSpec squared_exponential(double lengthscale, double output_variance) {
  KernelSpec s{KernelFamily::kSquaredExponential, 0.0, lengthscale, output_variance};
  s.validate();
  return s;
}

template <class Scalar>
Scalar kernel_value(const KernelSpec& spec, Scalar delta) {
  if (!(delta >= Scalar(0)))
    throw InputDomainError("kernel_value: delta must be >= 0");
  const Scalar s2 = Scalar(spec.output_variance);
  const Scalar r = delta / Scalar(spec.lengthscale);
  if (spec.family == KernelFamily::kSquaredExponential) {
    if (kSquaredExponentialUnsquaredLengthscale)
      return s2 * std::exp(-delta * delta / (Scalar(2) * Scalar(spec.lengthscale)));
    return s2 * std::exp(-r * r / Scalar(2));
  }
  // Matern half-integer closed forms.
  if (spec.nu == 0.5) return s2 * std::exp(-r);
  if (spec.nu == 1.5) {
    const Scalar a = std::sqrt(Scalar(3)) * r;
    return s2 * (Scalar(1) + a) * std::exp(-a);
  }
  const Scalar a = std::sqrt(Scalar(5)) * r;
  return s2 * (Scalar(1) + a + Scalar(5) * r * r / Scalar(3)) * std::exp(-a);
}

// X holds one point per row. Returns k(X, X) + noise_variance * I.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> gram_matrix(
    const KernelSpec& spec, const NoiseSpec& noise, const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  spec.validate();
  noise.validate();
  const Eigen::Index n = X.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = Scalar(spec.output_variance + noise.noise_variance);
    for (Eigen::Index j = 0; j < i; ++j) {
      const Scalar d = (X.row(i) - X.row(j)).norm();
      K(i, j) = K(j, i) = kernel_value(spec, d);
    }
  }
  return K;
}

// Covariances k(x_i, q) between each row of X and a single query point.
template <class DerivedX, class DerivedQ>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> cross_covariance(
    const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& X,
    const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = X.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k(i) = kernel_value(spec, Scalar((X.row(i) - q.transpose()).norm()));
  return k;
}

// Cholesky with escalating diagonal jitter: exact first, then 1e-9 * s2,
// then 1e-6 * s2. Throws with condition diagnostics when all three fail.
template <class Scalar>
struct JitteredFactor {
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt;
  Scalar jitter = Scalar(0);
};

template <class Derived>
JitteredFactor<typename Derived::Scalar> jittered_llt(const Eigen::MatrixBase<Derived>& K,
                                                      double output_variance) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Scalar jitters[] = {Scalar(0), Scalar(1e-9 * output_variance),
                            Scalar(1e-6 * output_variance)};
  JitteredFactor<Scalar> out;
  for (Scalar j : jitters) {
    Mat A = K;
    if (j > Scalar(0)) A.diagonal().array() += j;
    out.llt.compute(A);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = j;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "jittered_llt: factorization failed after jitter retries (n=" << K.rows()
      << ", diag min=" << K.diagonal().minCoeff() << ", diag max=" << K.diagonal().maxCoeff()
      << ", last jitter=" << jitters[2] << ")";
  throw NumericalError(msg.str());
}

// Text record, e.g. "matern,0.5,8,0.001" or "se,,8,0.001".
std::string format_kernel_record(const KernelSpec& spec);
KernelSpec parse_kernel_record(const std::string& record);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace gpicl
