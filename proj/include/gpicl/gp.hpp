#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <atomic>
#include <cstdint>

#include "gpicl/kernels.hpp"
#include "gpicl/rng.hpp"

namespace gpicl {

struct PosteriorPredictive {
  double mean = 0.0;
  double variance_f = 0.0;  // posterior variance of the latent f*
  double variance_y = 0.0;  // variance_f + noise_variance
};

// Round-off can push variance_f slightly negative near interpolation; such
// values clamp to 0 and tick this process-wide counter.
inline std::atomic<std::uint64_t>& negative_variance_clamps() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

namespace detail {
inline double clamp_variance(double v) {
  if (v < 0.0) {
    negative_variance_clamps().fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  return v;
}
}  // namespace detail

// Exact GP posterior predictive at a single query. X holds one demo per row;
// n = 0 returns the prior. Solves through a Cholesky factor of
// k(X,X) + noise * I; never forms an inverse.
template <class DX, class DY, class DQ>
PosteriorPredictive posterior_predictive(const KernelSpec& spec, const NoiseSpec& noise,
                                         const Eigen::MatrixBase<DX>& X,
                                         const Eigen::MatrixBase<DY>& y,
                                         const Eigen::MatrixBase<DQ>& query) {
  spec.validate();
  noise.validate();
  const Eigen::Index n = X.rows();
  if (y.size() != n) throw InputDomainError("posterior_predictive: |y| != rows(X)");
  if (n == 0)
    return {0.0, spec.output_variance, spec.output_variance + noise.noise_variance};
  if (X.cols() != query.size())
    throw InputDomainError("posterior_predictive: demo/query dimension mismatch");

  const auto K = gram_matrix(spec, noise, X.derived());
  const auto factor = jittered_llt(K, spec.output_variance);
  const Eigen::VectorXd kstar = cross_covariance(spec, X.derived(), query.derived());
  const Eigen::VectorXd alpha = factor.llt.solve(y.derived());
  const Eigen::VectorXd w = factor.llt.matrixL().solve(kstar);

  PosteriorPredictive out;
  out.mean = kstar.dot(alpha);
  out.variance_f = detail::clamp_variance(spec.output_variance - w.squaredNorm());
  out.variance_y = out.variance_f + noise.noise_variance;
  return out;
}

// One draw from the zero-mean prior at the rows of X: L * z with z standard
// normal and L the (jittered) Cholesky factor of the noise-free Gram matrix.
template <class DX>
Eigen::VectorXd sample_function(const KernelSpec& spec, const Eigen::MatrixBase<DX>& X,
                                std::uint64_t seed) {
  spec.validate();
  const Eigen::Index n = X.rows();
  if (n < 1) throw InputDomainError("sample_function: need at least one point");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if ((X.row(i) - X.row(j)).norm() == 0.0)
        throw InputDomainError("sample_function: duplicate points (degenerate Gram)");

  const auto K = gram_matrix(spec, NoiseSpec{0.0}, X.derived());
  const auto factor = jittered_llt(K, spec.output_variance);
  Rng rng(seed);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  return Eigen::MatrixXd(factor.llt.matrixL()) * z;
}

// Posterior predictives for every prefix of one episode's demo stream.
// Factorizes the full Gram once; the leading n-block of its Cholesky factor
// is exactly the factor of the first n demos, so each prefix query costs
// O(n^2) instead of O(n^3). Identical math to posterior_predictive.
class PrefixPosterior {
 public:
  PrefixPosterior(const KernelSpec& spec, const NoiseSpec& noise, Eigen::MatrixXd X,
                  Eigen::VectorXd y)
      : spec_(spec), noise_(noise), x_(std::move(X)), y_(std::move(y)) {
    spec_.validate();
    noise_.validate();
    if (y_.size() != x_.rows()) throw InputDomainError("PrefixPosterior: |y| != rows(X)");
    if (x_.rows() > 0) {
      const auto K = gram_matrix(spec_, noise_, x_);
      chol_ = Eigen::MatrixXd(jittered_llt(K, spec_.output_variance).llt.matrixL());
    }
  }

  template <class DQ>
  PosteriorPredictive at(Eigen::Index n, const Eigen::MatrixBase<DQ>& query) const {
    if (n < 0 || n > x_.rows()) throw InputDomainError("PrefixPosterior: n out of range");
    if (n == 0)
      return {0.0, spec_.output_variance, spec_.output_variance + noise_.noise_variance};
    const auto L = chol_.topLeftCorner(n, n).template triangularView<Eigen::Lower>();
    const Eigen::VectorXd kstar = cross_covariance(spec_, x_.topRows(n), query.derived());
    const Eigen::VectorXd w = L.solve(kstar);
    const Eigen::VectorXd u = L.solve(y_.head(n));

    PosteriorPredictive out;
    out.mean = w.dot(u);
    out.variance_f = detail::clamp_variance(spec_.output_variance - w.squaredNorm());
    out.variance_y = out.variance_f + noise_.noise_variance;
    return out;
  }

 private:
  KernelSpec spec_;
  NoiseSpec noise_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd chol_;
};

}  // namespace gpicl
