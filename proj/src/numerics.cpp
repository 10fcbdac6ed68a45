#include "streamlda/numerics.hpp"

#include <algorithm>
#include <string>

namespace streamlda {

bool is_exactly_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) return false;
    }
  }
  return true;
}

Eigen::MatrixXd shrinkage_precision(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                    const ShrinkageConfig& cfg) {
  if (cfg.epsilon <= 0.0 || cfg.epsilon > 1.0) {
    throw RegularizedNotSpd("shrinkage epsilon must lie in (0, 1], got " +
                            std::to_string(cfg.epsilon));
  }
  if (!is_exactly_symmetric(sigma)) {
    throw RegularizedNotSpd("covariance matrix is not symmetric");
  }
  const Eigen::Index d = sigma.rows();
  Eigen::MatrixXd regularized =
      (1.0 - cfg.epsilon) * sigma +
      cfg.epsilon * Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(regularized);
  if (llt.info() != Eigen::Success) {
    throw RegularizedNotSpd(
        "Cholesky of (1-eps)*Sigma + eps*I failed; eps too small or Sigma corrupted");
  }
  Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
  return symmetrized(precision);
}

Eigen::MatrixXd spd_solve(const Eigen::Ref<const Eigen::MatrixXd>& a,
                          const Eigen::Ref<const Eigen::MatrixXd>& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotSpd("Cholesky factorization failed; matrix is not SPD");
  }
  return llt.solve(rhs);
}

Eigen::MatrixXd oas_covariance(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) {
    throw InsufficientSamples("OAS needs at least 2 samples, got " +
                              std::to_string(n));
  }
  const Eigen::VectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
  Eigen::MatrixXd s =
      symmetrized((centered.adjoint() * centered) / static_cast<double>(n));

  const double dim = static_cast<double>(d);
  const double trace_s = s.trace();
  // tr(S^2) == ||S||_F^2 for symmetric S.
  const double trace_s2 = s.squaredNorm();

  const double numerator = (1.0 - 2.0 / dim) * trace_s2 + trace_s * trace_s;
  const double denominator = (static_cast<double>(n) + 1.0 - 2.0 / dim) *
                             (trace_s2 - trace_s * trace_s / dim);
  const double rho =
      denominator <= 0.0 ? 1.0 : std::clamp(numerator / denominator, 0.0, 1.0);

  return (1.0 - rho) * s +
         rho * (trace_s / dim) * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace streamlda
