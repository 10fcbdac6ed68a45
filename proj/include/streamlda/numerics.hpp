#pragma once

#include <Eigen/Dense>

#include "streamlda/errors.hpp"

namespace streamlda {

/// Shrinkage parameter for the regularized precision matrix.
/// Must lie in (0, 1]; epsilon > 0 keeps (1-eps)*Sigma + eps*I positive
/// definite for any positive semidefinite Sigma.
struct ShrinkageConfig {
  double epsilon = 1e-4;
};

/// Lambda = [(1-eps)*Sigma + eps*I]^{-1}, computed by Cholesky factorization
/// of the regularized matrix followed by a triangular solve against I.
/// The result is symmetrized exactly.
///
/// Throws RegularizedNotSpd if the factorization fails or Sigma is not
/// symmetric (either signals eps too small or a corrupted Sigma).
Eigen::MatrixXd shrinkage_precision(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                    const ShrinkageConfig& cfg);

/// Solves a * x = rhs for SPD a via Cholesky; rhs may be a vector (one
/// column) or a matrix of stacked right-hand sides. Throws NotSpd on
/// failure.
Eigen::MatrixXd spd_solve(const Eigen::Ref<const Eigen::MatrixXd>& a,
                          const Eigen::Ref<const Eigen::MatrixXd>& rhs);

/// Oracle Approximating Shrinkage covariance estimate over sample rows.
///
/// S is the empirical covariance with divisor n (not n-1); the estimate is
///   (1 - rho) * S + rho * (tr(S)/d) * I
/// with
///   rho = min(1, [(1 - 2/d) tr(S^2) + tr(S)^2] /
///               [(n + 1 - 2/d) (tr(S^2) - tr(S)^2 / d)]).
/// rho is clamped to [0, 1]; a denominator <= 0 (e.g. S a multiple of I)
/// maps to rho = 1.
///
/// Throws InsufficientSamples if fewer than two rows are supplied.
Eigen::MatrixXd oas_covariance(const Eigen::Ref<const Eigen::MatrixXd>& samples);

/// Exact symmetrization, 0.5 * (m + m^T).
inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

/// True when max |m - m^T| entry is zero.
bool is_exactly_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace streamlda
