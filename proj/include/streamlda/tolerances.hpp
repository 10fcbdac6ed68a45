#pragma once

namespace streamlda::tol {

// Contract tolerances. Library code and the test suites reference these
// constants instead of re-stating literals.

/// Relative Frobenius residual allowed for ((1-eps)*Sigma + eps*I) * Lambda vs I.
inline constexpr double kPrecisionResidual = 1e-8;

/// Relative residual allowed for SPD solves, ||A*x - rhs|| / ||rhs||.
inline constexpr double kSpdSolveResidual = 1e-10;

/// Relative error allowed between streamed class means and batch means.
inline constexpr double kMeanEquivalence = 1e-9;

/// Entrywise tolerance for oracle transcriptions (OAS, covariance update).
inline constexpr double kOracleEntrywise = 1e-12;

/// Slack on the smallest eigenvalue of an OAS estimate: >= -slack * tr(S)/d.
inline constexpr double kPsdEigenvalueSlack = 1e-10;

/// Max relative error between analytic gradients and central finite differences.
inline constexpr double kGradientCheck = 1e-4;

/// Count-weighted buffer centroid vs running class mean.
inline constexpr double kBufferCentroid = 1e-9;

}  // namespace streamlda::tol
