#pragma once

// Reference implementations used to cross-check the library. Everything here
// is written as literal loop transcriptions of the defining formulas, on
// purpose: no Eigen reductions, no shared helpers with the library, and
// matrix inverses via eigendecomposition instead of Cholesky, so agreement
// between the two sides is meaningful.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace oracles {

// Empirical covariance with divisor n, then the OAS shrinkage formula.
inline Eigen::MatrixXd oas(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) mean(j) += samples(i, j);
  for (Eigen::Index j = 0; j < d; ++j) mean(j) /= static_cast<double>(n);

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b)
        s(a, b) += (samples(i, a) - mean(a)) * (samples(i, b) - mean(b));
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) s(a, b) /= static_cast<double>(n);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a + 1; b < d; ++b) {
      const double avg = 0.5 * (s(a, b) + s(b, a));
      s(a, b) = avg;
      s(b, a) = avg;
    }

  double tr = 0.0;
  for (Eigen::Index a = 0; a < d; ++a) tr += s(a, a);
  double tr2 = 0.0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) tr2 += s(a, b) * s(b, a);

  const double dd = static_cast<double>(d);
  const double num = (1.0 - 2.0 / dd) * tr2 + tr * tr;
  const double den =
      (static_cast<double>(n) + 1.0 - 2.0 / dd) * (tr2 - tr * tr / dd);
  double rho;
  if (den <= 0.0) {
    rho = 1.0;
  } else {
    rho = num / den;
    if (rho > 1.0) rho = 1.0;
    if (rho < 0.0) rho = 0.0;
  }

  Eigen::MatrixXd out(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      out(a, b) = (1.0 - rho) * s(a, b);
      if (a == b) out(a, b) += rho * (tr / dd);
    }
  return out;
}

// One streaming covariance step: (t*sigma + t*(z-mu)(z-mu)^T/(t+1)) / (t+1),
// with mu the pre-update class mean.
inline Eigen::MatrixXd plastic_step(const Eigen::MatrixXd& sigma,
                                    const Eigen::VectorXd& mu,
                                    const Eigen::VectorXd& z, std::int64_t t_int) {
  const Eigen::Index d = sigma.rows();
  const double t = static_cast<double>(t_int);
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      const double delta = t * (z(a) - mu(a)) * (z(b) - mu(b)) / (t + 1.0);
      out(a, b) = (t * sigma(a, b) + delta) / (t + 1.0);
    }
  return out;
}

struct DiscriminantResult {
  int argmax;
  double best_score;
  double margin;  // best score minus runner-up; infinite for one candidate
};

// Gaussian discriminant over the seen classes: score_k = z.Lmu_k - mu_k.Lmu_k/2
// with L = inverse of (1-eps)*sigma + eps*I taken through an
// eigendecomposition. Ties and near-ties show up as a small margin.
inline DiscriminantResult gaussian_argmax(const Eigen::MatrixXd& means,
                                          const std::vector<int>& seen,
                                          const Eigen::MatrixXd& sigma, double eps,
                                          const Eigen::VectorXd& z) {
  const Eigen::Index d = sigma.rows();
  Eigen::MatrixXd reg = (1.0 - eps) * sigma;
  for (Eigen::Index a = 0; a < d; ++a) reg(a, a) += eps;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reg);
  const Eigen::MatrixXd lambda = es.eigenvectors() *
                                 es.eigenvalues().cwiseInverse().asDiagonal() *
                                 es.eigenvectors().transpose();
  int best = -1;
  double best_score = 0.0;
  double second = 0.0;
  bool has_second = false;
  for (int k : seen) {
    const Eigen::VectorXd lmu = lambda * means.row(k).transpose();
    const double score = z.dot(lmu) - 0.5 * means.row(k).dot(lmu);
    if (best < 0 || score > best_score) {
      if (best >= 0) {
        second = best_score;
        has_second = true;
      }
      best = k;
      best_score = score;
    } else if (!has_second || score > second) {
      second = score;
      has_second = true;
    }
  }
  const double margin = has_second
                            ? best_score - second
                            : std::numeric_limits<double>::infinity();
  return {best, best_score, margin};
}

// Mean softmax cross-entropy plus (wd/2)*||W||_F^2; the target for
// finite-difference gradient checks of the SGD step.
inline double softmax_loss(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                           const Eigen::MatrixXd& batch,
                           std::span<const std::int32_t> labels, double wd) {
  const Eigen::Index n = batch.rows();
  const Eigen::Index k = w.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd logits = w * batch.row(i).transpose() + b;
    const double mx = logits.maxCoeff();
    double denom = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) denom += std::exp(logits(c) - mx);
    total += -(logits(labels[static_cast<std::size_t>(i)]) - mx - std::log(denom));
  }
  double reg = 0.0;
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) reg += w(r, c) * w(r, c);
  return total / static_cast<double>(n) + 0.5 * wd * reg;
}

// Per-class batch means and counts computed in one pass of plain loops.
inline void batch_class_means(const Eigen::MatrixXd& features,
                              std::span<const std::int32_t> labels, int num_classes,
                              Eigen::MatrixXd& means_out,
                              std::vector<std::int64_t>& counts_out) {
  const Eigen::Index d = features.cols();
  means_out = Eigen::MatrixXd::Zero(num_classes, d);
  counts_out.assign(static_cast<std::size_t>(num_classes), 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    counts_out[static_cast<std::size_t>(y)] += 1;
    for (Eigen::Index j = 0; j < d; ++j) means_out(y, j) += features(i, j);
  }
  for (int k = 0; k < num_classes; ++k) {
    if (counts_out[static_cast<std::size_t>(k)] == 0) continue;
    for (Eigen::Index j = 0; j < d; ++j) {
      means_out(k, j) /= static_cast<double>(counts_out[static_cast<std::size_t>(k)]);
    }
  }
}

}  // namespace oracles
