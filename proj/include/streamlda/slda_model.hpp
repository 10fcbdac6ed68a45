#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamlda/class_means.hpp"
#include "streamlda/numerics.hpp"
#include "streamlda/predictor.hpp"

namespace streamlda {

/// Whether the shared covariance is frozen after initialization or updated
/// online per learned sample.
enum class CovarianceMode : std::uint8_t { kFixed = 0, kPlastic = 1 };

/// How the shared covariance is seeded.
enum class CovarianceInit : std::uint8_t {
  kFromBank = 0,    // OAS estimate over base-initialization features
  kOnesMatrix = 1,  // every entry 1.0 (rank-1 PSD)
  kZero = 2,
};

/// Immutable readout snapshot; freely shareable across threads.
class LinearPredictor : public Predictor {
 public:
  LinearPredictor(Eigen::MatrixXd weights, Eigen::VectorXd bias,
                  std::vector<int> seen_classes, std::int64_t built_at);

  /// Labels ranked by W z + b descending, ties to the lowest class index.
  /// Only seen classes appear; top_k is clipped to the number of seen classes.
  std::vector<ScoredLabel> predict_ranked(const Eigen::Ref<const Eigen::VectorXd>& z,
                                          int top_k) const override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  const std::vector<int>& seen_classes() const { return seen_classes_; }
  std::int64_t built_at() const { return built_at_; }

 private:
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  std::vector<int> seen_classes_;
  std::int64_t built_at_;
};

/// Streaming LDA classifier head: per-class running means plus one shared
/// covariance, classifying with the linear readout
///   scores = W z + b,  w_k = Lambda mu_k,  b_k = -1/2 mu_k . Lambda mu_k,
/// where Lambda is the shrinkage-regularized precision of the covariance.
///
/// Single-writer: learn/refresh must be externally serialized. snapshot()
/// yields an immutable predictor for concurrent use.
class SldaModel {
 public:
  SldaModel(int dim, int num_classes, CovarianceInit cov_init,
            CovarianceMode mode, ShrinkageConfig shrinkage = {});

  /// FromBank initialization with the covariance seeded immediately from the
  /// given sample rows (OAS estimate, t = number of rows).
  static SldaModel with_base_covariance(
      int dim, int num_classes, const Eigen::Ref<const Eigen::MatrixXd>& cov_samples,
      CovarianceMode mode, ShrinkageConfig shrinkage = {});

  /// Rebuilds a model from raw state. Used by the snapshot loader and by
  /// tests that need arbitrary (means, Sigma, t) configurations.
  static SldaModel from_state(Eigen::MatrixXd means, std::vector<std::int64_t> counts,
                              Eigen::MatrixXd sigma, std::int64_t time_step,
                              CovarianceMode mode, ShrinkageConfig shrinkage);

  /// Seeds means and counts from labeled base features, one observe per row.
  /// When the covariance policy is FromBank, Sigma is set once via OAS over
  /// all base rows (not per-sample) and t starts at the number of base rows;
  /// otherwise each row goes through the full learn path. Empty input is a
  /// no-op.
  void base_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                std::span<const std::int32_t> labels);

  /// One streaming update. In plastic mode the covariance moves first, using
  /// the pre-update class mean:
  ///   Delta_t  = t (z - mu_y)(z - mu_y)^T / (t + 1)
  ///   Sigma    <- (t Sigma + Delta_t) / (t + 1),  t <- t + 1
  /// then the mean and count update follows.
  void learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label);

  /// Rebuilds W and b from the current means and covariance. In fixed mode
  /// the precision is computed once and cached; in plastic mode it is
  /// recomputed whenever the covariance has changed. Unseen classes get a
  /// -inf bias so they can never outrank a seen class.
  void refresh_readout();

  /// Ranked prediction; refreshes the readout first if it is stale.
  std::vector<ScoredLabel> predict(const Eigen::Ref<const Eigen::VectorXd>& z,
                                   int top_k);

  /// Immutable snapshot of the current readout (refreshes if stale).
  LinearPredictor snapshot();

  int dim() const { return class_means_.dim(); }
  int num_classes() const { return class_means_.num_classes(); }
  const ClassMeans& class_means() const { return class_means_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  std::int64_t time_step() const { return time_step_; }
  CovarianceMode mode() const { return mode_; }
  CovarianceInit cov_init() const { return cov_init_; }
  const ShrinkageConfig& shrinkage() const { return shrinkage_; }
  std::int64_t total_learned() const { return class_means_.total_count(); }
  std::vector<int> seen_classes() const { return class_means_.seen_classes(); }
  bool readout_stale() const { return readout_stale_; }
  std::int64_t built_at() const { return built_at_; }
  const Eigen::MatrixXd& readout_weights() const { return weights_; }
  const Eigen::VectorXd& readout_bias() const { return bias_; }

  /// Storage accounting at 32-bit precision: 4 * (K*d + d*d + K) bytes for
  /// means, covariance and counts. Internal arithmetic stays 64-bit.
  std::uint64_t memory_bytes() const;

  /// Learned-state container: magic, version byte, mode, d, K, epsilon, t,
  /// counts as 64-bit ints, means and Sigma as 64-bit little-endian reals.
  /// Round trips are bit-exact. The readout is derived state and is not
  /// stored; loaded models refresh lazily.
  std::vector<std::uint8_t> serialize() const;
  static SldaModel deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static SldaModel load(const std::string& path);

 private:
  void mark_sigma_changed();
  void observe_mean_only(const Eigen::Ref<const Eigen::VectorXd>& z, int label);

  ClassMeans class_means_;
  Eigen::MatrixXd sigma_;
  std::int64_t time_step_ = 0;
  CovarianceMode mode_;
  CovarianceInit cov_init_;
  ShrinkageConfig shrinkage_;

  // Derived readout state; rebuilt on demand, never serialized.
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  std::int64_t built_at_ = -1;
  bool readout_stale_ = true;
  Eigen::MatrixXd precision_cache_;
  bool precision_valid_ = false;
};

}  // namespace streamlda
