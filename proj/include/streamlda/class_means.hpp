#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "streamlda/errors.hpp"

namespace streamlda {

/// Per-class running means with exact integer counts.
///
/// means().row(k) tracks the arithmetic mean of every vector observed with
/// label k; counts()[k] is the exact number of observations.
class ClassMeans {
 public:
  ClassMeans(int dim, int num_classes);

  /// Restores a tracker from stored state; counts must have one entry per
  /// row of means and every count must be non-negative.
  static ClassMeans from_state(Eigen::MatrixXd means, std::vector<std::int64_t> counts);

  /// mu_k <- (c_k * mu_k + z) / (c_k + 1);  c_k <- c_k + 1.
  void observe(const Eigen::Ref<const Eigen::VectorXd>& z, int label);

  int dim() const { return static_cast<int>(means_.cols()); }
  int num_classes() const { return static_cast<int>(means_.rows()); }
  const Eigen::MatrixXd& means() const { return means_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total_count() const { return total_count_; }

  bool seen(int label) const { return counts_[static_cast<std::size_t>(label)] > 0; }
  std::vector<int> seen_classes() const;
  int num_seen() const;

  void check_label(int label) const;
  void check_dim(Eigen::Index zdim) const;

 private:
  Eigen::MatrixXd means_;  // K x d
  std::vector<std::int64_t> counts_;
  std::int64_t total_count_ = 0;
};

/// Nearest-class-mean label: argmin over seen classes of ||z - mu_k||,
/// ties to the lowest class index. Throws NoClassesSeen when nothing has
/// been observed yet.
int ncm_predict(const ClassMeans& means, const Eigen::Ref<const Eigen::VectorXd>& z);

}  // namespace streamlda
