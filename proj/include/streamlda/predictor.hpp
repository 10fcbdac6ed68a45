#pragma once

#include <Eigen/Dense>
#include <vector>

namespace streamlda {

struct ScoredLabel {
  int label;
  double score;
};

/// Immutable ranked classifier; safe to share across threads.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<ScoredLabel> predict_ranked(
      const Eigen::Ref<const Eigen::VectorXd>& z, int top_k) const = 0;
};

}  // namespace streamlda
