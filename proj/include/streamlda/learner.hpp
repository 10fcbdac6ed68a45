#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "streamlda/predictor.hpp"

namespace streamlda {

/// Common face of every streaming method in the harness. Single-writer:
/// learn and snapshot must be externally serialized; the snapshot itself is
/// immutable and freely shareable.
class StreamingLearner {
 public:
  virtual ~StreamingLearner() = default;

  virtual std::string name() const = 0;

  /// Consumes the base-initialization prefix. Default: one learn call per
  /// row, in order. Methods with a dedicated warm-up path override this.
  virtual void base_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                        std::span<const std::int32_t> labels);

  virtual void learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) = 0;

  virtual std::unique_ptr<Predictor> snapshot() = 0;

  /// Storage accounting at 32-bit precision; the per-method formula is
  /// documented at each implementation.
  virtual std::uint64_t memory_bytes() const = 0;

  /// Serialization of the learned state only, excluding derived caches.
  /// Two learners with equal state_bytes behave identically; the evaluation
  /// suite uses this to prove that evaluating never mutates a learner.
  virtual std::vector<std::uint8_t> state_bytes() const = 0;
};

}  // namespace streamlda
