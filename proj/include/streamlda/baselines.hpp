#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "streamlda/feature_bank.hpp"
#include "streamlda/rng.hpp"

namespace streamlda {

struct SgdOptions {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// Linear softmax classifier trained by SGD with momentum.
///
/// One step over a batch B:
///   p_i = softmax(W z_i + b)
///   g_W = (1/|B|) sum_i (p_i - onehot(y_i)) z_i^T + weight_decay * W
///   g_b = (1/|B|) sum_i (p_i - onehot(y_i))
///   v <- momentum * v + g,  params <- params - learning_rate * v
/// Weight decay applies to W only, never to the bias.
class SoftmaxReadout {
 public:
  SoftmaxReadout(int dim, int num_classes, SgdOptions options);

  void sgd_step(const Eigen::Ref<const Eigen::MatrixXd>& batch_features,
                std::span<const std::int32_t> batch_labels);

  Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  int dim() const { return static_cast<int>(weights_.cols()); }
  int num_classes() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  const Eigen::MatrixXd& velocity_weights() const { return velocity_weights_; }
  const Eigen::VectorXd& velocity_bias() const { return velocity_bias_; }
  const SgdOptions& options() const { return options_; }

 private:
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  Eigen::MatrixXd velocity_weights_;
  Eigen::VectorXd velocity_bias_;
  SgdOptions options_;
};

struct Prototype {
  Eigen::VectorXd vector;
  std::int64_t count;  // number of original samples merged into this entry
  int label;
};

/// Capacity-bounded per-class prototype store. Inserting past capacity
/// merges the two closest prototypes of that class (count-weighted mean), so
/// the count-weighted centroid of a class buffer always equals the running
/// mean of everything inserted for that class.
class PrototypeBuffer {
 public:
  PrototypeBuffer(int dim, int num_classes, int capacity_per_class);

  /// Appends z with count 1; if the class buffer then exceeds capacity,
  /// replaces the pair (p, q) with the smallest Euclidean distance by their
  /// count-weighted mean. Distance ties pick the lexicographically lowest
  /// insertion-order index pair; the merged prototype takes the earlier slot.
  void insert(const Eigen::Ref<const Eigen::VectorXd>& z, int label);

  const std::vector<Prototype>& class_buffer(int label) const;
  std::int64_t total_prototypes() const;

  /// All prototypes in deterministic order: class-ascending, insertion order
  /// within each class.
  std::vector<const Prototype*> flattened() const;

  int dim() const { return dim_; }
  int num_classes() const { return static_cast<int>(buffers_.size()); }
  int capacity_per_class() const { return capacity_per_class_; }

 private:
  int dim_;
  int capacity_per_class_;
  std::vector<std::vector<Prototype>> buffers_;
};

/// One streaming step of the prototype-rehearsal baseline: insert (z, y)
/// into the buffer, then run exactly one SGD step on a batch drawn from the
/// buffer. The batch is every prototype when the buffer holds at most
/// batch_cap of them, otherwise a uniform sample of batch_cap prototypes
/// without replacement drawn from rng.
void exstream_learn(PrototypeBuffer& buffer, SoftmaxReadout& readout, Rng& rng,
                    const Eigen::Ref<const Eigen::VectorXd>& z, int label,
                    int batch_cap);

/// Pure streaming fine-tuning: one SGD step on the singleton batch {(z, y)}.
void finetune_learn(SoftmaxReadout& readout,
                    const Eigen::Ref<const Eigen::VectorXd>& z, int label);

/// Offline upper-bound readout: epochs full passes of minibatch SGD over
/// seeded shuffles of the bank. Deterministic given the seed; epochs = 0
/// returns the zero readout untouched.
SoftmaxReadout offline_softmax_fit(const FeatureBank& bank, int epochs,
                                   const SgdOptions& options, int batch_size,
                                   std::uint64_t seed);

}  // namespace streamlda
