#pragma once

#include <cstdint>
#include <memory>

#include "streamlda/baselines.hpp"
#include "streamlda/class_means.hpp"
#include "streamlda/learner.hpp"
#include "streamlda/rng.hpp"
#include "streamlda/slda_model.hpp"

namespace streamlda {

/// Streaming LDA under the common learner interface.
/// Memory accounting: 4 * (K*d + d*d + K) (means, covariance, counts).
class SldaLearner : public StreamingLearner {
 public:
  SldaLearner(int dim, int num_classes, CovarianceMode mode, CovarianceInit cov_init,
              ShrinkageConfig shrinkage = {});

  std::string name() const override;
  void base_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                std::span<const std::int32_t> labels) override;
  void learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) override;
  std::unique_ptr<Predictor> snapshot() override;
  std::uint64_t memory_bytes() const override;
  std::vector<std::uint8_t> state_bytes() const override;

  const SldaModel& model() const { return model_; }

 private:
  SldaModel model_;
};

/// Prototype-rehearsal baseline: per-class merge buffer feeding one SGD step
/// per streamed sample. Memory accounting: 4 * (P*(d+1) + K*d + K) where P
/// is the number of stored prototypes (vectors plus counts) and the readout
/// holds K*d weights and K biases.
class ExStreamLearner : public StreamingLearner {
 public:
  ExStreamLearner(int dim, int num_classes, int capacity_per_class, SgdOptions sgd,
                  int batch_cap, std::uint64_t seed);

  std::string name() const override { return "exstream"; }
  void learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) override;
  std::unique_ptr<Predictor> snapshot() override;
  std::uint64_t memory_bytes() const override;
  std::vector<std::uint8_t> state_bytes() const override;

  const PrototypeBuffer& buffer() const { return buffer_; }
  const SoftmaxReadout& readout() const { return readout_; }

 private:
  PrototypeBuffer buffer_;
  SoftmaxReadout readout_;
  Rng rng_;
  int batch_cap_;
  std::int64_t total_learned_ = 0;
};

/// Pure streaming fine-tuning of the softmax readout, one sample per step.
/// Memory accounting: 4 * (K*d + K).
class FinetuneLearner : public StreamingLearner {
 public:
  FinetuneLearner(int dim, int num_classes, SgdOptions sgd);

  std::string name() const override { return "finetune"; }
  void learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) override;
  std::unique_ptr<Predictor> snapshot() override;
  std::uint64_t memory_bytes() const override;
  std::vector<std::uint8_t> state_bytes() const override;

  const SoftmaxReadout& readout() const { return readout_; }

 private:
  SoftmaxReadout readout_;
  std::int64_t total_learned_ = 0;
};

/// Nearest-class-mean baseline. Memory accounting: 4 * (K*d + K).
class NcmLearner : public StreamingLearner {
 public:
  NcmLearner(int dim, int num_classes);

  std::string name() const override { return "ncm"; }
  void learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) override;
  std::unique_ptr<Predictor> snapshot() override;
  std::uint64_t memory_bytes() const override;
  std::vector<std::uint8_t> state_bytes() const override;

  const ClassMeans& means() const { return means_; }

 private:
  ClassMeans means_;
};

}  // namespace streamlda
