#include "streamlda/methods.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "streamlda/detail/binary_io.hpp"
#include "streamlda/errors.hpp"

namespace streamlda {

void StreamingLearner::base_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                std::span<const std::int32_t> labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw LengthMismatch("base fit: " + std::to_string(features.rows()) +
                         " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    learn(features.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
  }
}

namespace {

std::vector<int> all_classes(int num_classes) {
  std::vector<int> classes(static_cast<std::size_t>(num_classes));
  std::iota(classes.begin(), classes.end(), 0);
  return classes;
}

// Ranks seen classes by ascending Euclidean distance to their mean; the
// score is the negated distance so larger still means better.
class NcmPredictor : public Predictor {
 public:
  NcmPredictor(Eigen::MatrixXd means, std::vector<int> seen)
      : means_(std::move(means)), seen_(std::move(seen)) {}

  std::vector<ScoredLabel> predict_ranked(const Eigen::Ref<const Eigen::VectorXd>& z,
                                          int top_k) const override {
    if (z.size() != means_.cols()) {
      throw DimensionMismatch("predict: feature has size " + std::to_string(z.size()) +
                              ", means expect " + std::to_string(means_.cols()));
    }
    if (seen_.empty()) throw NoClassesSeen("predict: no classes seen yet");
    if (top_k < 1) throw ConfigError("predict: top_k must be at least 1");
    std::vector<ScoredLabel> ranked;
    ranked.reserve(seen_.size());
    for (int label : seen_) {
      ranked.push_back({label, -(z.transpose() - means_.row(label)).norm()});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
    ranked.resize(std::min<std::size_t>(static_cast<std::size_t>(top_k), ranked.size()));
    return ranked;
  }

 private:
  Eigen::MatrixXd means_;
  std::vector<int> seen_;
};

void write_readout_state(detail::ByteWriter& out, const SoftmaxReadout& readout) {
  const Eigen::MatrixXd* mats[] = {&readout.weights(), &readout.velocity_weights()};
  for (const Eigen::MatrixXd* m : mats) {
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) out.f64((*m)(r, c));
  }
  for (Eigen::Index i = 0; i < readout.bias().size(); ++i) out.f64(readout.bias()(i));
  for (Eigen::Index i = 0; i < readout.velocity_bias().size(); ++i)
    out.f64(readout.velocity_bias()(i));
}

std::uint64_t readout_accounting_bytes(int num_classes, int dim) {
  const auto k = static_cast<std::uint64_t>(num_classes);
  const auto d = static_cast<std::uint64_t>(dim);
  return 4 * (k * d + k);
}

}  // namespace

SldaLearner::SldaLearner(int dim, int num_classes, CovarianceMode mode,
                         CovarianceInit cov_init, ShrinkageConfig shrinkage)
    : model_(dim, num_classes, cov_init, mode, shrinkage) {}

std::string SldaLearner::name() const {
  return model_.mode() == CovarianceMode::kPlastic ? "slda_plastic" : "slda_fixed";
}

void SldaLearner::base_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const std::int32_t> labels) {
  model_.base_fit(features, labels);
}

void SldaLearner::learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  model_.learn(z, label);
}

std::unique_ptr<Predictor> SldaLearner::snapshot() {
  return std::make_unique<LinearPredictor>(model_.snapshot());
}

std::uint64_t SldaLearner::memory_bytes() const { return model_.memory_bytes(); }

std::vector<std::uint8_t> SldaLearner::state_bytes() const { return model_.serialize(); }

ExStreamLearner::ExStreamLearner(int dim, int num_classes, int capacity_per_class,
                                 SgdOptions sgd, int batch_cap, std::uint64_t seed)
    : buffer_(dim, num_classes, capacity_per_class),
      readout_(dim, num_classes, sgd),
      rng_(seed),
      batch_cap_(batch_cap) {
  if (batch_cap < 1) throw ConfigError("exstream batch cap must be at least 1");
}

void ExStreamLearner::learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  exstream_learn(buffer_, readout_, rng_, z, label, batch_cap_);
  total_learned_ += 1;
}

std::unique_ptr<Predictor> ExStreamLearner::snapshot() {
  return std::make_unique<LinearPredictor>(
      LinearPredictor(readout_.weights(), readout_.bias(),
                      all_classes(readout_.num_classes()), total_learned_));
}

std::uint64_t ExStreamLearner::memory_bytes() const {
  const auto protos = static_cast<std::uint64_t>(buffer_.total_prototypes());
  const auto d = static_cast<std::uint64_t>(buffer_.dim());
  return 4 * protos * (d + 1) +
         readout_accounting_bytes(readout_.num_classes(), readout_.dim());
}

std::vector<std::uint8_t> ExStreamLearner::state_bytes() const {
  detail::ByteWriter out;
  for (int k = 0; k < buffer_.num_classes(); ++k) {
    const auto& buf = buffer_.class_buffer(k);
    out.u32(static_cast<std::uint32_t>(buf.size()));
    for (const Prototype& proto : buf) {
      out.i64(proto.count);
      for (Eigen::Index j = 0; j < proto.vector.size(); ++j) out.f64(proto.vector(j));
    }
  }
  write_readout_state(out, readout_);
  return std::move(out).take();
}

FinetuneLearner::FinetuneLearner(int dim, int num_classes, SgdOptions sgd)
    : readout_(dim, num_classes, sgd) {}

void FinetuneLearner::learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  finetune_learn(readout_, z, label);
  total_learned_ += 1;
}

std::unique_ptr<Predictor> FinetuneLearner::snapshot() {
  return std::make_unique<LinearPredictor>(
      LinearPredictor(readout_.weights(), readout_.bias(),
                      all_classes(readout_.num_classes()), total_learned_));
}

std::uint64_t FinetuneLearner::memory_bytes() const {
  return readout_accounting_bytes(readout_.num_classes(), readout_.dim());
}

std::vector<std::uint8_t> FinetuneLearner::state_bytes() const {
  detail::ByteWriter out;
  write_readout_state(out, readout_);
  return std::move(out).take();
}

NcmLearner::NcmLearner(int dim, int num_classes) : means_(dim, num_classes) {}

void NcmLearner::learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  means_.observe(z, label);
}

std::unique_ptr<Predictor> NcmLearner::snapshot() {
  return std::make_unique<NcmPredictor>(means_.means(), means_.seen_classes());
}

std::uint64_t NcmLearner::memory_bytes() const {
  return readout_accounting_bytes(means_.num_classes(), means_.dim());
}

std::vector<std::uint8_t> NcmLearner::state_bytes() const {
  detail::ByteWriter out;
  for (std::int64_t c : means_.counts()) out.i64(c);
  const Eigen::MatrixXd& m = means_.means();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.f64(m(r, c));
  return std::move(out).take();
}

}  // namespace streamlda
