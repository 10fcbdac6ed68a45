#include "streamlda/baselines.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "streamlda/errors.hpp"

namespace streamlda {

SoftmaxReadout::SoftmaxReadout(int dim, int num_classes, SgdOptions options)
    : options_(options) {
  if (dim < 1 || num_classes < 1) {
    throw BadShape("softmax readout needs dim >= 1 and num_classes >= 1");
  }
  weights_ = Eigen::MatrixXd::Zero(num_classes, dim);
  bias_ = Eigen::VectorXd::Zero(num_classes);
  velocity_weights_ = Eigen::MatrixXd::Zero(num_classes, dim);
  velocity_bias_ = Eigen::VectorXd::Zero(num_classes);
}

Eigen::VectorXd SoftmaxReadout::scores(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != dim()) {
    throw DimensionMismatch("scores: feature has size " + std::to_string(z.size()) +
                            ", readout expects " + std::to_string(dim()));
  }
  return weights_ * z + bias_;
}

void SoftmaxReadout::sgd_step(const Eigen::Ref<const Eigen::MatrixXd>& batch_features,
                              std::span<const std::int32_t> batch_labels) {
  const Eigen::Index rows = batch_features.rows();
  if (rows == 0) throw EmptyBatch("sgd step on an empty batch");
  if (static_cast<std::size_t>(rows) != batch_labels.size()) {
    throw LengthMismatch("sgd step: " + std::to_string(rows) + " feature rows but " +
                         std::to_string(batch_labels.size()) + " labels");
  }
  if (batch_features.cols() != dim()) {
    throw DimensionMismatch("sgd step: features have " +
                            std::to_string(batch_features.cols()) +
                            " columns, readout expects " + std::to_string(dim()));
  }
  for (std::int32_t y : batch_labels) {
    if (y < 0 || y >= num_classes()) {
      throw LabelOutOfRange("sgd step: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes()) + ")");
    }
  }

  Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(num_classes(), dim());
  Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(num_classes());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd z = batch_features.row(i).transpose();
    Eigen::VectorXd s = weights_ * z + bias_;
    s.array() -= s.maxCoeff();  // stable softmax
    Eigen::VectorXd p = s.array().exp();
    p /= p.sum();
    p(batch_labels[static_cast<std::size_t>(i)]) -= 1.0;
    grad_w.noalias() += p * z.transpose();
    grad_b += p;
  }
  const double inv_batch = 1.0 / static_cast<double>(rows);
  grad_w *= inv_batch;
  grad_b *= inv_batch;
  grad_w += options_.weight_decay * weights_;

  velocity_weights_ = options_.momentum * velocity_weights_ + grad_w;
  velocity_bias_ = options_.momentum * velocity_bias_ + grad_b;
  weights_ -= options_.learning_rate * velocity_weights_;
  bias_ -= options_.learning_rate * velocity_bias_;
}

PrototypeBuffer::PrototypeBuffer(int dim, int num_classes, int capacity_per_class)
    : dim_(dim), capacity_per_class_(capacity_per_class) {
  if (dim < 1 || num_classes < 1) {
    throw BadShape("prototype buffer needs dim >= 1 and num_classes >= 1");
  }
  if (capacity_per_class < 1) {
    throw BadShape("prototype buffer capacity must be at least 1");
  }
  buffers_.resize(static_cast<std::size_t>(num_classes));
}

void PrototypeBuffer::insert(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  if (label < 0 || label >= num_classes()) {
    throw LabelOutOfRange("buffer insert: label " + std::to_string(label) +
                          " outside [0, " + std::to_string(num_classes()) + ")");
  }
  if (z.size() != dim_) {
    throw DimensionMismatch("buffer insert: feature has size " + std::to_string(z.size()) +
                            ", buffer expects " + std::to_string(dim_));
  }
  auto& buf = buffers_[static_cast<std::size_t>(label)];
  buf.push_back({z, 1, label});
  if (static_cast<int>(buf.size()) <= capacity_per_class_) return;

  // Scanning pairs in index order with a strict < keeps the first (i.e.
  // lexicographically lowest insertion-order) pair on distance ties.
  std::size_t best_i = 0, best_j = 1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < buf.size(); ++i) {
    for (std::size_t j = i + 1; j < buf.size(); ++j) {
      const double dist = (buf[i].vector - buf[j].vector).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best_i = i;
        best_j = j;
      }
    }
  }
  Prototype& keep = buf[best_i];
  const Prototype& drop = buf[best_j];
  const double total = static_cast<double>(keep.count + drop.count);
  keep.vector = (static_cast<double>(keep.count) * keep.vector +
                 static_cast<double>(drop.count) * drop.vector) /
                total;
  keep.count += drop.count;
  buf.erase(buf.begin() + static_cast<std::ptrdiff_t>(best_j));
}

const std::vector<Prototype>& PrototypeBuffer::class_buffer(int label) const {
  if (label < 0 || label >= num_classes()) {
    throw LabelOutOfRange("class buffer: label " + std::to_string(label) +
                          " outside [0, " + std::to_string(num_classes()) + ")");
  }
  return buffers_[static_cast<std::size_t>(label)];
}

std::int64_t PrototypeBuffer::total_prototypes() const {
  std::int64_t total = 0;
  for (const auto& buf : buffers_) total += static_cast<std::int64_t>(buf.size());
  return total;
}

std::vector<const Prototype*> PrototypeBuffer::flattened() const {
  std::vector<const Prototype*> flat;
  flat.reserve(static_cast<std::size_t>(total_prototypes()));
  for (const auto& buf : buffers_) {
    for (const auto& proto : buf) flat.push_back(&proto);
  }
  return flat;
}

void exstream_learn(PrototypeBuffer& buffer, SoftmaxReadout& readout, Rng& rng,
                    const Eigen::Ref<const Eigen::VectorXd>& z, int label,
                    int batch_cap) {
  if (batch_cap < 1) throw BadShape("batch cap must be at least 1");
  buffer.insert(z, label);

  const std::vector<const Prototype*> flat = buffer.flattened();
  const int total = static_cast<int>(flat.size());
  std::vector<int> chosen;
  if (total <= batch_cap) {
    chosen.resize(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) chosen[static_cast<std::size_t>(i)] = i;
  } else {
    chosen = rng.sample_without_replacement(total, batch_cap);
  }

  Eigen::MatrixXd batch(static_cast<Eigen::Index>(chosen.size()), buffer.dim());
  std::vector<std::int32_t> labels(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const Prototype& proto = *flat[static_cast<std::size_t>(chosen[i])];
    batch.row(static_cast<Eigen::Index>(i)) = proto.vector.transpose();
    labels[i] = proto.label;
  }
  readout.sgd_step(batch, labels);
}

void finetune_learn(SoftmaxReadout& readout,
                    const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  Eigen::MatrixXd batch(1, z.size());
  batch.row(0) = z.transpose();
  const std::int32_t labels[1] = {static_cast<std::int32_t>(label)};
  readout.sgd_step(batch, labels);
}

SoftmaxReadout offline_softmax_fit(const FeatureBank& bank, int epochs,
                                   const SgdOptions& options, int batch_size,
                                   std::uint64_t seed) {
  if (bank.n() == 0) throw EmptyBank("offline fit on an empty bank");
  if (epochs < 0) throw ConfigError("offline fit: epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("offline fit: batch size must be at least 1");

  SoftmaxReadout readout(static_cast<int>(bank.dim()), bank.num_classes, options);
  const auto n = static_cast<std::size_t>(bank.n());
  std::vector<std::int64_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::int64_t>(i);

  Rng rng(seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
      const std::size_t count = std::min(static_cast<std::size_t>(batch_size), n - start);
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(count), bank.dim());
      std::vector<std::int32_t> labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto row = static_cast<Eigen::Index>(order[start + i]);
        batch.row(static_cast<Eigen::Index>(i)) = bank.features.row(row).cast<double>();
        labels[i] = bank.labels[static_cast<std::size_t>(row)];
      }
      readout.sgd_step(batch, labels);
    }
  }
  return readout;
}

}  // namespace streamlda
