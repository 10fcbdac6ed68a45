#include "streamlda/slda_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "streamlda/detail/binary_io.hpp"
#include "streamlda/errors.hpp"

namespace streamlda {

namespace {

constexpr char kModelMagic[8] = {'S', 'L', 'D', 'A', 'M', 'O', 'D', 'L'};
constexpr std::uint8_t kModelVersion = 1;

Eigen::MatrixXd initial_sigma(int dim, CovarianceInit init) {
  switch (init) {
    case CovarianceInit::kOnesMatrix:
      return Eigen::MatrixXd::Ones(dim, dim);
    case CovarianceInit::kZero:
    case CovarianceInit::kFromBank:
      return Eigen::MatrixXd::Zero(dim, dim);
  }
  throw ConfigError("unknown covariance init");
}

}  // namespace

LinearPredictor::LinearPredictor(Eigen::MatrixXd weights, Eigen::VectorXd bias,
                                 std::vector<int> seen_classes, std::int64_t built_at)
    : weights_(std::move(weights)),
      bias_(std::move(bias)),
      seen_classes_(std::move(seen_classes)),
      built_at_(built_at) {}

std::vector<ScoredLabel> LinearPredictor::predict_ranked(
    const Eigen::Ref<const Eigen::VectorXd>& z, int top_k) const {
  if (z.size() != weights_.cols()) {
    throw DimensionMismatch("predict: feature has size " + std::to_string(z.size()) +
                            ", readout expects " + std::to_string(weights_.cols()));
  }
  if (seen_classes_.empty()) throw NoClassesSeen("predict: no classes seen yet");
  if (top_k < 1) throw ConfigError("predict: top_k must be at least 1");

  Eigen::VectorXd scores = weights_ * z + bias_;
  std::vector<ScoredLabel> ranked;
  ranked.reserve(seen_classes_.size());
  for (int label : seen_classes_) ranked.push_back({label, scores(label)});
  // Stable on the already label-ascending order, so equal scores keep the
  // lowest class index first.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(top_k), ranked.size());
  ranked.resize(k);
  return ranked;
}

SldaModel::SldaModel(int dim, int num_classes, CovarianceInit cov_init,
                     CovarianceMode mode, ShrinkageConfig shrinkage)
    : class_means_(dim, num_classes),
      sigma_(initial_sigma(dim, cov_init)),
      mode_(mode),
      cov_init_(cov_init),
      shrinkage_(shrinkage) {}

SldaModel SldaModel::with_base_covariance(
    int dim, int num_classes, const Eigen::Ref<const Eigen::MatrixXd>& cov_samples,
    CovarianceMode mode, ShrinkageConfig shrinkage) {
  if (cov_samples.cols() != dim) {
    throw DimensionMismatch("base covariance samples have " +
                            std::to_string(cov_samples.cols()) + " columns, expected " +
                            std::to_string(dim));
  }
  SldaModel model(dim, num_classes, CovarianceInit::kFromBank, mode, shrinkage);
  model.sigma_ = oas_covariance(cov_samples);
  model.time_step_ = cov_samples.rows();
  return model;
}

SldaModel SldaModel::from_state(Eigen::MatrixXd means, std::vector<std::int64_t> counts,
                                Eigen::MatrixXd sigma, std::int64_t time_step,
                                CovarianceMode mode, ShrinkageConfig shrinkage) {
  const int num_classes = static_cast<int>(means.rows());
  const int dim = static_cast<int>(means.cols());
  if (sigma.rows() != dim || sigma.cols() != dim) {
    throw BadShape("state covariance is " + std::to_string(sigma.rows()) + "x" +
                   std::to_string(sigma.cols()) + ", expected " + std::to_string(dim) +
                   "x" + std::to_string(dim));
  }
  if (static_cast<int>(counts.size()) != num_classes) {
    throw BadShape("state has " + std::to_string(counts.size()) + " counts for " +
                   std::to_string(num_classes) + " classes");
  }
  if (time_step < 0) throw BadShape("state time step is negative");
  SldaModel model(dim, num_classes, CovarianceInit::kFromBank, mode, shrinkage);
  model.class_means_ = ClassMeans::from_state(std::move(means), std::move(counts));
  model.sigma_ = std::move(sigma);
  model.time_step_ = time_step;
  return model;
}

void SldaModel::mark_sigma_changed() {
  precision_valid_ = false;
  readout_stale_ = true;
}

void SldaModel::observe_mean_only(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  class_means_.observe(z, label);
  readout_stale_ = true;
}

void SldaModel::base_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                         std::span<const std::int32_t> labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw LengthMismatch("base fit: " + std::to_string(features.rows()) +
                         " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  if (features.rows() == 0) return;
  if (features.cols() != dim()) {
    throw DimensionMismatch("base fit: features have " + std::to_string(features.cols()) +
                            " columns, model expects " + std::to_string(dim()));
  }
  if (cov_init_ == CovarianceInit::kFromBank) {
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      observe_mean_only(features.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
    }
    sigma_ = oas_covariance(features);
    time_step_ = features.rows();
    mark_sigma_changed();
  } else {
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      learn(features.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
    }
  }
}

void SldaModel::learn(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  if (z.size() != dim()) {
    throw DimensionMismatch("learn: feature has size " + std::to_string(z.size()) +
                            ", model expects " + std::to_string(dim()));
  }
  if (label < 0 || label >= num_classes()) {
    throw LabelOutOfRange("learn: label " + std::to_string(label) + " outside [0, " +
                          std::to_string(num_classes()) + ")");
  }
  if (mode_ == CovarianceMode::kPlastic) {
    const double t = static_cast<double>(time_step_);
    // Deviation from the current (pre-update) mean of the sample's class.
    const Eigen::VectorXd diff = z - class_means_.means().row(label).transpose();
    // The outer product is materialized before scaling: folding the scalar
    // into the product kernel scales only one factor, which breaks exact
    // symmetry by one ulp and exact symmetry is a class invariant of sigma_.
    Eigen::MatrixXd delta = diff * diff.transpose();
    delta *= t;
    delta /= t + 1.0;
    sigma_ = (t * sigma_ + delta) / (t + 1.0);
    time_step_ += 1;
    mark_sigma_changed();
  }
  observe_mean_only(z, label);
}

void SldaModel::refresh_readout() {
  const std::vector<int> seen = class_means_.seen_classes();
  if (seen.empty()) throw NoClassesSeen("refresh: no classes seen yet");

  if (!precision_valid_) {
    precision_cache_ = shrinkage_precision(sigma_, shrinkage_);
    precision_valid_ = true;
  }

  const int k = num_classes();
  weights_ = Eigen::MatrixXd::Zero(k, dim());
  bias_ = Eigen::VectorXd::Constant(k, -std::numeric_limits<double>::infinity());
  for (int label : seen) {
    const Eigen::VectorXd mu = class_means_.means().row(label).transpose();
    const Eigen::VectorXd w = precision_cache_ * mu;
    weights_.row(label) = w.transpose();
    bias_(label) = -0.5 * mu.dot(w);
  }
  built_at_ = total_learned();
  readout_stale_ = false;
}

std::vector<ScoredLabel> SldaModel::predict(const Eigen::Ref<const Eigen::VectorXd>& z,
                                            int top_k) {
  if (readout_stale_) refresh_readout();
  return LinearPredictor(weights_, bias_, class_means_.seen_classes(), built_at_)
      .predict_ranked(z, top_k);
}

LinearPredictor SldaModel::snapshot() {
  if (readout_stale_) refresh_readout();
  return LinearPredictor(weights_, bias_, class_means_.seen_classes(), built_at_);
}

std::uint64_t SldaModel::memory_bytes() const {
  const std::uint64_t k = static_cast<std::uint64_t>(num_classes());
  const std::uint64_t d = static_cast<std::uint64_t>(dim());
  return 4 * (k * d + d * d + k);
}

std::vector<std::uint8_t> SldaModel::serialize() const {
  detail::ByteWriter out;
  out.raw(kModelMagic, sizeof(kModelMagic));
  out.u8(kModelVersion);
  out.u8(static_cast<std::uint8_t>(mode_));
  out.u32(static_cast<std::uint32_t>(dim()));
  out.u32(static_cast<std::uint32_t>(num_classes()));
  out.f64(shrinkage_.epsilon);
  out.u64(static_cast<std::uint64_t>(time_step_));
  for (std::int64_t c : class_means_.counts()) out.i64(c);
  const Eigen::MatrixXd& means = class_means_.means();
  for (Eigen::Index r = 0; r < means.rows(); ++r)
    for (Eigen::Index c = 0; c < means.cols(); ++c) out.f64(means(r, c));
  for (Eigen::Index r = 0; r < sigma_.rows(); ++r)
    for (Eigen::Index c = 0; c < sigma_.cols(); ++c) out.f64(sigma_(r, c));
  return std::move(out).take();
}

SldaModel SldaModel::deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  char magic[8];
  in.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw BadMagic("model container magic mismatch");
  }
  const std::uint8_t version = in.u8();
  if (version != kModelVersion) {
    throw VersionUnsupported("model container version " + std::to_string(version) +
                             " not supported");
  }
  const std::uint8_t mode_byte = in.u8();
  if (mode_byte > 1) throw TruncatedPayload("model container has invalid mode byte");
  const CovarianceMode mode = static_cast<CovarianceMode>(mode_byte);
  const std::uint32_t dim = in.u32();
  const std::uint32_t num_classes = in.u32();
  if (dim == 0 || num_classes == 0) {
    throw BadShape("model container declares zero dimension or class count");
  }
  ShrinkageConfig shrinkage;
  shrinkage.epsilon = in.f64();
  const std::int64_t time_step = static_cast<std::int64_t>(in.u64());

  std::vector<std::int64_t> counts(num_classes);
  for (auto& c : counts) c = in.i64();
  Eigen::MatrixXd means(num_classes, dim);
  for (Eigen::Index r = 0; r < means.rows(); ++r)
    for (Eigen::Index c = 0; c < means.cols(); ++c) means(r, c) = in.f64();
  Eigen::MatrixXd sigma(dim, dim);
  for (Eigen::Index r = 0; r < sigma.rows(); ++r)
    for (Eigen::Index c = 0; c < sigma.cols(); ++c) sigma(r, c) = in.f64();
  in.expect_exhausted();
  return from_state(std::move(means), std::move(counts), std::move(sigma), time_step,
                    mode, shrinkage);
}

void SldaModel::save(const std::string& path) const {
  detail::write_file_bytes(path, serialize());
}

SldaModel SldaModel::load(const std::string& path) {
  return deserialize(detail::read_file_bytes(path));
}

}  // namespace streamlda
