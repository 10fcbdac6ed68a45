#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace streamlda {

/// In-memory dataset: one feature vector per row plus labels and optional
/// instance/frame metadata. Banks are immutable after load and freely
/// shareable across threads.
///
/// instance_ids and frame_indices always have one entry per row; -1 marks a
/// missing value. Rows with an instance id must also carry a frame index.
struct FeatureBank {
  Eigen::MatrixXf features;  // n x d
  std::vector<std::int32_t> labels;
  std::vector<std::int32_t> instance_ids;
  std::vector<std::int32_t> frame_indices;
  std::vector<std::string> class_names;  // empty, or one name per class
  std::int32_t num_classes = 0;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  /// True when every row carries instance and frame metadata.
  bool has_instance_metadata() const;

  Eigen::VectorXd feature_row(Eigen::Index i) const {
    return features.row(i).cast<double>().transpose();
  }

  /// Checks every structural invariant: array lengths, label range, finite
  /// features, instance/frame pairing, frame uniqueness within an instance.
  /// Throws the matching error type on the first violation.
  void validate() const;

  bool operator==(const FeatureBank& other) const;
};

/// Binary container round trip. Features are stored as 32-bit little-endian
/// reals, labels and metadata as 32-bit signed integers; read(write(b)) == b
/// bitwise. Optional columns that are entirely absent are omitted from the
/// file. Read errors: BadMagic, VersionUnsupported, TruncatedPayload (with
/// byte offset), NonFiniteFeature.
void bank_write(const FeatureBank& bank, const std::string& path);
FeatureBank bank_read(const std::string& path);

std::vector<std::uint8_t> bank_serialize(const FeatureBank& bank);
FeatureBank bank_deserialize(const std::vector<std::uint8_t>& bytes);

/// Column mapping for CSV ingestion. Every column not named here is read as
/// a feature, in header order. Empty instance/frame names mean the file has
/// no such column.
struct CsvSchema {
  std::string label_column = "label";
  std::string instance_column;
  std::string frame_column;
};

/// Parses a header-bearing CSV into a bank. Labels that all parse as
/// non-negative integers are taken as dense class indices directly; any
/// other label set is mapped to dense indices in first-appearance order and
/// the strings are kept as class_names.
/// Errors: RaggedRow, UnparsableNumber, UnknownColumn (each naming the
/// offending line or column), IoError.
FeatureBank bank_from_csv(const std::string& path, const CsvSchema& schema);

/// Synthetic benchmark description. Class means sit on a seeded random
/// sphere of radius class_mean_spread; each class splits into
/// instances_per_class instances whose sub-means are jittered by
/// instance_stddev; samples are Gaussian around the sub-mean with a
/// per-dimension stddev ramp from sample_stddev_min to sample_stddev_max.
/// The ramp makes the within-class covariance anisotropic, so estimating it
/// well actually matters to the classifier.
struct SynthSpec {
  std::uint64_t seed = 0;
  // When nonzero, instance sub-means and sample noise are drawn from this
  // seed instead, while the class means stay with `seed`. Two banks sharing
  // `seed` but differing here describe the same classes with fresh samples,
  // which is what a held-out test bank needs.
  std::uint64_t sample_seed = 0;
  int num_classes = 1;
  int dim = 1;
  int per_class = 1;
  int instances_per_class = 1;
  double class_mean_spread = 1.0;
  double instance_stddev = 0.0;
  double sample_stddev_min = 1.0;
  double sample_stddev_max = 1.0;
};

/// Deterministic synthetic bank: per_class samples for each of num_classes
/// classes, grouped into equally sized instances with ascending frame
/// indices and globally unique instance ids. Requires per_class divisible by
/// instances_per_class. Throws BadShape on invalid dimensions.
FeatureBank synth_bank(const SynthSpec& spec);

}  // namespace streamlda
