#include "streamlda/feature_bank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "streamlda/detail/binary_io.hpp"
#include "streamlda/errors.hpp"
#include "streamlda/rng.hpp"

namespace streamlda {

namespace {

constexpr char kBankMagic[8] = {'S', 'L', 'D', 'A', 'B', 'A', 'N', 'K'};
constexpr std::uint8_t kBankVersion = 1;
constexpr std::uint8_t kLittleEndianTag = 1;
constexpr std::uint8_t kFlagInstances = 1u << 0;
constexpr std::uint8_t kFlagFrames = 1u << 1;
constexpr std::uint8_t kFlagClassNames = 1u << 2;

bool column_present(const std::vector<std::int32_t>& col) {
  return std::any_of(col.begin(), col.end(), [](std::int32_t v) { return v >= 0; });
}

}  // namespace

bool FeatureBank::has_instance_metadata() const {
  if (n() == 0) return false;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (instance_ids[static_cast<std::size_t>(i)] < 0) return false;
    if (frame_indices[static_cast<std::size_t>(i)] < 0) return false;
  }
  return true;
}

void FeatureBank::validate() const {
  const auto rows = static_cast<std::size_t>(n());
  if (labels.size() != rows || instance_ids.size() != rows || frame_indices.size() != rows) {
    throw BadShape("bank arrays disagree on sample count");
  }
  if (!class_names.empty() &&
      class_names.size() != static_cast<std::size_t>(num_classes)) {
    throw BadShape("bank has " + std::to_string(class_names.size()) +
                   " class names for " + std::to_string(num_classes) + " classes");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw LabelOutOfRange("bank row " + std::to_string(i) + " has label " +
                            std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    if (instance_ids[i] >= 0 && frame_indices[i] < 0) {
      throw MissingMetadata("bank row " + std::to_string(i) +
                            " has an instance id but no frame index");
    }
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (!std::isfinite(features(r, c))) {
        throw NonFiniteFeature("non-finite feature at row " + std::to_string(r) +
                               ", column " + std::to_string(c));
      }
    }
  }
  // Frame indices must be unique within an instance for temporal orderings
  // to be well defined.
  std::unordered_map<std::int32_t, std::unordered_set<std::int32_t>> frames_seen;
  for (std::size_t i = 0; i < rows; ++i) {
    if (instance_ids[i] < 0) continue;
    if (!frames_seen[instance_ids[i]].insert(frame_indices[i]).second) {
      throw BadShape("instance " + std::to_string(instance_ids[i]) +
                     " repeats frame index " + std::to_string(frame_indices[i]));
    }
  }
}

bool FeatureBank::operator==(const FeatureBank& other) const {
  if (n() != other.n() || dim() != other.dim()) return false;
  if (std::memcmp(features.data(), other.features.data(),
                  sizeof(float) * static_cast<std::size_t>(features.size())) != 0) {
    return false;
  }
  return labels == other.labels && instance_ids == other.instance_ids &&
         frame_indices == other.frame_indices && class_names == other.class_names &&
         num_classes == other.num_classes;
}

std::vector<std::uint8_t> bank_serialize(const FeatureBank& bank) {
  bank.validate();
  const bool has_instances = column_present(bank.instance_ids);
  const bool has_frames = column_present(bank.frame_indices);
  const bool has_names = !bank.class_names.empty();

  detail::ByteWriter out;
  out.raw(kBankMagic, sizeof(kBankMagic));
  out.u8(kBankVersion);
  out.u8(kLittleEndianTag);
  std::uint8_t flags = 0;
  if (has_instances) flags |= kFlagInstances;
  if (has_frames) flags |= kFlagFrames;
  if (has_names) flags |= kFlagClassNames;
  out.u8(flags);
  out.u32(static_cast<std::uint32_t>(bank.dim()));
  out.u64(static_cast<std::uint64_t>(bank.n()));
  out.u32(static_cast<std::uint32_t>(bank.num_classes));

  for (Eigen::Index r = 0; r < bank.features.rows(); ++r)
    for (Eigen::Index c = 0; c < bank.features.cols(); ++c) out.f32(bank.features(r, c));
  for (std::int32_t v : bank.labels) out.i32(v);
  if (has_instances)
    for (std::int32_t v : bank.instance_ids) out.i32(v);
  if (has_frames)
    for (std::int32_t v : bank.frame_indices) out.i32(v);
  if (has_names) {
    out.u32(static_cast<std::uint32_t>(bank.class_names.size()));
    for (const std::string& name : bank.class_names) {
      out.u32(static_cast<std::uint32_t>(name.size()));
      out.raw(name.data(), name.size());
    }
  }
  return std::move(out).take();
}

FeatureBank bank_deserialize(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader in(bytes);
  char magic[8];
  in.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kBankMagic, sizeof(magic)) != 0) {
    throw BadMagic("bank file magic mismatch");
  }
  const std::uint8_t version = in.u8();
  if (version != kBankVersion) {
    throw VersionUnsupported("bank format version " + std::to_string(version) +
                             " not supported");
  }
  const std::uint8_t endian = in.u8();
  if (endian != kLittleEndianTag) {
    throw VersionUnsupported("bank endianness tag " + std::to_string(endian) +
                             " not supported");
  }
  const std::uint8_t flags = in.u8();
  const std::uint32_t d = in.u32();
  const std::uint64_t n = in.u64();
  const std::uint32_t k = in.u32();

  FeatureBank bank;
  bank.num_classes = static_cast<std::int32_t>(k);
  bank.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < bank.features.rows(); ++r)
    for (Eigen::Index c = 0; c < bank.features.cols(); ++c) bank.features(r, c) = in.f32();
  bank.labels.resize(n);
  for (auto& v : bank.labels) v = in.i32();
  bank.instance_ids.assign(n, -1);
  if (flags & kFlagInstances)
    for (auto& v : bank.instance_ids) v = in.i32();
  bank.frame_indices.assign(n, -1);
  if (flags & kFlagFrames)
    for (auto& v : bank.frame_indices) v = in.i32();
  if (flags & kFlagClassNames) {
    const std::uint32_t count = in.u32();
    bank.class_names.resize(count);
    for (auto& name : bank.class_names) {
      const std::uint32_t len = in.u32();
      name.resize(len);
      if (len > 0) in.raw(name.data(), len);
    }
  }
  in.expect_exhausted();
  bank.validate();
  return bank;
}

void bank_write(const FeatureBank& bank, const std::string& path) {
  detail::write_file_bytes(path, bank_serialize(bank));
}

FeatureBank bank_read(const std::string& path) {
  return bank_deserialize(detail::read_file_bytes(path));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace.
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos ? std::string()
                                                : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no, const std::string& column) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UnparsableNumber("line " + std::to_string(line_no) + ", column '" + column +
                           "': cannot parse '" + text + "' as a number");
  }
}

std::int32_t parse_int(const std::string& text, std::size_t line_no, const std::string& column) {
  try {
    std::size_t consumed = 0;
    const long v = std::stol(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::int32_t>(v);
  } catch (const std::exception&) {
    throw UnparsableNumber("line " + std::to_string(line_no) + ", column '" + column +
                           "': cannot parse '" + text + "' as an integer");
  }
}

bool parse_as_dense_index(const std::string& text, std::int32_t& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  try {
    out = static_cast<std::int32_t>(std::stol(text));
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

FeatureBank bank_from_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("CSV file has no header row: " + path);
  const std::vector<std::string> header = split_csv_line(line);

  int label_col = -1, instance_col = -1, frame_col = -1;
  std::vector<int> feature_cols;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[static_cast<std::size_t>(i)] == schema.label_column) {
      label_col = i;
    } else if (!schema.instance_column.empty() &&
               header[static_cast<std::size_t>(i)] == schema.instance_column) {
      instance_col = i;
    } else if (!schema.frame_column.empty() &&
               header[static_cast<std::size_t>(i)] == schema.frame_column) {
      frame_col = i;
    } else {
      feature_cols.push_back(i);
    }
  }
  if (label_col < 0) throw UnknownColumn("label column '" + schema.label_column + "' not in CSV header");
  if (!schema.instance_column.empty() && instance_col < 0) {
    throw UnknownColumn("instance column '" + schema.instance_column + "' not in CSV header");
  }
  if (!schema.frame_column.empty() && frame_col < 0) {
    throw UnknownColumn("frame column '" + schema.frame_column + "' not in CSV header");
  }

  std::vector<std::vector<double>> feature_rows;
  std::vector<std::string> raw_labels;
  std::vector<std::int32_t> instance_ids;
  std::vector<std::int32_t> frame_indices;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw RaggedRow("line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (int c : feature_cols) {
      row.push_back(parse_double(fields[static_cast<std::size_t>(c)], line_no,
                                 header[static_cast<std::size_t>(c)]));
    }
    feature_rows.push_back(std::move(row));
    raw_labels.push_back(fields[static_cast<std::size_t>(label_col)]);
    instance_ids.push_back(instance_col >= 0
                               ? parse_int(fields[static_cast<std::size_t>(instance_col)],
                                           line_no, schema.instance_column)
                               : -1);
    frame_indices.push_back(frame_col >= 0
                                ? parse_int(fields[static_cast<std::size_t>(frame_col)],
                                            line_no, schema.frame_column)
                                : -1);
  }

  const std::size_t n = feature_rows.size();
  FeatureBank bank;
  bank.features.resize(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < feature_rows[r].size(); ++c) {
      bank.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<float>(feature_rows[r][c]);
    }
  }
  bank.instance_ids = std::move(instance_ids);
  bank.frame_indices = std::move(frame_indices);

  // Labels that are all plain non-negative integers pass through as dense
  // indices, so a bank exported to CSV re-imports with identical labels.
  // Anything else maps to indices in first-appearance order.
  bool all_numeric = !raw_labels.empty();
  std::vector<std::int32_t> numeric(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size() && all_numeric; ++i) {
    all_numeric = parse_as_dense_index(raw_labels[i], numeric[i]);
  }
  if (all_numeric) {
    bank.labels = std::move(numeric);
    std::int32_t max_label = -1;
    for (std::int32_t v : bank.labels) max_label = std::max(max_label, v);
    bank.num_classes = max_label + 1;
  } else {
    std::unordered_map<std::string, std::int32_t> index_of;
    for (const std::string& name : raw_labels) {
      const auto [it, inserted] =
          index_of.try_emplace(name, static_cast<std::int32_t>(bank.class_names.size()));
      if (inserted) bank.class_names.push_back(name);
      bank.labels.push_back(it->second);
    }
    bank.num_classes = static_cast<std::int32_t>(bank.class_names.size());
  }
  bank.validate();
  return bank;
}

FeatureBank synth_bank(const SynthSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < 1 || spec.per_class < 1 ||
      spec.instances_per_class < 1) {
    throw BadShape("synthetic spec needs num_classes, dim, per_class, instances_per_class >= 1");
  }
  if (spec.per_class % spec.instances_per_class != 0) {
    throw BadShape("per_class " + std::to_string(spec.per_class) +
                   " not divisible by instances_per_class " +
                   std::to_string(spec.instances_per_class));
  }
  if (spec.class_mean_spread < 0 || spec.instance_stddev < 0 ||
      spec.sample_stddev_min < 0 || spec.sample_stddev_min > spec.sample_stddev_max) {
    throw BadShape("synthetic spec needs non-negative spreads and stddev_min <= stddev_max");
  }

  const int k = spec.num_classes;
  const int d = spec.dim;
  const int per_instance = spec.per_class / spec.instances_per_class;
  Rng rng(spec.seed);

  const auto normal_vector = [&]() {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v(j) = rng.normal();
    return v;
  };

  // Per-dimension stddev ramp; constant when min == max (or d == 1).
  Eigen::VectorXd stddev(d);
  for (int j = 0; j < d; ++j) {
    const double frac = d > 1 ? static_cast<double>(j) / (d - 1) : 0.0;
    stddev(j) = spec.sample_stddev_min +
                frac * (spec.sample_stddev_max - spec.sample_stddev_min);
  }

  Eigen::MatrixXd class_means(k, d);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd dir = normal_vector();
    const double norm = dir.norm();
    if (norm < 1e-12) dir = Eigen::VectorXd::Unit(d, 0);
    else dir /= norm;
    class_means.row(c) = (spec.class_mean_spread * dir).transpose();
  }

  if (spec.sample_seed != 0) rng = Rng(spec.sample_seed);

  const Eigen::Index n = static_cast<Eigen::Index>(k) * spec.per_class;
  FeatureBank bank;
  bank.num_classes = k;
  bank.features.resize(n, d);
  bank.labels.reserve(static_cast<std::size_t>(n));
  bank.instance_ids.reserve(static_cast<std::size_t>(n));
  bank.frame_indices.reserve(static_cast<std::size_t>(n));

  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    for (int inst = 0; inst < spec.instances_per_class; ++inst) {
      const Eigen::VectorXd sub_mean =
          class_means.row(c).transpose() + spec.instance_stddev * normal_vector();
      for (int f = 0; f < per_instance; ++f) {
        const Eigen::VectorXd sample = sub_mean + stddev.cwiseProduct(normal_vector());
        bank.features.row(row) = sample.cast<float>().transpose();
        bank.labels.push_back(c);
        bank.instance_ids.push_back(c * spec.instances_per_class + inst);
        bank.frame_indices.push_back(f);
        ++row;
      }
    }
  }
  bank.validate();
  return bank;
}

}  // namespace streamlda
