#include "streamlda/class_means.hpp"

#include <limits>
#include <string>

namespace streamlda {

ClassMeans::ClassMeans(int dim, int num_classes) {
  if (dim < 1 || num_classes < 1) {
    throw BadShape("ClassMeans needs dim >= 1 and num_classes >= 1");
  }
  means_ = Eigen::MatrixXd::Zero(num_classes, dim);
  counts_.assign(static_cast<std::size_t>(num_classes), 0);
}

ClassMeans ClassMeans::from_state(Eigen::MatrixXd means, std::vector<std::int64_t> counts) {
  if (means.rows() < 1 || means.cols() < 1) {
    throw BadShape("stored means must have at least one class and one dimension");
  }
  if (static_cast<Eigen::Index>(counts.size()) != means.rows()) {
    throw BadShape("stored state has " + std::to_string(counts.size()) +
                   " counts for " + std::to_string(means.rows()) + " classes");
  }
  ClassMeans out(static_cast<int>(means.cols()), static_cast<int>(means.rows()));
  out.means_ = std::move(means);
  out.total_count_ = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw BadShape("stored class count is negative");
    out.total_count_ += c;
  }
  out.counts_ = std::move(counts);
  return out;
}

void ClassMeans::check_label(int label) const {
  if (label < 0 || label >= num_classes()) {
    throw LabelOutOfRange("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(num_classes()) + ")");
  }
}

void ClassMeans::check_dim(Eigen::Index zdim) const {
  if (zdim != dim()) {
    throw DimensionMismatch("feature vector has dim " + std::to_string(zdim) +
                            ", expected " + std::to_string(dim()));
  }
}

void ClassMeans::observe(const Eigen::Ref<const Eigen::VectorXd>& z, int label) {
  check_label(label);
  check_dim(z.size());
  auto& count = counts_[static_cast<std::size_t>(label)];
  const double c = static_cast<double>(count);
  means_.row(label) = (c * means_.row(label) + z.transpose()) / (c + 1.0);
  count += 1;
  total_count_ += 1;
}

std::vector<int> ClassMeans::seen_classes() const {
  std::vector<int> seen;
  for (int k = 0; k < num_classes(); ++k) {
    if (counts_[static_cast<std::size_t>(k)] > 0) seen.push_back(k);
  }
  return seen;
}

int ClassMeans::num_seen() const {
  int n = 0;
  for (auto c : counts_) n += (c > 0) ? 1 : 0;
  return n;
}

int ncm_predict(const ClassMeans& means, const Eigen::Ref<const Eigen::VectorXd>& z) {
  means.check_dim(z.size());
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < means.num_classes(); ++k) {
    if (!means.seen(k)) continue;
    const double dist = (z.transpose() - means.means().row(k)).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  if (best < 0) throw NoClassesSeen("no class has been observed yet");
  return best;
}

}  // namespace streamlda
