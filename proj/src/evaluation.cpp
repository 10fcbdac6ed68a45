#include "streamlda/evaluation.hpp"

#include <algorithm>
#include <chrono>

#include "streamlda/errors.hpp"

namespace streamlda {

std::string metric_kind_name(MetricKind metric) {
  return metric == MetricKind::kTop1 ? "top1" : "top5";
}

MetricKind metric_kind_from_name(const std::string& name) {
  if (name == "top1") return MetricKind::kTop1;
  if (name == "top5") return MetricKind::kTop5;
  throw ConfigError("unknown metric '" + name + "' (expected top1 or top5)");
}

std::string eval_scope_name(EvalScope scope) {
  return scope == EvalScope::kAllTestData ? "all_test_data" : "seen_classes_only";
}

EvalScope eval_scope_from_name(const std::string& name) {
  if (name == "all_test_data") return EvalScope::kAllTestData;
  if (name == "seen_classes_only") return EvalScope::kSeenClassesOnly;
  throw ConfigError("unknown eval scope '" + name +
                    "' (expected all_test_data or seen_classes_only)");
}

std::vector<double> LearningCurve::accuracies() const {
  std::vector<double> values;
  values.reserve(points.size());
  for (const CurvePoint& p : points) values.push_back(p.accuracy);
  return values;
}

double topk_accuracy(const std::vector<std::vector<int>>& ranked_predictions,
                     std::span<const std::int32_t> truths, int k) {
  if (ranked_predictions.size() != truths.size()) {
    throw LengthMismatch("topk: " + std::to_string(ranked_predictions.size()) +
                         " prediction rows but " + std::to_string(truths.size()) +
                         " truths");
  }
  if (k < 1) throw ConfigError("topk: k must be at least 1");
  if (truths.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto& ranked = ranked_predictions[i];
    const auto depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    for (std::size_t j = 0; j < depth; ++j) {
      if (ranked[j] == truths[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

double omega_all(std::span<const double> alpha, std::span<const double> alpha_offline) {
  if (alpha.size() != alpha_offline.size() || alpha.empty()) {
    throw LengthMismatch("omega: needs equal non-empty curves, got " +
                         std::to_string(alpha.size()) + " and " +
                         std::to_string(alpha_offline.size()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    if (alpha_offline[t] <= 0.0) {
      throw ZeroOffline("omega: reference accuracy at point " + std::to_string(t) +
                        " is " + std::to_string(alpha_offline[t]));
    }
    sum += alpha[t] / alpha_offline[t];
  }
  return sum / static_cast<double>(alpha.size());
}

EfficiencyScores efficiency_scores(double time_seconds, double max_time_seconds,
                                   double mem_bytes, double max_mem_bytes) {
  return {std::clamp(1.0 - time_seconds / max_time_seconds, 0.0, 1.0),
          std::clamp(1.0 - mem_bytes / max_mem_bytes, 0.0, 1.0)};
}

namespace {

double evaluate_at_point(const Predictor& predictor, const FeatureBank& test,
                         const std::vector<bool>& seen, EvalScope scope, int k) {
  std::vector<std::vector<int>> ranked;
  std::vector<std::int32_t> truths;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    const std::int32_t truth = test.labels[static_cast<std::size_t>(i)];
    if (scope == EvalScope::kSeenClassesOnly &&
        (truth >= static_cast<std::int32_t>(seen.size()) ||
         !seen[static_cast<std::size_t>(truth)])) {
      continue;
    }
    std::vector<int> labels;
    for (const ScoredLabel& s : predictor.predict_ranked(test.feature_row(i), k)) {
      labels.push_back(s.label);
    }
    ranked.push_back(std::move(labels));
    truths.push_back(truth);
  }
  return topk_accuracy(ranked, truths, k);
}

}  // namespace

StreamEvalResult run_streaming_eval(const FeatureBank& train, const FeatureBank& test,
                                    const StreamPlan& plan, StreamingLearner& learner,
                                    MetricKind metric, EvalScope scope) {
  if (static_cast<std::int64_t>(plan.order.size()) != train.n()) {
    throw BadShape("plan length " + std::to_string(plan.order.size()) +
                   " does not match train bank size " + std::to_string(train.n()));
  }
  if (train.dim() != test.dim()) {
    throw DimensionMismatch("train bank dim " + std::to_string(train.dim()) +
                            " does not match test bank dim " + std::to_string(test.dim()));
  }
  const int k = metric_k(metric);
  const auto n = static_cast<std::int64_t>(plan.order.size());

  StreamEvalResult result;
  result.curve.metric = metric;
  result.curve.scope = scope;

  std::vector<bool> seen(static_cast<std::size_t>(train.num_classes), false);
  using clock = std::chrono::steady_clock;

  const std::int64_t base = plan.base_init_len;
  Eigen::MatrixXd base_features(base, train.dim());
  std::vector<std::int32_t> base_labels(static_cast<std::size_t>(base));
  for (std::int64_t i = 0; i < base; ++i) {
    const auto row = plan.order[static_cast<std::size_t>(i)];
    base_features.row(i) = train.features.row(row).cast<double>();
    base_labels[static_cast<std::size_t>(i)] = train.labels[static_cast<std::size_t>(row)];
    seen[static_cast<std::size_t>(base_labels[static_cast<std::size_t>(i)])] = true;
  }
  {
    const auto start = clock::now();
    learner.base_fit(base_features, base_labels);
    result.learn_seconds += std::chrono::duration<double>(clock::now() - start).count();
  }

  auto next_eval = plan.eval_points.begin();
  const auto eval_if_due = [&](std::int64_t position) {
    while (next_eval != plan.eval_points.end() && *next_eval == position) {
      const auto predictor = learner.snapshot();
      result.curve.points.push_back(
          {position, evaluate_at_point(*predictor, test, seen, scope, k)});
      ++next_eval;
    }
  };
  eval_if_due(base);

  for (std::int64_t i = base; i < n; ++i) {
    const auto row = plan.order[static_cast<std::size_t>(i)];
    const Eigen::VectorXd z = train.feature_row(row);
    const int y = train.labels[static_cast<std::size_t>(row)];
    {
      const auto start = clock::now();
      learner.learn(z, y);
      result.learn_seconds += std::chrono::duration<double>(clock::now() - start).count();
    }
    seen[static_cast<std::size_t>(y)] = true;
    eval_if_due(i + 1);
  }

  result.memory_bytes = learner.memory_bytes();
  return result;
}

LearningCurve predictor_curve(const Predictor& predictor, const FeatureBank& test,
                              const FeatureBank& train, const StreamPlan& plan,
                              MetricKind metric, EvalScope scope) {
  if (static_cast<std::int64_t>(plan.order.size()) != train.n()) {
    throw BadShape("plan length " + std::to_string(plan.order.size()) +
                   " does not match train bank size " + std::to_string(train.n()));
  }
  const int k = metric_k(metric);
  LearningCurve curve;
  curve.metric = metric;
  curve.scope = scope;

  std::vector<bool> seen(static_cast<std::size_t>(train.num_classes), false);
  std::int64_t consumed = 0;
  for (std::int64_t point : plan.eval_points) {
    for (; consumed < point; ++consumed) {
      const auto row = plan.order[static_cast<std::size_t>(consumed)];
      seen[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(row)])] = true;
    }
    curve.points.push_back({point, evaluate_at_point(predictor, test, seen, scope, k)});
  }
  return curve;
}

}  // namespace streamlda
