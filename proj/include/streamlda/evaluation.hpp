#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamlda/feature_bank.hpp"
#include "streamlda/learner.hpp"
#include "streamlda/orderings.hpp"

namespace streamlda {

enum class MetricKind { kTop1, kTop5 };

inline int metric_k(MetricKind metric) { return metric == MetricKind::kTop1 ? 1 : 5; }

std::string metric_kind_name(MetricKind metric);
MetricKind metric_kind_from_name(const std::string& name);

/// Whether accuracy at an evaluation point is measured over the whole test
/// set or only over test samples of classes the stream has emitted so far.
enum class EvalScope { kAllTestData, kSeenClassesOnly };

std::string eval_scope_name(EvalScope scope);
EvalScope eval_scope_from_name(const std::string& name);

struct CurvePoint {
  std::int64_t position;
  double accuracy;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  MetricKind metric = MetricKind::kTop1;
  EvalScope scope = EvalScope::kAllTestData;

  std::vector<double> accuracies() const;
};

/// Fraction of rows whose true label appears among the first k ranked
/// predictions. Zero rows give 0.0. Throws LengthMismatch when the two
/// lists disagree, ConfigError when k < 1.
double topk_accuracy(const std::vector<std::vector<int>>& ranked_predictions,
                     std::span<const std::int32_t> truths, int k);

/// Mean over evaluation points of accuracy normalized by the reference
/// accuracy at the same point: (1/T) * sum_t alpha[t] / alpha_offline[t].
/// Can exceed 1. Throws LengthMismatch on unequal or empty inputs and
/// ZeroOffline when any reference value is <= 0 (the ratio is undefined
/// there; clamping would silently corrupt the score).
double omega_all(std::span<const double> alpha, std::span<const double> alpha_offline);

struct EfficiencyScores {
  double ce;
  double me;
};

/// ce = 1 - time/max_time and me = 1 - mem/max_mem, both clamped to [0, 1].
/// Callers guarantee positive caps.
EfficiencyScores efficiency_scores(double time_seconds, double max_time_seconds,
                                   double mem_bytes, double max_mem_bytes);

struct StreamEvalResult {
  LearningCurve curve;
  double learn_seconds = 0.0;  // base fit plus streaming updates; evaluation excluded
  std::uint64_t memory_bytes = 0;
};

/// Runs one streaming experiment: feeds the plan's base prefix through the
/// learner's base-fit path, then streams the remaining samples one at a
/// time, snapshotting and scoring the learner on the test bank at every
/// eval point. The seen-class set at a point is taken from the labels the
/// plan has emitted up to it. Wall time covers only base_fit and learn
/// calls. Learner errors propagate.
StreamEvalResult run_streaming_eval(const FeatureBank& train, const FeatureBank& test,
                                    const StreamPlan& plan, StreamingLearner& learner,
                                    MetricKind metric, EvalScope scope);

/// Scores one fixed predictor at every eval point of the plan, applying the
/// same seen-class restriction the streaming run would see. This produces
/// the normalizer curve for omega_all: under all_test_data scope it is flat,
/// under seen_classes_only it follows the growing class set.
LearningCurve predictor_curve(const Predictor& predictor, const FeatureBank& test,
                              const FeatureBank& train, const StreamPlan& plan,
                              MetricKind metric, EvalScope scope);

}  // namespace streamlda
