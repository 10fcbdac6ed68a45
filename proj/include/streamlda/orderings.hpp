#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamlda/feature_bank.hpp"

namespace streamlda {

enum class OrderingKind { kIid, kClassIid, kInstance, kClassInstance };

std::string ordering_kind_name(OrderingKind kind);
OrderingKind ordering_kind_from_name(const std::string& name);

/// A stream extent measured in samples or in whole classes. Class units only
/// make sense for orderings that keep classes contiguous.
struct ScheduleSpec {
  enum class Unit { kSamples, kClasses };
  Unit unit = Unit::kSamples;
  std::int64_t amount = 0;

  static ScheduleSpec samples(std::int64_t n) { return {Unit::kSamples, n}; }
  static ScheduleSpec classes(std::int64_t m) { return {Unit::kClasses, m}; }
};

/// A fully resolved streaming run over one bank: the visit order, the prefix
/// consumed by base initialization, and the positions at which the learner
/// is evaluated. Plans are immutable once built.
struct StreamPlan {
  std::vector<std::int64_t> order;
  OrderingKind kind = OrderingKind::kIid;
  std::uint64_t seed = 0;
  std::int64_t base_init_len = 0;
  std::vector<std::int64_t> eval_points;
};

/// Builds a seeded plan over the bank:
///   iid            - one global shuffle
///   class_iid      - classes contiguous in a seeded random class order,
///                    samples shuffled within each class
///   instance       - whole instances in a seeded random order, frames
///                    ascending by frame_index inside each instance
///   class_instance - classes in seeded random order, instances seeded
///                    within each class, frames ascending
///
/// base_init resolves to a sample count (Classes(m) takes the total size of
/// the first m classes in the realized order). Evaluation positions run from
/// the end of base init in eval_every strides; a stride whose remaining tail
/// would be shorter than one full stride is dropped in favour of the final
/// position, which is always evaluated. Class-unit schedules require a
/// class-contiguous ordering, and class-unit eval additionally requires a
/// class-unit base.
///
/// Errors: EmptyBank; MissingMetadata (instance kinds without metadata);
/// SpecTooLarge (base init exceeding the bank); ScheduleError (invalid or
/// incompatible schedule units).
StreamPlan make_plan(const FeatureBank& bank, OrderingKind kind, std::uint64_t seed,
                     const ScheduleSpec& base_init, const ScheduleSpec& eval_every);

struct PlanReport {
  bool pass = true;
  std::string first_violation;
};

/// Structural checks that need no bank: permutation property over [0, n),
/// base_init_len range, eval point monotonicity and bounds.
PlanReport validate_plan_structure(const StreamPlan& plan);

/// Full validation: structure plus the kind-specific constraints read from
/// the bank (class contiguity, instance contiguity, ascending frames).
/// Reports the first violation instead of throwing.
PlanReport validate_plan(const FeatureBank& bank, const StreamPlan& plan);

/// Text manifest: a one-line JSON header followed by one order index per
/// line. Round trips exactly.
void write_plan(const StreamPlan& plan, const std::string& path);
StreamPlan read_plan(const std::string& path);

}  // namespace streamlda
