#include "streamlda/orderings.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "streamlda/errors.hpp"
#include "streamlda/rng.hpp"

namespace streamlda {

std::string ordering_kind_name(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::kIid: return "iid";
    case OrderingKind::kClassIid: return "class_iid";
    case OrderingKind::kInstance: return "instance";
    case OrderingKind::kClassInstance: return "class_instance";
  }
  throw ConfigError("unknown ordering kind");
}

OrderingKind ordering_kind_from_name(const std::string& name) {
  if (name == "iid") return OrderingKind::kIid;
  if (name == "class_iid") return OrderingKind::kClassIid;
  if (name == "instance") return OrderingKind::kInstance;
  if (name == "class_instance") return OrderingKind::kClassInstance;
  throw ConfigError("unknown ordering kind '" + name +
                    "' (expected iid, class_iid, instance, class_instance)");
}

namespace {

bool class_contiguous_kind(OrderingKind kind) {
  return kind == OrderingKind::kClassIid || kind == OrderingKind::kClassInstance;
}

bool instance_kind(OrderingKind kind) {
  return kind == OrderingKind::kInstance || kind == OrderingKind::kClassInstance;
}

// Distinct values in first-appearance order, so the shuffle input is
// independent of hash-map iteration order.
std::vector<std::int32_t> first_appearance_values(const std::vector<std::int64_t>& rows,
                                                  const std::vector<std::int32_t>& column) {
  std::vector<std::int32_t> values;
  std::unordered_set<std::int32_t> seen;
  for (std::int64_t r : rows) {
    const std::int32_t v = column[static_cast<std::size_t>(r)];
    if (seen.insert(v).second) values.push_back(v);
  }
  return values;
}

// Rows of one instance in ascending frame order.
std::vector<std::int64_t> instance_rows_by_frame(const FeatureBank& bank,
                                                 std::vector<std::int64_t> rows) {
  std::stable_sort(rows.begin(), rows.end(), [&](std::int64_t a, std::int64_t b) {
    return bank.frame_indices[static_cast<std::size_t>(a)] <
           bank.frame_indices[static_cast<std::size_t>(b)];
  });
  return rows;
}

void require_instance_metadata(const FeatureBank& bank) {
  for (Eigen::Index i = 0; i < bank.n(); ++i) {
    if (bank.instance_ids[static_cast<std::size_t>(i)] < 0 ||
        bank.frame_indices[static_cast<std::size_t>(i)] < 0) {
      throw MissingMetadata("row " + std::to_string(i) +
                            " lacks instance/frame metadata required by instance orderings");
    }
  }
}

}  // namespace

StreamPlan make_plan(const FeatureBank& bank, OrderingKind kind, std::uint64_t seed,
                     const ScheduleSpec& base_init, const ScheduleSpec& eval_every) {
  if (bank.n() == 0) throw EmptyBank("cannot build a plan over an empty bank");
  const std::int64_t n = bank.n();
  Rng rng(seed);

  StreamPlan plan;
  plan.kind = kind;
  plan.seed = seed;

  // Realized class boundaries (cumulative sample counts), populated only for
  // class-contiguous kinds; Classes-unit schedules index into this.
  std::vector<std::int64_t> class_boundaries;

  switch (kind) {
    case OrderingKind::kIid: {
      plan.order.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) plan.order[static_cast<std::size_t>(i)] = i;
      rng.shuffle(plan.order);
      break;
    }
    case OrderingKind::kClassIid:
    case OrderingKind::kClassInstance: {
      if (kind == OrderingKind::kClassInstance) require_instance_metadata(bank);
      std::vector<std::vector<std::int64_t>> rows_of_class(
          static_cast<std::size_t>(bank.num_classes));
      for (std::int64_t i = 0; i < n; ++i) {
        rows_of_class[static_cast<std::size_t>(bank.labels[static_cast<std::size_t>(i)])]
            .push_back(i);
      }
      std::vector<std::int32_t> class_order;
      for (std::int32_t c = 0; c < bank.num_classes; ++c) {
        if (!rows_of_class[static_cast<std::size_t>(c)].empty()) class_order.push_back(c);
      }
      rng.shuffle(class_order);
      for (std::int32_t c : class_order) {
        auto& rows = rows_of_class[static_cast<std::size_t>(c)];
        if (kind == OrderingKind::kClassIid) {
          rng.shuffle(rows);
          plan.order.insert(plan.order.end(), rows.begin(), rows.end());
        } else {
          std::vector<std::int32_t> instances = first_appearance_values(rows, bank.instance_ids);
          rng.shuffle(instances);
          std::unordered_map<std::int32_t, std::vector<std::int64_t>> rows_of_instance;
          for (std::int64_t r : rows) {
            rows_of_instance[bank.instance_ids[static_cast<std::size_t>(r)]].push_back(r);
          }
          for (std::int32_t inst : instances) {
            const auto sorted = instance_rows_by_frame(bank, rows_of_instance[inst]);
            plan.order.insert(plan.order.end(), sorted.begin(), sorted.end());
          }
        }
        class_boundaries.push_back(static_cast<std::int64_t>(plan.order.size()));
      }
      break;
    }
    case OrderingKind::kInstance: {
      require_instance_metadata(bank);
      std::vector<std::int64_t> all_rows(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;
      std::vector<std::int32_t> instances = first_appearance_values(all_rows, bank.instance_ids);
      rng.shuffle(instances);
      std::unordered_map<std::int32_t, std::vector<std::int64_t>> rows_of_instance;
      for (std::int64_t r : all_rows) {
        rows_of_instance[bank.instance_ids[static_cast<std::size_t>(r)]].push_back(r);
      }
      for (std::int32_t inst : instances) {
        const auto sorted = instance_rows_by_frame(bank, rows_of_instance[inst]);
        plan.order.insert(plan.order.end(), sorted.begin(), sorted.end());
      }
      break;
    }
  }

  // Resolve base initialization length.
  if (base_init.amount < 0) throw ScheduleError("base init amount must be non-negative");
  if (base_init.unit == ScheduleSpec::Unit::kSamples) {
    if (base_init.amount > n) {
      throw SpecTooLarge("base init of " + std::to_string(base_init.amount) +
                         " samples exceeds bank size " + std::to_string(n));
    }
    plan.base_init_len = base_init.amount;
  } else {
    if (!class_contiguous_kind(kind)) {
      throw ScheduleError("class-unit base init requires a class-contiguous ordering");
    }
    if (base_init.amount > static_cast<std::int64_t>(class_boundaries.size())) {
      throw SpecTooLarge("base init of " + std::to_string(base_init.amount) +
                         " classes exceeds the " + std::to_string(class_boundaries.size()) +
                         " classes present");
    }
    plan.base_init_len =
        base_init.amount == 0
            ? 0
            : class_boundaries[static_cast<std::size_t>(base_init.amount) - 1];
  }

  // Evaluation positions: strides from the end of base init; a stride whose
  // remaining tail is shorter than one full stride is skipped because the
  // final position (always present) covers it.
  if (eval_every.amount < 1) throw ScheduleError("eval stride must be at least 1");
  if (eval_every.unit == ScheduleSpec::Unit::kSamples) {
    for (std::int64_t p = plan.base_init_len; p <= n - eval_every.amount;
         p += eval_every.amount) {
      if (p > 0) plan.eval_points.push_back(p);
    }
  } else {
    if (!class_contiguous_kind(kind)) {
      throw ScheduleError("class-unit eval requires a class-contiguous ordering");
    }
    if (base_init.unit != ScheduleSpec::Unit::kClasses) {
      throw ScheduleError("class-unit eval requires a class-unit base init");
    }
    const auto total_classes = static_cast<std::int64_t>(class_boundaries.size());
    for (std::int64_t j = base_init.amount; j <= total_classes - eval_every.amount;
         j += eval_every.amount) {
      if (j > 0) plan.eval_points.push_back(class_boundaries[static_cast<std::size_t>(j) - 1]);
    }
  }
  if (plan.eval_points.empty() || plan.eval_points.back() != n) {
    plan.eval_points.push_back(n);
  }
  return plan;
}

PlanReport validate_plan_structure(const StreamPlan& plan) {
  const auto n = static_cast<std::int64_t>(plan.order.size());
  std::vector<bool> seen(plan.order.size(), false);
  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    const std::int64_t idx = plan.order[i];
    if (idx < 0 || idx >= n) {
      return {false, "not a permutation: index " + std::to_string(idx) +
                         " at position " + std::to_string(i) + " outside [0, " +
                         std::to_string(n) + ")"};
    }
    if (seen[static_cast<std::size_t>(idx)]) {
      return {false, "not a permutation: index " + std::to_string(idx) +
                         " appears more than once"};
    }
    seen[static_cast<std::size_t>(idx)] = true;
  }
  if (plan.base_init_len < 0 || plan.base_init_len > n) {
    return {false, "base_init_len " + std::to_string(plan.base_init_len) +
                       " outside [0, " + std::to_string(n) + "]"};
  }
  if (plan.eval_points.empty()) return {false, "no eval points"};
  std::int64_t prev = plan.base_init_len - 1;
  for (std::int64_t p : plan.eval_points) {
    if (p < plan.base_init_len || p > n) {
      return {false, "eval point " + std::to_string(p) + " outside [" +
                         std::to_string(plan.base_init_len) + ", " + std::to_string(n) + "]"};
    }
    if (p <= prev) {
      return {false, "eval points not strictly increasing at " + std::to_string(p)};
    }
    prev = p;
  }
  if (plan.eval_points.back() != n) {
    return {false, "last eval point " + std::to_string(plan.eval_points.back()) +
                       " is not the stream end " + std::to_string(n)};
  }
  return {};
}

PlanReport validate_plan(const FeatureBank& bank, const StreamPlan& plan) {
  if (static_cast<std::int64_t>(plan.order.size()) != bank.n()) {
    return {false, "plan length " + std::to_string(plan.order.size()) +
                       " does not match bank size " + std::to_string(bank.n())};
  }
  PlanReport structure = validate_plan_structure(plan);
  if (!structure.pass) return structure;

  if (class_contiguous_kind(plan.kind)) {
    std::unordered_set<std::int32_t> finished;
    std::int32_t current = -1;
    for (std::size_t i = 0; i < plan.order.size(); ++i) {
      const std::int32_t label =
          bank.labels[static_cast<std::size_t>(plan.order[i])];
      if (label == current) continue;
      if (finished.count(label)) {
        return {false, "class " + std::to_string(label) +
                           " not contiguous at stream position " + std::to_string(i)};
      }
      if (current >= 0) finished.insert(current);
      current = label;
    }
  }
  if (instance_kind(plan.kind)) {
    std::unordered_set<std::int32_t> finished;
    std::int32_t current = -1;
    std::int32_t last_frame = -1;
    for (std::size_t i = 0; i < plan.order.size(); ++i) {
      const auto row = static_cast<std::size_t>(plan.order[i]);
      const std::int32_t inst = bank.instance_ids[row];
      const std::int32_t frame = bank.frame_indices[row];
      if (inst < 0 || frame < 0) {
        return {false, "row " + std::to_string(plan.order[i]) +
                           " lacks instance metadata required by kind " +
                           ordering_kind_name(plan.kind)};
      }
      if (inst != current) {
        if (finished.count(inst)) {
          return {false, "instance " + std::to_string(inst) +
                             " interleaved at stream position " + std::to_string(i)};
        }
        if (current >= 0) finished.insert(current);
        current = inst;
        last_frame = -1;
      }
      if (frame <= last_frame) {
        return {false, "instance " + std::to_string(inst) +
                           " violates ascending frame order at stream position " +
                           std::to_string(i)};
      }
      last_frame = frame;
    }
  }
  return {};
}

void write_plan(const StreamPlan& plan, const std::string& path) {
  nlohmann::json header;
  header["kind"] = ordering_kind_name(plan.kind);
  header["seed"] = plan.seed;
  header["base_init_len"] = plan.base_init_len;
  header["eval_points"] = plan.eval_points;
  header["n"] = plan.order.size();

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open plan manifest for writing: " + path);
  out << header.dump() << "\n";
  for (std::int64_t idx : plan.order) out << idx << "\n";
  if (!out) throw IoError("failed to write plan manifest: " + path);
}

StreamPlan read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plan manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("plan manifest is empty: " + path);

  StreamPlan plan;
  std::size_t n = 0;
  try {
    const nlohmann::json header = nlohmann::json::parse(line);
    plan.kind = ordering_kind_from_name(header.at("kind").get<std::string>());
    plan.seed = header.at("seed").get<std::uint64_t>();
    plan.base_init_len = header.at("base_init_len").get<std::int64_t>();
    plan.eval_points = header.at("eval_points").get<std::vector<std::int64_t>>();
    n = header.at("n").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("plan manifest header is malformed: " + std::string(e.what()));
  }

  plan.order.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      std::size_t consumed = 0;
      plan.order.push_back(std::stoll(line, &consumed));
      if (consumed != line.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UnparsableNumber("plan manifest line '" + line + "' is not an index");
    }
  }
  if (plan.order.size() != n) {
    throw TruncatedPayload("plan manifest declares " + std::to_string(n) +
                           " indices but holds " + std::to_string(plan.order.size()));
  }
  return plan;
}

}  // namespace streamlda
