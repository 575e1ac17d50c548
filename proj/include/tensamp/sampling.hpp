#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "tensamp/tensor.hpp"

namespace tensamp {

/// Y1 = X(horizontal, :, :) and Y2 = X(:, :, frontal).
struct SlabPlan {
  SelectionSet horizontal;
  SelectionSet frontal;
};

/// Observes the fibers X(i, j, :) for i in rows, j in cols.
struct FiberPattern {
  SelectionSet rows, cols;
};

/// Observes the sub-tensor X(rows, cols, fibers).
struct EntryPattern {
  SelectionSet rows, cols, fibers;
};

enum class PlanKind { slab, fiber, entry };
const char* kind_name(PlanKind k);
/// Throws ValidationError for anything but "slab", "fiber" or "entry".
PlanKind kind_from_name(const std::string& name);

class SamplingPlan {
 public:
  SamplingPlan() = default;
  /// Each factory throws ShapeError when a selection's ambient differs from dims
  /// or a pattern list is empty.
  static SamplingPlan slab(const Dims& dims, SlabPlan p);
  static SamplingPlan fiber(const Dims& dims, std::vector<FiberPattern> p);
  static SamplingPlan entry(const Dims& dims, std::vector<EntryPattern> p);

  PlanKind kind() const { return static_cast<PlanKind>(body_.index()); }
  const Dims& dims() const { return dims_; }
  const SlabPlan& slab_plan() const { return std::get<SlabPlan>(body_); }
  const std::vector<FiberPattern>& fiber_patterns() const { return std::get<std::vector<FiberPattern>>(body_); }
  const std::vector<EntryPattern>& entry_patterns() const { return std::get<std::vector<EntryPattern>>(body_); }

  /// The observed box of every sub-tensor, in apply() order.
  std::vector<EntryPattern> footprints() const;

 private:
  Dims dims_{0, 0, 0};
  std::variant<SlabPlan, std::vector<FiberPattern>, std::vector<EntryPattern>> body_;
};

/// [Y1, Y2] for slab plans, [Y_1 .. Y_D] otherwise. Throws ShapeError on a dims mismatch.
std::vector<Tensor3> apply(const SamplingPlan& plan, const Tensor3& t);

struct Violation {
  std::string rule;  ///< "7a", "7b", "7c", "9a" .. "9d", or "slab"
  std::string message;
};

struct RuleVerdict {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  bool violates(const std::string& rule) const;
  std::string summary() const;
};

/// (a) every pattern has >= 2 rows and cols; (b) the patterns touch every row
/// and column; (c) every pattern shares a row or column with another and the
/// sharing graph is connected.
RuleVerdict validate_fiber_rules(const std::vector<FiberPattern>& patterns, const Dims& dims);
/// (a) >= 2 indices per mode; (b) every row, column and fiber touched; (c) every
/// pattern overlaps another in two modes and that graph is connected; (d) the
/// graph restricted to overlaps with >= 2 indices in some mode is connected.
RuleVerdict validate_entry_rules(const std::vector<EntryPattern>& patterns, const Dims& dims);
/// Dispatches on the plan kind; slab plans need >= 2 horizontal and frontal slabs.
RuleVerdict validate(const SamplingPlan& plan);

struct GenericVerdict {
  bool recoverable = false;
  std::size_t required = 0;  ///< 4 * ceil_pow2(F)
  std::size_t bound = 0;     ///< the min{...} of the deciding condition
  std::string binding;       ///< which product attains the bound
  std::size_t max_rank = 0;  ///< largest F this plan provably supports
  /// Slab only: which alternative decides (1: decompose Y1, 2: decompose Y2).
  int alternative = 0;
  std::array<bool, 2> alternatives_ok{false, false};
  std::array<std::size_t, 2> alternative_bounds{0, 0};
  std::string summary() const;
};

/// Generic (almost-sure) recoverability of a rank-F tensor from the plan.
/// When both slab alternatives hold, the one with the smaller sub-tensor to
/// decompose is reported.
GenericVerdict check_generic(const SamplingPlan& plan, std::size_t rank);

struct DeterministicVerdict {
  bool recoverable = false;
  std::string failed;  ///< first failed condition, empty when recoverable
  std::string detail;
};

/// Kruskal-rank conditions on the selected factor rows; fiber/entry plans also
/// require factors without repeated entries. Throws ValidationError when the
/// rank exceeds the Kruskal brute-force cap.
DeterministicVerdict check_deterministic(const SamplingPlan& plan, const FactorTriple& factors);

/// True when two entries of m agree to 1e-9 relative.
bool has_repeated_entries(const Matrix& m);

/// Distinct observed coordinates (overlaps counted once).
std::size_t observed_count(const SamplingPlan& plan);
double sampling_ratio(const SamplingPlan& plan);

/// Equispaced plan. Slab: horizontal = rows at strides[0], frontal = fibers at
/// strides[2]. Fiber/entry: D = max stride patterns, pattern d takes the indices
/// congruent to offset + d modulo each stride; every fiber pattern also samples
/// the first column of pattern 0 (a fully sampled lateral slab) and every entry
/// pattern the first two rows and first column of pattern 0, which chains the
/// patterns. Throws ValidationError naming the rule the parameters cannot meet.
SamplingPlan make_regular_plan(PlanKind kind, const Dims& dims, const std::array<std::size_t, 3>& strides,
                               const std::array<std::size_t, 3>& offsets = {0, 0, 0});

}  // namespace tensamp
