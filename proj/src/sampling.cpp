#include "tensamp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tensamp/error.hpp"

namespace tensamp {

const char* kind_name(PlanKind k) {
  switch (k) {
    case PlanKind::slab: return "slab";
    case PlanKind::fiber: return "fiber";
    case PlanKind::entry: return "entry";
  }
  return "?";
}

PlanKind kind_from_name(const std::string& name) {
  if (name == "slab") return PlanKind::slab;
  if (name == "fiber") return PlanKind::fiber;
  if (name == "entry") return PlanKind::entry;
  throw ValidationError("unknown plan kind '" + name + "' (expected slab, fiber or entry)");
}

namespace {

void check_ambient(const SelectionSet& s, std::size_t dim, const char* what) {
  if (s.ambient() != dim) {
    throw ShapeError(std::string(what) + " selection has ambient " + std::to_string(s.ambient()) + ", expected " +
                     std::to_string(dim));
  }
}

}  // namespace

SamplingPlan SamplingPlan::slab(const Dims& dims, SlabPlan p) {
  check_ambient(p.horizontal, dims[0], "horizontal");
  check_ambient(p.frontal, dims[2], "frontal");
  SamplingPlan out;
  out.dims_ = dims;
  out.body_ = std::move(p);
  return out;
}

SamplingPlan SamplingPlan::fiber(const Dims& dims, std::vector<FiberPattern> p) {
  if (p.empty()) throw ShapeError("fiber plan has no patterns");
  for (const auto& q : p) {
    check_ambient(q.rows, dims[0], "row");
    check_ambient(q.cols, dims[1], "column");
  }
  SamplingPlan out;
  out.dims_ = dims;
  out.body_ = std::move(p);
  return out;
}

SamplingPlan SamplingPlan::entry(const Dims& dims, std::vector<EntryPattern> p) {
  if (p.empty()) throw ShapeError("entry plan has no patterns");
  for (const auto& q : p) {
    check_ambient(q.rows, dims[0], "row");
    check_ambient(q.cols, dims[1], "column");
    check_ambient(q.fibers, dims[2], "fiber");
  }
  SamplingPlan out;
  out.dims_ = dims;
  out.body_ = std::move(p);
  return out;
}

std::vector<EntryPattern> SamplingPlan::footprints() const {
  const auto all = [&](std::size_t m) { return SelectionSet::all(dims_[m]); };
  std::vector<EntryPattern> out;
  switch (kind()) {
    case PlanKind::slab:
      out.push_back({slab_plan().horizontal, all(1), all(2)});
      out.push_back({all(0), all(1), slab_plan().frontal});
      break;
    case PlanKind::fiber:
      for (const auto& p : fiber_patterns()) out.push_back({p.rows, p.cols, all(2)});
      break;
    case PlanKind::entry: out = entry_patterns(); break;
  }
  return out;
}

std::vector<Tensor3> apply(const SamplingPlan& plan, const Tensor3& t) {
  if (plan.dims() != t.dims()) throw ShapeError("apply: plan dims do not match the tensor");
  std::vector<Tensor3> out;
  for (const auto& fp : plan.footprints()) out.push_back(gather(t, fp.rows, fp.cols, fp.fibers));
  return out;
}

// ------------------------------------------------------------- validation

bool RuleVerdict::violates(const std::string& rule) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

std::string RuleVerdict::summary() const {
  if (valid()) return "valid";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << "rule " << violations[i].rule << ": " << violations[i].message;
  }
  return os.str();
}

namespace {

std::size_t overlap(const SelectionSet& a, const SelectionSet& b) { return intersect(a, b).size(); }

void check_union(const std::vector<const SelectionSet*>& sets, std::size_t dim, const char* mode, const std::string& rule,
                 RuleVerdict& v) {
  std::vector<bool> seen(dim, false);
  for (const auto* s : sets)
    for (const auto i : *s) seen[i] = true;
  const auto miss = std::find(seen.begin(), seen.end(), false);
  if (miss != seen.end()) {
    v.violations.push_back({rule, std::string("no pattern samples ") + mode + " " +
                                      std::to_string(miss - seen.begin()) + " (0-based)"});
  }
}

bool connected(std::size_t n, const std::vector<std::vector<bool>>& adj) {
  if (n <= 1) return true;
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (std::size_t w = 0; w < n; ++w) {
      if (adj[u][w] && !seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

/// Each pattern needs a partner and the graph must be connected.
void check_graph(const std::vector<std::vector<bool>>& adj, const std::string& rule, const std::string& what, RuleVerdict& v) {
  const std::size_t n = adj.size();
  if (n <= 1) return;
  for (std::size_t d = 0; d < n; ++d) {
    if (std::none_of(adj[d].begin(), adj[d].end(), [](bool b) { return b; })) {
      v.violations.push_back({rule, "pattern " + std::to_string(d) + " has no " + what + " with any other pattern"});
      return;
    }
  }
  if (!connected(n, adj)) v.violations.push_back({rule, "the " + what + " graph between patterns is disconnected"});
}

}  // namespace

RuleVerdict validate_fiber_rules(const std::vector<FiberPattern>& patterns, const Dims& dims) {
  RuleVerdict v;
  if (patterns.empty()) {
    v.violations.push_back({"7a", "no patterns"});
    return v;
  }
  for (std::size_t d = 0; d < patterns.size(); ++d) {
    const auto& p = patterns[d];
    if (p.rows.ambient() != dims[0] || p.cols.ambient() != dims[1]) {
      v.violations.push_back({"7a", "pattern " + std::to_string(d) + " does not match the tensor dims"});
      return v;
    }
    if (p.rows.size() < 2 || p.cols.size() < 2) {
      v.violations.push_back({"7a", "pattern " + std::to_string(d) + " has " + std::to_string(p.rows.size()) + " rows and " +
                                        std::to_string(p.cols.size()) + " columns (need >= 2 each)"});
    }
  }
  std::vector<const SelectionSet*> rows, cols;
  for (const auto& p : patterns) {
    rows.push_back(&p.rows);
    cols.push_back(&p.cols);
  }
  check_union(rows, dims[0], "row", "7b", v);
  check_union(cols, dims[1], "column", "7b", v);
  const std::size_t n = patterns.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      adj[a][b] = adj[b][a] = overlap(patterns[a].rows, patterns[b].rows) > 0 || overlap(patterns[a].cols, patterns[b].cols) > 0;
  check_graph(adj, "7c", "shared row or column", v);
  return v;
}

RuleVerdict validate_entry_rules(const std::vector<EntryPattern>& patterns, const Dims& dims) {
  RuleVerdict v;
  if (patterns.empty()) {
    v.violations.push_back({"9a", "no patterns"});
    return v;
  }
  for (std::size_t d = 0; d < patterns.size(); ++d) {
    const auto& p = patterns[d];
    if (p.rows.ambient() != dims[0] || p.cols.ambient() != dims[1] || p.fibers.ambient() != dims[2]) {
      v.violations.push_back({"9a", "pattern " + std::to_string(d) + " does not match the tensor dims"});
      return v;
    }
    if (p.rows.size() < 2 || p.cols.size() < 2 || p.fibers.size() < 2) {
      v.violations.push_back({"9a", "pattern " + std::to_string(d) + " has sizes " + std::to_string(p.rows.size()) + "x" +
                                        std::to_string(p.cols.size()) + "x" + std::to_string(p.fibers.size()) +
                                        " (need >= 2 in every mode)"});
    }
  }
  std::vector<const SelectionSet*> rows, cols, fibers;
  for (const auto& p : patterns) {
    rows.push_back(&p.rows);
    cols.push_back(&p.cols);
    fibers.push_back(&p.fibers);
  }
  check_union(rows, dims[0], "row", "9b", v);
  check_union(cols, dims[1], "column", "9b", v);
  check_union(fibers, dims[2], "fiber", "9b", v);
  const std::size_t n = patterns.size();
  std::vector<std::vector<bool>> adj_c(n, std::vector<bool>(n, false)), adj_d = adj_c;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::array<std::size_t, 3> ov{overlap(patterns[a].rows, patterns[b].rows), overlap(patterns[a].cols, patterns[b].cols),
                                          overlap(patterns[a].fibers, patterns[b].fibers)};
      const auto shared_modes = std::count_if(ov.begin(), ov.end(), [](std::size_t x) { return x > 0; });
      adj_c[a][b] = adj_c[b][a] = shared_modes >= 2;
      adj_d[a][b] = adj_d[b][a] = shared_modes >= 2 && *std::max_element(ov.begin(), ov.end()) >= 2;
    }
  const std::size_t before = v.violations.size();
  check_graph(adj_c, "9c", "two-mode overlap", v);
  if (v.violations.size() == before) check_graph(adj_d, "9d", "two-mode overlap with >= 2 shared indices in one mode", v);
  return v;
}

RuleVerdict validate(const SamplingPlan& plan) {
  switch (plan.kind()) {
    case PlanKind::slab: {
      RuleVerdict v;
      const auto& s = plan.slab_plan();
      if (s.horizontal.size() < 2) v.violations.push_back({"slab", "need >= 2 horizontal slabs, got " + std::to_string(s.horizontal.size())});
      if (s.frontal.size() < 2) v.violations.push_back({"slab", "need >= 2 frontal slabs, got " + std::to_string(s.frontal.size())});
      return v;
    }
    case PlanKind::fiber: return validate_fiber_rules(plan.fiber_patterns(), plan.dims());
    case PlanKind::entry: return validate_entry_rules(plan.entry_patterns(), plan.dims());
  }
  return {};
}

// ---------------------------------------------------------- identifiability

namespace {

std::size_t floor_pow2(std::size_t x) {
  if (x == 0) return 0;
  std::size_t p = 1;
  while (p <= x / 2) p <<= 1;
  return p;
}

/// Largest F with 4 * ceil_pow2(F) <= bound.
std::size_t max_rank_for(std::size_t bound) { return floor_pow2(bound / 4); }

struct Candidate {
  std::size_t value;
  std::string name;
};

Candidate min_of(std::initializer_list<Candidate> cs) {
  Candidate best = *cs.begin();
  for (const auto& c : cs)
    if (c.value < best.value) best = c;
  return best;
}

}  // namespace

std::string GenericVerdict::summary() const {
  std::ostringstream os;
  os << (recoverable ? "recoverable" : "not provably recoverable") << ": min bound " << bound << " (" << binding << ") vs 4*ceil_pow2(F) = "
     << required << "; provable up to F = " << max_rank;
  if (alternative != 0) os << "; slab alternative " << alternative;
  return os.str();
}

GenericVerdict check_generic(const SamplingPlan& plan, std::size_t rank) {
  if (rank == 0) throw ValidationError("rank must be >= 1");
  GenericVerdict v;
  v.required = 4 * ceil_pow2(rank);
  const auto [I, J, K] = plan.dims();
  switch (plan.kind()) {
    case PlanKind::slab: {
      const std::size_t I1 = plan.slab_plan().horizontal.size(), K2 = plan.slab_plan().frontal.size();
      const Candidate alt1 = min_of({{I1 * J, "I1*J"}, {J * K, "J*K"}, {I1 * K, "I1*K"}, {4 * J * K2, "4*J*K2"}});
      const Candidate alt2 = min_of({{I * J, "I*J"}, {J * K2, "J*K2"}, {I * K2, "I*K2"}, {4 * I1 * J, "4*I1*J"}});
      v.alternative_bounds = {alt1.value, alt2.value};
      v.alternatives_ok = {alt1.value >= v.required, alt2.value >= v.required};
      v.max_rank = std::max(max_rank_for(alt1.value), max_rank_for(alt2.value));
      int pick = 0;
      if (v.alternatives_ok[0] && v.alternatives_ok[1]) {
        pick = I1 * J * K <= I * J * K2 ? 1 : 2;
      } else if (v.alternatives_ok[0]) {
        pick = 1;
      } else if (v.alternatives_ok[1]) {
        pick = 2;
      } else {
        pick = alt1.value >= alt2.value ? 1 : 2;
      }
      const Candidate& c = pick == 1 ? alt1 : alt2;
      v.alternative = pick;
      v.bound = c.value;
      v.binding = c.name;
      v.recoverable = v.alternatives_ok[0] || v.alternatives_ok[1];
      return v;
    }
    case PlanKind::fiber:
    case PlanKind::entry: {
      const auto fps = plan.footprints();
      Candidate worst{static_cast<std::size_t>(-1), ""};
      for (std::size_t d = 0; d < fps.size(); ++d) {
        const std::size_t Id = fps[d].rows.size(), Jd = fps[d].cols.size(), Kd = fps[d].fibers.size();
        const std::string p = "pattern " + std::to_string(d) + ": ";
        const bool fib = plan.kind() == PlanKind::fiber;
        const Candidate c = min_of({{Id * Jd, p + "I_d*J_d"}, {Jd * Kd, p + (fib ? "J_d*K" : "J_d*K_d")},
                                    {Id * Kd, p + (fib ? "I_d*K" : "I_d*K_d")}});
        if (c.value < worst.value) worst = c;
      }
      v.bound = worst.value;
      v.binding = worst.name;
      v.max_rank = max_rank_for(worst.value);
      v.recoverable = worst.value >= v.required;
      return v;
    }
  }
  return v;
}

bool has_repeated_entries(const Matrix& m) {
  std::vector<cplx> vals(m.data(), m.data() + m.size());
  std::sort(vals.begin(), vals.end(), [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
  constexpr double tol = 1e-9;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double ai = std::abs(vals[i]);
    for (std::size_t j = i + 1; j < vals.size(); ++j) {
      const double aj = std::abs(vals[j]);
      if (aj - ai > tol * aj) break;
      if (std::abs(vals[i] - vals[j]) <= tol * std::max(ai, aj)) return true;
    }
  }
  return false;
}

DeterministicVerdict check_deterministic(const SamplingPlan& plan, const FactorTriple& factors) {
  if (factors.dims() != plan.dims()) throw ShapeError("check_deterministic: factor dims do not match the plan");
  const std::size_t F = factors.rank();
  if (F > kKruskalCap) {
    throw ValidationError("check_deterministic: rank " + std::to_string(F) + " exceeds the Kruskal-rank cap of " +
                          std::to_string(kKruskalCap) + "; use check_generic");
  }
  const std::size_t need = 2 * F + 2;
  DeterministicVerdict v;
  if (plan.kind() == PlanKind::slab) {
    const auto& s = plan.slab_plan();
    const Matrix pa = select_rows(factors.A, s.horizontal), pc = select_rows(factors.C, s.frontal);
    const std::size_t kb = kruskal_rank(factors.B);
    const std::size_t sum1 = kruskal_rank(pa) + kb + kruskal_rank(factors.C);
    const bool rank1 = numerical_rank(khatri_rao(factors.B, pc)) == F;
    const std::size_t sum2 = kruskal_rank(factors.A) + kb + kruskal_rank(pc);
    const bool rank2 = numerical_rank(khatri_rao(factors.B, pa)) == F;
    std::ostringstream os;
    os << "alternative 1: k-sum " << sum1 << " vs " << need << ", B kr P3C " << (rank1 ? "full" : "deficient")
       << " column rank; alternative 2: k-sum " << sum2 << " vs " << need << ", B kr P1A " << (rank2 ? "full" : "deficient")
       << " column rank";
    v.detail = os.str();
    v.recoverable = (sum1 >= need && rank1) || (sum2 >= need && rank2);
    if (!v.recoverable) {
      v.failed = (sum1 < need && sum2 < need) ? "kruskal-sum" : "khatri-rao-full-column-rank";
    }
    return v;
  }
  for (const Mode m : kAllModes) {
    if (has_repeated_entries(factors.factor(m))) {
      v.failed = "repeated-entries";
      v.detail = std::string("factor for mode ") + mode_name(m) + " has repeated entries";
      return v;
    }
  }
  std::size_t worst = static_cast<std::size_t>(-1), worst_d = 0;
  const auto fps = plan.footprints();
  for (std::size_t d = 0; d < fps.size(); ++d) {
    const std::size_t sum = kruskal_rank(select_rows(factors.A, fps[d].rows)) + kruskal_rank(select_rows(factors.B, fps[d].cols)) +
                            kruskal_rank(select_rows(factors.C, fps[d].fibers));
    if (sum < worst) {
      worst = sum;
      worst_d = d;
    }
  }
  v.detail = "min k-sum " + std::to_string(worst) + " (pattern " + std::to_string(worst_d) + ") vs 2F+2 = " + std::to_string(need);
  v.recoverable = worst >= need;
  if (!v.recoverable) v.failed = "kruskal-sum";
  return v;
}

// ----------------------------------------------------------------- ratios

std::size_t observed_count(const SamplingPlan& plan) {
  const auto [I, J, K] = plan.dims();
  if (plan.kind() == PlanKind::slab) {
    const std::size_t I1 = plan.slab_plan().horizontal.size(), K2 = plan.slab_plan().frontal.size();
    return I1 * J * K + I * J * K2 - I1 * J * K2;
  }
  const auto fps = plan.footprints();
  const std::size_t D = fps.size();
  std::vector<std::vector<bool>> in_row(D, std::vector<bool>(I, false)), in_col(D, std::vector<bool>(J, false));
  for (std::size_t d = 0; d < D; ++d) {
    for (const auto i : fps[d].rows) in_row[d][i] = true;
    for (const auto j : fps[d].cols) in_col[d][j] = true;
  }
  // Per (i, j): the union of the fiber sets of every pattern containing it.
  std::vector<std::size_t> stamp(K, 0);
  std::size_t tick = 0, count = 0;
  std::vector<std::size_t> hits;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t i = 0; i < I; ++i) {
      hits.clear();
      for (std::size_t d = 0; d < D; ++d)
        if (in_row[d][i] && in_col[d][j]) hits.push_back(d);
      if (hits.empty()) continue;
      if (hits.size() == 1) {
        count += fps[hits[0]].fibers.size();
        continue;
      }
      ++tick;
      for (const auto d : hits)
        for (const auto k : fps[d].fibers)
          if (stamp[k] != tick) {
            stamp[k] = tick;
            ++count;
          }
    }
  return count;
}

double sampling_ratio(const SamplingPlan& plan) {
  const auto [I, J, K] = plan.dims();
  return static_cast<double>(observed_count(plan)) / (static_cast<double>(I) * static_cast<double>(J) * static_cast<double>(K));
}

// -------------------------------------------------------------- generator

namespace {

void check_stride(std::size_t stride, std::size_t dim, const char* mode) {
  if (stride == 0) throw ValidationError(std::string(mode) + " stride must be >= 1");
  if (stride > dim) {
    throw ValidationError(std::string(mode) + " stride " + std::to_string(stride) + " exceeds the dimension " + std::to_string(dim));
  }
}

std::vector<std::size_t> residue_class(std::size_t dim, std::size_t stride, std::size_t residue) {
  std::vector<std::size_t> out;
  for (std::size_t i = residue % stride; i < dim; i += stride) out.push_back(i);
  return out;
}

SelectionSet with_anchors(std::vector<std::size_t> idx, const std::vector<std::size_t>& anchors, std::size_t dim) {
  idx.insert(idx.end(), anchors.begin(), anchors.end());
  return SelectionSet::from_unsorted(std::move(idx), dim);
}

[[noreturn]] void unsatisfiable(const std::string& rule, const std::string& why) {
  throw ValidationError("regular plan cannot satisfy rule " + rule + ": " + why);
}

}  // namespace

SamplingPlan make_regular_plan(PlanKind kind, const Dims& dims, const std::array<std::size_t, 3>& strides,
                               const std::array<std::size_t, 3>& offsets) {
  const auto [I, J, K] = dims;
  if (I == 0 || J == 0 || K == 0) throw ValidationError("dims must be positive");
  switch (kind) {
    case PlanKind::slab: {
      check_stride(strides[0], I, "row");
      check_stride(strides[2], K, "fiber");
      const auto h = residue_class(I, strides[0], offsets[0]);
      const auto f = residue_class(K, strides[2], offsets[2]);
      if (h.size() < 2) unsatisfiable("slab", "only " + std::to_string(h.size()) + " horizontal slab(s) at this stride");
      if (f.size() < 2) unsatisfiable("slab", "only " + std::to_string(f.size()) + " frontal slab(s) at this stride");
      return SamplingPlan::slab(dims, {SelectionSet(h, I), SelectionSet(f, K)});
    }
    case PlanKind::fiber: {
      check_stride(strides[0], I, "row");
      check_stride(strides[1], J, "column");
      const std::size_t D = std::max(strides[0], strides[1]);
      const std::size_t anchor = offsets[1] % strides[1];
      std::vector<FiberPattern> ps;
      for (std::size_t d = 0; d < D; ++d) {
        auto rows = residue_class(I, strides[0], offsets[0] + d);
        auto cols = residue_class(J, strides[1], offsets[1] + d);
        if (rows.size() < 2) unsatisfiable("7a", "pattern " + std::to_string(d) + " gets " + std::to_string(rows.size()) + " row(s)");
        SelectionSet c = D > 1 ? with_anchors(std::move(cols), {anchor}, J) : SelectionSet(std::move(cols), J);
        if (c.size() < 2) unsatisfiable("7a", "pattern " + std::to_string(d) + " gets " + std::to_string(c.size()) + " column(s)");
        ps.push_back({SelectionSet(std::move(rows), I), std::move(c)});
      }
      SamplingPlan plan = SamplingPlan::fiber(dims, std::move(ps));
      if (const auto v = validate(plan); !v.valid()) throw ValidationError("regular fiber plan invalid: " + v.summary());
      return plan;
    }
    case PlanKind::entry: {
      check_stride(strides[0], I, "row");
      check_stride(strides[1], J, "column");
      check_stride(strides[2], K, "fiber");
      const std::size_t D = std::max({strides[0], strides[1], strides[2]});
      const auto r0 = residue_class(I, strides[0], offsets[0]);
      if (D > 1 && r0.size() < 2) unsatisfiable("9d", "pattern 0 has fewer than two rows to share");
      const std::vector<std::size_t> row_anchor = D > 1 ? std::vector<std::size_t>{r0[0], r0[1]} : std::vector<std::size_t>{};
      const std::vector<std::size_t> col_anchor = D > 1 ? std::vector<std::size_t>{offsets[1] % strides[1]} : std::vector<std::size_t>{};
      std::vector<EntryPattern> ps;
      for (std::size_t d = 0; d < D; ++d) {
        SelectionSet rows = with_anchors(residue_class(I, strides[0], offsets[0] + d), row_anchor, I);
        SelectionSet cols = with_anchors(residue_class(J, strides[1], offsets[1] + d), col_anchor, J);
        auto fib = residue_class(K, strides[2], offsets[2] + d);
        if (cols.size() < 2 || fib.size() < 2) {
          unsatisfiable("9a", "pattern " + std::to_string(d) + " gets " + std::to_string(cols.size()) + " column(s) and " +
                                  std::to_string(fib.size()) + " fiber(s)");
        }
        ps.push_back({std::move(rows), std::move(cols), SelectionSet(std::move(fib), K)});
      }
      SamplingPlan plan = SamplingPlan::entry(dims, std::move(ps));
      if (const auto v = validate(plan); !v.valid()) throw ValidationError("regular entry plan invalid: " + v.summary());
      return plan;
    }
  }
  throw ValidationError("unknown plan kind");
}

}  // namespace tensamp
