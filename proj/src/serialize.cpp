#include "tensamp/serialize.hpp"

#include "tensamp/error.hpp"

namespace tensamp {
namespace {

const char* init_name(InitKind k) {
  switch (k) {
    case InitKind::random: return "random";
    case InitKind::algebraic: return "algebraic";
    case InitKind::provided: return "provided";
  }
  return "?";
}

InitKind init_from_name(const std::string& s) {
  if (s == "random") return InitKind::random;
  if (s == "algebraic") return InitKind::algebraic;
  if (s == "provided") return InitKind::provided;
  throw ValidationError("unknown init kind '" + s + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

json selection_to_json(const SelectionSet& s, bool one_based) {
  json a = json::array();
  for (auto i : s) a.push_back(i + (one_based ? 1 : 0));
  return a;
}

SelectionSet selection_from_json(const json& j, std::size_t ambient, bool one_based, const char* what) {
  if (j.is_string()) {
    if (j.get<std::string>() == "all") return SelectionSet::all(ambient);
    throw ValidationError(std::string(what) + ": unknown selection '" + j.get<std::string>() + "'");
  }
  const std::size_t base = one_based ? 1 : 0;
  if (j.is_object()) {
    const auto start = j.value("start", base);
    const auto stride = j.value("stride", std::size_t{1});
    if (start < base || stride == 0) throw ValidationError(std::string(what) + ": bad start/stride");
    return SelectionSet::strided(ambient, stride, start - base);
  }
  if (!j.is_array()) throw ValidationError(std::string(what) + ": selection must be an array, \"all\" or {start, stride}");
  std::vector<std::size_t> idx;
  for (const auto& e : j) {
    const auto v = e.get<long long>();
    if (v < static_cast<long long>(base) || static_cast<std::size_t>(v) - base >= ambient) {
      throw ValidationError(std::string(what) + ": index " + std::to_string(v) + " out of range");
    }
    idx.push_back(static_cast<std::size_t>(v) - base);
  }
  try {
    return SelectionSet(std::move(idx), ambient);
  } catch (const ShapeError& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

Dims dims_from_json(const json& j) {
  const auto v = j.get<std::vector<std::size_t>>();
  if (v.size() != 3) throw ValidationError("dims must have three entries");
  for (auto d : v) {
    if (d == 0) throw ValidationError("dims must be positive");
  }
  return {v[0], v[1], v[2]};
}

json matrix_to_json(const Matrix& m) {
  std::vector<double> re, im;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  return {{"rows", m.rows()}, {"re", re}, {"im", im}};
}

Matrix matrix_from_json(const json& j, std::size_t rank) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != rows * rank || im.size() != re.size()) throw ValidationError("factor matrix payload has the wrong length");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rank));
  for (std::size_t p = 0; p < re.size(); ++p) m(static_cast<Eigen::Index>(p % rows), static_cast<Eigen::Index>(p / rows)) = {re[p], im[p]};
  return m;
}

}  // namespace

json to_json(const SolverConfig& c) {
  return {{"max_iters", c.max_iters}, {"tol", c.tol},         {"damping", c.damping},   {"seed", c.seed},
          {"init", init_name(c.init)}, {"gn_iters", c.gn_iters}, {"restarts", c.restarts}, {"fit_tol", c.fit_tol}};
}

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  try {
    c.max_iters = get_or(j, "max_iters", c.max_iters);
    c.tol = get_or(j, "tol", c.tol);
    c.damping = get_or(j, "damping", c.damping);
    c.seed = get_or(j, "seed", c.seed);
    if (j.contains("init")) c.init = init_from_name(j.at("init").get<std::string>());
    c.gn_iters = get_or(j, "gn_iters", c.gn_iters);
    c.restarts = get_or(j, "restarts", c.restarts);
    c.fit_tol = get_or(j, "fit_tol", c.fit_tol);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("solver config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const SamplingPlan& p, bool one_based) {
  json pats = json::array();
  switch (p.kind()) {
    case PlanKind::slab:
      pats.push_back({{"rows", selection_to_json(p.slab_plan().horizontal, one_based)},
                      {"fibers", selection_to_json(p.slab_plan().frontal, one_based)}});
      break;
    case PlanKind::fiber:
      for (const auto& f : p.fiber_patterns()) {
        pats.push_back({{"rows", selection_to_json(f.rows, one_based)}, {"cols", selection_to_json(f.cols, one_based)}});
      }
      break;
    case PlanKind::entry:
      for (const auto& e : p.entry_patterns()) {
        pats.push_back({{"rows", selection_to_json(e.rows, one_based)},
                        {"cols", selection_to_json(e.cols, one_based)},
                        {"fibers", selection_to_json(e.fibers, one_based)}});
      }
      break;
  }
  return {{"kind", kind_name(p.kind())}, {"dims", p.dims()}, {"patterns", pats}, {"one_based", one_based}};
}

SamplingPlan plan_from_json(const json& j) {
  try {
    const PlanKind kind = kind_from_name(j.at("kind").get<std::string>());
    const Dims dims = dims_from_json(j.at("dims"));
    if (j.contains("strides")) {
      const auto s = j.at("strides").get<std::array<std::size_t, 3>>();
      const auto o = j.contains("offsets") ? j.at("offsets").get<std::array<std::size_t, 3>>() : std::array<std::size_t, 3>{0, 0, 0};
      return make_regular_plan(kind, dims, s, o);
    }
    const bool one = j.value("one_based", true);
    const json& pats = j.at("patterns");
    if (!pats.is_array() || pats.empty()) throw ValidationError("plan needs a nonempty patterns array");
    switch (kind) {
      case PlanKind::slab: {
        if (pats.size() != 1) throw ValidationError("slab plan takes exactly one pattern");
        return SamplingPlan::slab(dims, {selection_from_json(pats[0].at("rows"), dims[0], one, "rows"),
                                         selection_from_json(pats[0].at("fibers"), dims[2], one, "fibers")});
      }
      case PlanKind::fiber: {
        std::vector<FiberPattern> v;
        for (const auto& p : pats) {
          v.push_back({selection_from_json(p.at("rows"), dims[0], one, "rows"), selection_from_json(p.at("cols"), dims[1], one, "cols")});
        }
        return SamplingPlan::fiber(dims, std::move(v));
      }
      case PlanKind::entry: {
        std::vector<EntryPattern> v;
        for (const auto& p : pats) {
          v.push_back({selection_from_json(p.at("rows"), dims[0], one, "rows"), selection_from_json(p.at("cols"), dims[1], one, "cols"),
                       selection_from_json(p.at("fibers"), dims[2], one, "fibers")});
        }
        return SamplingPlan::entry(dims, std::move(v));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
  throw ValidationError("plan: unknown kind");
}

json to_json(const RuleVerdict& v) {
  json viol = json::array();
  for (const auto& x : v.violations) viol.push_back({{"rule", x.rule}, {"message", x.message}});
  return {{"valid", v.valid()}, {"violations", viol}};
}

json to_json(const GenericVerdict& v) {
  json j{{"recoverable", v.recoverable}, {"required", v.required}, {"bound", v.bound},
         {"binding", v.binding},         {"max_rank", v.max_rank}, {"summary", v.summary()}};
  if (v.alternative != 0) {
    j["alternative"] = v.alternative;
    j["alternatives_ok"] = v.alternatives_ok;
    j["alternative_bounds"] = v.alternative_bounds;
  }
  return j;
}

json to_json(const DeterministicVerdict& v) { return {{"recoverable", v.recoverable}, {"failed", v.failed}, {"detail", v.detail}}; }

json to_json(const History& h) {
  return {{"als_sweeps", h.als.empty() ? 0 : h.als.size() - 1},
          {"gn_steps", h.gn.empty() ? 0 : h.gn.size() - 1},
          {"final_objective", !h.gn.empty() ? h.gn.back() : (!h.als.empty() ? h.als.back() : 0.0)},
          {"flagged_sweeps", h.flagged},
          {"gn_rejected", h.gn_rejected},
          {"stopped", h.stopped},
          {"attempts", h.attempts}};
}

json to_json(const RecoveryReport& r) {
  json step1 = json::array();
  for (const auto& h : r.step1) step1.push_back(to_json(h));
  json secs = json::object();
  for (const auto& [k, v] : r.seconds) secs[k] = v;
  json j{{"mechanism", r.mechanism}, {"converged", r.converged}, {"relative_residual", r.relative_residual},
         {"forced", r.forced},       {"step1", step1},           {"step3", to_json(r.step3)},
         {"seconds", secs},          {"notes", r.notes}};
  if (r.generic.required != 0) {
    j["rules"] = to_json(r.rules);
    j["generic"] = to_json(r.generic);
  }
  return j;
}

json to_json(const AccelPlan& p) {
  json j{{"geometry", {{"mx", p.mx}, {"my", p.my}, {"ms", p.ms}, {"mc", p.mc}}}, {"first_frame_full", p.first_frame_full}};
  if (p.multi_slice) {
    j["r"] = p.r;
    j["s"] = p.s;
  } else {
    j["n"] = p.r;
  }
  return j;
}

AccelPlan accel_plan_from_json(const json& j) {
  try {
    const json& g = j.at("geometry");
    const auto mx = g.at("mx").get<std::size_t>(), my = g.at("my").get<std::size_t>();
    const auto ms = g.value("ms", std::size_t{1}), mc = g.value("mc", std::size_t{1});
    AccelPlan p;
    if (j.contains("n")) {
      if (j.contains("r") || j.contains("s")) throw ValidationError("accel plan: give either n or (r, s)");
      p = AccelPlan::single(j.at("n").get<std::size_t>(), mx, my, mc);
      if (ms != 1) throw ValidationError("accel plan: n with ms > 1; use (r, s)");
    } else {
      p = AccelPlan::multi(j.at("r").get<std::size_t>(), j.at("s").get<std::size_t>(), mx, my, ms, mc);
    }
    p.first_frame_full = j.value("first_frame_full", true);
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("accel plan: ") + e.what());
  }
}

json to_json(const FactorTriple& f) {
  return {{"rank", f.rank()}, {"A", matrix_to_json(f.A)}, {"B", matrix_to_json(f.B)}, {"C", matrix_to_json(f.C)}};
}

FactorTriple factors_from_json(const json& j) {
  try {
    const auto rank = j.at("rank").get<std::size_t>();
    return FactorTriple(matrix_from_json(j.at("A"), rank), matrix_from_json(j.at("B"), rank), matrix_from_json(j.at("C"), rank));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("factors: ") + e.what());
  }
}

}  // namespace tensamp
