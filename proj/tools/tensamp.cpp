// tensamp: synthetic generation, sampling, recovery, RETSINA and phase sweeps.
// Exit codes: 0 ok, 2 validation/usage, 3 numerical failure or non-convergence, 4 I/O.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tensamp/error.hpp"
#include "tensamp/fmri.hpp"
#include "tensamp/log.hpp"
#include "tensamp/serialize.hpp"
#include "tensamp/sweep.hpp"
#include "tensamp/tns_io.hpp"

namespace fs = std::filesystem;
using namespace tensamp;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

Dims parse_dims(const std::vector<std::size_t>& v) {
  if (v.size() != 3) throw ValidationError("--dims takes three sizes, e.g. 50,50,50");
  for (auto d : v) {
    if (d == 0) throw ValidationError("--dims entries must be positive");
  }
  return {v[0], v[1], v[2]};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << s)) throw IoError("cannot write " + p.string());
}

SolverConfig load_solver(const std::string& path, std::optional<std::uint64_t> seed) {
  SolverConfig c = path.empty() ? SolverConfig{} : solver_config_from_json(read_json(path));
  if (seed) c.seed = *seed;
  return c;
}

struct Common {
  std::vector<std::size_t> dims;
  std::size_t rank = 0;
  std::string plan;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  bool force = false;
  std::string out;
  std::string config;
  std::string truth;
  std::string report;
};

int cmd_synth(const Common& o, bool real_valued, const std::string& factors_out) {
  const Dims dims = parse_dims(o.dims);
  if (o.rank < 1) throw ValidationError("--rank must be >= 1");
  if (o.out.empty()) throw ValidationError("synth needs --out");
  const FactorTriple f = random_factors(dims, o.rank, o.seed, !real_valued);
  write_tns3(o.out, cpd_reconstruct(f));
  if (!factors_out.empty()) write_text(factors_out, to_json(f).dump() + "\n");
  return 0;
}

int cmd_sample(const Common& o, const std::string& input) {
  if (o.plan.empty() || o.out.empty()) throw ValidationError("sample needs --plan and --out");
  const SamplingPlan plan = plan_from_json(read_json(o.plan));
  const RuleVerdict v = validate(plan);
  if (!v.valid()) throw ValidationError("plan rejected: " + v.summary());
  const Tensor3 x = read_tns3(input);
  const auto ys = apply(plan, x);
  fs::create_directories(o.out);
  json files = json::array();
  for (std::size_t d = 0; d < ys.size(); ++d) {
    const std::string name = "y" + std::to_string(d + 1) + ".tns3";
    write_tns3(fs::path(o.out) / name, ys[d]);
    files.push_back(name);
  }
  const json manifest{{"plan", to_json(plan)},
                      {"files", files},
                      {"observed", observed_count(plan)},
                      {"sampling_ratio", sampling_ratio(plan)}};
  write_text(fs::path(o.out) / "manifest.json", manifest.dump(2) + "\n");
  std::printf("%zu sub-tensors, sampling ratio %.6g\n", ys.size(), sampling_ratio(plan));
  return 0;
}

int finish_recovery(const Common& o, const RecoveryReport& rep, std::optional<ScanGeometry> geom) {
  json j = to_json(rep);
  if (!o.truth.empty()) {
    const Tensor3 truth = read_tns3(o.truth);
    const double e = nre(rep.estimate, truth);
    j["nre"] = e;
    std::printf("NRE %.6e\n", e);
    if (geom) {
      const double e2 = nre2(rep.estimate, truth, *geom);
      j["nre2"] = e2;
      std::printf("NRE2 %.6e\n", e2);
    }
  }
  if (!o.out.empty()) write_tns3(o.out, rep.estimate);
  if (!o.report.empty()) {
    write_text(o.report, j.dump(2) + "\n");
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return rep.converged ? 0 : kExitNumerical;
}

int cmd_recover(const Common& o, const std::string& manifest, const std::vector<std::string>& inputs) {
  if (o.rank < 1) throw ValidationError("--rank must be >= 1");
  SamplingPlan plan;
  std::vector<fs::path> files;
  if (!manifest.empty()) {
    const json m = read_json(manifest);
    plan = plan_from_json(m.at("plan"));
    for (const auto& f : m.at("files")) files.push_back(fs::path(manifest).parent_path() / f.get<std::string>());
  } else {
    if (o.plan.empty()) throw ValidationError("recover needs --manifest or --plan with sub-tensor files");
    plan = plan_from_json(read_json(o.plan));
    for (const auto& f : inputs) files.emplace_back(f);
  }
  std::vector<Tensor3> ys;
  for (const auto& f : files) ys.push_back(read_tns3(f));
  const RecoveryReport rep = recover(plan, ys, o.rank, load_solver(o.config, o.seed_set ? std::optional(o.seed) : std::nullopt), o.force);
  return finish_recovery(o, rep, std::nullopt);
}

int cmd_retsina(const Common& o, const std::string& input, const RetsinaConfig& budgets) {
  if (o.rank < 1) throw ValidationError("--rank must be >= 1");
  if (o.plan.empty()) throw ValidationError("retsina needs --plan with an acceleration plan");
  const AccelPlan plan = accel_plan_from_json(read_json(o.plan));
  const Tensor3 x = read_tns3(input);
  RetsinaConfig cfg = budgets;
  cfg.solver = load_solver(o.config, o.seed_set ? std::optional(o.seed) : std::nullopt);
  const RecoveryReport rep = plan.multi_slice ? ms_retsina(x, plan, o.rank, cfg) : retsina(x, plan, o.rank, cfg);
  const ScanGeometry geom{plan.mx, plan.my, plan.mc, plan.ms, x.dims()[1]};
  return finish_recovery(o, rep, geom);
}

int cmd_sweep(const Common& o, const std::vector<std::size_t>& ranks, const std::vector<double>& ratios, const std::string& mech,
              int trials, bool no_timing, const std::string& csv) {
  SweepConfig cfg;
  cfg.dims = parse_dims(o.dims.empty() ? std::vector<std::size_t>{50, 50, 50} : o.dims);
  cfg.mechanism = kind_from_name(mech);
  cfg.ranks = ranks;
  cfg.ratios = ratios;
  cfg.trials = trials;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.force = o.force;
  cfg.solver = load_solver(o.config, std::nullopt);
  const auto records = run_sweep(cfg);
  std::ostringstream os;
  write_sweep_csv(os, records, !no_timing);
  if (csv.empty()) {
    std::cout << os.str();
  } else {
    write_text(csv, os.str());
  }
  return 0;
}

int cmd_check(const Common& o, const std::string& factors) {
  if (o.plan.empty()) throw ValidationError("check needs --plan");
  if (o.rank < 1 && factors.empty()) throw ValidationError("check needs --rank or --factors");
  const SamplingPlan plan = plan_from_json(read_json(o.plan));
  json j{{"rules", to_json(validate(plan))}, {"sampling_ratio", sampling_ratio(plan)}, {"observed", observed_count(plan)}};
  bool ok = j["rules"]["valid"].get<bool>();
  std::optional<FactorTriple> f;
  if (!factors.empty()) f = factors_from_json(read_json(factors));
  const std::size_t rank = o.rank >= 1 ? o.rank : f->rank();
  const GenericVerdict g = check_generic(plan, rank);
  j["generic"] = to_json(g);
  ok = ok && g.recoverable;
  if (f) {
    const DeterministicVerdict d = check_deterministic(plan, *f);
    j["deterministic"] = to_json(d);
  }
  std::cout << j.dump(2) << "\n";
  return ok ? 0 : kExitValidation;
}

int cmd_info(const std::string& input) {
  const TnsHeader h = read_header(input);
  std::printf("magic   %s\nversion %u\ndtype   %u (complex128 little-endian)\norder   %zu\ndims   ", h.magic, unsigned{h.version},
              unsigned{h.dtype}, h.dims.size());
  for (auto d : h.dims) std::printf(" %llu", static_cast<unsigned long long>(d));
  std::printf("\nbytes   %llu\n", static_cast<unsigned long long>(h.file_bytes));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regular tensor sampling and CPD-based completion"};
  app.require_subcommand(1);
  Common o;
  std::string log_level;
  app.add_option("--log", log_level, "trace, debug, info, warn, error or off (overrides TNS_LOG)");

  auto add_common = [&o](CLI::App* c) {
    c->add_option("--seed", o.seed, "random seed")->each([&o](const std::string&) { o.seed_set = true; });
    c->add_option("--config", o.config, "solver config JSON");
  };

  bool real_valued = false;
  std::string factors_out;
  auto* synth = app.add_subcommand("synth", "write [[A,B,C]] with Gaussian factors");
  synth->add_option("--dims", o.dims, "I,J,K")->delimiter(',')->required();
  synth->add_option("--rank", o.rank, "CP rank")->required();
  synth->add_option("--out", o.out, "output TNS3 file")->required();
  synth->add_option("--factors", factors_out, "also write the factors as JSON");
  synth->add_flag("--real", real_valued, "real factors instead of complex");
  add_common(synth);

  std::string input;
  auto* sample = app.add_subcommand("sample", "extract the sub-tensors a plan observes");
  sample->add_option("input", input, "tensor TNS3 file")->required();
  sample->add_option("--plan", o.plan, "plan JSON")->required();
  sample->add_option("--out", o.out, "output directory")->required();

  std::string manifest;
  std::vector<std::string> inputs;
  auto* rec = app.add_subcommand("recover", "recover a tensor from sampled sub-tensors");
  rec->add_option("--manifest", manifest, "manifest written by sample");
  rec->add_option("--plan", o.plan, "plan JSON (with sub-tensor files as arguments)");
  rec->add_option("files", inputs, "sub-tensor TNS3 files in plan order");
  rec->add_option("--rank", o.rank, "CP rank")->required();
  rec->add_option("--out", o.out, "estimate TNS3 file");
  rec->add_option("--report", o.report, "report JSON file (default: stdout)");
  rec->add_option("--truth", o.truth, "ground-truth TNS3 for NRE");
  rec->add_flag("--force", o.force, "run even when recoverability is not proven");
  add_common(rec);

  RetsinaConfig budgets;
  auto* ret = app.add_subcommand("retsina", "complete an accelerated fMRI tensor");
  ret->add_option("input", input, "observed tensor (zeros at unobserved entries)")->required();
  ret->add_option("--plan", o.plan, "acceleration plan JSON")->required();
  ret->add_option("--rank", o.rank, "CP rank")->required();
  ret->add_option("--out", o.out, "estimate TNS3 file");
  ret->add_option("--report", o.report, "report JSON file (default: stdout)");
  ret->add_option("--truth", o.truth, "ground-truth TNS3 for NRE and NRE2");
  ret->add_option("--init-iters", budgets.init_iters, "initialization ALS sweeps")->capture_default_str();
  ret->add_option("--refine-iters", budgets.refine_iters, "refinement ALS sweeps")->capture_default_str();
  ret->add_option("--final-iters", budgets.final_iters, "final Gauss-Newton iterations")->capture_default_str();
  ret->add_flag("!--no-refine", budgets.refine, "skip refinement");
  add_common(ret);

  std::vector<std::size_t> ranks;
  std::vector<double> ratios;
  std::string mech = "slab", csv;
  int trials = 1;
  bool no_timing = false;
  auto* sweep = app.add_subcommand("sweep", "rank versus sampling-ratio phase sweep (CSV)");
  sweep->add_option("--dims", o.dims, "I,J,K (default 50,50,50)")->delimiter(',');
  sweep->add_option("--rank", ranks, "rank list, e.g. 2,5,10")->delimiter(',')->required();
  sweep->add_option("--ratio", ratios, "ratio list, e.g. 0.5,0.2,0.05")->delimiter(',')->required();
  sweep->add_option("--mechanism", mech, "slab, fiber or entry")->capture_default_str();
  sweep->add_option("--trials", trials, "trials per cell")->capture_default_str();
  sweep->add_option("--seed", o.seed, "master seed");
  sweep->add_option("--jobs", o.jobs, "concurrent cells")->capture_default_str();
  sweep->add_option("--config", o.config, "solver config JSON");
  sweep->add_option("--out", csv, "CSV file (default: stdout)");
  sweep->add_flag("--force", o.force, "run cells that are not provably recoverable");
  sweep->add_flag("--no-timing", no_timing, "write 0 in the seconds column");

  std::string factors_in;
  auto* check = app.add_subcommand("check", "identifiability verdicts for a plan");
  check->add_option("--plan", o.plan, "plan JSON")->required();
  check->add_option("--rank", o.rank, "CP rank");
  check->add_option("--factors", factors_in, "factors JSON for the deterministic check");

  auto* info = app.add_subcommand("info", "dump a TNS3/TNSN header");
  info->add_option("input", input, "file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (!log_level.empty()) set_log_level(log_level);
    if (*synth) return cmd_synth(o, real_valued, factors_out);
    if (*sample) return cmd_sample(o, input);
    if (*rec) return cmd_recover(o, manifest, inputs);
    if (*ret) return cmd_retsina(o, input, budgets);
    if (*sweep) return cmd_sweep(o, ranks, ratios, mech, trials, no_timing, csv);
    if (*check) return cmd_check(o, factors_in);
    if (*info) return cmd_info(input);
  } catch (const Error& e) {
    std::fprintf(stderr, "tensamp: %s\n", e.what());
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "tensamp: %s\n", e.what());
    return 4;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "tensamp: %s\n", e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
