#include "tensamp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <thread>

#include "logging.hpp"
#include "tensamp/error.hpp"
#include "tensamp/reconstruct.hpp"

namespace tensamp {

void SweepConfig::validate() const {
  if (ranks.empty()) throw ValidationError("sweep needs at least one rank");
  if (ratios.empty()) throw ValidationError("sweep needs at least one ratio");
  for (auto f : ranks) {
    if (f < 1) throw ValidationError("sweep ranks must be >= 1");
  }
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ValidationError("sweep ratios must lie in (0, 1]");
  }
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (jobs < 1) throw ValidationError("jobs must be >= 1");
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) throw ValidationError("sweep dims must be positive");
  solver.validate();
}

std::optional<SamplingPlan> plan_for_ratio(PlanKind kind, const Dims& dims, double r) {
  const std::size_t top = std::max({dims[0], dims[1], dims[2]});
  for (std::size_t s = 1; s <= top; ++s) {
    std::array<std::size_t, 3> strides{s, s, s};
    if (kind == PlanKind::slab) strides[1] = 1;
    if (kind == PlanKind::fiber) strides[2] = 1;
    try {
      SamplingPlan p = make_regular_plan(kind, dims, strides);
      if (sampling_ratio(p) <= r + 1e-12) return p;
    } catch (const ValidationError&) {
    }
  }
  return std::nullopt;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SweepRecord run_cell(const SweepConfig& cfg, std::size_t rank, double ratio) {
  const auto start = std::chrono::steady_clock::now();
  SweepRecord rec;
  rec.mechanism = kind_name(cfg.mechanism);
  rec.rank = rank;
  rec.ratio = ratio;
  rec.seed = cell_seed(cfg.seed, rank, ratio, 0);
  const auto plan = plan_for_ratio(cfg.mechanism, cfg.dims, ratio);
  if (plan) rec.ratio = sampling_ratio(*plan);
  if (plan && (cfg.force || check_generic(*plan, rank).recoverable)) {
    rec.feasible = true;
    std::vector<double> errs;
    bool all_converged = true;
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t seed = cell_seed(cfg.seed, rank, ratio, t);
      const Tensor3 x = cpd_reconstruct(random_factors(cfg.dims, rank, seed));
      SolverConfig sc = cfg.solver;
      sc.seed = splitmix64(seed);
      try {
        const RecoveryReport rep = recover(*plan, apply(*plan, x), rank, sc, cfg.force);
        errs.push_back(nre(rep.estimate, x));
        all_converged = all_converged && rep.converged;
      } catch (const Error& e) {
        detail::log().warn("sweep cell F={} r={} trial {}: {}", rank, ratio, t, e.what());
        errs.push_back(1.0);
        all_converged = false;
      }
    }
    rec.nre = median(std::move(errs));
    rec.converged = all_converged;
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t master, std::size_t rank, double ratio, int trial) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(rank));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(ratio));
  return splitmix64(h ^ static_cast<std::uint64_t>(trial));
}

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::size_t, double>> cells;
  for (auto f : cfg.ranks)
    for (double r : cfg.ratios) cells.emplace_back(f, r);
  std::vector<SweepRecord> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c; (c = next.fetch_add(1)) < cells.size();) out[c] = run_cell(cfg, cells[c].first, cells[c].second);
  };
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), cells.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records, bool timing) {
  os << "mechanism,F,r,NRE,converged,seconds,seed\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.6e,%d,%.3f,%llu\n", r.mechanism.c_str(), r.rank, r.ratio, r.nre,
                  r.converged ? 1 : 0, timing ? r.seconds : 0.0, static_cast<unsigned long long>(r.seed));
    os << buf;
  }
}

}  // namespace tensamp
