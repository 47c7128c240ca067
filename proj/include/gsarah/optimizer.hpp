#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gsarah/objective.hpp"
#include "gsarah/rng.hpp"
#include "gsarah/schedules.hpp"

namespace gsarah {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t epoch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) +
                           ": non-finite " + what),
        epoch_(epoch) {}
  std::int64_t epoch() const { return epoch_; }

 private:
  std::int64_t epoch_;
};

// Cumulative count of per-index gradient queries routed through the
// optimizer.  Metric evaluations (trace f / ||grad f||^2) bypass it.
struct IfoCounter {
  std::uint64_t count = 0;
};

// Charges every routed query to the counter: one unit per index per
// evaluation point.
class CountingOracle {
 public:
  CountingOracle(const LogisticNcvx& obj, IfoCounter& counter)
      : obj_(&obj), counter_(&counter) {}

  void grad_batch(std::span<const std::uint32_t> idx,
                  std::span<const double> x, Vec& out) {
    obj_->grad_batch(idx, x, out);
    counter_->count += idx.size();
  }

  // Full-index batch (anchor with B = n); costs n queries.
  void grad_all(std::span<const double> x, Vec& out) {
    obj_->full_grad(x, out);
    counter_->count += static_cast<std::uint64_t>(obj_->num_terms());
  }

  const LogisticNcvx& objective() const { return *obj_; }
  std::uint64_t count() const { return counter_->count; }

 private:
  const LogisticNcvx* obj_;
  IfoCounter* counter_;
};

// Observes (k, x_k, v_k) before every inner step and once more after the
// last one.  Test hook; never affects the run.
using StepProbe = std::function<void(std::int64_t k, const Vec& x,
                                     const Vec& v)>;

struct EpochOutcome {
  std::int64_t n_drawn = 0;    // inner steps taken
  std::uint64_t ifo_cost = 0;  // queries charged by this epoch
};

// One epoch of the geometrized SARAH loop:
//   v0 = mean grad over a without-replacement big batch of size B (cost B),
//   N ~ Geom with E[N] = m/b,
//   repeat N times: x <- x - eta v;
//     v <- v + mean_{i in I}(grad_i(x_new) - grad_i(x_old)),  |I| = b,
//   each step costing 2b.  Stream layout: split(0) big batch, split(1)
//   geometric length, split(2+k) inner batch k.
EpochOutcome geom_sarah_epoch(Vec& x, const EpochParams& p, RngStream rng,
                              CountingOracle& oracle,
                              const StepProbe& probe = {});

// Same shell with the SVRG-style estimator anchored at the epoch start:
//   v_k = mean_I(grad(x_k)) - mean_I(grad(x_anchor)) + v0.
EpochOutcome scsg_epoch(Vec& x, const EpochParams& p, RngStream rng,
                        CountingOracle& oracle, const StepProbe& probe = {});

// Deterministic-length inner loop used by the tests and the deterministic
// baselines; `steps` replaces the geometric draw.
EpochOutcome sarah_epoch_forced(Vec& x, const EpochParams& p,
                                std::int64_t steps, RngStream rng,
                                CountingOracle& oracle,
                                const StepProbe& probe = {});
EpochOutcome svrg_epoch_forced(Vec& x, const EpochParams& p,
                               std::int64_t steps, RngStream rng,
                               CountingOracle& oracle,
                               const StepProbe& probe = {});

struct EpochRecord {
  std::int64_t epoch = 0;            // 0 = initial point
  std::int64_t n_drawn = 0;          // inner steps taken
  std::uint64_t ifo_cumulative = 0;  // counter after the epoch
  double f_value = 0.0;
  double grad_norm_sq = 0.0;
  EpochParams params;
};

struct RunTrace {
  std::vector<EpochRecord> records;
  std::int64_t output_index = 0;  // R(T), in [T, ceil((1+delta)T)]
  Vec output_iterate;
  std::uint64_t seed = 0;
  std::string schedule_descriptor;
};

// Either a fixed number of outer epochs T (tail-randomized output over
// [T, ceil((1+delta)T)]) or an IFO budget (run until the counter reaches it;
// the output is the last iterate).
struct StopRule {
  std::int64_t epochs = 0;
  std::uint64_t ifo_budget = 0;
  static StopRule for_epochs(std::int64_t T) { return {T, 0}; }
  static StopRule for_budget(std::uint64_t q) { return {0, q}; }
};

// Runs any method kind from x0 with the per-run stream layout
// root = RngStream(seed); epoch j uses root.split(j), the tail draw
// root.split(0).  Per-epoch metrics (f, ||grad f||^2) use exact uncounted
// passes.  Non-finite iterates or metrics raise DivergenceError naming the
// epoch.
RunTrace run_method(const LogisticNcvx& obj, const Schedule& sched,
                    StopRule stop, const Vec& x0, std::uint64_t seed);

// run_method restricted to the geometrized family (Q/E/NonAdaptive/Scsg).
RunTrace run_geom_sarah(const LogisticNcvx& obj, const Schedule& sched,
                        StopRule stop, const Vec& x0, std::uint64_t seed);

// run_method restricted to the baselines (SarahFull/Svrg/Scsg/Sgd).
RunTrace run_baseline(const LogisticNcvx& obj, const Schedule& sched,
                      StopRule stop, const Vec& x0, std::uint64_t seed);

// Text form of a trace (%.17g reals); byte-equal for identical runs.
std::string serialize_trace(const RunTrace& trace);

// Exact population variance (1/n) sum_i ||grad f_i(x) - grad f(x)||^2.
double population_grad_variance(const LogisticNcvx& obj,
                                std::span<const double> x);

struct OneEpochCheckResult {
  double lhs = 0.0;      // mean ||grad f(x_out)||^2
  double rhs = 0.0;      // (2b/(eta m)) * mean(f(x0) - f(x_out)) + sigma^2
                         //   * I(B<n)/B
  double std_err = 0.0;  // standard error of the lhs-rhs gap
  double sigma2 = 0.0;   // variance bound used (max over the probe grid)
  bool pass = false;
};

// Monte-Carlo check of the one-epoch inequality: runs `replicates`
// independent SARAH epochs from x0 and tests lhs <= rhs + 3 std-errs.
// sigma^2 is the exact population variance maximized over x0 and the first
// eight replicate outputs.
OneEpochCheckResult one_epoch_inequality_check(const LogisticNcvx& obj,
                                          const EpochParams& p,
                                          std::int64_t replicates,
                                          const Vec& x0, RngStream rng);

}  // namespace gsarah
