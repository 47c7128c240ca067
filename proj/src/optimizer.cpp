#include "gsarah/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gsarah {

namespace {

enum class Estimator { SarahRecursive, SvrgAnchored };

bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

// Shared epoch shell: big-batch anchor, inner length (geometric draw unless
// forced), then `steps` estimator updates.  Stream layout per epoch:
// split(0) big batch, split(1) geometric length, split(2+k) inner batch k --
// so changing the epoch count never perturbs earlier randomness.
EpochOutcome run_epoch(Vec& x, const EpochParams& p, RngStream rng,
                       CountingOracle& oracle, Estimator est,
                       std::optional<std::int64_t> forced_steps,
                       const StepProbe& probe) {
  const LogisticNcvx& obj = oracle.objective();
  const std::int64_t n = obj.num_terms();
  const std::uint64_t start_count = oracle.count();

  Vec v;
  {
    RngStream big = rng.split(0);
    if (p.B >= n) {
      oracle.grad_all(x, v);
    } else {
      const auto anchor_idx =
          sample_without_replacement(big, n, static_cast<std::uint64_t>(p.B));
      oracle.grad_batch(anchor_idx, x, v);
    }
  }

  std::int64_t steps = 0;
  if (forced_steps.has_value()) {
    steps = *forced_steps;
  } else {
    RngStream geo = rng.split(1);
    steps = geom_sample(geo, p.m / static_cast<double>(p.b));
  }

  Vec anchor_x, anchor_g;
  if (est == Estimator::SvrgAnchored && steps > 0) {
    anchor_x = x;
    anchor_g = v;
  }

  Vec x_new(x.size());
  Vec g_new, g_old;
  for (std::int64_t k = 0; k < steps; ++k) {
    if (probe) probe(k, x, v);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x_new[j] = x[j] - p.eta * v[j];
    }
    RngStream step_rng = rng.split(2 + static_cast<std::uint64_t>(k));
    const auto batch = sample_without_replacement(
        step_rng, n, static_cast<std::uint64_t>(p.b));
    oracle.grad_batch(batch, x_new, g_new);
    if (est == Estimator::SarahRecursive) {
      oracle.grad_batch(batch, x, g_old);
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] += g_new[j] - g_old[j];
      }
    } else {
      oracle.grad_batch(batch, anchor_x, g_old);
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = g_new[j] - g_old[j] + anchor_g[j];
      }
    }
    x.swap(x_new);
  }
  if (probe) probe(steps, x, v);
  return {steps, oracle.count() - start_count};
}

// Plain SGD segment: `steps` updates x <- x - eta * grad_batch(I, x), each
// costing b queries.  Keeps the split(2+k) layout for the batch draws.
EpochOutcome sgd_segment(Vec& x, const EpochParams& p, std::int64_t steps,
                         RngStream rng, CountingOracle& oracle) {
  const std::int64_t n = oracle.objective().num_terms();
  const std::uint64_t start_count = oracle.count();
  Vec g;
  for (std::int64_t k = 0; k < steps; ++k) {
    RngStream step_rng = rng.split(2 + static_cast<std::uint64_t>(k));
    const auto batch = sample_without_replacement(
        step_rng, n, static_cast<std::uint64_t>(p.b));
    oracle.grad_batch(batch, x, g);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] -= p.eta * g[j];
    }
  }
  return {steps, oracle.count() - start_count};
}

}  // namespace

EpochOutcome geom_sarah_epoch(Vec& x, const EpochParams& p, RngStream rng,
                              CountingOracle& oracle, const StepProbe& probe) {
  return run_epoch(x, p, rng, oracle, Estimator::SarahRecursive, std::nullopt,
                   probe);
}

EpochOutcome scsg_epoch(Vec& x, const EpochParams& p, RngStream rng,
                        CountingOracle& oracle, const StepProbe& probe) {
  return run_epoch(x, p, rng, oracle, Estimator::SvrgAnchored, std::nullopt,
                   probe);
}

EpochOutcome sarah_epoch_forced(Vec& x, const EpochParams& p,
                                std::int64_t steps, RngStream rng,
                                CountingOracle& oracle,
                                const StepProbe& probe) {
  return run_epoch(x, p, rng, oracle, Estimator::SarahRecursive, steps, probe);
}

EpochOutcome svrg_epoch_forced(Vec& x, const EpochParams& p,
                               std::int64_t steps, RngStream rng,
                               CountingOracle& oracle,
                               const StepProbe& probe) {
  return run_epoch(x, p, rng, oracle, Estimator::SvrgAnchored, steps, probe);
}

RunTrace run_method(const LogisticNcvx& obj, const Schedule& sched,
                    StopRule stop, const Vec& x0, std::uint64_t seed) {
  if (stop.epochs < 1 && stop.ifo_budget < 1) {
    throw std::invalid_argument("run: need epochs >= 1 or a positive budget");
  }
  if (static_cast<std::int64_t>(x0.size()) != obj.dim()) {
    throw std::invalid_argument("run: x0 dimension mismatch");
  }
  if (!all_finite(x0)) {
    throw DivergenceError(0, "initial point");
  }

  const std::int64_t n = obj.num_terms();
  const double L = obj.smoothness();
  const bool epoch_mode = stop.epochs >= 1;
  const bool tail_output = epoch_mode && sched.geometric_inner_loop();
  const std::int64_t T = stop.epochs;
  const std::int64_t last_epoch =
      epoch_mode ? (tail_output ? tail_end_epoch(T, sched.delta) : T) : 0;

  RngStream root(seed);
  IfoCounter counter;
  CountingOracle oracle(obj, counter);

  RunTrace trace;
  trace.seed = seed;
  trace.schedule_descriptor = sched.descriptor();

  Vec x = x0;
  {
    const double f0 = obj.value(x);
    const double g0 = squared_norm(obj.full_grad(x));
    if (!std::isfinite(f0) || !std::isfinite(g0)) {
      throw DivergenceError(0, "metric at the initial point");
    }
    trace.records.push_back({0, 0, 0, f0, g0, EpochParams{}});
  }

  std::vector<Vec> snapshots;       // iterates for j in [T, last_epoch]
  std::vector<double> tail_weights;  // eta_j * m_j over the same range

  for (std::int64_t j = 1;; ++j) {
    if (epoch_mode && j > last_epoch) break;
    if (!epoch_mode && counter.count >= stop.ifo_budget) break;

    const EpochParams p = sched.params(j, n, L);
    RngStream epoch_rng = root.split(static_cast<std::uint64_t>(j));
    EpochOutcome out;
    switch (sched.kind) {
      case MethodKind::QGeomSarah:
      case MethodKind::EGeomSarah:
      case MethodKind::NonAdaptive:
        out = geom_sarah_epoch(x, p, epoch_rng, oracle);
        break;
      case MethodKind::Scsg:
        out = scsg_epoch(x, p, epoch_rng, oracle);
        break;
      case MethodKind::SarahFull:
        out = sarah_epoch_forced(
            x, p, static_cast<std::int64_t>(std::llround(p.m)) / p.b,
            epoch_rng, oracle);
        break;
      case MethodKind::Svrg:
        out = svrg_epoch_forced(
            x, p, static_cast<std::int64_t>(std::llround(p.m)) / p.b,
            epoch_rng, oracle);
        break;
      case MethodKind::Sgd:
        out = sgd_segment(x, p, (n + p.b - 1) / p.b, epoch_rng, oracle);
        break;
    }

    if (!all_finite(x)) {
      throw DivergenceError(j, "iterate");
    }
    const double f = obj.value(x);
    const double g2 = squared_norm(obj.full_grad(x));
    if (!std::isfinite(f) || !std::isfinite(g2)) {
      throw DivergenceError(j, "trace metric");
    }
    trace.records.push_back({j, out.n_drawn, counter.count, f, g2, p});

    if (tail_output && j >= T) {
      snapshots.push_back(x);
      tail_weights.push_back(tail_weight(p));
    }
    if (!epoch_mode && j > (1LL << 40)) {
      throw std::runtime_error("run: budget never reached");
    }
  }

  if (tail_output) {
    const TailDistribution td =
        make_tail_distribution(T, last_epoch, std::move(tail_weights));
    RngStream tail_rng = root.split(0);
    trace.output_index = tail_index(tail_rng, td);
    trace.output_iterate = snapshots[trace.output_index - T];
  } else {
    trace.output_index = trace.records.back().epoch;
    trace.output_iterate = x;
  }
  return trace;
}

RunTrace run_geom_sarah(const LogisticNcvx& obj, const Schedule& sched,
                        StopRule stop, const Vec& x0, std::uint64_t seed) {
  if (!sched.geometric_inner_loop()) {
    throw std::invalid_argument(
        "run_geom_sarah: schedule is not a geometrized kind");
  }
  return run_method(obj, sched, stop, x0, seed);
}

RunTrace run_baseline(const LogisticNcvx& obj, const Schedule& sched,
                      StopRule stop, const Vec& x0, std::uint64_t seed) {
  switch (sched.kind) {
    case MethodKind::SarahFull:
    case MethodKind::Svrg:
    case MethodKind::Scsg:
    case MethodKind::Sgd:
      return run_method(obj, sched, stop, x0, seed);
    default:
      throw std::invalid_argument("run_baseline: not a baseline kind");
  }
}

std::string serialize_trace(const RunTrace& trace) {
  std::string out;
  out += "seed ";
  out += std::to_string(trace.seed);
  out += "\nschedule ";
  out += trace.schedule_descriptor;
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.epoch);
    out += ',';
    out += std::to_string(r.n_drawn);
    out += ',';
    out += std::to_string(r.ifo_cumulative);
    out += ',';
    append_g17(out, r.f_value);
    out += ',';
    append_g17(out, r.grad_norm_sq);
    out += ',';
    append_g17(out, r.params.eta);
    out += ',';
    out += std::to_string(r.params.b);
    out += ',';
    append_g17(out, r.params.m);
    out += ',';
    out += std::to_string(r.params.B);
    out += '\n';
  }
  out += "output ";
  out += std::to_string(trace.output_index);
  out += '\n';
  for (std::size_t j = 0; j < trace.output_iterate.size(); ++j) {
    if (j > 0) out += ' ';
    append_g17(out, trace.output_iterate[j]);
  }
  out += '\n';
  return out;
}

double population_grad_variance(const LogisticNcvx& obj,
                                std::span<const double> x) {
  const Vec mean = obj.full_grad(x);
  const std::int64_t n = obj.num_terms();
  double acc = 0.0;
  Vec gi(x.size());
  for (std::int64_t i = 0; i < n; ++i) {
    std::fill(gi.begin(), gi.end(), 0.0);
    obj.grad_index(i, x, gi);
    double dist = 0.0;
    for (std::size_t j = 0; j < gi.size(); ++j) {
      const double dv = gi[j] - mean[j];
      dist += dv * dv;
    }
    acc += dist;
  }
  return acc / static_cast<double>(n);
}

OneEpochCheckResult one_epoch_inequality_check(const LogisticNcvx& obj,
                                          const EpochParams& p,
                                          std::int64_t replicates,
                                          const Vec& x0, RngStream rng) {
  if (replicates < 1) {
    throw std::invalid_argument(
        "one-epoch inequality check: replicates must be >= 1");
  }
  const std::int64_t n = obj.num_terms();
  const double f0 = obj.value(x0);
  const double coeff =
      2.0 * static_cast<double>(p.b) / (p.eta * p.m);

  std::vector<double> grad_sq(replicates);
  std::vector<double> f_drop(replicates);
  constexpr std::int64_t kProbePoints = 8;
  std::vector<Vec> probe_points;
  probe_points.push_back(x0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t r = 0; r < replicates; ++r) {
    IfoCounter counter;
    CountingOracle oracle(obj, counter);
    Vec x = x0;
    geom_sarah_epoch(x, p, rng.split(static_cast<std::uint64_t>(r)), oracle);
    grad_sq[r] = squared_norm(obj.full_grad(x));
    f_drop[r] = f0 - obj.value(x);
    if (r < kProbePoints) {
#ifdef _OPENMP
#pragma omp critical
#endif
      probe_points.push_back(x);
    }
  }

  double sigma2 = 0.0;
  for (const Vec& pt : probe_points) {
    sigma2 = std::max(sigma2, population_grad_variance(obj, pt));
  }
  const double sigma_term =
      p.B < n ? sigma2 / static_cast<double>(p.B) : 0.0;

  // Test statistic: d_r = ||grad f||^2 - coeff * (f0 - f); the inequality
  // says E[d] <= sigma_term.
  double mean_d = 0.0, mean_g = 0.0, mean_drop = 0.0;
  for (std::int64_t r = 0; r < replicates; ++r) {
    mean_g += grad_sq[r];
    mean_drop += f_drop[r];
    mean_d += grad_sq[r] - coeff * f_drop[r];
  }
  mean_g /= static_cast<double>(replicates);
  mean_drop /= static_cast<double>(replicates);
  mean_d /= static_cast<double>(replicates);
  double var_d = 0.0;
  for (std::int64_t r = 0; r < replicates; ++r) {
    const double d = grad_sq[r] - coeff * f_drop[r] - mean_d;
    var_d += d * d;
  }
  var_d = replicates > 1 ? var_d / static_cast<double>(replicates - 1) : 0.0;

  OneEpochCheckResult res;
  res.lhs = mean_g;
  res.rhs = coeff * mean_drop + sigma_term;
  res.std_err = std::sqrt(var_d / static_cast<double>(replicates));
  res.sigma2 = sigma2;
  res.pass = mean_d <= sigma_term + 3.0 * res.std_err;
  return res;
}

}  // namespace gsarah
