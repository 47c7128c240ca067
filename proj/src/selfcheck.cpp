#include "gsarah/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "gsarah/objective.hpp"
#include "gsarah/optimizer.hpp"
#include "gsarah/rng.hpp"
#include "gsarah/schedules.hpp"

namespace gsarah {

namespace {

struct CheckReport {
  int passed = 0;
  int total = 0;
  std::ostream* out;

  void record(bool ok, const std::string& what) {
    ++total;
    passed += ok ? 1 : 0;
    (*out) << (ok ? "[ok]   " : "[FAIL] ") << what << '\n';
  }
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void check_geometric_sampler(CheckReport& rep) {
  RngStream rng(20240801, 1);
  const double mean = 9.0;
  const double gamma = mean / (1.0 + mean);
  const std::int64_t draws = 100000;
  double acc = 0.0;
  for (std::int64_t i = 0; i < draws; ++i) {
    acc += static_cast<double>(geom_sample(rng, mean));
  }
  const double sample_mean = acc / static_cast<double>(draws);
  const double std_err =
      std::sqrt(gamma / ((1.0 - gamma) * (1.0 - gamma)) /
                static_cast<double>(draws));
  const double err = std::abs(sample_mean - mean);
  rep.record(err <= 3.0 * std_err,
             "geometric sampler: |mean - 9| = " + num(err) + " (tol " +
                 num(3.0 * std_err) + ")");
}

void check_subset_sampler(CheckReport& rep) {
  RngStream rng(20240801, 2);
  const std::int64_t draws = 60000;
  // Subsets of size 2 from 4 elements, keyed by bitmask; 6 possibilities.
  std::vector<std::int64_t> hits(16, 0);
  for (std::int64_t i = 0; i < draws; ++i) {
    const auto pick = sample_without_replacement(rng, 4, 2);
    hits[(1u << pick[0]) | (1u << pick[1])]++;
  }
  double worst = 0.0;
  for (int mask = 0; mask < 16; ++mask) {
    if (__builtin_popcount(mask) != 2) continue;
    const double freq =
        static_cast<double>(hits[mask]) / static_cast<double>(draws);
    worst = std::max(worst, std::abs(freq - 1.0 / 6.0));
  }
  rep.record(worst <= 0.01, "subset sampler: max |freq - 1/6| = " +
                                num(worst) + " (tol 0.01)");
}

void check_geometrization_identity(CheckReport& rep) {
  RngStream rng(20240801, 3);
  const auto res = geometrization_identity_check(
      [](std::int64_t k) {
        return static_cast<double>(k) * static_cast<double>(k);
      },
      4.0, 200000, rng);
  const double err = std::abs(res.lhs_estimate - res.rhs_exact);
  const double tol = 3.0 * res.std_err + 1e-9;
  rep.record(err <= tol, "geometrization identity (k^2, mean 4): |lhs - rhs| "
                         "= " + num(err) + " (tol " + num(tol) + ")");
}

void check_gradients(CheckReport& rep) {
  const SparseDataset ds = synth_logistic(50, 8, 11, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  RngStream rng(20240801, 4);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vec x(8);
    for (auto& c : x) c = rng.next_gaussian();
    const auto i = static_cast<std::int64_t>(rng.next_below(50));
    Vec g(8, 0.0);
    obj.grad_index(i, x, g);
    for (int j = 0; j < 8; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd =
          (obj.value_index(i, xp) - obj.value_index(i, xm)) / (2.0 * h);
      const double rel =
          std::abs(g[j] - fd) / std::max(1.0, std::abs(g[j]));
      worst = std::max(worst, rel);
    }
  }
  rep.record(worst <= 1e-6, "gradient finite differences: max rel err = " +
                                num(worst) + " (tol 1e-06)");
}

void check_one_epoch_inequality(CheckReport& rep) {
  const SparseDataset ds = synth_logistic(100, 5, 3, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const EpochParams p = q_schedule(3, 100, obj.smoothness());
  const Vec x0(5, 0.25);
  const auto res =
      one_epoch_inequality_check(obj, p, 500, x0, RngStream(20240801, 5));
  rep.record(res.pass, "one-epoch inequality: lhs " + num(res.lhs) +
                           " <= rhs " + num(res.rhs) + " + 3se " +
                           num(3.0 * res.std_err));
}

}  // namespace

int run_self_checks(std::ostream& out) {
  CheckReport rep{0, 0, &out};
  check_geometric_sampler(rep);
  check_subset_sampler(rep);
  check_geometrization_identity(rep);
  check_gradients(rep);
  check_one_epoch_inequality(rep);
  out << "self-check: " << rep.passed << "/" << rep.total << " passed\n";
  return rep.passed == rep.total ? 0 : 1;
}

}  // namespace gsarah
