#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "gsarah/optimizer.hpp"
#include "oracles.hpp"

using namespace gsarah;

namespace {

double rel_dev(const Vec& v, const Vec& g) {
  double num = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    num += (v[j] - g[j]) * (v[j] - g[j]);
  }
  return std::sqrt(num) / (1.0 + std::sqrt(squared_norm(g)));
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("full-batch estimator degenerates to the exact gradient") {
  const auto ds = synth_logistic(64, 8, 31, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  EpochParams p;
  p.b = 64;
  p.B = 64;
  p.m = 64.0 * 64.0;
  p.eta = 1.0 / (2.0 * obj.smoothness());

  IfoCounter counter;
  CountingOracle oracle(obj, counter);
  Vec x(8, 0.0);
  double worst = 0.0;
  sarah_epoch_forced(x, p, 50, RngStream(1).split(1), oracle,
                     [&](std::int64_t, const Vec& xk, const Vec& vk) {
                       worst = std::max(worst, rel_dev(vk, obj.full_grad(xk)));
                     });
  CHECK(worst < 1e-12);
}

TEST_CASE("svrg estimator with the full batch reduces to gradient descent") {
  const auto ds = synth_logistic(32, 5, 32, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  EpochParams p;
  p.b = 32;
  p.B = 32;
  p.m = 32.0 * 32.0;
  p.eta = 1.0 / (2.0 * obj.smoothness());

  IfoCounter counter;
  CountingOracle oracle(obj, counter);
  Vec x(5, 0.1);
  double worst = 0.0;
  svrg_epoch_forced(x, p, 20, RngStream(2).split(1), oracle,
                    [&](std::int64_t, const Vec& xk, const Vec& vk) {
                      worst = std::max(worst, rel_dev(vk, obj.full_grad(xk)));
                    });
  CHECK(worst < 1e-12);

  // The iterates coincide with plain gradient descent.
  Vec gd(5, 0.1);
  IfoCounter c2;
  CountingOracle o2(obj, c2);
  Vec x2(5, 0.1);
  svrg_epoch_forced(x2, p, 20, RngStream(2).split(1), o2, {});
  for (int k = 0; k < 20; ++k) {
    const Vec g = obj.full_grad(gd);
    for (int j = 0; j < 5; ++j) gd[j] -= p.eta * g[j];
  }
  CHECK(rel_dev(x2, gd) < 1e-11);
}

TEST_CASE("zero-length epoch returns the input at anchor cost") {
  const auto ds = synth_logistic(50, 4, 5, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  EpochParams p;
  p.b = 4;
  p.B = 16;
  p.m = 16.0;
  p.eta = 0.01;

  // E[N] = 4 so P(N = 0) = 0.2: scan seeds for the first zero draw.
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    RngStream probe = RngStream(seed).split(1).split(1);
    if (geom_sample(probe, 4.0) != 0) continue;
    IfoCounter counter;
    CountingOracle oracle(obj, counter);
    Vec x(4, 0.5);
    const Vec before = x;
    const auto out =
        geom_sarah_epoch(x, p, RngStream(seed).split(1), oracle);
    CHECK(out.n_drawn == 0);
    CHECK(out.ifo_cost == 16);
    REQUIRE(x == before);
    return;
  }
  FAIL("no zero draw in 64 seeds (P ~ 0.2 each)");
}

TEST_CASE("average epoch cost matches B + 2m") {
  const auto ds = synth_logistic(64, 4, 6, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  EpochParams p;
  p.b = 4;
  p.B = 16;
  p.m = 16.0;
  p.eta = 1.0 / (2.0 * obj.smoothness() * 4.0);

  RngStream root(99);
  double total = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    IfoCounter counter;
    CountingOracle oracle(obj, counter);
    Vec x(4, 0.0);
    const auto out = geom_sarah_epoch(x, p, root.split(r), oracle);
    CHECK(out.ifo_cost == 16 + 8 * static_cast<std::uint64_t>(out.n_drawn));
    total += static_cast<double>(out.ifo_cost);
  }
  const double mean_cost = total / reps;
  CHECK(std::abs(mean_cost - 48.0) <= 0.02 * 48.0);
}

TEST_CASE("anchor estimate is unbiased for the exact gradient") {
  const auto ds = synth_logistic(64, 4, 7, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  EpochParams p;
  p.b = 4;
  p.B = 16;
  p.m = 16.0;
  p.eta = 0.0;  // keep x fixed so every v0 is measured at the same point

  const Vec x0(4, 0.3);
  const Vec g = obj.full_grad(x0);
  const int reps = 10000;
  Vec mean(4, 0.0), m2(4, 0.0);
  RngStream root(123);
  for (int r = 0; r < reps; ++r) {
    IfoCounter counter;
    CountingOracle oracle(obj, counter);
    Vec x = x0;
    Vec v0;
    bool captured = false;
    geom_sarah_epoch(x, p, root.split(r), oracle,
                     [&](std::int64_t, const Vec&, const Vec& vk) {
                       if (!captured) {
                         v0 = vk;
                         captured = true;
                       }
                     });
    for (int j = 0; j < 4; ++j) {
      const double d = v0[j] - mean[j];
      mean[j] += d / (r + 1);
      m2[j] += d * (v0[j] - mean[j]);
    }
  }
  for (int j = 0; j < 4; ++j) {
    const double se = std::sqrt(m2[j] / (reps - 1) / reps);
    CHECK(std::abs(mean[j] - g[j]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("per-run query count is the exact epoch sum") {
  const auto ds = synth_logistic(200, 6, 8, 1.0);
  const LogisticNcvx obj(ds, 0.1);

  SUBCASE("geometrized kinds: B_j + 2 b_j N_j") {
    for (const auto& sched : {Schedule::q(), Schedule::e(2.0),
                              Schedule::scsg(1.0)}) {
      const auto trace =
          run_method(obj, sched, StopRule::for_epochs(10), Vec(6, 0.0), 5);
      std::uint64_t expect = 0;
      for (const auto& r : trace.records) {
        if (r.epoch == 0) continue;
        expect += static_cast<std::uint64_t>(r.params.B) +
                  2 * static_cast<std::uint64_t>(r.params.b) *
                      static_cast<std::uint64_t>(r.n_drawn);
        CHECK(r.ifo_cumulative == expect);
      }
      CHECK(trace.records.back().ifo_cumulative == expect);
    }
  }

  SUBCASE("sarah: n + 2 b (m/b) per epoch") {
    const auto trace = run_method(obj, Schedule::sarah(),
                                  StopRule::for_epochs(3), Vec(6, 0.0), 5);
    const std::uint64_t per = 200 + 2 * 15 * 15;  // b = 15, steps = 15
    for (const auto& r : trace.records) {
      CHECK(r.ifo_cumulative == per * static_cast<std::uint64_t>(r.epoch));
    }
  }

  SUBCASE("sgd: 32 queries per step") {
    const auto trace = run_method(obj, Schedule::sgd(),
                                  StopRule::for_epochs(4), Vec(6, 0.0), 5);
    const std::uint64_t per = 32 * 7;  // ceil(200/32) = 7 steps per segment
    for (const auto& r : trace.records) {
      CHECK(r.ifo_cumulative == per * static_cast<std::uint64_t>(r.epoch));
    }
  }
}

TEST_CASE("traces are bitwise deterministic in the seed") {
  const auto ds = synth_logistic(100, 5, 9, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  for (const auto& sched :
       {Schedule::q(), Schedule::e(2.0), Schedule::sarah(), Schedule::svrg(),
        Schedule::scsg(1.0), Schedule::sgd()}) {
    CAPTURE(sched.text);
    const auto a =
        run_method(obj, sched, StopRule::for_epochs(6), Vec(5, 0.0), 77);
    const auto b =
        run_method(obj, sched, StopRule::for_epochs(6), Vec(5, 0.0), 77);
    REQUIRE(serialize_trace(a) == serialize_trace(b));
    const auto c =
        run_method(obj, sched, StopRule::for_epochs(6), Vec(5, 0.0), 78);
    CHECK(serialize_trace(a) != serialize_trace(c));
  }
}

TEST_CASE("delta = 0 outputs the last epoch's iterate") {
  const auto ds = synth_logistic(100, 5, 10, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const auto trace = run_method(obj, Schedule::q(0.0),
                                StopRule::for_epochs(7), Vec(5, 0.0), 3);
  CHECK(trace.output_index == 7);
  CHECK(trace.records.back().epoch == 7);

  // Replay the epochs with the same stream layout; the output iterate must
  // be the epoch-7 state bit for bit.
  RngStream root(3);
  IfoCounter counter;
  CountingOracle oracle(obj, counter);
  Vec x(5, 0.0);
  for (std::int64_t j = 1; j <= 7; ++j) {
    const auto p = Schedule::q(0.0).params(j, 100, obj.smoothness());
    geom_sarah_epoch(x, p, root.split(j), oracle);
  }
  REQUIRE(trace.output_iterate == x);
}

TEST_CASE("tail indices follow the eta*m law") {
  const auto ds = synth_logistic(16, 2, 11, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const Schedule sched = Schedule::q();  // delta = 1
  const std::int64_t T = 2;
  // Weights eta_j m_j over {2,3,4}.
  std::map<std::int64_t, double> weights;
  double total = 0.0;
  for (std::int64_t j = T; j <= tail_end_epoch(T, sched.delta); ++j) {
    weights[j] = tail_weight(sched.params(j, 16, obj.smoothness()));
    total += weights[j];
  }
  std::map<std::int64_t, int> hits;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto trace = run_method(obj, sched, StopRule::for_epochs(T),
                                  Vec(2, 0.0), 1000 + r);
    hits[trace.output_index]++;
  }
  for (const auto& [j, w] : weights) {
    const double freq = static_cast<double>(hits[j]) / reps;
    CHECK(std::abs(freq - w / total) <= 0.025);
  }
}

TEST_CASE("runs converge on a small problem") {
  const auto ds = synth_logistic(1000, 20, 1, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const auto trace = run_method(obj, Schedule::q(), StopRule::for_epochs(60),
                                Vec(20, 0.0), 42);
  const double initial = trace.records.front().grad_norm_sq;
  const double at_output = squared_norm(obj.full_grad(trace.output_iterate));
  CHECK(at_output <= initial / 100.0);
}

TEST_CASE("budget mode stops once the counter reaches the budget") {
  const auto ds = synth_logistic(200, 5, 12, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const std::uint64_t budget = 5 * 200;
  for (const auto& sched : {Schedule::q(), Schedule::sgd()}) {
    const auto trace =
        run_method(obj, sched, StopRule::for_budget(budget), Vec(5, 0.0), 9);
    CHECK(trace.records.back().ifo_cumulative >= budget);
    // The run never starts an epoch at or past the budget.
    for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
      CHECK(trace.records[i].ifo_cumulative < budget);
    }
    CHECK(trace.output_index == trace.records.back().epoch);
  }
}

TEST_CASE("diverging steps abort with the failing epoch") {
  const auto ds = synth_logistic(64, 4, 13, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  Schedule sched = Schedule::q();
  sched.eta_scale = 1e301;
  try {
    run_method(obj, sched, StopRule::for_epochs(5), Vec(4, 0.0), 1);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("trace metrics are always finite") {
  const auto ds = synth_logistic(128, 6, 14, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  for (const auto& sched : {Schedule::q(), Schedule::e(2.0), Schedule::svrg(),
                            Schedule::sgd()}) {
    const auto trace =
        run_method(obj, sched, StopRule::for_epochs(8), Vec(6, 0.0), 21);
    for (const auto& r : trace.records) {
      CHECK(std::isfinite(r.f_value));
      CHECK(std::isfinite(r.grad_norm_sq));
    }
  }
}

TEST_CASE("one-epoch inequality: exact anchor case") {
  const auto ds = synth_logistic(50, 4, 15, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  EpochParams p;
  p.B = 50;
  p.b = 7;
  p.m = 49.0;
  p.eta = 7.0 / (2.0 * obj.smoothness() * 7.0);
  const auto res =
      one_epoch_inequality_check(obj, p, 400, Vec(4, 0.2), RngStream(31));
  CHECK(res.pass);
  CHECK(res.rhs == res.rhs);  // finite
  // B = n: no variance term contributes.
  CHECK(res.sigma2 >= 0.0);
}

TEST_CASE("one-epoch inequality: sampled anchor case") {
  const auto ds = synth_logistic(100, 5, 16, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const auto p = q_schedule(3, 100, obj.smoothness());
  const auto res =
      one_epoch_inequality_check(obj, p, 500, Vec(5, 0.25), RngStream(32));
  CHECK(res.pass);
}

TEST_CASE("one-epoch inequality: a single replicate still reports numbers") {
  const auto ds = synth_logistic(100, 5, 17, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const auto p = q_schedule(3, 100, obj.smoothness());
  const auto res =
      one_epoch_inequality_check(obj, p, 1, Vec(5, 0.25), RngStream(33));
  CHECK(std::isfinite(res.lhs));
  CHECK(std::isfinite(res.rhs));
  CHECK(res.std_err == 0.0);
}

TEST_CASE("population variance matches a direct two-pass computation") {
  const auto ds = synth_logistic(40, 3, 18, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  const Vec x{0.1, -0.4, 0.7};
  const Vec g = obj.full_grad(x);
  double acc = 0.0;
  for (std::int64_t i = 0; i < 40; ++i) {
    Vec gi(3, 0.0);
    obj.grad_index(i, x, gi);
    for (int j = 0; j < 3; ++j) acc += (gi[j] - g[j]) * (gi[j] - g[j]);
  }
  CHECK(population_grad_variance(obj, x) ==
        doctest::Approx(acc / 40.0).epsilon(1e-14));
}

TEST_CASE("guard rails") {
  const auto ds = synth_logistic(20, 3, 19, 1.0);
  const LogisticNcvx obj(ds, 0.1);
  CHECK_THROWS_AS(run_method(obj, Schedule::q(), StopRule{}, Vec(3, 0.0), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_method(obj, Schedule::q(), StopRule::for_epochs(1),
                             Vec(2, 0.0), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      run_geom_sarah(obj, Schedule::sgd(), StopRule::for_epochs(1),
                     Vec(3, 0.0), 1),
      std::invalid_argument);
  CHECK_THROWS_AS(
      run_baseline(obj, Schedule::q(), StopRule::for_epochs(1), Vec(3, 0.0),
                   1),
      std::invalid_argument);
}

}  // TEST_SUITE
