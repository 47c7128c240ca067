#include <doctest.h>

#include <cmath>

#include "gsarah/schedules.hpp"

using namespace gsarah;

namespace {

void check_invariants(const EpochParams& p, double L) {
  CHECK(stepsize_condition_holds(p, L));
  CHECK(minibatch_condition_holds(p));
  CHECK(p.b >= 1);
  CHECK(p.B >= 1);
  CHECK(p.m > 0.0);
  CHECK(p.eta > 0.0);
}

}  // namespace

TEST_SUITE("schedules") {

TEST_CASE("quadratic schedule formulas") {
  const auto p = q_schedule(3, 100, 1.0);
  CHECK(p.m == 9.0);
  CHECK(p.B == 9);
  CHECK(p.b == 3);
  CHECK(p.eta == 0.5);

  const auto capped = q_schedule(50, 100, 2.0);
  CHECK(capped.m == 100.0);
  CHECK(capped.B == 100);
  CHECK(capped.b == 10);
  CHECK(capped.eta == doctest::Approx(0.5 / 2.0).epsilon(1e-15));

  const auto minimal = q_schedule(1, 1, 1.0);
  CHECK(minimal.m == 1.0);
  CHECK(minimal.B == 1);
  CHECK(minimal.b == 1);
  CHECK(minimal.eta == 0.5);
}

TEST_CASE("quadratic schedule caps exactly at ceil(sqrt(n))") {
  for (std::int64_t n : {2LL, 10LL, 100LL, 1000LL, 999983LL}) {
    const auto cap = static_cast<std::int64_t>(
        std::ceil(std::sqrt(static_cast<double>(n))));
    CHECK(q_schedule(cap, n, 1.0).m == static_cast<double>(n));
    if (cap > 1) CHECK(q_schedule(cap - 1, n, 1.0).m < static_cast<double>(n));
    CHECK(q_schedule(cap + 7, n, 1.0).m == static_cast<double>(n));
  }
}

TEST_CASE("exponential schedule formulas") {
  const auto p = e_schedule(2, 1000000, 1.0, 2.0);
  CHECK(p.m == 16.0);
  CHECK(p.B == 16);
  CHECK(p.b == 4);
  CHECK(p.eta == 0.5);

  const auto capped = e_schedule(20, 1000, 1.0, 2.0);
  CHECK(capped.m == 1000.0);
  CHECK(capped.B == 1000);

  const auto frac = e_schedule(1, 1000, 1.0, 1.5);
  CHECK(frac.m == 2.25);
  CHECK(frac.B == 3);
  CHECK(frac.b == 1);
  CHECK(frac.eta == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // Far past any representable power: the cap still applies.
  CHECK(e_schedule(10000, 1000, 1.0, 2.0).m == 1000.0);
}

TEST_CASE("non-adaptive schedule and big-batch helpers") {
  const auto p = nonadaptive_schedule(4, 100, 1.0);
  CHECK(p.b == 2);
  CHECK(p.eta == 0.5);
  CHECK(p.m == 4.0);
  CHECK(p.B == 4);
  CHECK_THROWS_AS(nonadaptive_schedule(0, 100, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(nonadaptive_schedule(101, 100, 1.0),
                  std::invalid_argument);

  // B = min(ceil(sigma^2/(4 mu eps^2)), n).
  CHECK(nonadaptive_B_for_f(1.0, 0.1, 0.1, 1000000) == 250);
  CHECK(nonadaptive_B_for_f(1.0, 0.1, 0.1, 100) == 100);
  // B = min(ceil(8 s2/e2 + 8 s2^{2/3} L^{2/3} / (e^{4/3} mu^{2/3})), n).
  const double expect = std::ceil(8.0 / 0.01 +
                                  8.0 * std::pow(1.0, 2.0 / 3.0) /
                                      (std::pow(0.1, 4.0 / 3.0) *
                                       std::pow(0.1, 2.0 / 3.0)));
  CHECK(nonadaptive_B_for_g(1.0, 0.1, 0.1, 1.0, 1000000) ==
        static_cast<std::int64_t>(expect));
}

TEST_CASE("baseline tuples") {
  // ceil(sqrt(8124)) = 91 inner batch, 91 steps -> m = 8281 queries.
  const auto sarah = baseline_schedule(MethodKind::SarahFull, 8124, 1.0, 1);
  CHECK(sarah.b == 91);
  CHECK(sarah.m == 8281.0);
  CHECK(sarah.B == 8124);
  CHECK(sarah.eta == 0.5);
  CHECK(static_cast<std::int64_t>(sarah.m) / sarah.b == 91);

  const auto svrg = baseline_schedule(MethodKind::Svrg, 1000, 1.0, 1);
  CHECK(svrg.b == 100);  // ceil(1000^{2/3})
  CHECK(svrg.B == 1000);
  CHECK(static_cast<std::int64_t>(svrg.m) / svrg.b == 10);  // ceil(n/b)

  const auto scsg = baseline_schedule(MethodKind::Scsg, 1000000, 1.0, 4);
  CHECK(scsg.B == 8);  // ceil(4^{3/2})
  CHECK(scsg.b == 2);
  CHECK(scsg.m == 8.0);

  const auto sgd = baseline_schedule(MethodKind::Sgd, 8124, 1.0, 1);
  CHECK(sgd.b == 32);
  CHECK(sgd.eta == 0.5);
  const auto sgd_small = baseline_schedule(MethodKind::Sgd, 10, 1.0, 1);
  CHECK(sgd_small.b == 10);

  // Low-precision anchors replace B = n with a fixed size.
  const auto low = baseline_schedule(MethodKind::SarahFull, 8124, 1.0, 1,
                                     1.0, 1024);
  CHECK(low.B == 1024);
}

TEST_CASE("invariants hold across the full grid") {
  const Schedule kinds[] = {
      Schedule::q(),         Schedule::e(2.0),      Schedule::e(1.5),
      Schedule::nonadaptive(1), Schedule::scsg(1.0), Schedule::sarah(),
      Schedule::sgd(),
  };
  for (const auto& base : kinds) {
    for (std::int64_t n : {1LL, 10LL, 1000LL, 1000000LL}) {
      for (double L : {0.1, 1.0, 100.0}) {
        Schedule s = base;
        if (s.kind == MethodKind::NonAdaptive) {
          s.B_fixed = std::max<std::int64_t>(1, n / 2);
        }
        // Coarse j sweep here; the acceptance suite runs every j <= 10^4.
        for (std::int64_t j : {1LL, 2LL, 3LL, 7LL, 33LL, 1000LL, 10000LL}) {
          CAPTURE(s.text);
          CAPTURE(n);
          CAPTURE(L);
          CAPTURE(j);
          const auto p = s.params(j, n, L);
          check_invariants(p, L);
        }
      }
    }
  }
  // SVRG keeps the step-size condition but b <= sqrt(m) cannot hold with
  // b = n^{2/3} and ~n queries per epoch (see ledger).
  for (std::int64_t n : {1LL, 10LL, 1000LL, 1000000LL}) {
    for (double L : {0.1, 1.0, 100.0}) {
      const auto p = Schedule::svrg().params(1, n, L);
      CHECK(stepsize_condition_holds(p, L));
    }
  }
}

TEST_CASE("lambda_j is non-decreasing and flat after the cap") {
  for (const auto& s : {Schedule::q(), Schedule::e(2.0), Schedule::e(1.5)}) {
    for (std::int64_t n : {10LL, 1000LL, 1000000LL}) {
      for (double L : {0.1, 1.0, 100.0}) {
        double prev = 0.0;
        for (std::int64_t j = 1; j <= 200; ++j) {
          const double lam = lambda_weight(s.params(j, n, L));
          CHECK(lam >= prev);
          prev = lam;
        }
        // Once m caps at n the whole tuple is constant.
        const auto a = s.params(500, n, L);
        const auto b = s.params(501, n, L);
        if (a.m == static_cast<double>(n)) {
          CHECK(lambda_weight(a) == lambda_weight(b));
        }
      }
    }
  }
}

TEST_CASE("exponential big-batch ratio stays above 1/alpha^2 before the cap") {
  for (double alpha : {1.5, 2.0, 3.0}) {
    const Schedule s = Schedule::e(alpha);
    const std::int64_t n = 1000000000;
    double prev_growth = std::pow(alpha, 2.0);
    double prev_lambda = lambda_weight(s.params(1, n, 1.0));
    for (std::int64_t j = 2; 2.0 * j * std::log(alpha) < std::log(1e8);
         ++j) {
      const double growth = std::pow(alpha, 2.0 * j);
      const double lam = lambda_weight(s.params(j, n, 1.0));
      const double ratio = (prev_growth * lam) / (growth * prev_lambda);
      CHECK(ratio >= 1.0 / (alpha * alpha) * (1.0 - 1e-12));
      prev_growth = growth;
      prev_lambda = lam;
    }
  }
}

TEST_CASE("descriptor parsing") {
  CHECK(Schedule::parse("q-geom-sarah").kind == MethodKind::QGeomSarah);
  CHECK(Schedule::parse("q-geom-sarah").delta == 1.0);
  CHECK(Schedule::parse("q-geom-sarah:delta=0").delta == 0.0);

  const auto e = Schedule::parse("e-geom-sarah:alpha=2:delta=0.25");
  CHECK(e.kind == MethodKind::EGeomSarah);
  CHECK(e.alpha == 2.0);
  CHECK(e.delta == 0.25);
  CHECK(Schedule::parse("e-geom-sarah").delta == 0.5);

  const auto na = Schedule::parse("nonadaptive:B=512");
  CHECK(na.kind == MethodKind::NonAdaptive);
  CHECK(na.B_fixed == 512);
  CHECK(na.delta == 0.0);
  const auto nat =
      Schedule::parse("nonadaptive:target=g:sigma2=1:mu=0.1:eps=0.05");
  CHECK(nat.na_target == 'g');
  CHECK(nat.params(1, 1000000, 1.0).B ==
        nonadaptive_B_for_g(1.0, 0.1, 0.05, 1.0, 1000000));

  CHECK(Schedule::parse("sarah").B_fixed == 0);
  CHECK(Schedule::parse("sarah:B=1024").B_fixed == 1024);
  CHECK(Schedule::parse("svrg:B=1024").B_fixed == 1024);
  const auto stepped = Schedule::parse("svrg:steps=5").params(1, 1000, 1.0);
  CHECK(static_cast<std::int64_t>(stepped.m) / stepped.b == 5);
  CHECK(Schedule::parse("sarah:steps=3").params(1, 100, 1.0).m == 30.0);
  CHECK(Schedule::parse("scsg:c=2.5").c_scsg == 2.5);
  CHECK(Schedule::parse("sgd").kind == MethodKind::Sgd);

  CHECK_THROWS_AS(Schedule::parse("unknown"), ConfigError);
  CHECK_THROWS_AS(Schedule::parse("q-geom-sarah:delta=2"), ConfigError);
  CHECK_THROWS_AS(Schedule::parse("e-geom-sarah:alpha=1"), ConfigError);
  CHECK_THROWS_AS(Schedule::parse("nonadaptive"), ConfigError);
  CHECK_THROWS_AS(Schedule::parse("sgd:B=7"), ConfigError);
  CHECK_THROWS_AS(Schedule::parse("scsg:c=0"), ConfigError);
  CHECK_THROWS_AS(Schedule::parse("q-geom-sarah:bogus=1"), ConfigError);
}

}  // TEST_SUITE
