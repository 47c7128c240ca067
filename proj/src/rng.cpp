#include "gsarah/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace gsarah {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford mix13).
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (mix64(v + kGamma) + 0x5851F42D4C957F2DULL + (h << 6) +
                    (h >> 2)));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : key_(combine(combine(0x853C49E6748FEA9BULL, seed), stream_id)),
      ctr_(0),
      seed_(seed),
      stream_(stream_id) {}

std::uint64_t RngStream::next_u64() { return mix64(key_ + ++ctr_ * kGamma); }

double RngStream::next_unit() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  const double u1 = next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925287 * u2);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("next_below: bound must be positive");
  }
  const std::uint64_t rem = (0 - bound) % bound;  // 2^64 mod bound
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r < rem);
  return r % bound;
}

RngStream RngStream::split(std::uint64_t child) const {
  RngStream s(*this);
  s.key_ = combine(key_, child);
  s.stream_ = combine(stream_, child);
  s.ctr_ = 0;
  return s;
}

std::int64_t geom_sample(RngStream& rng, double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("geom_sample: mean must be positive");
  }
  const double gamma = mean / (1.0 + mean);
  const double u = rng.next_unit();
  return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(gamma)));
}

std::vector<std::uint32_t> sample_without_replacement(RngStream& rng,
                                                      std::uint64_t population,
                                                      std::uint64_t k) {
  if (k == 0 || k > population) {
    throw std::invalid_argument(
        "sample_without_replacement: need 1 <= k <= population");
  }
  if (population > 0xFFFFFFFFULL) {
    throw std::invalid_argument(
        "sample_without_replacement: population exceeds 32-bit index range");
  }
  std::vector<std::uint32_t> out;
  out.reserve(k);
  if (k == population) {
    out.resize(k);
    std::iota(out.begin(), out.end(), 0u);
    return out;
  }
  std::unordered_set<std::uint32_t> chosen;
  chosen.reserve(k * 2);
  for (std::uint64_t t = population - k; t < population; ++t) {
    const auto candidate = static_cast<std::uint32_t>(rng.next_below(t + 1));
    if (chosen.insert(candidate).second) {
      out.push_back(candidate);
    } else {
      chosen.insert(static_cast<std::uint32_t>(t));
      out.push_back(static_cast<std::uint32_t>(t));
    }
  }
  return out;
}

TailDistribution make_tail_distribution(std::int64_t lo, std::int64_t hi,
                                        std::vector<double> weights) {
  if (hi < lo) {
    throw std::invalid_argument("tail distribution: hi < lo");
  }
  if (weights.size() != static_cast<std::size_t>(hi - lo + 1)) {
    throw std::invalid_argument("tail distribution: weight count mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument(
          "tail distribution: weights must be finite and positive");
    }
    total += w;
  }
  return {lo, hi, std::move(weights), total};
}

std::int64_t tail_index(RngStream& rng, const TailDistribution& td) {
  const double u = rng.next_unit() * td.total;
  double acc = 0.0;
  for (std::size_t i = 0; i < td.weights.size(); ++i) {
    acc += td.weights[i];
    if (u <= acc) {
      return td.lo + static_cast<std::int64_t>(i);
    }
  }
  return td.hi;
}

std::int64_t tail_end_epoch(std::int64_t T, double delta) {
  const double v = (1.0 + delta) * static_cast<double>(T);
  return static_cast<std::int64_t>(std::ceil(v - (1e-9 + 4e-16 * v)));
}

GeomIdentityResult geometrization_identity_check(
    const std::function<double(std::int64_t)>& seq, double mean,
    std::int64_t n_draws, RngStream& rng) {
  if (n_draws < 1) {
    throw std::invalid_argument("geometrization check: n_draws must be >= 1");
  }
  const double gamma = mean / (1.0 + mean);

  // Monte-Carlo mean and variance of D_N - D_{N+1} (Welford).
  double m1 = 0.0, m2 = 0.0;
  for (std::int64_t t = 0; t < n_draws; ++t) {
    const std::int64_t n = geom_sample(rng, mean);
    const double x = seq(n) - seq(n + 1);
    const double delta = x - m1;
    m1 += delta / static_cast<double>(t + 1);
    m2 += delta * (x - m1);
  }
  const double var =
      n_draws > 1 ? m2 / static_cast<double>(n_draws - 1) : 0.0;

  // E[D_N] by series, truncated once the remaining tail weight gamma^{K+1}
  // drops below 1e-14.
  const auto cutoff = static_cast<std::int64_t>(
      std::ceil(std::log(1e-14) / std::log(gamma)));
  double edn = 0.0;
  double wk = 1.0 - gamma;  // P(N = 0)
  for (std::int64_t k = 0; k <= cutoff; ++k) {
    edn += seq(k) * wk;
    wk *= gamma;
  }

  GeomIdentityResult r;
  r.lhs_estimate = m1;
  r.rhs_exact = (seq(0) - edn) / mean;
  r.std_err = std::sqrt(var / static_cast<double>(n_draws));
  return r;
}

}  // namespace gsarah
