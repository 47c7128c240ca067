#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace gsarah {

// Counter-based pseudo-random stream.  Output k of a stream is
// mix64(key + (k+1)*GAMMA) -- the SplitMix64 sequence for that key.  Stream
// keys are derived by hashing (seed, split path), so split() children never
// share outputs with the parent or with siblings.  Pure 64-bit integer
// arithmetic: the byte sequence is identical on every platform.  Period per
// stream: 2^64.
//
// A stream is single-owner; hand independent split() children to anything
// that runs concurrently.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1): (u + 0.5) / 2^53, never 0 or 1.
  double next_unit();

  // Standard normal (Box-Muller); consumes two uniforms per call.
  double next_gaussian();

  // Unbiased uniform integer in [0, bound); bound >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  // Independent child stream, deterministic in (parent, child).
  RngStream split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

// Geometric draw on {0,1,2,...} with P(N=k) = gamma^k (1-gamma) and
// gamma = mean/(1+mean), so E[N] = mean exactly.  Sampled by inversion:
// N = floor(log(U)/log(gamma)).  Throws std::invalid_argument for mean <= 0.
std::int64_t geom_sample(RngStream& rng, double mean);

// k distinct indices from {0,...,population-1}, every size-k subset
// equiprobable (Floyd's algorithm; insertion order).  k == population returns
// the identity permutation.  Throws std::invalid_argument unless
// 1 <= k <= population.
std::vector<std::uint32_t> sample_without_replacement(RngStream& rng,
                                                      std::uint64_t population,
                                                      std::uint64_t k);

// Discrete distribution on the epoch range {lo,...,hi} with unnormalized
// weights[j - lo]; used for the tail-randomized output index.
struct TailDistribution {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::vector<double> weights;
  double total = 0.0;
};

// Validates the range and weights (finite, > 0) and precomputes the total.
TailDistribution make_tail_distribution(std::int64_t lo, std::int64_t hi,
                                        std::vector<double> weights);

// Index in [td.lo, td.hi] with P(j) = weights[j-lo]/total (CDF inversion).
std::int64_t tail_index(RngStream& rng, const TailDistribution& td);

// ceil((1+delta)*T) with a guard for the binary representation of the
// product (e.g. 1.1*10 = 11.000000000000002 must give 11, not 12).
std::int64_t tail_end_epoch(std::int64_t T, double delta);

struct GeomIdentityResult {
  double lhs_estimate = 0.0;  // Monte-Carlo mean of D_N - D_{N+1}
  double rhs_exact = 0.0;     // (D_0 - E[D_N]) / E[N], truncated series
  double std_err = 0.0;       // standard error of the Monte-Carlo mean
};

// Checks E[D_N - D_{N+1}] = (D_0 - E[D_N]) / E[N] for N geometric with the
// given mean.  E[D_N] is summed until the remaining geometric tail weight
// drops below 1e-14; `seq` must grow at most polynomially.
GeomIdentityResult geometrization_identity_check(
    const std::function<double(std::int64_t)>& seq, double mean,
    std::int64_t n_draws, RngStream& rng);

}  // namespace gsarah
