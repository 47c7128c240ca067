#include "gsarah/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gsarah {

namespace {

// Upper bound on the lane count of the blocked reductions.  Lanes are
// contiguous position ranges folded in ascending order, so results do not
// depend on the execution policy or thread count.
constexpr std::int64_t kLanes = 64;

// Batches below this stay on the serial path under Exec::Auto.
constexpr std::int64_t kParallelCutoff = 4096;

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow at large |z|.
double log1p_exp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

bool use_parallel(Exec exec, std::int64_t k) {
#ifdef _OPENMP
  if (exec == Exec::Parallel) return true;
  if (exec == Exec::Serial) return false;
  return k >= kParallelCutoff && omp_get_max_threads() > 1 &&
         omp_in_parallel() == 0;
#else
  (void)exec;
  (void)k;
  return false;
#endif
}

struct LaneLayout {
  std::int64_t lane_size;
  std::int64_t n_lanes;
};

LaneLayout lanes_for(std::int64_t k) {
  const std::int64_t lane_size = (k + kLanes - 1) / kLanes;
  return {lane_size, (k + lane_size - 1) / lane_size};
}

// sum over positions 0..k-1 of body(pos), folded per lane then across lanes
// in ascending order.
template <class Body>
double laned_scalar_sum(std::int64_t k, Exec exec, Body&& body) {
  const auto [lane_size, n_lanes] = lanes_for(k);
  double total = 0.0;
  if (!use_parallel(exec, k)) {
    for (std::int64_t lane = 0; lane < n_lanes; ++lane) {
      double partial = 0.0;
      const std::int64_t end = std::min(k, (lane + 1) * lane_size);
      for (std::int64_t pos = lane * lane_size; pos < end; ++pos) {
        partial += body(pos);
      }
      total += partial;
    }
    return total;
  }
  std::vector<double> partials(n_lanes, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t lane = 0; lane < n_lanes; ++lane) {
    double partial = 0.0;
    const std::int64_t end = std::min(k, (lane + 1) * lane_size);
    for (std::int64_t pos = lane * lane_size; pos < end; ++pos) {
      partial += body(pos);
    }
    partials[lane] = partial;
  }
  for (double p : partials) total += p;
  return total;
}

// Vector analogue: body(pos, partial) accumulates into a d-length partial.
template <class Body>
void laned_vector_sum(std::int64_t k, std::int64_t d, std::span<double> out,
                      Exec exec, Body&& body) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto [lane_size, n_lanes] = lanes_for(k);
  if (!use_parallel(exec, k)) {
    std::vector<double> partial(d);
    for (std::int64_t lane = 0; lane < n_lanes; ++lane) {
      std::fill(partial.begin(), partial.end(), 0.0);
      const std::int64_t end = std::min(k, (lane + 1) * lane_size);
      for (std::int64_t pos = lane * lane_size; pos < end; ++pos) {
        body(pos, std::span<double>(partial));
      }
      for (std::int64_t j = 0; j < d; ++j) out[j] += partial[j];
    }
    return;
  }
  std::vector<double> partials(static_cast<std::size_t>(n_lanes) * d, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t lane = 0; lane < n_lanes; ++lane) {
    std::span<double> partial(partials.data() + lane * d,
                              static_cast<std::size_t>(d));
    const std::int64_t end = std::min(k, (lane + 1) * lane_size);
    for (std::int64_t pos = lane * lane_size; pos < end; ++pos) {
      body(pos, partial);
    }
  }
  for (std::int64_t lane = 0; lane < n_lanes; ++lane) {
    const double* partial = partials.data() + lane * d;
    for (std::int64_t j = 0; j < d; ++j) out[j] += partial[j];
  }
}

}  // namespace

double squared_norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

LogisticNcvx::LogisticNcvx(const SparseDataset& ds, double lambda)
    : ds_(&ds), lambda_(lambda), sq_norms_(row_sq_norms(ds)) {
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw std::invalid_argument("objective: lambda must be >= 0");
  }
  double max_sq = 0.0;
  for (double s : sq_norms_) max_sq = std::max(max_sq, s);
  smoothness_ = max_sq / 4.0 + lambda_;
  if (!(smoothness_ > 0.0)) {
    throw std::invalid_argument(
        "objective: smoothness constant is zero (empty rows and lambda = 0)");
  }
}

void LogisticNcvx::check_dim(std::span<const double> x) const {
  if (static_cast<std::int64_t>(x.size()) != dim()) {
    throw std::invalid_argument("objective: parameter dimension mismatch");
  }
}

double LogisticNcvx::penalty_value(std::span<const double> x) const {
  if (lambda_ == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v / (1.0 + v * v);
  return 0.5 * lambda_ * acc;
}

double LogisticNcvx::value(std::span<const double> x, Exec exec) const {
  check_dim(x);
  const std::int64_t n = num_terms();
  const double loss = laned_scalar_sum(n, exec, [&](std::int64_t i) {
    double dot = 0.0;
    for (const auto& e : ds_->row(i)) dot += e.value * x[e.index];
    return log1p_exp(-ds_->label(i) * dot);
  });
  return loss / static_cast<double>(n) + penalty_value(x);
}

double LogisticNcvx::value_index(std::int64_t i,
                                 std::span<const double> x) const {
  check_dim(x);
  if (i < 0 || i >= num_terms()) {
    throw std::out_of_range("objective: term index out of range");
  }
  double dot = 0.0;
  for (const auto& e : ds_->row(i)) dot += e.value * x[e.index];
  return log1p_exp(-ds_->label(i) * dot) + penalty_value(x);
}

void LogisticNcvx::add_term_grad(std::int64_t i, std::span<const double> x,
                                 std::span<double> acc) const {
  double dot = 0.0;
  for (const auto& e : ds_->row(i)) dot += e.value * x[e.index];
  const double y = ds_->label(i);
  const double s = stable_sigmoid(-y * dot) * -y;
  for (const auto& e : ds_->row(i)) acc[e.index] += s * e.value;
  if (lambda_ != 0.0) {
    const std::int64_t d = dim();
    for (std::int64_t j = 0; j < d; ++j) {
      const double q = 1.0 + x[j] * x[j];
      acc[j] += lambda_ * x[j] / (q * q);
    }
  }
}

void LogisticNcvx::grad_index(std::int64_t i, std::span<const double> x,
                              std::span<double> acc) const {
  check_dim(x);
  if (i < 0 || i >= num_terms()) {
    throw std::out_of_range("objective: term index out of range");
  }
  add_term_grad(i, x, acc);
}

void LogisticNcvx::grad_batch(std::span<const std::uint32_t> idx,
                              std::span<const double> x, Vec& out,
                              Exec exec) const {
  check_dim(x);
  if (idx.empty()) {
    throw std::invalid_argument("objective: empty index list");
  }
  const auto n = static_cast<std::uint32_t>(num_terms());
  for (std::uint32_t i : idx) {
    if (i >= n) throw std::out_of_range("objective: term index out of range");
  }
  out.assign(x.size(), 0.0);
  const auto k = static_cast<std::int64_t>(idx.size());
  laned_vector_sum(k, dim(), out, exec,
                   [&](std::int64_t pos, std::span<double> partial) {
                     add_term_grad(idx[pos], x, partial);
                   });
  const double inv = 1.0 / static_cast<double>(k);
  for (double& v : out) v *= inv;
}

Vec LogisticNcvx::grad_batch(std::span<const std::uint32_t> idx,
                             std::span<const double> x, Exec exec) const {
  Vec out;
  grad_batch(idx, x, out, exec);
  return out;
}

void LogisticNcvx::full_grad(std::span<const double> x, Vec& out,
                             Exec exec) const {
  check_dim(x);
  out.assign(x.size(), 0.0);
  const std::int64_t n = num_terms();
  laned_vector_sum(n, dim(), out, exec,
                   [&](std::int64_t pos, std::span<double> partial) {
                     add_term_grad(pos, x, partial);
                   });
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= inv;
}

Vec LogisticNcvx::full_grad(std::span<const double> x, Exec exec) const {
  Vec out;
  full_grad(x, out, exec);
  return out;
}

}  // namespace gsarah
