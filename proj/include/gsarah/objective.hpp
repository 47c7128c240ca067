#pragma once

#include <span>
#include <vector>

#include "gsarah/dataset.hpp"

namespace gsarah {

using Vec = std::vector<double>;

// Execution policy for the batch kernels.  Every policy produces bit-identical
// results: sums are folded over fixed contiguous lanes in ascending order, so
// the policy (and the OpenMP thread count) only affects speed.  Auto switches
// to the parallel path for large batches outside existing parallel regions.
enum class Exec { Auto, Serial, Parallel };

double squared_norm(std::span<const double> x);

// Finite-sum logistic loss with a bounded non-convex penalty:
//   f_i(x) = log(1 + exp(-y_i <w_i, x>)) + (lambda/2) sum_j x_j^2/(1+x_j^2)
//   f(x)   = (1/n) sum_i f_i(x)
// Per-sample smoothness is ||w_i||^2/4 + lambda; smoothness() returns the max
// over i.  Immutable after construction; all evaluations are pure and safe to
// call from multiple threads.
class LogisticNcvx {
 public:
  // Keeps a reference to `ds`; the dataset must outlive the objective.
  LogisticNcvx(const SparseDataset& ds, double lambda);

  std::int64_t num_terms() const { return ds_->num_examples(); }
  std::int64_t dim() const { return ds_->dim(); }
  double lambda() const { return lambda_; }
  double smoothness() const { return smoothness_; }
  const std::vector<double>& sq_norms() const { return sq_norms_; }
  const SparseDataset& dataset() const { return *ds_; }

  // f(x), using the overflow-safe form log(1+e^z) = max(z,0) + log1p(e^-|z|).
  double value(std::span<const double> x, Exec exec = Exec::Auto) const;

  // Single term f_i(x) (the value half of an incremental first-order query).
  double value_index(std::int64_t i, std::span<const double> x) const;

  // Accumulates grad f_i(x) into `acc`: the sparse logistic part
  // sigmoid(-y_i t) * (-y_i) * w_i plus the dense penalty part
  // lambda * x_j / (1+x_j^2)^2 per coordinate.
  void grad_index(std::int64_t i, std::span<const double> x,
                  std::span<double> acc) const;

  // Mean of grad f_i over `idx` in the canonical lane order: terms accumulate
  // left to right within each contiguous lane, lane partials fold in
  // ascending order, and the sum divides by idx.size().  For batches of up to
  // 64 terms every lane holds one term, so the result is bit-identical to the
  // plain left-to-right sum of materialized grad_index results.
  void grad_batch(std::span<const std::uint32_t> idx,
                  std::span<const double> x, Vec& out,
                  Exec exec = Exec::Auto) const;
  Vec grad_batch(std::span<const std::uint32_t> idx, std::span<const double> x,
                 Exec exec = Exec::Auto) const;

  // Exact grad f(x): identical arithmetic to grad_batch over {0,...,n-1}.
  void full_grad(std::span<const double> x, Vec& out,
                 Exec exec = Exec::Auto) const;
  Vec full_grad(std::span<const double> x, Exec exec = Exec::Auto) const;

 private:
  void check_dim(std::span<const double> x) const;
  void add_term_grad(std::int64_t i, std::span<const double> x,
                     std::span<double> acc) const;
  double penalty_value(std::span<const double> x) const;

  const SparseDataset* ds_;
  double lambda_;
  std::vector<double> sq_norms_;
  double smoothness_;
};

}  // namespace gsarah
