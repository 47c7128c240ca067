#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gsarah {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-epoch hyperparameters.  b is the inner mini-batch size, B the big-batch
// (anchor) size, and m the expected inner-loop query budget: geometric kinds
// draw the inner length N with E[N] = m/b, deterministic kinds take exactly
// m/b steps.  m may be non-integral (exponential growth before the cap).
struct EpochParams {
  double eta = 0.0;
  std::int64_t b = 1;
  double m = 1.0;
  std::int64_t B = 1;
};

// Tail weight eta_j * m_j (law of the tail-randomized output index).
inline double tail_weight(const EpochParams& p) { return p.eta * p.m; }

// lambda_j = eta_j * m_j / b_j; non-decreasing in j for the adaptive kinds.
inline double lambda_weight(const EpochParams& p) {
  return p.eta * p.m / static_cast<double>(p.b);
}

// Step-size condition 2*eta*L <= min(1, b/sqrt(m)).  Compared with 1e-12
// relative slack: eta is constructed as exactly b/(2L*sqrt(m)), so any excess
// is rounding of the re-multiplication, not a schedule violation.
bool stepsize_condition_holds(const EpochParams& p, double L);

// Mini-batch bound b <= sqrt(m).
bool minibatch_condition_holds(const EpochParams& p);

enum class MethodKind {
  QGeomSarah,   // m_j = B_j = min(j^2, n)
  EGeomSarah,   // m_j = min(alpha^{2j}, n), B_j = ceil(m_j)
  NonAdaptive,  // m_j = B_j = B fixed
  SarahFull,    // full (or fixed big-batch) anchor + sqrt(n) SARAH steps
  Svrg,         // full (or fixed big-batch) anchor + n/b SVRG steps
  Scsg,         // B_j = min(ceil(c j^{3/2}), n), geometric inner loop
  Sgd,          // plain mini-batch SGD, b = min(32, n)
};

// m = B = min(j^2, n); b = floor(sqrt(m)); eta = b/(2L*sqrt(m)).
EpochParams q_schedule(std::int64_t j, std::int64_t n, double L);

// m = min(alpha^{2j}, n); B = ceil(m) clamped to n; b = max(1,floor(sqrt(m)));
// eta = b/(2L*sqrt(m)).  Requires alpha > 1.
EpochParams e_schedule(std::int64_t j, std::int64_t n, double L, double alpha);

// m = B (fixed); b = max(1, floor(sqrt(B))); eta = b/(2L*sqrt(B)).
// Requires 1 <= B <= n.
EpochParams nonadaptive_schedule(std::int64_t B, std::int64_t n, double L);

// Big-batch choice B = min(ceil(sigma^2/(4 mu eps^2)), n) targeting the
// function-value gap.  sigma2, mu, eps are caller-supplied knowledge.
std::int64_t nonadaptive_B_for_f(double sigma2, double mu, double eps,
                                 std::int64_t n);

// Big-batch choice B = min(ceil(8 sigma^2/eps^2
//   + 8 sigma^{4/3} L^{2/3} / (eps^{4/3} mu^{2/3})), n) targeting the
// gradient norm.
std::int64_t nonadaptive_B_for_g(double sigma2, double mu, double eps,
                                 double L, std::int64_t n);

// Baseline tuples (see MethodKind).  B_fixed > 0 replaces the full anchor of
// SarahFull/Svrg with a fixed big batch (low-precision variants);
// steps_override > 0 replaces their default inner epoch length.
EpochParams baseline_schedule(MethodKind kind, std::int64_t n, double L,
                              std::int64_t j, double c_scsg = 1.0,
                              std::int64_t B_fixed = 0,
                              std::int64_t steps_override = 0);

// A method descriptor: kind plus its constants.  Text grammar (comma-free so
// CSV columns stay flat):
//   q-geom-sarah[:delta=D]
//   e-geom-sarah[:alpha=A][:delta=D]
//   nonadaptive:B=<int>  |  nonadaptive:target=f|g:sigma2=S:mu=M:eps=E
//   sarah[:B=<int>][:steps=<int>]   (fixed big batch, e.g. sarah:B=1024)
//   svrg[:B=<int>][:steps=<int>]    (steps overrides the inner epoch length)
//   scsg[:c=C]
//   sgd
struct Schedule {
  MethodKind kind = MethodKind::QGeomSarah;
  double delta = 1.0;          // tail fraction (Q default 1, E default 0.5,
                               // everything else 0)
  double alpha = 2.0;          // E growth base, > 1
  std::int64_t B_fixed = 0;    // nonadaptive B / low-precision anchor size
  std::int64_t steps = 0;      // inner epoch length override (sarah/svrg)
  double c_scsg = 1.0;         // SCSG growth constant
  char na_target = 0;          // 'f' or 'g' when B derives from helpers
  double sigma2 = 0.0, mu = 0.0, eps = 0.0;
  double eta_scale = 1.0;      // step-size multiplier (testing hook)
  std::string text;            // canonical descriptor

  EpochParams params(std::int64_t j, std::int64_t n, double L) const;
  bool geometric_inner_loop() const;
  const std::string& descriptor() const { return text; }

  static Schedule parse(const std::string& descriptor);
  static Schedule q(double delta = 1.0);
  static Schedule e(double alpha = 2.0, double delta = 0.5);
  static Schedule nonadaptive(std::int64_t B);
  static Schedule sarah(std::int64_t B_fixed = 0);
  static Schedule svrg(std::int64_t B_fixed = 0);
  static Schedule scsg(double c = 1.0);
  static Schedule sgd();
};

}  // namespace gsarah
