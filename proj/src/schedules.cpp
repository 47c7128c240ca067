#include "gsarah/schedules.hpp"

#include <algorithm>
#include <cmath>

namespace gsarah {

namespace {

std::int64_t floor_sqrt_int(std::int64_t v) {
  if (v <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

std::int64_t ceil_sqrt_int(std::int64_t v) {
  const std::int64_t r = floor_sqrt_int(v);
  return r * r == v ? r : r + 1;
}

// floor(sqrt(m)) for real m; exact for integral m (correction loop).
std::int64_t floor_sqrt_real(double m) {
  auto r = static_cast<std::int64_t>(std::floor(std::sqrt(m)));
  while (r > 0 && static_cast<double>(r) * static_cast<double>(r) > m) --r;
  while (static_cast<double>(r + 1) * static_cast<double>(r + 1) <= m) ++r;
  return r;
}

// ceil(n^{2/3}) = smallest r with r^3 >= n^2.
std::int64_t ceil_pow_2_3(std::int64_t n) {
  auto r = static_cast<std::int64_t>(
      std::llround(std::pow(static_cast<double>(n), 2.0 / 3.0)));
  r = std::max<std::int64_t>(r, 1);
  const auto n2 = static_cast<__int128>(n) * n;
  while (static_cast<__int128>(r) * r * r < n2) ++r;
  while (r > 1 && static_cast<__int128>(r - 1) * (r - 1) * (r - 1) >= n2) --r;
  return r;
}

double step_size(std::int64_t b, double m, double L) {
  return static_cast<double>(b) / (2.0 * L * std::sqrt(m));
}

std::int64_t parse_int_field(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("method descriptor: bad integer for '" + key +
                      "': " + v);
  }
}

double parse_real_field(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("method descriptor: bad number for '" + key +
                      "': " + v);
  }
}

}  // namespace

bool stepsize_condition_holds(const EpochParams& p, double L) {
  const double lhs = 2.0 * p.eta * L;
  const double rhs =
      std::min(1.0, static_cast<double>(p.b) / std::sqrt(p.m));
  return lhs <= rhs * (1.0 + 1e-12);
}

bool minibatch_condition_holds(const EpochParams& p) {
  return static_cast<double>(p.b) <= std::sqrt(p.m);
}

EpochParams q_schedule(std::int64_t j, std::int64_t n, double L) {
  if (j < 1 || n < 1 || !(L > 0.0)) {
    throw std::invalid_argument("q_schedule: need j >= 1, n >= 1, L > 0");
  }
  // j^2 saturates well above any n long before the multiply could overflow.
  const std::int64_t j2 = j < 3037000499LL ? j * j : INT64_MAX;
  const std::int64_t m = std::min(j2, n);
  const std::int64_t b = std::max<std::int64_t>(1, floor_sqrt_int(m));
  return {step_size(b, static_cast<double>(m), L), b,
          static_cast<double>(m), m};
}

EpochParams e_schedule(std::int64_t j, std::int64_t n, double L,
                       double alpha) {
  if (j < 1 || n < 1 || !(L > 0.0) || !(alpha > 1.0)) {
    throw std::invalid_argument(
        "e_schedule: need j >= 1, n >= 1, L > 0, alpha > 1");
  }
  // pow overflows to +inf for large j; min() then applies the cap at n.
  const double growth = std::pow(alpha, 2.0 * static_cast<double>(j));
  const double m = std::min(growth, static_cast<double>(n));
  auto B = static_cast<std::int64_t>(std::ceil(m));
  B = std::clamp<std::int64_t>(B, 1, n);
  const std::int64_t b = std::max<std::int64_t>(1, floor_sqrt_real(m));
  return {step_size(b, m, L), b, m, B};
}

EpochParams nonadaptive_schedule(std::int64_t B, std::int64_t n, double L) {
  if (B < 1 || B > n) {
    throw std::invalid_argument("nonadaptive_schedule: need 1 <= B <= n");
  }
  if (!(L > 0.0)) {
    throw std::invalid_argument("nonadaptive_schedule: need L > 0");
  }
  const std::int64_t b = std::max<std::int64_t>(1, floor_sqrt_int(B));
  return {step_size(b, static_cast<double>(B), L), b, static_cast<double>(B),
          B};
}

std::int64_t nonadaptive_B_for_f(double sigma2, double mu, double eps,
                                 std::int64_t n) {
  if (!(sigma2 >= 0.0) || !(mu > 0.0) || !(eps > 0.0) || n < 1) {
    throw std::invalid_argument(
        "nonadaptive_B_for_f: need sigma2 >= 0, mu > 0, eps > 0, n >= 1");
  }
  const double v = sigma2 / (4.0 * mu * eps * eps);
  const auto B = v >= static_cast<double>(n)
                     ? n
                     : static_cast<std::int64_t>(std::ceil(v));
  return std::clamp<std::int64_t>(B, 1, n);
}

std::int64_t nonadaptive_B_for_g(double sigma2, double mu, double eps,
                                 double L, std::int64_t n) {
  if (!(sigma2 >= 0.0) || !(mu > 0.0) || !(eps > 0.0) || !(L > 0.0) ||
      n < 1) {
    throw std::invalid_argument(
        "nonadaptive_B_for_g: need sigma2 >= 0, mu > 0, eps > 0, L > 0, "
        "n >= 1");
  }
  const double v = 8.0 * sigma2 / (eps * eps) +
                   8.0 * std::pow(sigma2, 2.0 / 3.0) * std::pow(L, 2.0 / 3.0) /
                       (std::pow(eps, 4.0 / 3.0) * std::pow(mu, 2.0 / 3.0));
  const auto B = v >= static_cast<double>(n)
                     ? n
                     : static_cast<std::int64_t>(std::ceil(v));
  return std::clamp<std::int64_t>(B, 1, n);
}

EpochParams baseline_schedule(MethodKind kind, std::int64_t n, double L,
                              std::int64_t j, double c_scsg,
                              std::int64_t B_fixed,
                              std::int64_t steps_override) {
  if (n < 1 || !(L > 0.0) || j < 1) {
    throw std::invalid_argument("baseline_schedule: need n >= 1, L > 0, j >= 1");
  }
  switch (kind) {
    case MethodKind::SarahFull: {
      // b = ceil(sqrt(n)) inner batch, b steps per epoch => m = b^2 queries.
      const std::int64_t b = ceil_sqrt_int(n);
      const std::int64_t steps = steps_override > 0 ? steps_override : b;
      const std::int64_t B =
          B_fixed > 0 ? std::min(B_fixed, n) : n;
      return {1.0 / (2.0 * L), b, static_cast<double>(b) * steps, B};
    }
    case MethodKind::Svrg: {
      const std::int64_t b = std::min(ceil_pow_2_3(n), n);
      const std::int64_t steps =
          steps_override > 0 ? steps_override : (n + b - 1) / b;
      const std::int64_t B = B_fixed > 0 ? std::min(B_fixed, n) : n;
      return {1.0 / (2.0 * L), b, static_cast<double>(b) * steps, B};
    }
    case MethodKind::Scsg: {
      const double growth =
          c_scsg * std::pow(static_cast<double>(j), 1.5);
      auto B = growth >= static_cast<double>(n)
                   ? n
                   : static_cast<std::int64_t>(std::ceil(growth - 1e-9));
      B = std::clamp<std::int64_t>(B, 1, n);
      const std::int64_t b = std::max<std::int64_t>(1, floor_sqrt_int(B));
      return {step_size(b, static_cast<double>(B), L), b,
              static_cast<double>(B), B};
    }
    case MethodKind::Sgd: {
      // No inner loop or anchor exists; m = b^2 is the conventional budget
      // that keeps the schedule tuple inside the step-size bound.  The
      // runner takes its snapshot period ceil(n/b) from n directly.
      const std::int64_t b = std::min<std::int64_t>(32, n);
      return {1.0 / (2.0 * L), b, static_cast<double>(b) * b, b};
    }
    default:
      throw std::invalid_argument("baseline_schedule: unknown kind");
  }
}

EpochParams Schedule::params(std::int64_t j, std::int64_t n, double L) const {
  EpochParams p;
  switch (kind) {
    case MethodKind::QGeomSarah:
      p = q_schedule(j, n, L);
      break;
    case MethodKind::EGeomSarah:
      p = e_schedule(j, n, L, alpha);
      break;
    case MethodKind::NonAdaptive: {
      std::int64_t B = B_fixed;
      if (na_target == 'f') B = nonadaptive_B_for_f(sigma2, mu, eps, n);
      if (na_target == 'g') B = nonadaptive_B_for_g(sigma2, mu, eps, L, n);
      p = nonadaptive_schedule(std::clamp<std::int64_t>(B, 1, n), n, L);
      break;
    }
    default:
      p = baseline_schedule(kind, n, L, j, c_scsg, B_fixed, steps);
      break;
  }
  p.eta *= eta_scale;
  return p;
}

bool Schedule::geometric_inner_loop() const {
  switch (kind) {
    case MethodKind::QGeomSarah:
    case MethodKind::EGeomSarah:
    case MethodKind::NonAdaptive:
    case MethodKind::Scsg:
      return true;
    default:
      return false;
  }
}

Schedule Schedule::q(double delta) {
  Schedule s;
  s.kind = MethodKind::QGeomSarah;
  s.delta = delta;
  s.text = "q-geom-sarah";
  return s;
}

Schedule Schedule::e(double alpha, double delta) {
  Schedule s;
  s.kind = MethodKind::EGeomSarah;
  s.alpha = alpha;
  s.delta = delta;
  s.text = "e-geom-sarah";
  return s;
}

Schedule Schedule::nonadaptive(std::int64_t B) {
  Schedule s;
  s.kind = MethodKind::NonAdaptive;
  s.delta = 0.0;
  s.B_fixed = B;
  s.text = "nonadaptive:B=" + std::to_string(B);
  return s;
}

Schedule Schedule::sarah(std::int64_t B_fixed) {
  Schedule s;
  s.kind = MethodKind::SarahFull;
  s.delta = 0.0;
  s.B_fixed = B_fixed;
  s.text = B_fixed > 0 ? "sarah:B=" + std::to_string(B_fixed) : "sarah";
  return s;
}

Schedule Schedule::svrg(std::int64_t B_fixed) {
  Schedule s;
  s.kind = MethodKind::Svrg;
  s.delta = 0.0;
  s.B_fixed = B_fixed;
  s.text = B_fixed > 0 ? "svrg:B=" + std::to_string(B_fixed) : "svrg";
  return s;
}

Schedule Schedule::scsg(double c) {
  Schedule s;
  s.kind = MethodKind::Scsg;
  s.delta = 0.0;
  s.c_scsg = c;
  s.text = "scsg";
  return s;
}

Schedule Schedule::sgd() {
  Schedule s;
  s.kind = MethodKind::Sgd;
  s.delta = 0.0;
  s.text = "sgd";
  return s;
}

Schedule Schedule::parse(const std::string& descriptor) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= descriptor.size()) {
    const auto sep = descriptor.find(':', start);
    if (sep == std::string::npos) {
      parts.push_back(descriptor.substr(start));
      break;
    }
    parts.push_back(descriptor.substr(start, sep - start));
    start = sep + 1;
  }
  if (parts.empty() || parts[0].empty()) {
    throw ConfigError("method descriptor: empty");
  }

  Schedule s;
  const std::string& name = parts[0];
  if (name == "q-geom-sarah") {
    s = q();
  } else if (name == "e-geom-sarah") {
    s = e();
  } else if (name == "nonadaptive") {
    s = nonadaptive(0);
  } else if (name == "sarah") {
    s = sarah();
  } else if (name == "svrg") {
    s = svrg();
  } else if (name == "scsg") {
    s = scsg();
  } else if (name == "sgd") {
    s = sgd();
  } else {
    throw ConfigError("method descriptor: unknown method '" + name + "'");
  }

  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      throw ConfigError("method descriptor: expected key=value, got '" +
                        parts[i] + "'");
    }
    const std::string key = parts[i].substr(0, eq);
    const std::string val = parts[i].substr(eq + 1);
    if (key == "delta") {
      s.delta = parse_real_field(key, val);
      if (s.delta < 0.0 || s.delta > 1.0) {
        throw ConfigError("method descriptor: delta must be in [0,1]");
      }
    } else if (key == "alpha" && s.kind == MethodKind::EGeomSarah) {
      s.alpha = parse_real_field(key, val);
      if (!(s.alpha > 1.0)) {
        throw ConfigError("method descriptor: alpha must be > 1");
      }
    } else if (key == "B" && (s.kind == MethodKind::NonAdaptive ||
                              s.kind == MethodKind::SarahFull ||
                              s.kind == MethodKind::Svrg)) {
      s.B_fixed = parse_int_field(key, val);
      if (s.B_fixed < 1) {
        throw ConfigError("method descriptor: B must be >= 1");
      }
    } else if (key == "steps" && (s.kind == MethodKind::SarahFull ||
                                  s.kind == MethodKind::Svrg)) {
      s.steps = parse_int_field(key, val);
      if (s.steps < 1) {
        throw ConfigError("method descriptor: steps must be >= 1");
      }
    } else if (key == "c" && s.kind == MethodKind::Scsg) {
      s.c_scsg = parse_real_field(key, val);
      if (!(s.c_scsg > 0.0)) {
        throw ConfigError("method descriptor: c must be > 0");
      }
    } else if (key == "target" && s.kind == MethodKind::NonAdaptive) {
      if (val != "f" && val != "g") {
        throw ConfigError("method descriptor: target must be 'f' or 'g'");
      }
      s.na_target = val[0];
    } else if (key == "sigma2" && s.kind == MethodKind::NonAdaptive) {
      s.sigma2 = parse_real_field(key, val);
    } else if (key == "mu" && s.kind == MethodKind::NonAdaptive) {
      s.mu = parse_real_field(key, val);
    } else if (key == "eps" && s.kind == MethodKind::NonAdaptive) {
      s.eps = parse_real_field(key, val);
    } else {
      throw ConfigError("method descriptor: unknown key '" + key + "' for '" +
                        name + "'");
    }
  }
  if (s.kind == MethodKind::NonAdaptive && s.na_target == 0 &&
      s.B_fixed < 1) {
    throw ConfigError(
        "method descriptor: nonadaptive needs B=<int> or "
        "target=f|g with sigma2/mu/eps");
  }
  if (s.na_target != 0 && (!(s.mu > 0.0) || !(s.eps > 0.0))) {
    throw ConfigError(
        "method descriptor: nonadaptive target mode needs mu > 0 and eps > 0");
  }
  s.text = descriptor;
  return s;
}

}  // namespace gsarah
