#include "crindep/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crindep {

namespace {

constexpr double kTableFloor = 1e-17;  // below the smallest 1 - u we draw
constexpr std::size_t kMaxTable = std::size_t{1} << 20;

std::string trimmed(double v) { return format_double(v); }

}  // namespace

LifetimeModel::LifetimeModel(Kind kind, double p, double beta,
                             std::vector<double> pmf)
    : kind_(kind), p_(p), beta_(beta) {
  if (kind_ == Kind::explicit_pmf) {
    double running = 0.0;
    survival_.reserve(pmf.size() + 1);
    survival_.push_back(1.0);
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      running += pmf[i];
      survival_.push_back(i + 1 == pmf.size() ? 0.0 : std::max(0.0, 1.0 - running));
    }
    table_complete_ = true;
    return;
  }
  log_survival_step_ = beta_ * std::log1p(-p_);
  const double q = 1.0 - p_;
  survival_.push_back(1.0);
  for (Time t = 1; survival_.size() < kMaxTable; ++t) {
    const double s = std::pow(std::pow(q, static_cast<double>(t)), beta_);
    survival_.push_back(s);
    if (s < kTableFloor) {
      table_complete_ = true;
      break;
    }
  }
}

LifetimeModel LifetimeModel::geometric(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ModelError("geometric: p must lie in (0, 1), got " + trimmed(p));
  }
  return LifetimeModel(Kind::geometric, p, 1.0, {});
}

LifetimeModel LifetimeModel::discrete_weibull(double p, double beta) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ModelError("discrete Weibull: p must lie in (0, 1), got " + trimmed(p));
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ModelError("discrete Weibull: beta must be positive, got " +
                     trimmed(beta));
  }
  return LifetimeModel(Kind::discrete_weibull, p, beta, {});
}

LifetimeModel LifetimeModel::explicit_pmf(std::vector<double> pmf) {
  if (pmf.empty()) throw ModelError("explicit pmf: empty table");
  double total = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    if (!(pmf[i] >= 0.0) || !std::isfinite(pmf[i])) {
      throw ModelError("explicit pmf: negative or non-finite mass at t=" +
                       std::to_string(i + 1));
    }
    total += pmf[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ModelError("explicit pmf: masses sum to " + trimmed(total));
  }
  return LifetimeModel(Kind::explicit_pmf, 0.0, 1.0, std::move(pmf));
}

std::string LifetimeModel::name() const {
  switch (kind_) {
    case Kind::geometric: return "geometric";
    case Kind::discrete_weibull: return "weibull";
    case Kind::explicit_pmf: return "pmf";
  }
  return "unknown";
}

std::string LifetimeModel::label() const {
  switch (kind_) {
    case Kind::geometric: return "geometric(p=" + trimmed(p_) + ")";
    case Kind::discrete_weibull:
      return "weibull(p=" + trimmed(p_) + ",beta=" + trimmed(beta_) + ")";
    case Kind::explicit_pmf:
      return "pmf(support=1.." + std::to_string(survival_.size() - 1) + ")";
  }
  return "unknown";
}

double LifetimeModel::survival(Time t) const {
  if (t <= 0) return 1.0;
  const auto idx = static_cast<std::size_t>(t);
  if (idx < survival_.size()) return survival_[idx];
  if (kind_ == Kind::explicit_pmf) return 0.0;
  return std::pow(std::pow(1.0 - p_, static_cast<double>(t)), beta_);
}

Time LifetimeModel::truncation_point(double tail, Time max_support) const {
  if (!(tail > 0.0)) throw ModelError("truncation tail must be positive");
  Time t = 1;
  if (kind_ != Kind::explicit_pmf) {
    const double guess = std::ceil(std::log(tail) / log_survival_step_);
    if (!(guess <= static_cast<double>(max_support) + 1.0)) {
      throw ModelError("truncation insufficient: tail " + trimmed(tail) +
                       " needs more than " + std::to_string(max_support) +
                       " support points");
    }
    t = std::max<Time>(1, static_cast<Time>(guess));
    while (t > 1 && survival(t - 1) <= tail) --t;
  }
  while (survival(t) > tail) {
    if (++t > max_support) {
      throw ModelError("truncation insufficient: tail " + trimmed(tail) +
                       " needs more than " + std::to_string(max_support) +
                       " support points");
    }
  }
  return t;
}

Time LifetimeModel::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u outside (0,1)");
  const double target = 1.0 - u;  // F(s) >= u  <=>  S(s) <= 1 - u
  if (kind_ == Kind::explicit_pmf || table_complete_) {
    // survival_ is non-increasing; cdf(s) = 1 - survival_[s]
    if (cdf(static_cast<Time>(survival_.size() - 1)) >= u) {
      const auto it = std::partition_point(
          survival_.begin() + 1, survival_.end(),
          [&](double s) { return 1.0 - s < u; });
      return static_cast<Time>(std::distance(survival_.begin(), it));
    }
  }
  double guess = std::ceil(std::log(target) / log_survival_step_);
  Time s = guess < 1.0 ? 1 : static_cast<Time>(guess);
  while (s > 1 && cdf(s - 1) >= u) --s;
  while (cdf(s) < u) ++s;
  return s;
}

double model_cdf(const LifetimeModel& model, Time t) { return model.cdf(t); }
double model_pmf(const LifetimeModel& model, Time t) { return model.pmf(t); }
Time sample_lifetime(const LifetimeModel& model, Rng& rng) {
  return model.sample(rng);
}

DependentFamily::DependentFamily(LifetimeModel base, double a,
                                 std::vector<double> pi)
    : base_(std::move(base)), a_(a), pi_(std::move(pi)) {
  if (!(a_ >= 1.0 && a_ <= 2.0)) {
    throw ModelError("dependence exponent a must lie in [1, 2], got " +
                     format_double(a_));
  }
  if (pi_.empty()) throw ModelError("at least one proportion pi_1 is required");
  double total = 0.0;
  for (std::size_t j = 0; j < pi_.size(); ++j) {
    if (!(pi_[j] >= 0.0 && pi_[j] <= 1.0)) {
      throw ModelError("pi_" + std::to_string(j + 1) + " outside [0, 1]");
    }
    total += pi_[j];
  }
  if (total > 1.0) throw ModelError("proportions pi_1..pi_{k-1} sum above 1");

  const int causes = k();
  const auto stride = static_cast<std::size_t>(causes - 1);
  // f_k is checked over the base model's tabulated support (S down to 1e-17).
  const Time len = base_.tabulated_support();
  table_len_ = len;
  cause_table_.resize(static_cast<std::size_t>(len) * stride);
  for (Time t = 1; t <= len; ++t) {
    const double f = base_.pmf(t);
    const double step = powered_step(t);
    const double fk = f - total * step;
    if (fk < -1e-12 * f - 1e-300) {
      throw ModelError("invalid family: f_" + std::to_string(causes) + "(" +
                       std::to_string(t) + ") = " + format_double(fk) +
                       " is negative for a=" + format_double(a_));
    }
    conditional_cumulative(
        t, std::span<double>(cause_table_).subspan(
               static_cast<std::size_t>(t - 1) * stride, stride));
  }
}

std::vector<double> DependentFamily::proportions() const {
  std::vector<double> out(pi_.begin(), pi_.end());
  const double rest = std::accumulate(pi_.begin(), pi_.end(), 0.0);
  out.push_back(std::max(0.0, 1.0 - rest));
  return out;
}

double DependentFamily::powered_cdf(Time t) const {
  return std::pow(base_.cdf(t), a_);
}

double DependentFamily::powered_step(Time t) const {
  if (t < 1) return 0.0;
  const double prev = base_.cdf(t - 1);
  if (prev <= 0.0) return powered_cdf(t);
  // x^a - y^a = y^a expm1(a (log x - log y)), with log F = log1p(-S)
  const double gap = std::log1p(-base_.survival(t)) - std::log1p(-base_.survival(t - 1));
  return std::pow(prev, a_) * std::expm1(a_ * gap);
}

double DependentFamily::subdist(Cause j, Time t) const {
  if (j < 1 || j > k()) throw std::out_of_range("cause outside 1..k");
  if (t < 1) return 0.0;
  const double fa = powered_cdf(t);
  if (j < k()) return pi_[static_cast<std::size_t>(j - 1)] * fa;
  double others = 0.0;
  for (double p : pi_) others += p * fa;
  return std::max(0.0, base_.cdf(t) - others);
}

double DependentFamily::sub_density(Cause j, Time t) const {
  if (j < 1 || j > k()) throw std::out_of_range("cause outside 1..k");
  if (t < 1) return 0.0;
  const double step = powered_step(t);
  if (j < k()) return pi_[static_cast<std::size_t>(j - 1)] * step;
  double others = 0.0;
  for (double p : pi_) others += p * step;
  return std::max(0.0, base_.pmf(t) - others);
}

void DependentFamily::conditional_cumulative(Time t, std::span<double> out) const {
  const double f = base_.pmf(t);
  const double step = powered_step(t);
  // f underflows far in the tail; there step / f tends to a
  const double ratio = f > 0.0 ? step / f : a_;
  double running = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    running += pi_[j] * ratio;
    out[j] = running;
  }
}

Cause DependentFamily::sample_cause(Time t, Rng& rng) const {
  const double u = rng.uniform();
  const auto stride = pi_.size();
  if (t >= 1 && t <= table_len_) {
    const double* row = cause_table_.data() + static_cast<std::size_t>(t - 1) * stride;
    for (std::size_t j = 0; j < stride; ++j) {
      if (u < row[j]) return static_cast<Cause>(j + 1);
    }
    return k();
  }
  std::vector<double> row(stride);
  conditional_cumulative(t, row);
  for (std::size_t j = 0; j < stride; ++j) {
    if (u < row[j]) return static_cast<Cause>(j + 1);
  }
  return k();
}

double family_subdensity(const DependentFamily& family, Cause j, Time t) {
  return family.sub_density(j, t);
}

void sample_competing_risks_into(const DependentFamily& family, Rng& rng,
                                 std::span<Time> times, std::span<Cause> causes) {
  if (times.size() != causes.size()) {
    throw std::invalid_argument("times/causes buffers differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Time t = family.base().sample(rng);
    times[i] = t;
    causes[i] = family.sample_cause(t, rng);
  }
}

Sample sample_competing_risks(const DependentFamily& family, std::size_t n,
                              Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  std::vector<Time> times(n);
  std::vector<Cause> causes(n);
  sample_competing_risks_into(family, rng, times, causes);
  return Sample(std::move(times), std::move(causes), family.k());
}

double true_delta(const DependentFamily& family, double tail) {
  if (!(tail > 0.0 && tail < 1e-10)) {
    throw ModelError("truncation tail must lie in (0, 1e-10), got " +
                     format_double(tail));
  }
  const Time last = family.base().truncation_point(tail);
  const int k = family.k();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<double> cause_mass(kk, 0.0), weighted(kk, 0.0);
  double overall = 0.0;
  for (Time t = 1; t <= last; ++t) {
    const double f = family.pmf(t);
    const double F = family.cdf(t);
    overall += F * F * f;
    for (Cause j = 1; j <= k; ++j) {
      const auto u = static_cast<std::size_t>(j - 1);
      const double Fj = family.subdist(j, t);
      weighted[u] += Fj * Fj * f;
      cause_mass[u] += family.sub_density(j, t);
    }
  }
  double delta = -overall;
  for (std::size_t j = 0; j < kk; ++j) {
    if (cause_mass[j] > 0.0) delta += weighted[j] / cause_mass[j];
  }
  return delta;
}

}  // namespace crindep
