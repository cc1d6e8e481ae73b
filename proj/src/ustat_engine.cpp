#include "crindep/ustat_engine.hpp"

#include <algorithm>

namespace crindep {

namespace {

constexpr int kCauseBits = 16;
constexpr Time kMaxPackedTime = Time{1} << 46;

bool below_pair(const Observation& a, const Observation& b,
                const Observation& top, Cause j) {
  return a.cause == j && b.cause == j && std::max(a.time, b.time) <= top.time;
}

bool below(Time a, Time b, Time top) { return std::max(a, b) <= top; }

Count denominator_for(std::size_t n) { return 3 * choose3(n); }

// Walks observations sorted by time (cause order within a tie is irrelevant)
// and accumulates sum_l C(m_lj, 2) per cause and sum_l C(m_l, 2), where m_l
// counts the other observations with time <= T_l.
template <typename TimeAt, typename CauseAt>
void accumulate_sorted(std::size_t n, int k, TimeAt time_at, CauseAt cause_at,
                       std::vector<std::uint64_t>& cumulative,
                       std::vector<std::uint64_t>& group,
                       std::vector<Count>& sums, Count& u2_sum) {
  const auto kk = static_cast<std::size_t>(k);
  cumulative.assign(kk, 0);
  group.assign(kk, 0);
  sums.assign(kk, 0);
  u2_sum = 0;
  std::uint64_t seen = 0;
  for (std::size_t i = 0; i < n;) {
    const Time t = time_at(i);
    std::size_t end = i;
    for (; end < n && time_at(end) == t; ++end) {
      const auto c = static_cast<std::size_t>(cause_at(end) - 1);
      ++cumulative[c];
      ++group[c];
    }
    const std::uint64_t g = end - i;
    seen += g;
    u2_sum += Count{g} * choose2(seen - 1);
    for (std::size_t j = 0; j < kk; ++j) {
      const std::uint64_t cj = cumulative[j];
      const std::uint64_t gj = group[j];
      if (cj >= 2) {
        // tied members of cause j exclude themselves; the others see all cj
        sums[j] += Count{gj} * choose2(cj - 1) + Count{g - gj} * choose2(cj);
      }
      group[j] = 0;
    }
    i = end;
  }
}

double combine_delta(std::span<const Count> u1_counts,
                     std::span<const std::uint64_t> cause_totals,
                     Count u2_count, Count denominator, std::size_t n,
                     std::vector<double>* u1_out, double* u2_out,
                     std::vector<double>* proportions_out) {
  const double denom = to_double(denominator);
  const double nd = static_cast<double>(n);
  const double u2 = to_double(u2_count) / denom;
  double acc = 0.0;
  for (std::size_t j = 0; j < u1_counts.size(); ++j) {
    const double u1 = to_double(u1_counts[j]) / denom;
    const double pi = static_cast<double>(cause_totals[j]) / nd;
    if (u1_out) u1_out->push_back(u1);
    if (proportions_out) proportions_out->push_back(pi);
    if (cause_totals[j] > 0) acc += u1 / pi;
  }
  if (u2_out) *u2_out = u2;
  return acc - u2;
}

UStatistics finish(const Sample& sample, std::vector<Count> u1_counts,
                   Count u2_count) {
  UStatistics out;
  out.n = sample.n();
  out.k = sample.k();
  out.u1_counts = std::move(u1_counts);
  out.u2_count = u2_count;
  out.denominator = denominator_for(sample.n());
  const auto counts = sample.cause_counts();
  std::vector<std::uint64_t> totals(counts.begin(), counts.end());
  out.delta_hat = combine_delta(out.u1_counts, totals, out.u2_count,
                                out.denominator, out.n, &out.u1, &out.u2,
                                &out.proportions);
  return out;
}

}  // namespace

Count choose2(std::uint64_t m) {
  return m < 2 ? Count{0} : Count{m} * (m - 1) / 2;
}

Count choose3(std::uint64_t m) {
  return m < 3 ? Count{0} : Count{m} * (m - 1) * (m - 2) / 6;
}

double to_double(Count c) { return static_cast<double>(c); }

int kernel_psi1j_count(const std::array<Observation, 3>& x, Cause j) {
  return int{below_pair(x[0], x[1], x[2], j)} +
         int{below_pair(x[1], x[2], x[0], j)} +
         int{below_pair(x[0], x[2], x[1], j)};
}

int kernel_psi2_count(const std::array<Time, 3>& t) {
  return int{below(t[0], t[1], t[2])} + int{below(t[1], t[2], t[0])} +
         int{below(t[0], t[2], t[1])};
}

double kernel_psi1j(const std::array<Observation, 3>& triple, Cause j) {
  return kernel_psi1j_count(triple, j) / 3.0;
}

double kernel_psi2(const std::array<Time, 3>& triple) {
  return kernel_psi2_count(triple) / 3.0;
}

UStatistics u_statistics_bruteforce(const Sample& sample) {
  const std::size_t n = sample.n();
  if (n < 3) throw InsufficientSample();
  const auto t = sample.times();
  const auto c = sample.causes();
  const auto kk = static_cast<std::size_t>(sample.k());
  std::vector<Count> u1(kk, 0);
  Count u2 = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t d = b + 1; d < n; ++d) {
        const std::array<Observation, 3> triple{
            Observation{t[a], c[a]}, Observation{t[b], c[b]},
            Observation{t[d], c[d]}};
        u2 += static_cast<unsigned>(kernel_psi2_count({t[a], t[b], t[d]}));
        for (std::size_t j = 0; j < kk; ++j) {
          u1[j] += static_cast<unsigned>(
              kernel_psi1j_count(triple, static_cast<Cause>(j + 1)));
        }
      }
    }
  }
  return finish(sample, std::move(u1), u2);
}

UStatistics u_statistics_fast(const Sample& sample) {
  const std::size_t n = sample.n();
  if (n < 3) throw InsufficientSample();
  std::vector<Observation> obs(n);
  for (std::size_t i = 0; i < n; ++i) {
    obs[i] = {sample.times()[i], sample.causes()[i]};
  }
  std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    return a.time < b.time;
  });
  std::vector<std::uint64_t> cumulative, group;
  std::vector<Count> sums;
  Count u2 = 0;
  accumulate_sorted(
      n, sample.k(), [&](std::size_t i) { return obs[i].time; },
      [&](std::size_t i) { return obs[i].cause; }, cumulative, group, sums, u2);
  return finish(sample, std::move(sums), u2);
}

UStatistics delta_hat(const Sample& sample) { return u_statistics_fast(sample); }

DeltaEvaluator::DeltaEvaluator(int k) : k_(k) {
  if (k < 2 || k >= (1 << kCauseBits)) {
    throw std::invalid_argument("DeltaEvaluator: unsupported cause count");
  }
}

double DeltaEvaluator::operator()(std::span<const Time> times,
                                  std::span<const Cause> causes) {
  const std::size_t n = times.size();
  if (n < 3) throw InsufficientSample();
  keys_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (times[i] >= kMaxPackedTime) {
      // out of packing range: take the validated route
      return delta_hat(Sample({times.begin(), times.end()},
                              {causes.begin(), causes.end()}, k_))
          .delta_hat;
    }
    keys_[i] = (static_cast<std::uint64_t>(times[i]) << kCauseBits) |
               static_cast<std::uint64_t>(causes[i] - 1);
  }
  std::sort(keys_.begin(), keys_.end());
  Count u2 = 0;
  accumulate_sorted(
      n, k_,
      [&](std::size_t i) { return static_cast<Time>(keys_[i] >> kCauseBits); },
      [&](std::size_t i) {
        return static_cast<Cause>(keys_[i] & ((1u << kCauseBits) - 1)) + 1;
      },
      cumulative_, group_, sums_, u2);
  // cumulative_ now holds the per-cause totals
  return combine_delta(sums_, cumulative_, u2, denominator_for(n), n, nullptr,
                       nullptr, nullptr);
}

}  // namespace crindep
