#include "ibplab/stats.hpp"

#include <cmath>
#include <limits>

#include "ibplab/error.hpp"
#include "ibplab/rng.hpp"

namespace ibplab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RngPolicy::stream_seed(std::uint64_t path, StreamPurpose purpose) const noexcept {
  std::uint64_t s = splitmix64(master_);
  s = splitmix64(s ^ path);
  return splitmix64(s ^ (static_cast<std::uint64_t>(purpose) << 56));
}

void McAccumulator::add(double sample) {
  if (!std::isfinite(sample)) throw Error(Errc::NonFiniteSample, "non-finite Monte Carlo sample");
  ++count_;
  const double delta = sample - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (sample - mean_);
}

void McAccumulator::merge(const McAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta * delta * (na * nb / n);
  count_ += other.count_;
}

double McAccumulator::variance() const noexcept {
  if (count_ < 2) return 0.0;
  return std::max(0.0, m2_ / static_cast<double>(count_ - 1));
}

double McAccumulator::std_dev() const noexcept { return std::sqrt(variance()); }

double McAccumulator::std_error() const noexcept {
  if (count_ == 0) return 0.0;
  return std_dev() / std::sqrt(static_cast<double>(count_));
}

double paired_z(const McAccumulator& diffs) {
  if (diffs.count() < 2) throw Error(Errc::InsufficientData, "paired z needs at least two samples");
  const double se = diffs.std_error();
  if (se == 0.0) {
    return diffs.mean() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::abs(diffs.mean()) / se;
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Bismut: return "bismut";
    case EstimatorKind::Thalmaier: return "thalmaier";
    case EstimatorKind::PsiWeighted: return "psi_weighted";
    case EstimatorKind::FiniteDifference: return "finite_difference";
  }
  return "?";
}

GradientEstimate to_estimate(const McAccumulator& acc, EstimatorKind kind) {
  return {acc.mean(), acc.std_error(), acc.count(), kind};
}

bool IbpReport::passes(double z_threshold, double abs_tol) const {
  if (std::isnan(diff) || std::isnan(diff_se)) return false;
  if (diff_se == 0.0 && diff == 0.0) return true;
  return std::abs(diff) <= z_threshold * diff_se + abs_tol;
}

IbpReport make_report(const McAccumulator& lhs, const McAccumulator& rhs, const McAccumulator& diff) {
  IbpReport r;
  r.lhs = lhs.mean();
  r.lhs_se = lhs.std_error();
  r.rhs = rhs.mean();
  r.rhs_se = rhs.std_error();
  r.diff = diff.mean();
  r.diff_se = diff.std_error();
  r.z = paired_z(diff);
  r.n_paths = diff.count();
  return r;
}

}  // namespace ibplab
