#pragma once

#include <cstddef>
#include <string>

namespace ibplab {

/// Streaming mean/variance (Welford) with Chan's pairwise merge.
class McAccumulator {
 public:
  void add(double sample);
  void merge(const McAccumulator& other);

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double sum_sq_dev() const noexcept { return m2_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  double std_dev() const noexcept;
  double std_error() const noexcept;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// |mean| / (sd / sqrt(n)) of per-path differences. Exact identities (all
/// differences zero) give 0; a constant nonzero difference gives +inf.
double paired_z(const McAccumulator& diffs);

enum class EstimatorKind { Bismut, Thalmaier, PsiWeighted, FiniteDifference };

std::string to_string(EstimatorKind kind);

struct GradientEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  EstimatorKind estimator_kind = EstimatorKind::Bismut;
};

GradientEstimate to_estimate(const McAccumulator& acc, EstimatorKind kind);

/// Both sides of an identity estimated on common draws.
struct IbpReport {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  double diff = 0.0;
  double diff_se = 0.0;
  double z = 0.0;
  std::size_t n_paths = 0;

  bool passes(double z_threshold, double abs_tol = 0.0) const;
};

IbpReport make_report(const McAccumulator& lhs, const McAccumulator& rhs, const McAccumulator& diff);

}  // namespace ibplab
