#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "elplug/types.hpp"

namespace elplug {

struct ChiSquare {
  int p = 1;
};

/// c * chi^2_p.
struct ScaledChiSquare {
  double c = 1.0;
  int p = 1;
};

/// sum_j r_j chi^2_{1,j} with independent components.
struct WeightedChiSquare {
  std::vector<double> r;
};

/// Empirical law of bootstrap statistics (kept sorted).
struct BootstrapEmpirical {
  std::vector<double> samples;
};

using LimitLaw = std::variant<ChiSquare, ScaledChiSquare, WeightedChiSquare, BootstrapEmpirical>;

inline constexpr std::size_t kDefaultLawDraws = 200000;
inline constexpr std::uint64_t kLawSeed = 0x2f6b1c3a9d45e871ULL;

/// Throws InvalidArgument when the law violates its invariants.
void validate(const LimitLaw& law);

std::string describe(const LimitLaw& law);

/// Quantile at `level` in (0, 1). Weighted laws with unequal weights use
/// `draws` Monte Carlo samples from a fixed internal seed; the empirical law
/// uses the ceil(level * B)-th order statistic.
double law_quantile(const LimitLaw& law, double level, std::size_t draws = kDefaultLawDraws);

/// P(L <= x), computed the same way as law_quantile.
double law_cdf(const LimitLaw& law, double x, std::size_t draws = kDefaultLawDraws);

/// Upper-tail probability P(L >= x).
double law_pvalue(const LimitLaw& law, double x, std::size_t draws = kDefaultLawDraws);

/// Eigenvalues of V2^{-1/2} V1 V2^{-1/2}, sorted descending and clamped at 0.
/// Throws NotPositiveDefinite when V2 is not positive definite.
std::vector<double> eigen_weights(const Matrix& v1, const Matrix& v2);

}  // namespace elplug
