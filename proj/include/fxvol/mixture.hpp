#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fxvol::mcmc {

struct MixtureComponent {
  double weight;
  double mean;
  double variance;
};

/// Finite Gaussian mixture used to approximate the law of log(eps^2),
/// eps ~ N(0,1). Construction checks that weights sum to one and variances
/// are positive.
class MixtureTable {
 public:
  explicit MixtureTable(std::vector<MixtureComponent> components);

  /// Seven-component table of Kim, Shephard and Chib (1998), with means
  /// shifted by -1.2704 so the mixture targets log chi-square(1) directly.
  /// Checked against the log chi-square(1) moments on construction.
  static const MixtureTable& log_chi2();

  std::size_t size() const { return components_.size(); }
  const MixtureComponent& operator[](std::size_t j) const { return components_[j]; }
  std::span<const MixtureComponent> components() const { return components_; }

  double mean() const;
  double variance() const;

  /// Throws unless mean is within 1e-2 of E[log chi2_1] = -1.2704 and variance
  /// within 1e-2 of pi^2/2.
  void check_log_chi2_moments() const;

 private:
  std::vector<MixtureComponent> components_;
};

inline constexpr double kLogChi2Mean = -1.2704;

}  // namespace fxvol::mcmc
