#include "fxvol/mixture.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fxvol/error.hpp"

namespace fxvol::mcmc {

MixtureTable::MixtureTable(std::vector<MixtureComponent> components) : components_(std::move(components)) {
  if (components_.empty()) fail(ErrorKind::Config, "mixture table is empty");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.variance > 0.0)) fail(ErrorKind::Config, fmt::format("mixture variance {} is not positive", c.variance));
    if (!(c.weight >= 0.0)) fail(ErrorKind::Config, fmt::format("mixture weight {} is negative", c.weight));
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-10) fail(ErrorKind::Config, fmt::format("mixture weights sum to {}", total));
}

const MixtureTable& MixtureTable::log_chi2() {
  static const MixtureTable table = [] {
    // weight, mean of log(eps^2) + 1.2704, variance
    const MixtureComponent raw[] = {
        {0.00730, -10.12999, 5.79596}, {0.10556, -3.97281, 2.61369}, {0.00002, -8.56686, 5.17950},
        {0.04395, 2.77786, 0.16735},   {0.34001, 0.61942, 0.64009},  {0.24566, 1.79518, 0.34023},
        {0.25750, -1.08819, 1.26261},
    };
    std::vector<MixtureComponent> shifted;
    for (const auto& c : raw) shifted.push_back({c.weight, c.mean + kLogChi2Mean, c.variance});
    MixtureTable t(std::move(shifted));
    t.check_log_chi2_moments();
    return t;
  }();
  return table;
}

double MixtureTable::mean() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

double MixtureTable::variance() const {
  const double m = mean();
  double v = 0.0;
  for (const auto& c : components_) v += c.weight * (c.variance + (c.mean - m) * (c.mean - m));
  return v;
}

void MixtureTable::check_log_chi2_moments() const {
  const double target_var = std::numbers::pi * std::numbers::pi / 2.0;
  if (std::abs(mean() - kLogChi2Mean) > 1e-2 || std::abs(variance() - target_var) > 1e-2) {
    fail(ErrorKind::Config, fmt::format("mixture moments ({}, {}) do not match log chi2(1) ({}, {})", mean(),
                                        variance(), kLogChi2Mean, target_var));
  }
}

}  // namespace fxvol::mcmc
