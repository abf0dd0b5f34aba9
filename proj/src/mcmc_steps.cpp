#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fxvol/error.hpp"
#include "fxvol/mcmc.hpp"

namespace fxvol::mcmc {

std::vector<double> linearize(std::span<const double> y, double offset) {
  std::vector<double> out(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) out[t] = std::log(y[t] * y[t] + offset);
  return out;
}

void mixture_probabilities(double y_star, double h, const MixtureTable& table, std::span<double> out) {
  const std::size_t k = table.size();
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const auto& c = table[j];
    const double d = y_star - h - c.mean;
    out[j] = std::log(c.weight) - 0.5 * std::log(c.variance) - 0.5 * d * d / c.variance;
    max_log = std::max(max_log, out[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = std::exp(out[j] - max_log);
    total += out[j];
  }
  for (std::size_t j = 0; j < k; ++j) out[j] /= total;
}

void step_mixture_indicators(std::span<const double> y_star, std::span<const double> h, const MixtureTable& table,
                             Rng& rng, std::span<std::uint8_t> s) {
  const std::size_t k = table.size();
  std::vector<double> log_norm(k), inv_var(k), mean(k);
  for (std::size_t j = 0; j < k; ++j) {
    log_norm[j] = std::log(table[j].weight) - 0.5 * std::log(table[j].variance);
    inv_var[j] = 1.0 / table[j].variance;
    mean[j] = table[j].mean;
  }
  std::vector<double> w(k);
  for (std::size_t t = 0; t < y_star.size(); ++t) {
    const double r = y_star[t] - h[t];
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double d = r - mean[j];
      w[j] = log_norm[j] - 0.5 * d * d * inv_var[j];
      max_log = std::max(max_log, w[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      w[j] = std::exp(w[j] - max_log);
      total += w[j];
    }
    double u = rng.uniform() * total;
    std::size_t pick = k - 1;
    for (std::size_t j = 0; j < k; ++j) {
      u -= w[j];
      if (u <= 0.0) {
        pick = j;
        break;
      }
    }
    s[t] = static_cast<std::uint8_t>(pick);
  }
}

std::vector<double> step_latent_x(std::span<const double> z, std::span<const double> obs_var, double phi,
                                  double sigma_x2, Rng& rng) {
  const std::size_t n = z.size();
  if (obs_var.size() != n) fail(ErrorKind::Config, "observation and variance lengths differ");
  if (!(std::abs(phi) < 1.0)) fail(ErrorKind::Stationarity, fmt::format("|phi| = {} in state update", std::abs(phi)));
  if (!(sigma_x2 >= 0.0) || !std::isfinite(sigma_x2)) {
    fail(ErrorKind::Numeric, fmt::format("state variance {} is not usable", sigma_x2));
  }
  std::vector<double> m(n), P(n), x(n);
  if (n == 0) return x;

  double m_pred = 0.0;
  double P_pred = sigma_x2 / (1.0 - phi * phi);
  for (std::size_t t = 0; t < n; ++t) {
    const double R = obs_var[t];
    if (!std::isfinite(z[t]) || std::isnan(R) || !(R > 0.0)) {
      fail(ErrorKind::Numeric, fmt::format("non-finite observation at t = {}", t));
    }
    if (std::isinf(R)) {
      m[t] = m_pred;
      P[t] = P_pred;
    } else {
      const double S = P_pred + R;
      const double K = P_pred / S;
      m[t] = m_pred + K * (z[t] - m_pred);
      P[t] = P_pred * R / S;
    }
    m_pred = phi * m[t];
    P_pred = phi * phi * P[t] + sigma_x2;
  }

  x[n - 1] = m[n - 1] + std::sqrt(P[n - 1]) * rng.normal();
  for (std::size_t t = n - 1; t-- > 0;) {
    const double D = phi * phi * P[t] + sigma_x2;
    if (D <= 0.0) {
      x[t] = m[t];
      continue;
    }
    const double G = P[t] * phi / D;
    const double mean = m[t] + G * (x[t + 1] - phi * m[t]);
    const double var = P[t] * sigma_x2 / D;
    x[t] = mean + std::sqrt(var) * rng.normal();
  }
  return x;
}

GaussianPosterior phi_conditional(std::span<const double> x, double sigma_x2, const PriorConfig& prior) {
  if (x.size() < 2) fail(ErrorKind::Length, "phi update needs at least two states");
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    sxx += x[t - 1] * x[t - 1];
    sxy += x[t - 1] * x[t];
  }
  const double precision = 1.0 / prior.phi_var + sxx / sigma_x2;
  return {(prior.phi_mean / prior.phi_var + sxy / sigma_x2) / precision, 1.0 / precision};
}

double step_phi(std::span<const double> x, double sigma_x2, const PriorConfig& prior, Rng& rng) {
  const auto post = phi_conditional(x, sigma_x2, prior);
  const double sd = std::sqrt(post.variance);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double draw = post.mean + sd * rng.normal();
    if (draw > -1.0 && draw < 1.0) return draw;
  }
  fail(ErrorKind::Divergence,
       fmt::format("phi posterior N({}, {}) puts no usable mass inside (-1, 1)", post.mean, post.variance));
}

InverseGammaPosterior sigma_x2_conditional(std::span<const double> x, double phi, const PriorConfig& prior,
                                           bool include_initial_state) {
  if (x.size() < 2) fail(ErrorKind::Length, "sigma_x2 update needs at least two states");
  double ss = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double e = x[t] - phi * x[t - 1];
    ss += e * e;
  }
  double shape = prior.ig_x_shape + 0.5 * static_cast<double>(x.size() - 1);
  double scale = prior.ig_x_scale + 0.5 * ss;
  if (include_initial_state) {
    shape += 0.5;
    scale += 0.5 * (1.0 - phi * phi) * x[0] * x[0];
  }
  return {shape, scale};
}

double step_sigma_x2(std::span<const double> x, double phi, const PriorConfig& prior, Rng& rng,
                     bool include_initial_state) {
  const auto post = sigma_x2_conditional(x, phi, prior, include_initial_state);
  return rng.inverse_gamma(post.shape, post.scale);
}

std::vector<GaussianPosterior> bin_conditionals(std::span<const double> resid, std::span<const double> obs_var,
                                                std::span<const int> bins, int n_bins, const PriorConfig& prior) {
  if (resid.size() != obs_var.size() || resid.size() != bins.size()) {
    fail(ErrorKind::Config, "residual, variance and bin lengths differ");
  }
  std::vector<double> precision(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> weighted(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t t = 0; t < resid.size(); ++t) {
    const auto k = static_cast<std::size_t>(bins[t]);
    if (bins[t] < 0 || bins[t] >= n_bins) fail(ErrorKind::Config, fmt::format("bin {} out of range", bins[t]));
    precision[k] += 1.0 / obs_var[t];
    weighted[k] += resid[t] / obs_var[t];
    ++count[k];
  }
  std::vector<GaussianPosterior> out(static_cast<std::size_t>(n_bins));
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (count[k] == 0) fail(ErrorKind::Coverage, fmt::format("seasonal bin {} has no observations", k));
    const double prec = 1.0 / prior.coef_var + precision[k];
    out[k] = {(prior.coef_mean / prior.coef_var + weighted[k]) / prec, 1.0 / prec};
  }
  return out;
}

LevelSeasonal step_mu_beta(std::span<const double> resid, std::span<const double> obs_var, std::span<const int> bins,
                           int n_bins, const PriorConfig& prior, Rng& rng) {
  const auto post = bin_conditionals(resid, obs_var, bins, n_bins, prior);
  LevelSeasonal out;
  out.beta.resize(post.size());
  for (std::size_t k = 0; k < post.size(); ++k) out.beta[k] = post[k].mean + std::sqrt(post[k].variance) * rng.normal();
  const double n = static_cast<double>(post.size());
  out.mu_h = std::accumulate(out.beta.begin(), out.beta.end(), 0.0) / n;
  for (auto& b : out.beta) b -= out.mu_h;
  const double drift = std::accumulate(out.beta.begin(), out.beta.end(), 0.0) / n;
  for (auto& b : out.beta) b -= drift;
  return out;
}

BetaPosterior gamma_conditional(std::span<const std::uint8_t> pi, const PriorConfig& prior) {
  if (pi.empty()) fail(ErrorKind::Length, "gamma update needs at least one event column");
  const double active = static_cast<double>(std::count(pi.begin(), pi.end(), std::uint8_t{1}));
  return {prior.gamma_a + active, prior.gamma_b + static_cast<double>(pi.size()) - active};
}

double step_gamma(std::span<const std::uint8_t> pi, const PriorConfig& prior, Rng& rng) {
  const auto post = gamma_conditional(pi, prior);
  const double g = rng.beta(post.a, post.b);
  return std::clamp(g, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

InverseGammaPosterior sigma_alpha2_conditional(std::span<const double> alpha, std::span<const std::uint8_t> pi,
                                               const PriorConfig& prior) {
  if (alpha.size() != pi.size()) fail(ErrorKind::Config, "alpha and pi differ in length");
  double k = 0.0, ss = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (pi[j]) {
      k += 1.0;
      ss += alpha[j] * alpha[j];
    }
  }
  return {prior.ig_a_shape + 0.5 * k, prior.ig_a_scale + 0.5 * ss};
}

double step_sigma_alpha2(std::span<const double> alpha, std::span<const std::uint8_t> pi, const PriorConfig& prior,
                         Rng& rng) {
  const auto post = sigma_alpha2_conditional(alpha, pi, prior);
  return rng.inverse_gamma(post.shape, post.scale);
}

GaussianPosterior slab_conditional(std::span<const double> resid, std::span<const double> obs_var,
                                   double sigma_alpha2) {
  if (!(sigma_alpha2 > 0.0)) fail(ErrorKind::Numeric, fmt::format("slab variance {} is not positive", sigma_alpha2));
  double precision = 1.0 / sigma_alpha2;
  double weighted = 0.0;
  for (std::size_t i = 0; i < resid.size(); ++i) {
    precision += 1.0 / obs_var[i];
    weighted += resid[i] / obs_var[i];
  }
  const double v = 1.0 / precision;
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::Numeric, fmt::format("slab posterior variance {} is unusable", v));
  return {v * weighted, v};
}

double inclusion_probability(const GaussianPosterior& slab, double gamma, double sigma_alpha2) {
  if (!(slab.variance > 0.0)) fail(ErrorKind::Numeric, "slab posterior variance must be positive");
  if (gamma <= 0.0) return 0.0;
  if (gamma >= 1.0) return 1.0;
  // log [ N(0; 0, sigma_alpha2) / N(0; m, v) ]
  const double log_ratio =
      0.5 * (std::log(slab.variance) - std::log(sigma_alpha2)) + 0.5 * slab.mean * slab.mean / slab.variance;
  return 1.0 / (1.0 + (1.0 - gamma) / gamma * std::exp(-log_ratio));
}

EventDraw step_alpha_pi(std::span<const double> resid, std::span<const double> obs_var, double gamma,
                        double sigma_alpha2, Rng& rng) {
  const auto slab = slab_conditional(resid, obs_var, sigma_alpha2);
  const double p = inclusion_probability(slab, gamma, sigma_alpha2);
  EventDraw d{0.0, 0, p};
  if (rng.uniform() < p) {
    d.pi = 1;
    d.alpha = slab.mean + std::sqrt(slab.variance) * rng.normal();
  }
  return d;
}

}  // namespace fxvol::mcmc
