#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxvol/market_data.hpp"
#include "fxvol/mixture.hpp"
#include "fxvol/model.hpp"
#include "fxvol/rng.hpp"

namespace fxvol::mcmc {

using model::ModelParams;
using model::PriorConfig;

/// Offset c in log(y^2 + c), percent-squared units.
inline constexpr double kLinearizationOffset = 1e-8;

std::vector<double> linearize(std::span<const double> y, double offset = kLinearizationOffset);

struct GaussianPosterior {
  double mean;
  double variance;
};

struct InverseGammaPosterior {
  double shape;
  double scale;
};

struct BetaPosterior {
  double a;
  double b;
};

// --- mixture indicators ----------------------------------------------------

/// Posterior component probabilities for one observation y* given h.
void mixture_probabilities(double y_star, double h, const MixtureTable& table, std::span<double> out);

/// s_t ~ P(s | y*_t, h_t) for every t; components are 0-based.
void step_mixture_indicators(std::span<const double> y_star, std::span<const double> h, const MixtureTable& table,
                             Rng& rng, std::span<std::uint8_t> s);

// --- latent state ----------------------------------------------------------

/// Forward filtering, backward sampling for
///   z_t = x_t + N(0, obs_var_t),  x_t = phi x_{t-1} + N(0, sigma_x2),
/// with x_1 drawn from the stationary law. obs_var may be +inf.
std::vector<double> step_latent_x(std::span<const double> z, std::span<const double> obs_var, double phi,
                                  double sigma_x2, Rng& rng);

// --- persistence and innovation variance -----------------------------------

/// Gaussian full conditional of phi from the regression of x_t on x_{t-1}
/// (before truncation to (-1, 1)).
GaussianPosterior phi_conditional(std::span<const double> x, double sigma_x2, const PriorConfig& prior);
double step_phi(std::span<const double> x, double sigma_x2, const PriorConfig& prior, Rng& rng);

/// With `include_initial_state`, the stationary density of x_1 contributes
/// (1 - phi^2) x_1^2 / 2 to the scale and 1/2 to the shape.
InverseGammaPosterior sigma_x2_conditional(std::span<const double> x, double phi, const PriorConfig& prior,
                                           bool include_initial_state = true);
double step_sigma_x2(std::span<const double> x, double phi, const PriorConfig& prior, Rng& rng,
                     bool include_initial_state = true);

// --- level and seasonality -------------------------------------------------

/// Conjugate posteriors of the unconstrained bin coefficients, where
/// resid_t ~ N(c_{bins[t]}, obs_var_t) and c_k ~ N(coef_mean, coef_var).
/// Throws a coverage error for a bin with no observations.
std::vector<GaussianPosterior> bin_conditionals(std::span<const double> resid, std::span<const double> obs_var,
                                                std::span<const int> bins, int n_bins, const PriorConfig& prior);

struct LevelSeasonal {
  double mu_h;
  std::vector<double> beta;  // sums to zero
};

/// Draws the bin coefficients, then splits them into their mean (mu_h) and
/// the demeaned seasonal profile.
LevelSeasonal step_mu_beta(std::span<const double> resid, std::span<const double> obs_var, std::span<const int> bins,
                           int n_bins, const PriorConfig& prior, Rng& rng);

// --- spike-and-slab --------------------------------------------------------

BetaPosterior gamma_conditional(std::span<const std::uint8_t> pi, const PriorConfig& prior);
double step_gamma(std::span<const std::uint8_t> pi, const PriorConfig& prior, Rng& rng);

InverseGammaPosterior sigma_alpha2_conditional(std::span<const double> alpha, std::span<const std::uint8_t> pi,
                                               const PriorConfig& prior);
double step_sigma_alpha2(std::span<const double> alpha, std::span<const std::uint8_t> pi, const PriorConfig& prior,
                         Rng& rng);

/// Full conditional of alpha_j under the slab, given the partial residuals on
/// the rows where column j is active.
GaussianPosterior slab_conditional(std::span<const double> resid, std::span<const double> obs_var,
                                   double sigma_alpha2);

/// P(pi_j = 1 | rest) with alpha_j integrated out:
///   r = gamma N(0; 0, sigma_alpha2) / N(0; m, v),  p = r / (r + 1 - gamma).
double inclusion_probability(const GaussianPosterior& slab, double gamma, double sigma_alpha2);

struct EventDraw {
  double alpha;
  std::uint8_t pi;
  double inclusion_probability;
};

EventDraw step_alpha_pi(std::span<const double> resid, std::span<const double> obs_var, double gamma,
                        double sigma_alpha2, Rng& rng);

// --- chain -----------------------------------------------------------------

/// FULL: all components. SSV: no announcement component. SV: no
/// announcement and no seasonal component.
enum class Variant { Full, Ssv, Sv };

const char* to_string(Variant v);
Variant parse_variant(std::string_view text);

struct Schedule {
  std::size_t n_iter = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;

  std::size_t n_retained() const { return n_iter > burn_in && thin > 0 ? (n_iter - burn_in) / thin : 0; }
  void validate() const;
};

struct SweepDiagnostics {
  std::size_t iteration = 0;
  double log_likelihood = 0.0;
  double mu_h = 0.0;
  double phi = 0.0;
  double sigma_x2 = 0.0;
  std::size_t n_active = 0;
};

struct ChainOptions {
  bool sigma_x2_initial_state = true;
  /// Keep every k-th retained latent path (0 keeps none).
  std::size_t path_every = 0;
  const MixtureTable* table = nullptr;  // defaults to MixtureTable::log_chi2()
  std::optional<ModelParams> initial;
  std::function<void(const SweepDiagnostics&)> on_sweep;
};

struct PosteriorDraws {
  Variant variant = Variant::Full;
  Schedule schedule;
  std::vector<data::ColumnLabel> labels;

  std::vector<std::size_t> iterations;
  std::vector<double> log_likelihood;
  std::vector<ModelParams> params;

  /// Pointwise posterior mean and standard deviation of x over retained sweeps.
  std::vector<double> x_mean;
  std::vector<double> x_sd;
  std::vector<std::vector<double>> x_paths;

  std::vector<SweepDiagnostics> trace;  // every sweep, burn-in included

  std::size_t size() const { return params.size(); }
};

PosteriorDraws run_chain(std::span<const double> y, std::span<const int> bins, const data::EventDesignMatrix& design,
                         const PriorConfig& prior, const Schedule& schedule, Variant variant,
                         const ChainOptions& options = {});

PosteriorDraws run_chain(const data::ReturnSeries& data, const data::EventDesignMatrix& design,
                         const PriorConfig& prior, const Schedule& schedule, Variant variant,
                         const ChainOptions& options = {});

/// Gaussian log-likelihood of y given log-variances h.
double log_likelihood(std::span<const double> y, std::span<const double> h);

// --- posterior summaries ---------------------------------------------------

struct InclusionSummary {
  data::ColumnLabel label;
  double mean_pi;
  double mean_effect;  // posterior mean of exp(alpha / 2)
};

std::vector<InclusionSummary> inclusion_summary(const PosteriorDraws& draws);

/// Posterior means of every parameter; `pi` holds inclusion frequencies.
struct PosteriorMean {
  double mu_h = 0.0;
  double phi = 0.0;
  double sigma_x2 = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> pi;
  double gamma = 0.0;
  double sigma_alpha2 = 0.0;
};

PosteriorMean posterior_mean(const PosteriorDraws& draws);

struct ScalarSummary {
  std::string name;
  double mean;
  double sd;
  double q025, q05, q95, q975;
};

/// mu_h, phi, sigma_x2, sigma_x, sigma (level volatility) and, for FULL,
/// gamma and sigma_alpha2.
std::vector<ScalarSummary> scalar_summaries(const PosteriorDraws& draws);

/// Empirical quantile with linear interpolation.
double quantile(std::vector<double> values, double p);

}  // namespace fxvol::mcmc
