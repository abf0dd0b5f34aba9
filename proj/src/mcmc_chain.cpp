#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "fxvol/error.hpp"
#include "fxvol/mcmc.hpp"

namespace fxvol::mcmc {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "FULL";
    case Variant::Ssv: return "SSV";
    case Variant::Sv: return "SV";
  }
  return "FULL";
}

Variant parse_variant(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "FULL" || upper == "PROPOSAL") return Variant::Full;
  if (upper == "SSV") return Variant::Ssv;
  if (upper == "SV") return Variant::Sv;
  fail(ErrorKind::Config, fmt::format("unknown variant '{}' (expected FULL, SSV or SV)", text));
}

void Schedule::validate() const {
  if (n_iter <= burn_in) fail(ErrorKind::Config, fmt::format("n_iter ({}) must exceed burn_in ({})", n_iter, burn_in));
  if (thin == 0) fail(ErrorKind::Config, "thin must be at least 1");
}

double log_likelihood(std::span<const double> y, std::span<const double> h) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) ll -= 0.5 * (log2pi + h[t] + y[t] * y[t] * std::exp(-h[t]));
  return ll;
}

namespace {

/// Mutable state of one chain. Keeps e_t = sum of active alphas per row
/// in sync with alpha.
class Sampler {
 public:
  Sampler(std::span<const double> y, std::span<const int> bins, const data::EventDesignMatrix& design,
          const PriorConfig& prior, Variant variant, const ChainOptions& options, std::uint64_t seed)
      : y_(y),
        bins_(bins),
        design_(design),
        prior_(prior),
        variant_(variant),
        options_(options),
        table_(options.table ? *options.table : MixtureTable::log_chi2()),
        rng_(seed, 0),
        n_(y.size()) {
    y_star_ = linearize(y_);
    x_.assign(n_, 0.0);
    s_.assign(n_, 0);
    e_.assign(n_, 0.0);
    h_.resize(n_);
    resid_.resize(n_);
    var_.resize(n_);
    if (variant_ == Variant::Sv) {
      level_bins_.assign(n_, 0);
    } else {
      level_bins_.assign(bins_.begin(), bins_.end());
    }
    initialize();
  }

  void sweep(std::size_t iteration) {
    // 1) persistence, 2) innovation variance
    p_.phi = step_phi(x_, p_.sigma_x2, prior_, rng_);
    p_.sigma_x2 = step_sigma_x2(x_, p_.phi, prior_, rng_, options_.sigma_x2_initial_state);
    // 3) mixture indicators and the latent path
    draw_latent();
    // 4) level and seasonality
    draw_level_seasonal();
    if (variant_ == Variant::Full) {
      // 5) inclusion probability, 6) slab variance, 7) event effects
      p_.gamma = step_gamma(p_.pi, prior_, rng_);
      p_.sigma_alpha2 = step_sigma_alpha2(p_.alpha, p_.pi, prior_, rng_);
      draw_events();
    }
    check_finite(iteration);
  }

  const ModelParams& params() const { return p_; }
  const std::vector<double>& x() const { return x_; }

  SweepDiagnostics diagnostics(std::size_t iteration) {
    compute_h();
    SweepDiagnostics d;
    d.iteration = iteration;
    d.log_likelihood = log_likelihood(y_, h_);
    d.mu_h = p_.mu_h;
    d.phi = p_.phi;
    d.sigma_x2 = p_.sigma_x2;
    d.n_active = static_cast<std::size_t>(std::count(p_.pi.begin(), p_.pi.end(), std::uint8_t{1}));
    return d;
  }

 private:
  int level_bin_count() const { return variant_ == Variant::Sv ? 1 : model::kSeasonalBins; }

  void initialize() {
    p_ = options_.initial.value_or(ModelParams{});
    if (!options_.initial) {
      const double mean_y_star = std::accumulate(y_star_.begin(), y_star_.end(), 0.0) / static_cast<double>(n_);
      p_.mu_h = mean_y_star - table_.mean();
      p_.phi = std::clamp(prior_.phi_mean, -0.98, 0.98);
      p_.sigma_x2 = 0.05;
      p_.gamma = prior_.gamma_a / (prior_.gamma_a + prior_.gamma_b);
      p_.sigma_alpha2 = prior_.ig_a_shape > 1.0 ? prior_.ig_a_scale / (prior_.ig_a_shape - 1.0) : prior_.ig_a_scale;
      p_.beta.assign(model::kSeasonalBins, 0.0);
      if (variant_ != Variant::Sv) {
        std::vector<double> sum(model::kSeasonalBins, 0.0);
        std::vector<double> cnt(model::kSeasonalBins, 0.0);
        for (std::size_t t = 0; t < n_; ++t) {
          sum[static_cast<std::size_t>(bins_[t])] += y_star_[t];
          cnt[static_cast<std::size_t>(bins_[t])] += 1.0;
        }
        for (std::size_t k = 0; k < sum.size(); ++k) p_.beta[k] = cnt[k] > 0 ? sum[k] / cnt[k] : mean_y_star;
        const double centre = std::accumulate(p_.beta.begin(), p_.beta.end(), 0.0) / model::kSeasonalBins;
        for (auto& b : p_.beta) b -= centre;
      }
      p_.resize_events(design_.n_cols());
    }
    if (p_.alpha.size() != design_.n_cols() || p_.pi.size() != design_.n_cols()) {
      fail(ErrorKind::Config, "initial parameters do not match the design width");
    }
    if (variant_ != Variant::Full) {
      std::fill(p_.alpha.begin(), p_.alpha.end(), 0.0);
      std::fill(p_.pi.begin(), p_.pi.end(), std::uint8_t{0});
    }
    if (variant_ == Variant::Sv) std::fill(p_.beta.begin(), p_.beta.end(), 0.0);
    rebuild_event_sums();
    // One latent draw so the first persistence update sees a non-trivial path.
    draw_latent();
  }

  void rebuild_event_sums() {
    std::fill(e_.begin(), e_.end(), 0.0);
    for (std::size_t j = 0; j < design_.n_cols(); ++j) {
      if (p_.alpha[j] == 0.0) continue;
      for (const auto t : design_.column(j)) e_[t] += p_.alpha[j];
    }
  }

  void compute_h() {
    for (std::size_t t = 0; t < n_; ++t) {
      h_[t] = p_.mu_h + x_[t] + p_.beta[static_cast<std::size_t>(bins_[t])] + e_[t];
    }
  }

  void draw_latent() {
    for (std::size_t t = 0; t < n_; ++t) {
      h_[t] = p_.mu_h + x_[t] + p_.beta[static_cast<std::size_t>(bins_[t])] + e_[t];
    }
    step_mixture_indicators(y_star_, h_, table_, rng_, s_);
    for (std::size_t t = 0; t < n_; ++t) {
      const auto& c = table_[s_[t]];
      resid_[t] = y_star_[t] - p_.mu_h - p_.beta[static_cast<std::size_t>(bins_[t])] - e_[t] - c.mean;
      var_[t] = c.variance;
    }
    x_ = step_latent_x(resid_, var_, p_.phi, p_.sigma_x2, rng_);
  }

  void draw_level_seasonal() {
    for (std::size_t t = 0; t < n_; ++t) {
      const auto& c = table_[s_[t]];
      resid_[t] = y_star_[t] - x_[t] - e_[t] - c.mean;
      var_[t] = c.variance;
    }
    auto ls = step_mu_beta(resid_, var_, level_bins_, level_bin_count(), prior_, rng_);
    p_.mu_h = ls.mu_h;
    if (variant_ == Variant::Sv) {
      std::fill(p_.beta.begin(), p_.beta.end(), 0.0);
    } else {
      p_.beta = std::move(ls.beta);
    }
  }

  void draw_events() {
    const std::size_t m = design_.n_cols();
    order_.resize(m);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
    for (const auto j : order_) {
      const auto rows = design_.column(j);
      col_resid_.resize(rows.size());
      col_var_.resize(rows.size());
      const double a_old = p_.alpha[j];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t t = rows[i];
        const auto& c = table_[s_[t]];
        col_resid_[i] = y_star_[t] - p_.mu_h - x_[t] - p_.beta[static_cast<std::size_t>(bins_[t])] -
                        (e_[t] - a_old) - c.mean;
        col_var_[i] = c.variance;
      }
      const auto draw = step_alpha_pi(col_resid_, col_var_, p_.gamma, p_.sigma_alpha2, rng_);
      p_.alpha[j] = draw.alpha;
      p_.pi[j] = draw.pi;
      const double delta = draw.alpha - a_old;
      if (delta != 0.0) {
        for (const auto t : rows) e_[t] += delta;
      }
    }
  }

  void check_finite(std::size_t iteration) const {
    bool ok = std::isfinite(p_.mu_h) && std::isfinite(p_.phi) && std::isfinite(p_.sigma_x2) && p_.sigma_x2 > 0.0 &&
              std::isfinite(p_.gamma) && std::isfinite(p_.sigma_alpha2) && p_.sigma_alpha2 > 0.0;
    if (ok) {
      const double sx = std::accumulate(x_.begin(), x_.end(), 0.0);
      const double sb = std::accumulate(p_.beta.begin(), p_.beta.end(), 0.0);
      const double sa = std::accumulate(p_.alpha.begin(), p_.alpha.end(), 0.0);
      ok = std::isfinite(sx) && std::isfinite(sb) && std::isfinite(sa);
    }
    if (!ok) fail(ErrorKind::Numeric, fmt::format("non-finite sampler state at sweep {}", iteration));
  }

  std::span<const double> y_;
  std::span<const int> bins_;
  const data::EventDesignMatrix& design_;
  const PriorConfig& prior_;
  Variant variant_;
  const ChainOptions& options_;
  const MixtureTable& table_;
  Rng rng_;
  std::size_t n_;

  ModelParams p_;
  std::vector<double> y_star_, x_, e_, h_, resid_, var_;
  std::vector<std::uint8_t> s_;
  std::vector<int> level_bins_;
  std::vector<std::size_t> order_;
  std::vector<double> col_resid_, col_var_;
};

}  // namespace

PosteriorDraws run_chain(std::span<const double> y, std::span<const int> bins, const data::EventDesignMatrix& design,
                         const PriorConfig& prior, const Schedule& schedule, Variant variant,
                         const ChainOptions& options) {
  schedule.validate();
  prior.validate();
  if (y.size() < 2) fail(ErrorKind::Config, "need at least two returns");
  if (bins.size() != y.size()) {
    fail(ErrorKind::Config, fmt::format("{} seasonal bins for {} returns", bins.size(), y.size()));
  }
  if (design.n_rows() != y.size()) {
    fail(ErrorKind::Config, fmt::format("design has {} rows for {} returns", design.n_rows(), y.size()));
  }
  for (const auto b : bins) {
    if (b < 0 || b >= model::kSeasonalBins) fail(ErrorKind::Config, fmt::format("seasonal bin {} out of range", b));
  }
  if (variant != Variant::Sv) {
    std::vector<char> seen(model::kSeasonalBins, 0);
    for (const auto b : bins) seen[static_cast<std::size_t>(b)] = 1;
    for (int k = 0; k < model::kSeasonalBins; ++k) {
      if (!seen[static_cast<std::size_t>(k)]) {
        fail(ErrorKind::Coverage, fmt::format("seasonal bin {} has no observations", k));
      }
    }
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!std::isfinite(y[t])) fail(ErrorKind::Numeric, fmt::format("return {} is not finite", t));
  }

  Sampler sampler(y, bins, design, prior, variant, options, schedule.seed);

  PosteriorDraws draws;
  draws.variant = variant;
  draws.schedule = schedule;
  draws.labels = design.labels();
  const std::size_t n = y.size();
  const std::size_t retained = schedule.n_retained();
  draws.params.reserve(retained);
  draws.trace.reserve(schedule.n_iter);
  std::vector<double> x_sum(n, 0.0), x_sq(n, 0.0);

  for (std::size_t iter = 1; iter <= schedule.n_iter; ++iter) {
    sampler.sweep(iter);
    const auto diag = sampler.diagnostics(iter);
    draws.trace.push_back(diag);
    if (options.on_sweep) options.on_sweep(diag);
    if (iter > schedule.burn_in && (iter - schedule.burn_in) % schedule.thin == 0) {
      draws.iterations.push_back(iter);
      draws.log_likelihood.push_back(diag.log_likelihood);
      draws.params.push_back(sampler.params());
      const auto& x = sampler.x();
      for (std::size_t t = 0; t < n; ++t) {
        x_sum[t] += x[t];
        x_sq[t] += x[t] * x[t];
      }
      if (options.path_every > 0 && (draws.params.size() - 1) % options.path_every == 0) draws.x_paths.push_back(x);
    }
  }

  const double k = static_cast<double>(draws.params.size());
  draws.x_mean.resize(n);
  draws.x_sd.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double mean = x_sum[t] / k;
    draws.x_mean[t] = mean;
    draws.x_sd[t] = std::sqrt(std::max(0.0, x_sq[t] / k - mean * mean));
  }
  return draws;
}

PosteriorDraws run_chain(const data::ReturnSeries& data, const data::EventDesignMatrix& design,
                         const PriorConfig& prior, const Schedule& schedule, Variant variant,
                         const ChainOptions& options) {
  const auto bins = data::seasonal_indices(data.timestamps);
  return run_chain(data.values, bins, design, prior, schedule, variant, options);
}

// --- summaries ---------------------------------------------------------------

std::vector<InclusionSummary> inclusion_summary(const PosteriorDraws& draws) {
  if (draws.params.empty()) fail(ErrorKind::Length, "no retained draws");
  const std::size_t m = draws.params.front().alpha.size();
  std::vector<InclusionSummary> out(m);
  const double k = static_cast<double>(draws.size());
  for (std::size_t j = 0; j < m; ++j) {
    double pi_sum = 0.0, eff_sum = 0.0;
    for (const auto& p : draws.params) {
      pi_sum += p.pi[j];
      eff_sum += std::exp(p.alpha[j] / 2.0);
    }
    out[j].label = j < draws.labels.size() ? draws.labels[j] : data::ColumnLabel{std::to_string(j), 1};
    out[j].mean_pi = pi_sum / k;
    out[j].mean_effect = eff_sum / k;
  }
  return out;
}

PosteriorMean posterior_mean(const PosteriorDraws& draws) {
  if (draws.params.empty()) fail(ErrorKind::Length, "no retained draws");
  const auto& first = draws.params.front();
  PosteriorMean mean;
  mean.beta.assign(first.beta.size(), 0.0);
  mean.alpha.assign(first.alpha.size(), 0.0);
  mean.pi.assign(first.pi.size(), 0.0);
  for (const auto& p : draws.params) {
    mean.mu_h += p.mu_h;
    mean.phi += p.phi;
    mean.sigma_x2 += p.sigma_x2;
    mean.gamma += p.gamma;
    mean.sigma_alpha2 += p.sigma_alpha2;
    for (std::size_t k = 0; k < p.beta.size(); ++k) mean.beta[k] += p.beta[k];
    for (std::size_t j = 0; j < p.alpha.size(); ++j) {
      mean.alpha[j] += p.alpha[j];
      mean.pi[j] += p.pi[j];
    }
  }
  const double k = static_cast<double>(draws.size());
  mean.mu_h /= k;
  mean.phi /= k;
  mean.sigma_x2 /= k;
  mean.gamma /= k;
  mean.sigma_alpha2 /= k;
  for (auto& b : mean.beta) b /= k;
  for (auto& a : mean.alpha) a /= k;
  for (auto& p : mean.pi) p /= k;
  return mean;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) fail(ErrorKind::Length, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<ScalarSummary> scalar_summaries(const PosteriorDraws& draws) {
  if (draws.params.empty()) fail(ErrorKind::Length, "no retained draws");
  auto summarize = [&](const std::string& name, auto getter) {
    std::vector<double> v;
    v.reserve(draws.size());
    for (const auto& p : draws.params) v.push_back(getter(p));
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const auto a : v) ss += (a - mean) * (a - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return ScalarSummary{name, mean, sd, quantile(v, 0.025), quantile(v, 0.05), quantile(v, 0.95), quantile(v, 0.975)};
  };
  std::vector<ScalarSummary> out;
  out.push_back(summarize("mu_h", [](const ModelParams& p) { return p.mu_h; }));
  out.push_back(summarize("phi", [](const ModelParams& p) { return p.phi; }));
  out.push_back(summarize("sigma_x2", [](const ModelParams& p) { return p.sigma_x2; }));
  out.push_back(summarize("sigma_x", [](const ModelParams& p) { return std::sqrt(p.sigma_x2); }));
  out.push_back(summarize("sigma", [](const ModelParams& p) { return std::exp(p.mu_h / 2.0); }));
  if (draws.variant == Variant::Full) {
    out.push_back(summarize("gamma", [](const ModelParams& p) { return p.gamma; }));
    out.push_back(summarize("sigma_alpha2", [](const ModelParams& p) { return p.sigma_alpha2; }));
  }
  return out;
}

}  // namespace fxvol::mcmc
