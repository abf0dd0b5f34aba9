#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace fxvol::baselines {

enum class ModelTag { Ar1Rv, Har, Garch11, GjrGarch };

const char* to_string(ModelTag tag);
ModelTag parse_model_tag(std::string_view text);

struct BaselineFit {
  ModelTag tag = ModelTag::Ar1Rv;
  std::vector<std::string> labels;
  std::vector<double> params;
  std::vector<double> std_errors;
  /// Log-likelihood for the GARCH family, sum of squared residuals for OLS.
  double objective = 0.0;
  bool converged = false;
  std::size_t n_obs = 0;
  /// Starting variance of the GARCH recursion (sample variance of the fit sample).
  double initial_variance = 0.0;

  double param(std::string_view label) const;
};

// --- least squares ----------------------------------------------------------

struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd std_errors;  // homoskedastic
  Eigen::VectorXd residuals;
  double ssr = 0.0;
};

/// Column-pivoted QR; rank-deficient designs raise a rank error.
OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// RV_t on (1, RV_{t-1}).
BaselineFit fit_ar1_rv(std::span<const double> rv);

inline constexpr int kHarHourLags = 12;
inline constexpr int kHarDayLags = 288;

/// RV_t on (1, RV_{t-1}, mean of last 12, mean of last 288).
BaselineFit fit_har(std::span<const double> rv);

/// Regressor rows of the HAR model for targets t = 288 .. n-1.
Eigen::MatrixXd har_design(std::span<const double> rv);

/// One-step RV forecasts from an AR1-RV or HAR fit: out[t] predicts rv[t]
/// from rv[0..t-1]. Entries without enough history are NaN.
std::vector<double> forecast_rv(const BaselineFit& fit, std::span<const double> rv);

// --- GARCH family -----------------------------------------------------------

struct GarchParams {
  double omega = 0.0;
  double a = 0.0;
  double b = 0.0;
  double g = 0.0;  // asymmetry; zero for GARCH(1,1)
};

GarchParams garch_params(const BaselineFit& fit);

/// sigma2_t = omega + (a + g 1[y_{t-1} < 0]) y_{t-1}^2 + b sigma2_{t-1},
/// sigma2_0 = initial_variance. Returns n + 1 values; the last is the
/// forecast for the period after the sample.
std::vector<double> garch_variance_path(const GarchParams& p, std::span<const double> y, double initial_variance);

double garch_log_likelihood(const GarchParams& p, std::span<const double> y, double initial_variance);

/// Gaussian QMLE with three starting points.
BaselineFit fit_garch11(std::span<const double> y);
BaselineFit fit_gjr_garch(std::span<const double> y);

/// One-step volatility forecasts sqrt(sigma2_t) for each y_t, running the
/// fitted recursion over `y` from the fit's initial variance.
std::vector<double> forecast_garch_vol(const BaselineFit& fit, std::span<const double> y);

nlohmann::ordered_json to_json(const BaselineFit& fit);
BaselineFit fit_from_json(const nlohmann::ordered_json& j);

}  // namespace fxvol::baselines
