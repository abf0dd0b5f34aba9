#include "fxvol/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "fxvol/error.hpp"

namespace fxvol::baselines {

const char* to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::Ar1Rv: return "AR1-RV";
    case ModelTag::Har: return "HAR";
    case ModelTag::Garch11: return "GARCH";
    case ModelTag::GjrGarch: return "GJR-GARCH";
  }
  return "?";
}

ModelTag parse_model_tag(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "AR1-RV" || upper == "AR1RV" || upper == "AR1") return ModelTag::Ar1Rv;
  if (upper == "HAR") return ModelTag::Har;
  if (upper == "GARCH" || upper == "GARCH11" || upper == "GARCH(1,1)") return ModelTag::Garch11;
  if (upper == "GJR-GARCH" || upper == "GJR") return ModelTag::GjrGarch;
  fail(ErrorKind::Config, fmt::format("unknown baseline model '{}'", text));
}

double BaselineFit::param(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return params[i];
  }
  fail(ErrorKind::Config, fmt::format("{} fit has no parameter '{}'", to_string(tag), label));
}

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) fail(ErrorKind::Config, "regressor and target lengths differ");
  if (X.rows() <= X.cols()) fail(ErrorKind::Length, fmt::format("{} observations for {} regressors", X.rows(), X.cols()));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    fail(ErrorKind::Rank, fmt::format("design has rank {} < {} (degenerate regressor)", qr.rank(), X.cols()));
  }
  OlsResult r;
  r.coef = qr.solve(y);
  r.residuals = y - X * r.coef;
  r.ssr = r.residuals.squaredNorm();
  const double s2 = r.ssr / static_cast<double>(X.rows() - X.cols());
  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  r.std_errors = (s2 * xtx_inv.diagonal()).cwiseSqrt();
  return r;
}

namespace {

BaselineFit from_ols(ModelTag tag, std::vector<std::string> labels, const OlsResult& r) {
  BaselineFit fit;
  fit.tag = tag;
  fit.labels = std::move(labels);
  fit.params.assign(r.coef.data(), r.coef.data() + r.coef.size());
  fit.std_errors.assign(r.std_errors.data(), r.std_errors.data() + r.std_errors.size());
  fit.objective = r.ssr;
  fit.converged = true;
  fit.n_obs = static_cast<std::size_t>(r.residuals.size());
  return fit;
}

}  // namespace

BaselineFit fit_ar1_rv(std::span<const double> rv) {
  if (rv.size() < 3) fail(ErrorKind::Length, "AR1-RV needs at least 3 observations");
  const auto n = static_cast<Eigen::Index>(rv.size() - 1);
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rv[static_cast<std::size_t>(i)];
    y(i) = rv[static_cast<std::size_t>(i) + 1];
  }
  return from_ols(ModelTag::Ar1Rv, {"c", "rho"}, ols(X, y));
}

Eigen::MatrixXd har_design(std::span<const double> rv) {
  const std::size_t day = kHarDayLags;
  if (rv.size() <= day) return Eigen::MatrixXd(0, 4);
  // Prefix sums give the rolling means in O(n).
  std::vector<double> prefix(rv.size() + 1, 0.0);
  for (std::size_t i = 0; i < rv.size(); ++i) prefix[i + 1] = prefix[i] + rv[i];
  const auto n = static_cast<Eigen::Index>(rv.size() - day);
  Eigen::MatrixXd X(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t t = day + static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    X(i, 1) = rv[t - 1];
    X(i, 2) = (prefix[t] - prefix[t - kHarHourLags]) / kHarHourLags;
    X(i, 3) = (prefix[t] - prefix[t - day]) / static_cast<double>(day);
  }
  return X;
}

BaselineFit fit_har(std::span<const double> rv) {
  if (rv.size() < static_cast<std::size_t>(kHarDayLags) + 1) {
    fail(ErrorKind::Length, fmt::format("HAR needs at least {} observations, got {}", kHarDayLags + 1, rv.size()));
  }
  const Eigen::MatrixXd X = har_design(rv);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = rv[kHarDayLags + static_cast<std::size_t>(i)];
  return from_ols(ModelTag::Har, {"c", "b_5min", "b_hour", "b_day"}, ols(X, y));
}

std::vector<double> forecast_rv(const BaselineFit& fit, std::span<const double> rv) {
  std::vector<double> out(rv.size(), std::numeric_limits<double>::quiet_NaN());
  if (fit.tag == ModelTag::Ar1Rv) {
    for (std::size_t t = 1; t < rv.size(); ++t) out[t] = fit.params[0] + fit.params[1] * rv[t - 1];
  } else if (fit.tag == ModelTag::Har) {
    const Eigen::MatrixXd X = har_design(rv);
    const Eigen::Map<const Eigen::VectorXd> coef(fit.params.data(), 4);
    const Eigen::VectorXd f = X * coef;
    for (Eigen::Index i = 0; i < f.size(); ++i) out[kHarDayLags + static_cast<std::size_t>(i)] = f(i);
  } else {
    fail(ErrorKind::Config, fmt::format("{} is not a realized-volatility model", to_string(fit.tag)));
  }
  return out;
}

// --- GARCH ------------------------------------------------------------------

GarchParams garch_params(const BaselineFit& fit) {
  if (fit.tag == ModelTag::Garch11) return {fit.params.at(0), fit.params.at(1), fit.params.at(2), 0.0};
  if (fit.tag == ModelTag::GjrGarch) return {fit.params.at(0), fit.params.at(1), fit.params.at(2), fit.params.at(3)};
  fail(ErrorKind::Config, fmt::format("{} is not a GARCH-family model", to_string(fit.tag)));
}

std::vector<double> garch_variance_path(const GarchParams& p, std::span<const double> y, double initial_variance) {
  std::vector<double> s2(y.size() + 1);
  s2[0] = initial_variance;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double y2 = y[t] * y[t];
    s2[t + 1] = p.omega + (p.a + (y[t] < 0.0 ? p.g : 0.0)) * y2 + p.b * s2[t];
  }
  return s2;
}

double garch_log_likelihood(const GarchParams& p, std::span<const double> y, double initial_variance) {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double s2 = initial_variance;
  double ll = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!(s2 > 0.0) || !std::isfinite(s2)) return -std::numeric_limits<double>::infinity();
    const double y2 = y[t] * y[t];
    ll -= 0.5 * (log2pi + std::log(s2) + y2 / s2);
    s2 = p.omega + (p.a + (y[t] < 0.0 ? p.g : 0.0)) * y2 + p.b * s2;
  }
  return ll;
}

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Unconstrained coordinates:
//   GARCH: (log omega, logit(a + b), logit(a / (a + b)))
//   GJR:   (log omega, logit(a + b + g/2), logit(k / (a + b + g/2)), logit(a / 2k)),
//          with k = a + g/2, so that a >= 0, a + g >= 0, b >= 0 and the
//          persistence a + b + g/2 stays below one.
GarchParams from_theta(bool gjr, const double* th) {
  GarchParams p;
  p.omega = std::exp(th[0]);
  const double persistence = logistic(th[1]);
  const double k = persistence * logistic(th[2]);
  p.b = persistence - k;
  if (gjr) {
    const double w = logistic(th[3]);
    p.a = 2.0 * k * w;
    p.g = 2.0 * k * (1.0 - 2.0 * w);
  } else {
    p.a = k;
  }
  return p;
}

std::vector<double> to_theta(bool gjr, const GarchParams& p) {
  const double k = p.a + p.g / 2.0;
  const double persistence = k + p.b;
  std::vector<double> th{std::log(p.omega), logit(persistence), logit(k / persistence)};
  if (gjr) th.push_back(logit(p.a / (2.0 * k)));
  return th;
}

struct Objective {
  bool gjr;
  std::span<const double> y;
  double initial_variance;
};

double neg_loglik(const gsl_vector* v, void* params) {
  const auto* obj = static_cast<const Objective*>(params);
  const double ll = garch_log_likelihood(from_theta(obj->gjr, v->data), obj->y, obj->initial_variance);
  return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max() / 4;
}

struct SimplexResult {
  std::vector<double> theta;
  double value;
  bool converged;
  std::size_t iterations;
};

SimplexResult minimize(Objective& obj, std::vector<double> start, double step) {
  const std::size_t dim = start.size();
  gsl_multimin_function f{&neg_loglik, dim, &obj};
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* ss = gsl_vector_alloc(dim);
  for (std::size_t i = 0; i < dim; ++i) gsl_vector_set(x, i, start[i]);
  gsl_vector_set_all(ss, step);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  gsl_multimin_fminimizer_set(s, &f, x, ss);
  int status = GSL_CONTINUE;
  std::size_t iter = 0;
  // A ridge toward the stationarity boundary never shrinks the simplex, so a
  // best value that stops moving for 500 iterations also counts.
  double anchor = s->fval;
  std::size_t anchor_iter = 0;
  bool stalled = false;
  while (status == GSL_CONTINUE && iter < 5000) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-8);
    if (std::abs(anchor - s->fval) > 1e-10 * (1.0 + std::abs(s->fval))) {
      anchor = s->fval;
      anchor_iter = iter;
    } else if (iter - anchor_iter >= 500) {
      stalled = true;
      break;
    }
  }
  SimplexResult r;
  r.theta.assign(s->x->data, s->x->data + dim);
  r.value = s->fval;
  r.converged = status == GSL_SUCCESS || stalled;
  r.iterations = iter;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return r;
}

/// Standard errors from the inverse of a central-difference Hessian of the
/// negative log-likelihood in natural parameters.
std::vector<double> hessian_std_errors(const std::vector<double>& natural, std::span<const double> y, double v0,
                                       bool gjr) {
  const std::size_t k = natural.size();
  auto nll = [&](const std::vector<double>& q) {
    const GarchParams p{q[0], q[1], q[2], gjr ? q[3] : 0.0};
    return -garch_log_likelihood(p, y, v0);
  };
  std::vector<double> h(k);
  for (std::size_t i = 0; i < k; ++i) h[i] = 1e-4 * std::max(std::abs(natural[i]), 1e-2);
  Eigen::MatrixXd H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  const double f0 = nll(natural);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      auto q = natural;
      double val;
      if (i == j) {
        q[i] = natural[i] + h[i];
        const double fp = nll(q);
        q[i] = natural[i] - h[i];
        const double fm = nll(q);
        val = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
      } else {
        auto eval = [&](double si, double sj) {
          auto r = natural;
          r[i] += si * h[i];
          r[j] += sj * h[j];
          return nll(r);
        };
        val = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h[i] * h[j]);
      }
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = val;
      H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = val;
    }
  }
  std::vector<double> se(k, std::numeric_limits<double>::quiet_NaN());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return se;
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
  for (std::size_t i = 0; i < k; ++i) {
    const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    if (v > 0.0) se[i] = std::sqrt(v);
  }
  return se;
}

BaselineFit fit_garch_family(std::span<const double> y, bool gjr) {
  if (y.size() < 100) fail(ErrorKind::Length, fmt::format("GARCH fit needs at least 100 returns, got {}", y.size()));
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0.0;
  for (const auto v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  if (!(var > 0.0)) fail(ErrorKind::Degenerate, "returns have zero variance");

  Objective obj{gjr, y, var};
  const GarchParams starts[] = {
      {0.05 * var, 0.05, 0.90, 0.0},
      {0.10 * var, 0.10, 0.80, 0.0},
      {0.30 * var, 0.15, 0.55, 0.0},
  };
  SimplexResult best{{}, std::numeric_limits<double>::infinity(), false, 0};
  std::string trace;
  for (const auto& start : starts) {
    auto r = minimize(obj, to_theta(gjr, start), 0.5);
    // Restart from the optimum with a fresh simplex to avoid premature collapse.
    auto polished = minimize(obj, r.theta, 0.05);
    polished.iterations += r.iterations;
    const auto p = from_theta(gjr, polished.theta.data());
    trace += fmt::format("[start a={} b={}: -ll={} omega={} a={} b={} g={} converged={}] ", start.a, start.b,
                         polished.value, p.omega, p.a, p.b, p.g, polished.converged);
    if (polished.value < best.value) best = polished;
  }
  if (!best.converged || !std::isfinite(best.value)) {
    fail(ErrorKind::Optimizer, fmt::format("{} QMLE did not converge: {}", gjr ? "GJR-GARCH" : "GARCH", trace));
  }

  const auto p = from_theta(gjr, best.theta.data());
  BaselineFit fit;
  fit.tag = gjr ? ModelTag::GjrGarch : ModelTag::Garch11;
  fit.labels = gjr ? std::vector<std::string>{"omega", "a", "b", "g"} : std::vector<std::string>{"omega", "a", "b"};
  fit.params = gjr ? std::vector<double>{p.omega, p.a, p.b, p.g} : std::vector<double>{p.omega, p.a, p.b};
  fit.objective = -best.value;
  fit.converged = true;
  fit.n_obs = y.size();
  fit.initial_variance = var;
  fit.std_errors = hessian_std_errors(fit.params, y, var, gjr);
  return fit;
}

}  // namespace

BaselineFit fit_garch11(std::span<const double> y) { return fit_garch_family(y, false); }
BaselineFit fit_gjr_garch(std::span<const double> y) { return fit_garch_family(y, true); }

std::vector<double> forecast_garch_vol(const BaselineFit& fit, std::span<const double> y) {
  const auto path = garch_variance_path(garch_params(fit), y, fit.initial_variance);
  std::vector<double> out(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) out[t] = std::sqrt(path[t]);
  return out;
}

nlohmann::ordered_json to_json(const BaselineFit& fit) {
  nlohmann::ordered_json j;
  j["model"] = to_string(fit.tag);
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  nlohmann::ordered_json se = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < fit.labels.size(); ++i) {
    params[fit.labels[i]] = fit.params[i];
    const double s = i < fit.std_errors.size() ? fit.std_errors[i] : std::numeric_limits<double>::quiet_NaN();
    se[fit.labels[i]] = std::isfinite(s) ? nlohmann::ordered_json(s) : nlohmann::ordered_json(nullptr);
  }
  j["params"] = params;
  j["std_errors"] = se;
  if (fit.tag == ModelTag::Garch11 || fit.tag == ModelTag::GjrGarch) {
    j["log_likelihood"] = fit.objective;
    j["initial_variance"] = fit.initial_variance;
  } else {
    j["ssr"] = fit.objective;
  }
  j["converged"] = fit.converged;
  j["n_obs"] = fit.n_obs;
  return j;
}

BaselineFit fit_from_json(const nlohmann::ordered_json& j) {
  try {
    BaselineFit fit;
    fit.tag = parse_model_tag(j.at("model").get<std::string>());
    for (const auto& [label, value] : j.at("params").items()) {
      fit.labels.push_back(label);
      fit.params.push_back(value.get<double>());
      const auto& se = j.at("std_errors").at(label);
      fit.std_errors.push_back(se.is_null() ? std::numeric_limits<double>::quiet_NaN() : se.get<double>());
    }
    const bool garch = fit.tag == ModelTag::Garch11 || fit.tag == ModelTag::GjrGarch;
    fit.objective = j.at(garch ? "log_likelihood" : "ssr").get<double>();
    if (garch) fit.initial_variance = j.at("initial_variance").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.n_obs = j.at("n_obs").get<std::size_t>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, fmt::format("baseline fit JSON: {}", e.what()));
  }
}

}  // namespace fxvol::baselines
