#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fxvol/baselines.hpp"
#include "fxvol/config.hpp"
#include "fxvol/csv.hpp"
#include "fxvol/draws_io.hpp"
#include "fxvol/error.hpp"
#include "fxvol/forecast.hpp"
#include "fxvol/hashing.hpp"
#include "fxvol/market_data.hpp"
#include "fxvol/mcmc.hpp"
#include "fxvol/model.hpp"
#include "fxvol/portfolio.hpp"
#include "fxvol/rng.hpp"

namespace fxvol::cli {

namespace fs = std::filesystem;
using config::Json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<std::string> kCompetitors = {"SSV", "SV", "AR1-RV", "HAR", "GARCH", "GJR-GARCH"};

// --- configuration -----------------------------------------------------------

/// One subcommand: defaults, an optional JSON config file, and flag
/// overrides, merged in that order.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description, Json defaults)
      : app(parent.add_subcommand(name, description)), defaults_(std::move(defaults)) {
    app->add_option("--config", config_path_, "JSON config (a manifest.json is accepted too)");
    app->add_option_function<std::vector<std::string>>(
        "--set",
        [this](const std::vector<std::string>& items) {
          for (const auto& item : items) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) fail(ErrorKind::Config, fmt::format("--set expects key=value, got '{}'", item));
            const auto key = item.substr(0, eq);
            const auto text = item.substr(eq + 1);
            Json value = Json::parse(text, nullptr, false);
            overrides_[key] = value.is_discarded() ? Json(text) : value;
          }
        },
        "Override any config key (key=value)");
  }

  template <class T>
  void option(const std::string& flag, const std::string& key, const std::string& description) {
    app->add_option_function<T>(flag, [this, key](const T& v) { overrides_[key] = v; }, description);
  }

  void list_option(const std::string& flag, const std::string& key, const std::string& description) {
    app->add_option_function<std::vector<std::string>>(
           flag, [this, key](const std::vector<std::string>& v) { overrides_[key] = v; }, description)
        ->delimiter(',');
  }

  void flag(const std::string& flag, const std::string& key, bool value, const std::string& description) {
    app->add_flag_callback(flag, [this, key, value] { overrides_[key] = value; }, description);
  }

  Json resolve() const {
    Json merged = defaults_;
    if (!config_path_.empty()) {
      Json file = config::read_json(config_path_);
      if (file.contains("config") && file["config"].is_object()) file = file["config"];
      if (!file.is_object()) fail(ErrorKind::Config, fmt::format("{}: config must be a JSON object", config_path_));
      merge(merged, file, config_path_);
    }
    merge(merged, overrides_, "command line");
    return merged;
  }

  CLI::App* app;

 private:
  static void merge(Json& into, const Json& from, const std::string& origin) {
    for (const auto& [key, value] : from.items()) {
      if (!into.contains(key)) fail(ErrorKind::Config, fmt::format("{}: unknown config key '{}'", origin, key));
      into[key] = value;
    }
  }

  Json defaults_;
  Json overrides_ = Json::object();
  std::string config_path_;
};

template <class T>
T get(const Json& cfg, const std::string& key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, fmt::format("config key '{}': {}", key, e.what()));
  }
}

std::string get_path(const Json& cfg, const std::string& key) { return get<std::string>(cfg, key); }

std::optional<Timestamp> get_time(const Json& cfg, const std::string& key) {
  const auto text = get<std::string>(cfg, key);
  if (text.empty()) return std::nullopt;
  return parse_timestamp(text);
}

fs::path prepare_out_dir(const std::string& dir) {
  if (dir.empty()) fail(ErrorKind::Config, "--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::Io, fmt::format("cannot create output directory '{}'", dir));
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  body(out);
  out.flush();
  if (!out) fail(ErrorKind::Io, fmt::format("error while writing '{}'", path.string()));
}

void write_json_file(const fs::path& path, const Json& j) {
  write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

Json input_record(const std::string& path) {
  Json j;
  j["path"] = path;
  j["sha256"] = sha256_file(path);
  return j;
}

Json manifest(const std::string& command, const Json& cfg) {
  Json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = cfg;
  m["config_sha256"] = sha256_hex(cfg.dump());
  return m;
}

void record_outputs(Json& m, const fs::path& dir, const std::vector<std::string>& files) {
  Json out = Json::object();
  for (const auto& f : files) out[f] = sha256_file(dir / f);
  m["outputs"] = out;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

struct Logger {
  bool quiet = false;
  template <class... Args>
  void operator()(fmt::format_string<Args...> f, Args&&... args) const {
    if (!quiet) std::cerr << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }
};

// --- shared data helpers ---------------------------------------------------

data::ReturnSeries load_return_input(const Json& cfg) {
  const auto returns = get_path(cfg, "returns");
  const auto prices = get_path(cfg, "prices");
  if (!returns.empty() && !prices.empty()) fail(ErrorKind::Config, "give either returns or prices, not both");
  if (!returns.empty()) return data::load_returns(returns);
  if (!prices.empty()) return data::compute_log_returns(data::load_prices(prices));
  fail(ErrorKind::Config, "no input: pass --returns or --prices");
}

data::RVSeries load_rv_input(const Json& cfg) {
  const auto rv = get_path(cfg, "rv");
  const auto one_min = get_path(cfg, "one_minute");
  if (!rv.empty()) {
    const auto series = data::load_returns(rv, "rv");
    return {series.timestamps, series.values};
  }
  if (!one_min.empty()) return data::compute_realized_volatility(data::load_returns(one_min));
  fail(ErrorKind::Config, "realized volatility needs --rv or --one-minute");
}

void write_rv(std::ostream& out, const data::RVSeries& rv) {
  out << "timestamp,rv\n";
  for (std::size_t i = 0; i < rv.size(); ++i) {
    out << format_timestamp(rv.timestamps[i]) << ',' << csv::format_double(rv.values[i]) << '\n';
  }
}

data::EventDesignMatrix build_design(const Json& cfg, const data::ReturnSeries& returns, bool with_events,
                                     data::AlignmentReport* report, data::EventCalendar* calendar_out = nullptr) {
  const auto calendar_path = get_path(cfg, "calendar");
  if (!with_events || calendar_path.empty()) return data::EventDesignMatrix(returns.size(), {}, {});
  const auto calendar = data::load_calendar(calendar_path);
  if (calendar_out) *calendar_out = calendar;
  return data::align_events(calendar, returns.timestamps, get<int>(cfg, "lags"), returns.grid_step_minutes, report);
}

std::map<std::string, std::string> event_names(const data::EventCalendar& calendar) {
  std::map<std::string, std::string> names;
  for (const auto& e : calendar.entries) names.emplace(e.event_id, e.name);
  return names;
}

// --- simulate ----------------------------------------------------------------

Json simulate_defaults() {
  Json j;
  j["n"] = 1000;
  j["seed"] = 1;
  j["start"] = "2024-01-01T00:05:00Z";
  j["skip_weekends"] = true;
  j["mu_h"] = -6.0;
  j["phi"] = 0.98;
  j["sigma_x2"] = 0.0225;
  j["seasonal_amplitude"] = 0.5;
  j["n_events"] = 0;
  j["releases_per_event"] = 40;
  j["n_active"] = 0;
  j["alpha_min"] = 1.5;
  j["alpha_max"] = 3.0;
  j["lags"] = data::kDefaultLags;
  j["one_minute"] = false;
  j["initial_price"] = 1.0;
  j["params"] = "";
  return j;
}

int cmd_simulate(const Json& cfg, const fs::path& out, const Logger& log) {
  const auto n = get<std::size_t>(cfg, "n");
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const auto grid = data::make_grid(parse_timestamp(get<std::string>(cfg, "start")), n, 5,
                                    get<bool>(cfg, "skip_weekends"));

  const auto calendar = model::synthetic_calendar(grid, get<std::size_t>(cfg, "n_events"),
                                                  get<std::size_t>(cfg, "releases_per_event"), Rng(seed).split(10)());
  data::AlignmentReport report;
  const auto design = data::align_events(calendar, grid, get<int>(cfg, "lags"), 5, &report);

  model::ModelParams params;
  params.mu_h = get<double>(cfg, "mu_h");
  params.phi = get<double>(cfg, "phi");
  params.sigma_x2 = get<double>(cfg, "sigma_x2");
  params.beta = model::sinusoidal_seasonal(get<double>(cfg, "seasonal_amplitude"));
  const std::size_t m = design.n_cols();
  params.resize_events(m);
  const auto n_active = get<std::size_t>(cfg, "n_active");
  if (n_active > m) fail(ErrorKind::Config, fmt::format("n_active = {} exceeds {} event columns", n_active, m));
  {
    Rng pick = Rng(seed).split(11);
    std::vector<std::size_t> cols(m);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    const double lo = get<double>(cfg, "alpha_min");
    const double hi = get<double>(cfg, "alpha_max");
    for (std::size_t i = 0; i < n_active; ++i) {
      const auto j = i + std::min(static_cast<std::size_t>(pick.uniform() * static_cast<double>(m - i)), m - i - 1);
      std::swap(cols[i], cols[j]);
      params.alpha[cols[i]] = lo + (hi - lo) * pick.uniform();
      params.pi[cols[i]] = 1;
    }
    if (m > 0 && n_active > 0) params.gamma = static_cast<double>(n_active) / static_cast<double>(m);
  }
  const auto params_path = get_path(cfg, "params");
  if (!params_path.empty()) config::apply(config::read_json(params_path), params);
  params.validate();

  model::Simulation sim;
  std::optional<data::ReturnSeries> one_min;
  if (get<bool>(cfg, "one_minute")) {
    auto intraday = model::simulate_intraday(params, design, grid, seed);
    sim = std::move(intraday.five_min);
    one_min = std::move(intraday.one_min);
  } else {
    sim = model::simulate(params, design, grid, seed);
  }

  std::vector<std::string> files = {"returns.csv", "prices.csv", "latent.csv", "truth.json", "calendar.csv",
                                    "design.csv"};
  write_file(out / "returns.csv", [&](std::ostream& o) { data::write_returns(o, sim.returns); });
  const double p0 = get<double>(cfg, "initial_price");
  write_file(out / "prices.csv",
             [&](std::ostream& o) { data::write_prices(o, model::prices_from_returns(sim.returns, p0)); });
  write_file(out / "latent.csv", [&](std::ostream& o) {
    o << "timestamp,x,log_variance,volatility\n";
    for (std::size_t t = 0; t < n; ++t) {
      const double h = model::log_variance(params, sim.x[t], data::seasonal_index(grid[t]), design.row(t));
      o << format_timestamp(grid[t]) << ',' << csv::format_double(sim.x[t]) << ',' << csv::format_double(h) << ','
        << csv::format_double(std::exp(h / 2.0)) << '\n';
    }
  });
  Json truth = config::to_json(params);
  Json labels = Json::array();
  for (const auto& l : design.labels()) labels.push_back(l.to_string());
  truth["labels"] = labels;
  write_json_file(out / "truth.json", truth);
  write_file(out / "calendar.csv", [&](std::ostream& o) { data::write_calendar(o, calendar); });
  write_file(out / "design.csv", [&](std::ostream& o) { data::write_design_triplets(o, design); });
  if (one_min) {
    write_file(out / "returns_1m.csv", [&](std::ostream& o) { data::write_returns(o, *one_min); });
    write_file(out / "prices_1m.csv",
               [&](std::ostream& o) { data::write_prices(o, model::prices_from_returns(*one_min, p0)); });
    const auto rv = data::compute_realized_volatility(*one_min);
    write_file(out / "rv.csv", [&](std::ostream& o) { write_rv(o, rv); });
    files.insert(files.end(), {"returns_1m.csv", "prices_1m.csv", "rv.csv"});
  }
  Json man = manifest("simulate", cfg);
  man["seed"] = seed;
  record_outputs(man, out, files);
  write_json_file(out / "manifest.json", man);
  log("simulated {} returns, {} event columns ({} active) into {}", n, design.n_cols(), n_active,
      out.string());
  return 0;
}

// --- estimate ----------------------------------------------------------------

Json estimate_defaults() {
  Json j;
  j["returns"] = "";
  j["prices"] = "";
  j["calendar"] = "";
  j["variant"] = "FULL";
  j["n_iter"] = 20000;
  j["burn_in"] = 10000;
  j["thin"] = 10;
  j["seed"] = 1;
  j["lags"] = data::kDefaultLags;
  j["sigma_x2_initial_state"] = true;
  const Json prior = config::to_json(model::PriorConfig{});
  for (const auto& [k, v] : prior.items()) j[k] = v;
  return j;
}

int cmd_estimate(const Json& cfg, const fs::path& out, const Logger& log) {
  const auto variant = mcmc::parse_variant(get<std::string>(cfg, "variant"));
  mcmc::Schedule schedule;
  schedule.n_iter = get<std::size_t>(cfg, "n_iter");
  schedule.burn_in = get<std::size_t>(cfg, "burn_in");
  schedule.thin = get<std::size_t>(cfg, "thin");
  schedule.seed = get<std::uint64_t>(cfg, "seed");
  schedule.validate();
  const auto prior = config::prior_from_json(cfg);
  prior.validate();

  const auto returns = load_return_input(cfg);
  data::AlignmentReport report;
  data::EventCalendar calendar;
  const auto design = build_design(cfg, returns, variant == mcmc::Variant::Full, &report, &calendar);
  if (variant == mcmc::Variant::Full) {
    log("aligned {} releases into {} columns ({} off-sample, {} truncated lags)", report.releases, design.n_cols(),
        report.off_sample, report.truncated_lags);
  }

  mcmc::ChainOptions options;
  options.sigma_x2_initial_state = get<bool>(cfg, "sigma_x2_initial_state");
  const std::size_t every = std::max<std::size_t>(1, schedule.n_iter / 10);
  options.on_sweep = [&](const mcmc::SweepDiagnostics& d) {
    if (d.iteration % every == 0 || d.iteration == schedule.n_iter) {
      log("sweep {}/{}: loglik {:.1f} mu_h {:.3f} phi {:.4f} sigma_x2 {:.4f} active {}", d.iteration,
          schedule.n_iter, d.log_likelihood, d.mu_h, d.phi, d.sigma_x2, d.n_active);
    }
  };
  const auto started = std::chrono::steady_clock::now();
  const auto draws = mcmc::run_chain(returns, design, prior, schedule, variant, options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log("{} retained draws in {:.1f} s", draws.size(), seconds);

  std::vector<std::string> files = {"draws.csv", "summary.csv", "latent.csv", "posterior.json"};
  write_file(out / "draws.csv", [&](std::ostream& o) { mcmc::write_draws_csv(o, draws); });
  write_file(out / "summary.csv", [&](std::ostream& o) { mcmc::write_summary_csv(o, draws); });
  write_file(out / "latent.csv", [&](std::ostream& o) { mcmc::write_latent_csv(o, returns.timestamps, draws); });
  if (variant != mcmc::Variant::Sv) {
    write_file(out / "seasonal.csv", [&](std::ostream& o) { mcmc::write_seasonal_csv(o, draws); });
    files.push_back("seasonal.csv");
  }
  if (variant == mcmc::Variant::Full) {
    const auto names = event_names(calendar);
    write_file(out / "inclusion_pi.csv", [&](std::ostream& o) {
      mcmc::write_inclusion_table(o, draws, mcmc::InclusionQuantity::Probability, names, returns.grid_step_minutes);
    });
    write_file(out / "inclusion_effect.csv", [&](std::ostream& o) {
      mcmc::write_inclusion_table(o, draws, mcmc::InclusionQuantity::Effect, names, returns.grid_step_minutes);
    });
    write_file(out / "design.csv", [&](std::ostream& o) { data::write_design_triplets(o, design); });
    files.insert(files.end(), {"inclusion_pi.csv", "inclusion_effect.csv", "design.csv"});
  }

  Json posterior;
  posterior["variant"] = mcmc::to_string(variant);
  posterior["n_draws"] = draws.size();
  Json scalars = Json::object();
  for (const auto& s : mcmc::scalar_summaries(draws)) {
    scalars[s.name] = {{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"q975", s.q975}};
  }
  posterior["scalars"] = scalars;
  const auto pm = mcmc::posterior_mean(draws);
  posterior["sigma_annualized"] = model::annualize(std::exp(pm.mu_h / 2.0));
  if (variant == mcmc::Variant::Full) {
    posterior["alignment"] = {{"releases", report.releases},
                              {"off_sample", report.off_sample},
                              {"truncated_lags", report.truncated_lags}};
  }
  write_json_file(out / "posterior.json", posterior);

  Json m = manifest("estimate", cfg);
  m["seed"] = schedule.seed;
  m["variant"] = mcmc::to_string(variant);
  m["schedule"] = {{"n_iter", schedule.n_iter},
                   {"burn_in", schedule.burn_in},
                   {"thin", schedule.thin},
                   {"seed", schedule.seed},
                   {"retained", draws.size()}};
  m["prior"] = config::to_json(prior);
  Json inputs = Json::object();
  for (const auto* key : {"returns", "prices", "calendar"}) {
    const auto p = get_path(cfg, key);
    if (!p.empty()) inputs[key] = input_record(p);
  }
  m["inputs"] = inputs;
  record_outputs(m, out, files);
  write_json_file(out / "manifest.json", m);
  return 0;
}

// --- forecast ----------------------------------------------------------------

Json forecast_defaults() {
  Json j;
  j["model"] = "";
  j["returns"] = "";
  j["prices"] = "";
  j["one_minute"] = "";
  j["rv"] = "";
  j["draws"] = "";
  j["calendar"] = "";
  j["lags"] = data::kDefaultLags;
  j["train_end"] = "";
  j["lognormal_correction"] = true;
  j["output"] = "";
  j["fit_output"] = "";
  return j;
}

std::string canonical_model(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
  if (name == "FULL" || name == "PROPOSAL") return "PROPOSAL";
  if (name == "SSV" || name == "SV") return name;
  return baselines::to_string(baselines::parse_model_tag(name));
}

template <class T>
std::vector<T> before(std::span<const Timestamp> ts, std::span<const T> values, std::optional<Timestamp> end) {
  std::vector<T> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!end || ts[i] < *end) out.push_back(values[i]);
  }
  return out;
}

int cmd_forecast(const Json& cfg, const Logger& log) {
  const auto model = canonical_model(get<std::string>(cfg, "model"));
  const auto output = get_path(cfg, "output");
  if (output.empty()) fail(ErrorKind::Config, "--output is required");
  const auto train_end = get_time(cfg, "train_end");
  forecast::ForecastSeries series;
  series.model = model;
  Json fit_json;

  if (model == "PROPOSAL" || model == "SSV" || model == "SV") {
    const auto draws_path = get_path(cfg, "draws");
    if (draws_path.empty()) fail(ErrorKind::Dependency, fmt::format("{} forecasts need --draws", model));
    const auto draws = mcmc::read_draws_csv(draws_path);
    const auto expected = model == "PROPOSAL" ? mcmc::Variant::Full : mcmc::parse_variant(model);
    if (draws.variant != expected) {
      fail(ErrorKind::Dependency, fmt::format("{} needs {} draws, '{}' holds {}", model, mcmc::to_string(expected),
                                              draws_path, mcmc::to_string(draws.variant)));
    }
    const auto returns = load_return_input(cfg);
    const auto design = build_design(cfg, returns, expected == mcmc::Variant::Full, nullptr);
    if (design.labels().size() != draws.labels.size()) {
      fail(ErrorKind::Alignment, fmt::format("calendar gives {} event columns, draws have {}", design.n_cols(),
                                             draws.labels.size()));
    }
    for (std::size_t j = 0; j < draws.labels.size(); ++j) {
      if (design.labels()[j].to_string() != draws.labels[j].to_string()) {
        fail(ErrorKind::Alignment, fmt::format("event column {} is '{}' in the calendar but '{}' in the draws", j,
                                               design.labels()[j].to_string(), draws.labels[j].to_string()));
      }
    }
    forecast::ProposalOptions options;
    options.lognormal_correction = get<bool>(cfg, "lognormal_correction");
    const auto bins = data::seasonal_indices(returns.timestamps);
    series.timestamps = returns.timestamps;
    series.values = forecast::forecast_proposal(mcmc::posterior_mean(draws), returns.values, bins, design, options);
    fit_json["model"] = model;
    fit_json["draws"] = input_record(draws_path);
    fit_json["lognormal_correction"] = options.lognormal_correction;
  } else {
    const auto tag = baselines::parse_model_tag(model);
    baselines::BaselineFit fit;
    if (tag == baselines::ModelTag::Garch11 || tag == baselines::ModelTag::GjrGarch) {
      const auto returns = load_return_input(cfg);
      const auto sample = before<double>(returns.timestamps, returns.values, train_end);
      fit = tag == baselines::ModelTag::Garch11 ? baselines::fit_garch11(sample) : baselines::fit_gjr_garch(sample);
      series.timestamps = returns.timestamps;
      series.values = baselines::forecast_garch_vol(fit, returns.values);
    } else {
      const auto rv = load_rv_input(cfg);
      const auto sample = before<double>(rv.timestamps, rv.values, train_end);
      fit = tag == baselines::ModelTag::Ar1Rv ? baselines::fit_ar1_rv(sample) : baselines::fit_har(sample);
      series.timestamps = rv.timestamps;
      series.values = baselines::forecast_rv(fit, rv.values);
    }
    fit_json = baselines::to_json(fit);
  }

  const fs::path out_path(output);
  if (out_path.has_parent_path()) prepare_out_dir(out_path.parent_path().string());
  write_file(out_path, [&](std::ostream& o) { forecast::write_forecasts(o, series); });
  auto fit_output = get_path(cfg, "fit_output");
  if (!fit_output.empty()) write_json_file(fit_output, fit_json);
  log("{}: {} forecasts written to {}", model, series.size(), output);
  return 0;
}

// --- evaluate ----------------------------------------------------------------

Json evaluate_defaults() {
  Json j;
  j["rv"] = "";
  j["one_minute"] = "";
  j["forecast_dir"] = "";
  j["proposal"] = "";
  j["models"] = kCompetitors;
  j["eval_start"] = "";
  j["horizon"] = 1;
  return j;
}

/// Forecast file for a model inside a directory, or a dependency error.
fs::path forecast_file(const std::string& dir, const std::string& model) {
  const fs::path path = fs::path(dir) / (model + ".csv");
  if (dir.empty() || !fs::exists(path)) {
    fail(ErrorKind::Dependency, fmt::format("no forecasts for model {} (expected {})", model, path.string()));
  }
  return path;
}

std::map<Timestamp, double> by_time(const forecast::ForecastSeries& f) {
  std::map<Timestamp, double> m;
  for (std::size_t i = 0; i < f.size(); ++i) m[f.timestamps[i]] = f.values[i];
  return m;
}

std::vector<double> lookup(const std::map<Timestamp, double>& m, std::span<const Timestamp> ts) {
  std::vector<double> out(ts.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (auto it = m.find(ts[i]); it != m.end()) out[i] = it->second;
  }
  return out;
}

int cmd_evaluate(const Json& cfg, const fs::path& out, const Logger& log) {
  const auto models = get<std::vector<std::string>>(cfg, "models");
  if (models.empty()) fail(ErrorKind::Config, "no competitor models requested");
  const auto dir = get_path(cfg, "forecast_dir");
  auto proposal_path = get_path(cfg, "proposal");
  if (proposal_path.empty()) proposal_path = forecast_file(dir, "PROPOSAL").string();
  if (!fs::exists(proposal_path)) {
    fail(ErrorKind::Dependency, fmt::format("no forecasts for model PROPOSAL ({})", proposal_path));
  }
  // Resolve every dependency before doing any work.
  std::vector<std::pair<std::string, fs::path>> competitors;
  for (const auto& name : models) {
    const auto canonical = canonical_model(name);
    competitors.emplace_back(canonical, forecast_file(dir, canonical));
  }

  const auto rv_all = load_rv_input(cfg);
  const auto start = get_time(cfg, "eval_start");
  std::vector<Timestamp> ts;
  std::vector<double> rv;
  for (std::size_t i = 0; i < rv_all.size(); ++i) {
    if (!start || rv_all.timestamps[i] >= *start) {
      ts.push_back(rv_all.timestamps[i]);
      rv.push_back(rv_all.values[i]);
    }
  }
  const auto proposal = lookup(by_time(forecast::load_forecasts(proposal_path)), ts);
  std::vector<double> e_prop(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) e_prop[i] = proposal[i] - rv[i];

  const auto horizon = get<std::size_t>(cfg, "horizon");
  std::vector<forecast::CompetitorResult> results;
  Json details = Json::array();
  for (const auto& [name, path] : competitors) {
    const auto comp = lookup(by_time(forecast::load_forecasts(path)), ts);
    std::vector<double> e_comp(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) e_comp[i] = comp[i] - rv[i];
    forecast::CompetitorResult r;
    r.model = name;
    r.horse_race = forecast::horse_race(rv, proposal, comp);
    r.dm = forecast::diebold_mariano(e_prop, e_comp, horizon);
    results.push_back(r);
    details.push_back({{"model", name},
                       {"b0", r.horse_race.b0},
                       {"b1", r.horse_race.b1},
                       {"b1_unclamped", r.horse_race.b1_unclamped},
                       {"b1_clamped", r.horse_race.clamped},
                       {"se_b1", finite_or_null(r.horse_race.se_b1)},
                       {"t_stat", finite_or_null(r.horse_race.t_stat)},
                       {"n_obs", r.horse_race.n_obs},
                       {"horse_race_hac_lags", r.horse_race.hac_lags},
                       {"dm_statistic", r.dm.statistic},
                       {"dm_p_value", r.dm.p_value},
                       {"dm_loss", r.dm.loss},
                       {"dm_hac_lags", r.dm.hac_lags}});
    log("{}: b1 {:.3f} (t {:.2f}), DM p {:.4f}", name, r.horse_race.b1, r.horse_race.t_stat, r.dm.p_value);
  }
  write_file(out / "table1.csv", [&](std::ostream& o) { forecast::write_table1(o, results); });
  Json report;
  report["competitors"] = details;
  report["note"] =
      "b1 comes from OLS of (RV - C) on (1, P - C) and is clamped to [0, 1]; its t-statistic uses Newey-West "
      "standard errors (Bartlett, floor(n^(1/3)) lags) on the unclamped estimate. DM uses squared volatility "
      "errors and a one-sided p-value.";
  Json m = manifest("evaluate", cfg);
  Json inputs = Json::object();
  inputs["proposal"] = input_record(proposal_path);
  for (const auto& [name, path] : competitors) inputs[name] = input_record(path.string());
  m["inputs"] = inputs;
  report["manifest"] = m;
  write_json_file(out / "evaluation.json", report);
  return 0;
}

// --- backtest ----------------------------------------------------------------

Json backtest_defaults() {
  Json j;
  j["returns1"] = "";
  j["returns2"] = "";
  j["one_minute1"] = "";
  j["one_minute2"] = "";
  j["correlation"] = nullptr;
  j["forecast_dir1"] = "";
  j["forecast_dir2"] = "";
  j["models"] = std::vector<std::string>{"PROPOSAL", "SSV", "SV", "AR1-RV", "HAR", "GARCH", "GJR-GARCH"};
  j["eval_start"] = "";
  j["mode"] = "covariance";
  return j;
}

forecast::ForecastSeries aligned_forecasts(const std::string& dir, const std::string& model,
                                           std::span<const Timestamp> ts) {
  const auto path = forecast_file(dir, model);
  const auto values = lookup(by_time(forecast::load_forecasts(path)), ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!std::isfinite(values[i]) || !(values[i] > 0.0)) {
      fail(ErrorKind::Alignment, fmt::format("{}: no usable forecast at {}", path.string(), format_timestamp(ts[i])));
    }
  }
  return {model, std::vector<Timestamp>(ts.begin(), ts.end()), values};
}

int cmd_backtest(const Json& cfg, const fs::path& out, const Logger& log) {
  const auto models = get<std::vector<std::string>>(cfg, "models");
  if (models.empty()) fail(ErrorKind::Config, "no models requested");
  const auto dir1 = get_path(cfg, "forecast_dir1");
  const auto dir2 = get_path(cfg, "forecast_dir2");
  std::vector<std::string> names;
  for (const auto& m : models) {
    names.push_back(canonical_model(m));
    forecast_file(dir1, names.back());
    forecast_file(dir2, names.back());
  }
  const auto mode = portfolio::parse_co_moment(get<std::string>(cfg, "mode"));

  const auto r1_path = get_path(cfg, "returns1");
  const auto r2_path = get_path(cfg, "returns2");
  if (r1_path.empty() || r2_path.empty()) fail(ErrorKind::Config, "--returns1 and --returns2 are required");
  const auto r1_all = data::load_returns(r1_path);
  const auto r2_all = data::load_returns(r2_path);
  const auto start = get_time(cfg, "eval_start");
  std::map<Timestamp, double> r2_map;
  for (std::size_t i = 0; i < r2_all.size(); ++i) r2_map[r2_all.timestamps[i]] = r2_all.values[i];

  data::ReturnSeries r1, r2;
  r1.grid_step_minutes = r2.grid_step_minutes = r1_all.grid_step_minutes;
  for (std::size_t i = 0; i < r1_all.size(); ++i) {
    if (start && r1_all.timestamps[i] < *start) continue;
    const auto it = r2_map.find(r1_all.timestamps[i]);
    if (it == r2_map.end()) {
      fail(ErrorKind::Alignment, fmt::format("{} has no return at {}", r2_path, format_timestamp(r1_all.timestamps[i])));
    }
    r1.timestamps.push_back(r1_all.timestamps[i]);
    r1.values.push_back(r1_all.values[i]);
    r2.timestamps.push_back(it->first);
    r2.values.push_back(it->second);
  }
  if (r1.size() < 2) fail(ErrorKind::Length, "fewer than two out-of-sample returns");

  std::vector<double> corr;
  const auto m1 = get_path(cfg, "one_minute1");
  const auto m2 = get_path(cfg, "one_minute2");
  if (!m1.empty() && !m2.empty()) {
    corr = data::trailing_realized_correlation(data::load_returns(m1), data::load_returns(m2), r1.timestamps, 5,
                                               r1.grid_step_minutes);
  } else if (!cfg.at("correlation").is_null()) {
    corr.assign(r1.size(), get<double>(cfg, "correlation"));
  } else {
    fail(ErrorKind::Config, "the co-moment needs --one-minute1/--one-minute2 or --correlation");
  }

  std::vector<portfolio::PortfolioStats> stats;
  std::vector<std::string> files = {"table2.csv"};
  Json details = Json::array();
  for (const auto& name : names) {
    const auto f1 = aligned_forecasts(dir1, name, r1.timestamps);
    const auto f2 = aligned_forecasts(dir2, name, r1.timestamps);
    const auto bt = portfolio::backtest(r1, r2, f1, f2, corr, mode);
    stats.push_back(bt.stats);
    const auto file = fmt::format("allocations_{}.csv", name);
    write_file(out / file, [&](std::ostream& o) { portfolio::write_allocations(o, bt.steps); });
    files.push_back(file);
    std::size_t clamped = 0;
    for (const auto& s : bt.steps) clamped += s.w1 != s.w1_unclamped;
    details.push_back({{"model", name},
                       {"ann_mean", bt.stats.ann_mean},
                       {"ann_vol", bt.stats.ann_vol},
                       {"ann_sharpe", bt.stats.ann_sharpe},
                       {"sharpe_defined", bt.stats.sharpe_defined},
                       {"n_obs", bt.stats.n_obs},
                       {"clamped_steps", clamped}});
    log("{}: ann. mean {:.2f}, vol {:.2f}, Sharpe {:.2f}", name, bt.stats.ann_mean, bt.stats.ann_vol,
        bt.stats.ann_sharpe);
  }
  write_file(out / "table2.csv", [&](std::ostream& o) { portfolio::write_table2(o, names, stats); });
  Json m = manifest("backtest", cfg);
  m["co_moment"] = portfolio::to_string(mode);
  m["models"] = details;
  record_outputs(m, out, files);
  write_json_file(out / "backtest.json", m);
  return 0;
}

// --- report ------------------------------------------------------------------

Json report_defaults() {
  Json j;
  j["draws"] = "";
  j["calendar"] = "";
  j["volume"] = "";
  j["volume_step"] = 200.0;
  j["grid_step_minutes"] = 5;
  return j;
}

int cmd_report(const Json& cfg, const fs::path& out, const Logger& log) {
  const auto draws_path = get_path(cfg, "draws");
  if (draws_path.empty()) fail(ErrorKind::Dependency, "report needs --draws");
  const auto draws = mcmc::read_draws_csv(draws_path);
  const auto step = get<int>(cfg, "grid_step_minutes");

  Json level;
  std::vector<double> sigma, sigma_ann;
  for (const auto& p : draws.params) {
    sigma.push_back(std::exp(p.mu_h / 2.0));
    sigma_ann.push_back(model::annualize(sigma.back()));
  }
  auto summarize = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (const auto x : v) mean += x;
    mean /= static_cast<double>(v.size());
    return Json{{"mean", mean}, {"q05", mcmc::quantile(v, 0.05)}, {"q95", mcmc::quantile(v, 0.95)}};
  };
  level["variant"] = mcmc::to_string(draws.variant);
  level["sigma"] = summarize(sigma);
  level["sigma_annualized_percent"] = summarize(sigma_ann);
  for (const auto& s : mcmc::scalar_summaries(draws)) {
    level[s.name] = {{"mean", s.mean}, {"sd", s.sd}, {"q05", s.q05}, {"q95", s.q95}};
  }
  write_json_file(out / "level.json", level);
  log("baseline volatility {:.4f} ({:.1f}% annualized)", level["sigma"]["mean"].get<double>(),
      level["sigma_annualized_percent"]["mean"].get<double>());

  if (draws.variant != mcmc::Variant::Sv) {
    write_file(out / "seasonal.csv", [&](std::ostream& o) { mcmc::write_seasonal_csv(o, draws); });
  }
  if (draws.variant == mcmc::Variant::Full) {
    std::map<std::string, std::string> names;
    const auto cal = get_path(cfg, "calendar");
    if (!cal.empty()) names = event_names(data::load_calendar(cal));
    write_file(out / "inclusion_pi.csv", [&](std::ostream& o) {
      mcmc::write_inclusion_table(o, draws, mcmc::InclusionQuantity::Probability, names, step);
    });
    write_file(out / "inclusion_effect.csv", [&](std::ostream& o) {
      mcmc::write_inclusion_table(o, draws, mcmc::InclusionQuantity::Effect, names, step);
    });
  }

  const auto volume_path = get_path(cfg, "volume");
  if (!volume_path.empty()) {
    if (draws.variant == mcmc::Variant::Sv) {
      fail(ErrorKind::Dependency, "the volume regression needs a seasonal component (FULL or SSV draws)");
    }
    // S_k = a + b volume_k, S = posterior mean of exp(beta_k / 2).
    const auto table = csv::read_file(volume_path);
    const auto bin_col = table.column("bin");
    const auto vol_col = table.column("volume");
    std::vector<double> s_mean(model::kSeasonalBins, 0.0);
    for (const auto& p : draws.params) {
      for (int k = 0; k < model::kSeasonalBins; ++k) s_mean[static_cast<std::size_t>(k)] += std::exp(p.beta[k] / 2.0);
    }
    for (auto& s : s_mean) s /= static_cast<double>(draws.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(table.rows.size()), 2);
    Eigen::VectorXd y(X.rows());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double b = csv::parse_double(table.rows[r][bin_col], table, r);
      if (b < 0 || b >= model::kSeasonalBins || b != std::floor(b)) {
        fail(ErrorKind::Grid, fmt::format("{}:{}: bad bin {}", table.source, table.line_numbers[r], b));
      }
      X(static_cast<Eigen::Index>(r), 0) = 1.0;
      X(static_cast<Eigen::Index>(r), 1) = csv::parse_double(table.rows[r][vol_col], table, r);
      y(static_cast<Eigen::Index>(r)) = s_mean[static_cast<std::size_t>(b)];
    }
    const auto fit = baselines::ols(X, y);
    const double tss = (y.array() - y.mean()).square().sum();
    const double vstep = get<double>(cfg, "volume_step");
    Json reg;
    reg["intercept"] = fit.coef(0);
    reg["slope"] = fit.coef(1);
    reg["slope_se"] = fit.std_errors(1);
    reg["r_squared"] = tss > 0.0 ? 1.0 - fit.ssr / tss : 0.0;
    reg["n"] = X.rows();
    reg["volume_step"] = vstep;
    reg["baseline_volatility_change_percent"] = 100.0 * vstep * fit.coef(1);
    write_json_file(out / "volume_regression.json", reg);
    log("volume regression: R^2 {:.2f}, +{} volume -> {:+.1f}% baseline volatility", reg["r_squared"].get<double>(),
        vstep, reg["baseline_volatility_change_percent"].get<double>());
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian intraday FX volatility: estimation, forecasting and GMVP backtests", "fxvol"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");
  std::string out_dir;

  Command simulate(app, "simulate", "Simulate returns from the model", simulate_defaults());
  simulate.app->add_option("--out", out_dir, "Output directory")->required();
  simulate.option<std::size_t>("-n,--n", "n", "Number of five-minute returns");
  simulate.option<std::uint64_t>("--seed", "seed", "Random seed");
  simulate.option<std::string>("--start", "start", "First grid timestamp (UTC)");
  simulate.option<double>("--mu-h", "mu_h", "Log-variance level");
  simulate.option<double>("--phi", "phi", "SV persistence");
  simulate.option<double>("--sigma-x2", "sigma_x2", "SV innovation variance");
  simulate.option<double>("--seasonal-amplitude", "seasonal_amplitude", "Amplitude of the sinusoidal seasonal");
  simulate.option<std::size_t>("--n-events", "n_events", "Number of synthetic event types");
  simulate.option<std::size_t>("--releases", "releases_per_event", "Releases per event type");
  simulate.option<std::size_t>("--n-active", "n_active", "Event columns with a non-zero effect");
  simulate.option<double>("--alpha-min", "alpha_min", "Smallest active effect");
  simulate.option<double>("--alpha-max", "alpha_max", "Largest active effect");
  simulate.option<int>("--lags", "lags", "Lags per release");
  simulate.option<std::string>("--params", "params", "JSON with model parameters overriding the above");
  simulate.flag("--one-minute", "one_minute", true, "Also write one-minute returns and realized volatility");
  simulate.flag("--weekends", "skip_weekends", false, "Keep weekend grid points");

  Command estimate(app, "estimate", "Run the Gibbs sampler", estimate_defaults());
  estimate.app->add_option("--out", out_dir, "Output directory")->required();
  estimate.option<std::string>("--returns", "returns", "Returns CSV (timestamp,ret)");
  estimate.option<std::string>("--prices", "prices", "Prices CSV (timestamp,close)");
  estimate.option<std::string>("--calendar", "calendar", "Event calendar CSV");
  estimate.option<std::string>("--variant", "variant", "FULL, SSV or SV");
  estimate.option<std::size_t>("--n-iter", "n_iter", "Total sweeps");
  estimate.option<std::size_t>("--burn-in", "burn_in", "Discarded sweeps");
  estimate.option<std::size_t>("--thin", "thin", "Keep every k-th sweep after burn-in");
  estimate.option<std::uint64_t>("--seed", "seed", "Random seed");
  estimate.option<int>("--lags", "lags", "Lags per release");
  estimate.flag("--conditional-x1", "sigma_x2_initial_state", false,
                "Leave the stationary x_1 term out of the sigma_x2 update");
  const Json prior_defaults = config::to_json(model::PriorConfig{});
  for (const auto& [key, value] : prior_defaults.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    std::replace(flag.begin(), flag.end(), '.', '-');
    estimate.option<double>(flag, key, fmt::format("Prior hyperparameter (default {})", value.get<double>()));
  }

  Command fc(app, "forecast", "One-step volatility forecasts from a fitted model", forecast_defaults());
  fc.option<std::string>("--model", "model", "PROPOSAL, SSV, SV, AR1-RV, HAR, GARCH or GJR-GARCH");
  fc.option<std::string>("--returns", "returns", "Five-minute returns CSV");
  fc.option<std::string>("--prices", "prices", "Five-minute prices CSV");
  fc.option<std::string>("--one-minute", "one_minute", "One-minute returns CSV (for RV models)");
  fc.option<std::string>("--rv", "rv", "Realized volatility CSV (timestamp,rv)");
  fc.option<std::string>("--draws", "draws", "draws.csv from estimate");
  fc.option<std::string>("--calendar", "calendar", "Event calendar CSV (PROPOSAL)");
  fc.option<int>("--lags", "lags", "Lags per release");
  fc.option<std::string>("--train-end", "train_end", "Baselines are fitted on data before this time");
  fc.option<std::string>("-o,--output", "output", "Forecast CSV to write");
  fc.option<std::string>("--fit-output", "fit_output", "JSON with the fitted model");
  fc.flag("--no-correction", "lognormal_correction", false, "Plain plug-in forecast without the lognormal term");

  Command evaluate(app, "evaluate", "Horse-race regressions and Diebold-Mariano tests", evaluate_defaults());
  evaluate.app->add_option("--out", out_dir, "Output directory")->required();
  evaluate.option<std::string>("--rv", "rv", "Realized volatility CSV");
  evaluate.option<std::string>("--one-minute", "one_minute", "One-minute returns CSV");
  evaluate.option<std::string>("--forecast-dir", "forecast_dir", "Directory of <MODEL>.csv forecasts");
  evaluate.option<std::string>("--proposal", "proposal", "Proposal forecast CSV");
  evaluate.list_option("--models", "models", "Competitors (comma separated)");
  evaluate.option<std::string>("--eval-start", "eval_start", "First evaluated timestamp");
  evaluate.option<std::size_t>("--horizon", "horizon", "Forecast horizon in steps");

  Command backtest(app, "backtest", "Two-asset GMVP backtest", backtest_defaults());
  backtest.app->add_option("--out", out_dir, "Output directory")->required();
  backtest.option<std::string>("--returns1", "returns1", "Asset 1 five-minute returns");
  backtest.option<std::string>("--returns2", "returns2", "Asset 2 five-minute returns");
  backtest.option<std::string>("--one-minute1", "one_minute1", "Asset 1 one-minute returns");
  backtest.option<std::string>("--one-minute2", "one_minute2", "Asset 2 one-minute returns");
  backtest.option<double>("--correlation", "correlation", "Constant correlation instead of the realized one");
  backtest.option<std::string>("--forecast-dir1", "forecast_dir1", "Asset 1 forecasts");
  backtest.option<std::string>("--forecast-dir2", "forecast_dir2", "Asset 2 forecasts");
  backtest.list_option("--models", "models", "Models (comma separated)");
  backtest.option<std::string>("--eval-start", "eval_start", "First out-of-sample timestamp");
  backtest.option<std::string>("--mode", "mode", "covariance or correlation");

  Command report(app, "report", "Seasonal, level and inclusion summaries from draws", report_defaults());
  report.app->add_option("--out", out_dir, "Output directory")->required();
  report.option<std::string>("--draws", "draws", "draws.csv from estimate");
  report.option<std::string>("--calendar", "calendar", "Event calendar for event names");
  report.option<std::string>("--volume", "volume", "CSV with bin,volume");
  report.option<double>("--volume-step", "volume_step", "Volume change used to express the slope");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "fxvol: " << e.what() << '\n';
    return 1;
  }

  const Logger log{quiet};
  try {
    if (simulate.app->parsed()) return cmd_simulate(simulate.resolve(), prepare_out_dir(out_dir), log);
    if (estimate.app->parsed()) {
      const auto cfg = estimate.resolve();
      return cmd_estimate(cfg, prepare_out_dir(out_dir), log);
    }
    if (fc.app->parsed()) return cmd_forecast(fc.resolve(), log);
    if (evaluate.app->parsed()) {
      const auto cfg = evaluate.resolve();
      return cmd_evaluate(cfg, prepare_out_dir(out_dir), log);
    }
    if (backtest.app->parsed()) {
      const auto cfg = backtest.resolve();
      return cmd_backtest(cfg, prepare_out_dir(out_dir), log);
    }
    if (report.app->parsed()) {
      const auto cfg = report.resolve();
      return cmd_report(cfg, prepare_out_dir(out_dir), log);
    }
  } catch (const Error& e) {
    std::cerr << "fxvol: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "fxvol: io error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "fxvol: config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fxvol: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace fxvol::cli
