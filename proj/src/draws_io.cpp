#include "fxvol/draws_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "fxvol/csv.hpp"
#include "fxvol/error.hpp"

namespace fxvol::mcmc {
namespace {

bool has_events(Variant v) { return v == Variant::Full; }
bool has_seasonal(Variant v) { return v != Variant::Sv; }

data::ColumnLabel parse_label(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) return {text, 1};
  try {
    return {text.substr(0, colon), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    return {text, 1};
  }
}

std::string label_of(const PosteriorDraws& draws, std::size_t j) {
  return j < draws.labels.size() ? draws.labels[j].to_string() : std::to_string(j);
}

}  // namespace

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
  const bool events = has_events(draws.variant);
  const bool seasonal = has_seasonal(draws.variant);
  const std::size_t m = draws.params.empty() ? draws.labels.size() : draws.params.front().alpha.size();
  std::vector<std::string> header{"iteration", "log_likelihood", "mu_h", "phi", "sigma_x2"};
  if (events) {
    header.emplace_back("gamma");
    header.emplace_back("sigma_alpha2");
  }
  if (seasonal) {
    for (int k = 0; k < model::kSeasonalBins; ++k) header.push_back(fmt::format("beta_{}", k));
  }
  if (events) {
    for (std::size_t j = 0; j < m; ++j) header.push_back(fmt::format("alpha[{}]", label_of(draws, j)));
    for (std::size_t j = 0; j < m; ++j) header.push_back(fmt::format("pi[{}]", label_of(draws, j)));
  }
  csv::write_row(out, header);

  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& p = draws.params[i];
    std::string line = fmt::format("{},{},{},{},{}", draws.iterations[i], draws.log_likelihood[i], p.mu_h, p.phi,
                                   p.sigma_x2);
    if (events) line += fmt::format(",{},{}", p.gamma, p.sigma_alpha2);
    if (seasonal) {
      for (const auto b : p.beta) line += fmt::format(",{}", b);
    }
    if (events) {
      for (const auto a : p.alpha) line += fmt::format(",{}", a);
      for (const auto s : p.pi) line += fmt::format(",{}", static_cast<int>(s));
    }
    out << line << '\n';
  }
}

PosteriorDraws read_draws_csv(std::istream& in, const std::string& source) {
  const auto table = csv::read(in, source);
  PosteriorDraws draws;
  const bool events = table.has_column("gamma");
  const bool seasonal = table.has_column("beta_0");
  draws.variant = events ? Variant::Full : (seasonal ? Variant::Ssv : Variant::Sv);

  std::vector<std::size_t> alpha_cols, pi_cols, beta_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& h = table.header[c];
    if (h.starts_with("alpha[") && h.ends_with("]")) {
      alpha_cols.push_back(c);
      draws.labels.push_back(parse_label(h.substr(6, h.size() - 7)));
    } else if (h.starts_with("pi[")) {
      pi_cols.push_back(c);
    } else if (h.starts_with("beta_")) {
      beta_cols.push_back(c);
    }
  }
  if (alpha_cols.size() != pi_cols.size()) fail(ErrorKind::Parse, fmt::format("{}: alpha/pi column mismatch", source));
  if (seasonal && beta_cols.size() != static_cast<std::size_t>(model::kSeasonalBins)) {
    fail(ErrorKind::Parse, fmt::format("{}: expected {} seasonal columns", source, model::kSeasonalBins));
  }
  const auto c_iter = table.column("iteration");
  const auto c_ll = table.column("log_likelihood");
  const auto c_mu = table.column("mu_h");
  const auto c_phi = table.column("phi");
  const auto c_sx = table.column("sigma_x2");

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto num = [&](std::size_t c) { return csv::parse_double(table.rows[r][c], table, r); };
    ModelParams p;
    p.mu_h = num(c_mu);
    p.phi = num(c_phi);
    p.sigma_x2 = num(c_sx);
    if (events) {
      p.gamma = num(table.column("gamma"));
      p.sigma_alpha2 = num(table.column("sigma_alpha2"));
    }
    for (std::size_t k = 0; k < beta_cols.size(); ++k) p.beta[k] = num(beta_cols[k]);
    p.alpha.resize(alpha_cols.size());
    p.pi.resize(pi_cols.size());
    for (std::size_t j = 0; j < alpha_cols.size(); ++j) {
      p.alpha[j] = num(alpha_cols[j]);
      p.pi[j] = num(pi_cols[j]) != 0.0 ? 1 : 0;
    }
    draws.iterations.push_back(static_cast<std::size_t>(num(c_iter)));
    draws.log_likelihood.push_back(num(c_ll));
    draws.params.push_back(std::move(p));
  }
  return draws;
}

PosteriorDraws read_draws_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  return read_draws_csv(in, path.string());
}

namespace {

struct Moments {
  double mean, sd, q05, q95;
};

Moments moments(std::vector<double> v) {
  double mean = 0.0;
  for (const auto a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const auto a : v) ss += (a - mean) * (a - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  const double q05 = quantile(v, 0.05);
  const double q95 = quantile(std::move(v), 0.95);
  return {mean, sd, q05, q95};
}

template <typename Getter>
void summary_row(std::ostream& out, const PosteriorDraws& draws, const std::string& name, Getter get) {
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& p : draws.params) v.push_back(get(p));
  const auto m = moments(std::move(v));
  csv::write_row(out, {name, csv::format_double(m.mean), csv::format_double(m.sd), csv::format_double(m.q05),
                       csv::format_double(m.q95)});
}

}  // namespace

void write_summary_csv(std::ostream& out, const PosteriorDraws& draws) {
  if (draws.params.empty()) fail(ErrorKind::Length, "no retained draws to summarize");
  out << "parameter,mean,sd,q05,q95\n";
  summary_row(out, draws, "mu_h", [](const ModelParams& p) { return p.mu_h; });
  summary_row(out, draws, "phi", [](const ModelParams& p) { return p.phi; });
  summary_row(out, draws, "sigma_x2", [](const ModelParams& p) { return p.sigma_x2; });
  summary_row(out, draws, "sigma", [](const ModelParams& p) { return std::exp(p.mu_h / 2.0); });
  summary_row(out, draws, "sigma_annualized", [](const ModelParams& p) { return model::annualize(std::exp(p.mu_h / 2.0)); });
  if (has_events(draws.variant)) {
    summary_row(out, draws, "gamma", [](const ModelParams& p) { return p.gamma; });
    summary_row(out, draws, "sigma_alpha2", [](const ModelParams& p) { return p.sigma_alpha2; });
  }
  if (has_seasonal(draws.variant)) {
    for (std::size_t k = 0; k < static_cast<std::size_t>(model::kSeasonalBins); ++k) {
      summary_row(out, draws, fmt::format("beta_{}", k), [k](const ModelParams& p) { return p.beta[k]; });
    }
  }
  if (has_events(draws.variant)) {
    const std::size_t m = draws.params.front().alpha.size();
    for (std::size_t j = 0; j < m; ++j) {
      summary_row(out, draws, fmt::format("alpha[{}]", label_of(draws, j)),
                  [j](const ModelParams& p) { return p.alpha[j]; });
    }
    for (std::size_t j = 0; j < m; ++j) {
      summary_row(out, draws, fmt::format("pi[{}]", label_of(draws, j)),
                  [j](const ModelParams& p) { return static_cast<double>(p.pi[j]); });
    }
    for (std::size_t j = 0; j < m; ++j) {
      summary_row(out, draws, fmt::format("exp_alpha_half[{}]", label_of(draws, j)),
                  [j](const ModelParams& p) { return std::exp(p.alpha[j] / 2.0); });
    }
  }
}

void write_inclusion_table(std::ostream& out, const PosteriorDraws& draws, InclusionQuantity quantity,
                           const std::map<std::string, std::string>& event_names, int grid_step_minutes) {
  const auto summary = inclusion_summary(draws);
  std::vector<std::string> events;
  std::unordered_map<std::string, std::size_t> row_of;
  int max_lag = 0;
  for (const auto& s : summary) {
    if (row_of.emplace(s.label.event_id, events.size()).second) events.push_back(s.label.event_id);
    max_lag = std::max(max_lag, s.label.lag);
  }
  std::vector<std::vector<std::string>> cells(events.size(), std::vector<std::string>(static_cast<std::size_t>(max_lag)));
  for (const auto& s : summary) {
    const double v = quantity == InclusionQuantity::Probability ? s.mean_pi : s.mean_effect;
    cells[row_of[s.label.event_id]][static_cast<std::size_t>(s.label.lag - 1)] = fmt::format("{:.2f}", v);
  }
  std::vector<std::string> header{"Event Name"};
  for (int lag = 1; lag <= max_lag; ++lag) header.push_back(fmt::format("{} Min", lag * grid_step_minutes));
  csv::write_row(out, header);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto it = event_names.find(events[i]);
    std::vector<std::string> row{it != event_names.end() ? it->second : events[i]};
    row.insert(row.end(), cells[i].begin(), cells[i].end());
    csv::write_row(out, row);
  }
}

void write_seasonal_csv(std::ostream& out, const PosteriorDraws& draws) {
  if (draws.params.empty()) fail(ErrorKind::Length, "no retained draws");
  out << "bin,time,beta_mean,S_mean,S_q05,S_q95\n";
  for (std::size_t k = 0; k < static_cast<std::size_t>(model::kSeasonalBins); ++k) {
    std::vector<double> s;
    double beta_sum = 0.0;
    for (const auto& p : draws.params) {
      beta_sum += p.beta[k];
      s.push_back(std::exp(p.beta[k] / 2.0));
    }
    double s_mean = 0.0;
    for (const auto v : s) s_mean += v;
    s_mean /= static_cast<double>(s.size());
    const int minutes = static_cast<int>(k) * 5;
    out << fmt::format("{},{:02d}:{:02d},{},{},{},{}\n", k, minutes / 60, minutes % 60,
                       beta_sum / static_cast<double>(draws.size()), s_mean, quantile(s, 0.05), quantile(s, 0.95));
  }
}

void write_latent_csv(std::ostream& out, std::span<const Timestamp> timestamps, const PosteriorDraws& draws) {
  if (timestamps.size() != draws.x_mean.size()) fail(ErrorKind::Alignment, "latent path and timestamps differ in length");
  const double mu = posterior_mean(draws).mu_h;
  out << "timestamp,x_mean,x_sd,level_sv\n";
  for (std::size_t t = 0; t < timestamps.size(); ++t) {
    out << fmt::format("{},{},{},{}\n", format_timestamp(timestamps[t]), draws.x_mean[t], draws.x_sd[t],
                       std::exp(mu / 2.0) * std::exp(draws.x_mean[t] / 2.0));
  }
}

}  // namespace fxvol::mcmc
