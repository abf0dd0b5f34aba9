#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>

#include "fxvol/mcmc.hpp"

namespace fxvol::mcmc {

/// One row per retained sweep. Columns: iteration, log_likelihood, mu_h, phi,
/// sigma_x2, then gamma and sigma_alpha2 (FULL), beta_0..beta_287 (FULL,
/// SSV), alpha[<label>] and pi[<label>] (FULL).
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);

/// Inverse of write_draws_csv; the variant is inferred from the columns.
PosteriorDraws read_draws_csv(std::istream& in, const std::string& source);
PosteriorDraws read_draws_csv(const std::filesystem::path& path);

/// `parameter,mean,sd,q05,q95` for every stored parameter; alpha and pi
/// rows are included for FULL only.
void write_summary_csv(std::ostream& out, const PosteriorDraws& draws);

enum class InclusionQuantity { Probability, Effect };

/// Rows per event, one column per lag ("5 Min", "10 Min", ...), holding the
/// mean inclusion indicator or the mean of exp(alpha / 2).
void write_inclusion_table(std::ostream& out, const PosteriorDraws& draws, InclusionQuantity quantity,
                           const std::map<std::string, std::string>& event_names = {}, int grid_step_minutes = 5);

/// `bin,time,beta_mean,S_mean,S_q05,S_q95` with S = exp(beta / 2).
void write_seasonal_csv(std::ostream& out, const PosteriorDraws& draws);

/// `timestamp,x_mean,x_sd,level_sv` where level_sv = exp(mu_h/2) exp(x_mean/2)
/// at the posterior mean of mu_h.
void write_latent_csv(std::ostream& out, std::span<const Timestamp> timestamps, const PosteriorDraws& draws);

}  // namespace fxvol::mcmc
