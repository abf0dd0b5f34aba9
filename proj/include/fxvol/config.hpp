#pragma once

#include <filesystem>

#include <json.hpp>

#include "fxvol/model.hpp"

namespace fxvol::config {

using Json = nlohmann::ordered_json;

/// Flat keys: mu_h, phi, sigma_x2, beta, alpha, pi, gamma, sigma_alpha2.
Json to_json(const model::ModelParams& params);
/// Missing keys keep the values already in `params`.
void apply(const Json& j, model::ModelParams& params);
model::ModelParams params_from_json(const Json& j);

/// Flat keys prefixed with `prior.`.
Json to_json(const model::PriorConfig& prior);
void apply(const Json& j, model::PriorConfig& prior);
model::PriorConfig prior_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace fxvol::config
