#include "fxvol/config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "fxvol/error.hpp"

namespace fxvol::config {
namespace {

template <typename T>
void read_key(const Json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, fmt::format("key '{}': {}", key, e.what()));
  }
}

}  // namespace

Json to_json(const model::ModelParams& p) {
  Json j;
  j["mu_h"] = p.mu_h;
  j["phi"] = p.phi;
  j["sigma_x2"] = p.sigma_x2;
  j["beta"] = p.beta;
  j["alpha"] = p.alpha;
  std::vector<int> pi(p.pi.begin(), p.pi.end());
  j["pi"] = pi;
  j["gamma"] = p.gamma;
  j["sigma_alpha2"] = p.sigma_alpha2;
  return j;
}

void apply(const Json& j, model::ModelParams& p) {
  if (!j.is_object()) fail(ErrorKind::Config, "model parameters must be a JSON object");
  read_key(j, "mu_h", p.mu_h);
  read_key(j, "phi", p.phi);
  read_key(j, "sigma_x2", p.sigma_x2);
  read_key(j, "beta", p.beta);
  read_key(j, "alpha", p.alpha);
  if (j.contains("pi")) {
    std::vector<int> pi;
    read_key(j, "pi", pi);
    p.pi.assign(pi.size(), 0);
    for (std::size_t i = 0; i < pi.size(); ++i) {
      if (pi[i] != 0 && pi[i] != 1) fail(ErrorKind::Config, fmt::format("pi[{}] must be 0 or 1", i));
      p.pi[i] = static_cast<std::uint8_t>(pi[i]);
    }
  }
  read_key(j, "gamma", p.gamma);
  read_key(j, "sigma_alpha2", p.sigma_alpha2);
}

model::ModelParams params_from_json(const Json& j) {
  model::ModelParams p;
  apply(j, p);
  return p;
}

Json to_json(const model::PriorConfig& p) {
  Json j;
  j["prior.coef_mean"] = p.coef_mean;
  j["prior.coef_var"] = p.coef_var;
  j["prior.phi_mean"] = p.phi_mean;
  j["prior.phi_var"] = p.phi_var;
  j["prior.ig_x_shape"] = p.ig_x_shape;
  j["prior.ig_x_scale"] = p.ig_x_scale;
  j["prior.ig_a_shape"] = p.ig_a_shape;
  j["prior.ig_a_scale"] = p.ig_a_scale;
  j["prior.gamma_a"] = p.gamma_a;
  j["prior.gamma_b"] = p.gamma_b;
  return j;
}

void apply(const Json& j, model::PriorConfig& p) {
  if (!j.is_object()) fail(ErrorKind::Config, "prior configuration must be a JSON object");
  read_key(j, "prior.coef_mean", p.coef_mean);
  read_key(j, "prior.coef_var", p.coef_var);
  read_key(j, "prior.phi_mean", p.phi_mean);
  read_key(j, "prior.phi_var", p.phi_var);
  read_key(j, "prior.ig_x_shape", p.ig_x_shape);
  read_key(j, "prior.ig_x_scale", p.ig_x_scale);
  read_key(j, "prior.ig_a_shape", p.ig_a_shape);
  read_key(j, "prior.ig_a_scale", p.ig_a_scale);
  read_key(j, "prior.gamma_a", p.gamma_a);
  read_key(j, "prior.gamma_b", p.gamma_b);
}

model::PriorConfig prior_from_json(const Json& j) {
  model::PriorConfig p;
  apply(j, p);
  return p;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
}

}  // namespace fxvol::config
