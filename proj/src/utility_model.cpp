#include "prefkit/utility_model.hpp"

#include <cmath>
#include <fstream>

#include "prefkit/common.hpp"
#include "prefkit/normal.hpp"

namespace prefkit {

UtilityModel::UtilityModel(std::vector<std::string> options,
                           std::vector<double> mu, std::vector<double> sigma,
                           FitDiagnostics diagnostics)
    : options_(std::move(options)),
      mu_(std::move(mu)),
      sigma_(std::move(sigma)),
      diagnostics_(diagnostics) {
  if (mu_.size() != options_.size() || sigma_.size() != options_.size())
    throw DataError("UtilityModel: options/mu/sigma size mismatch");
  for (double s : sigma_)
    if (!(s > 0.0)) throw DataError("UtilityModel: sigma must be positive");
  index_.reserve(options_.size());
  for (std::size_t i = 0; i < options_.size(); ++i) {
    if (!index_.emplace(options_[i], i).second)
      throw DataError("UtilityModel: duplicate option '" + options_[i] + "'");
  }
}

bool UtilityModel::contains(const std::string& option) const {
  return index_.count(option) != 0;
}

std::size_t UtilityModel::index_of(const std::string& option) const {
  auto it = index_.find(option);
  if (it == index_.end())
    throw DataError("UtilityModel: unknown option '" + option + "'");
  return it->second;
}

nlohmann::ordered_json UtilityModel::to_json() const {
  nlohmann::ordered_json j;
  j["options"] = options_;
  j["mu"] = mu_;
  j["sigma"] = sigma_;
  j["diagnostics"] = {{"final_loss", diagnostics_.final_loss},
                      {"gradient_norm", diagnostics_.gradient_norm},
                      {"iterations", diagnostics_.iterations},
                      {"converged", diagnostics_.converged},
                      {"connected", diagnostics_.connected},
                      {"component_count", diagnostics_.component_count}};
  return j;
}

UtilityModel UtilityModel::from_json(const nlohmann::json& j) {
  if (!j.contains("options") || !j.contains("mu") || !j.contains("sigma"))
    throw DataError("UtilityModel: JSON needs options, mu, sigma");
  FitDiagnostics d;
  if (j.contains("diagnostics")) {
    const auto& dj = j["diagnostics"];
    d.final_loss = dj.value("final_loss", 0.0);
    d.gradient_norm = dj.value("gradient_norm", 0.0);
    d.iterations = dj.value("iterations", 0);
    d.converged = dj.value("converged", false);
    d.connected = dj.value("connected", true);
    d.component_count = dj.value("component_count", 1);
  }
  return UtilityModel(j["options"].get<std::vector<std::string>>(),
                      j["mu"].get<std::vector<double>>(),
                      j["sigma"].get<std::vector<double>>(), d);
}

void UtilityModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file: " + path);
  out << to_json().dump(2) << '\n';
  if (!out) throw Error("failed while writing model file: " + path);
}

UtilityModel UtilityModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("model file " + path + ": invalid JSON: " + e.what());
  }
  return from_json(j);
}

double predict_prob_by_index(const UtilityModel& model, std::size_t x,
                             std::size_t y) {
  if (x == y) throw DataError("predict_prob: x and y must differ");
  const double dmu = model.mu()[x] - model.mu()[y];
  const double sx = model.sigma()[x];
  const double sy = model.sigma()[y];
  const double z = dmu / std::sqrt(sx * sx + sy * sy);
  return std_normal_cdf(z);
}

double predict_prob(const UtilityModel& model, const std::string& x,
                    const std::string& y) {
  return predict_prob_by_index(model, model.index_of(x), model.index_of(y));
}

}  // namespace prefkit
