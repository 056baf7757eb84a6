#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace prefkit {

struct FitDiagnostics {
  double final_loss = 0.0;
  double gradient_norm = 0.0;  // infinity norm at the final iterate
  int iterations = 0;
  bool converged = false;
  bool connected = true;       // comparison graph connectivity
  int component_count = 1;
};

// Latent Gaussian utilities: option o has utility ~ N(mu[o], sigma[o]^2).
// Preference probabilities derive from the CDF of the standardized mean
// difference; mu is anchored to mean zero per connected component after
// fitting (location is a pure gauge).
class UtilityModel {
 public:
  UtilityModel() = default;
  UtilityModel(std::vector<std::string> options, std::vector<double> mu,
               std::vector<double> sigma, FitDiagnostics diagnostics = {});

  const std::vector<std::string>& options() const { return options_; }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& sigma() const { return sigma_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  std::size_t size() const { return options_.size(); }

  bool contains(const std::string& option) const;
  std::size_t index_of(const std::string& option) const;  // throws DataError

  nlohmann::ordered_json to_json() const;
  static UtilityModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static UtilityModel load(const std::string& path);

 private:
  std::vector<std::string> options_;
  std::vector<double> mu_;
  std::vector<double> sigma_;
  FitDiagnostics diagnostics_;
  std::unordered_map<std::string, std::size_t> index_;
};

// P(x preferred over y) = Phi((mu_x - mu_y) / sqrt(sigma_x^2 + sigma_y^2)).
// Exactly antisymmetric: predict_prob(m,x,y) + predict_prob(m,y,x) == 1.
double predict_prob(const UtilityModel& model, const std::string& x,
                    const std::string& y);
double predict_prob_by_index(const UtilityModel& model, std::size_t x,
                             std::size_t y);

}  // namespace prefkit
