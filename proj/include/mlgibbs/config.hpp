#ifndef MLGIBBS_CONFIG_HPP
#define MLGIBBS_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlgibbs/errors.hpp"
#include "mlgibbs/estimator.hpp"
#include "mlgibbs/potentials.hpp"

namespace mlgibbs {

/// Invalid experiment configuration; `field` names the offending key.
class ConfigError : public InvalidParameter {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidParameter(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Method { penalized, weak_i, weak_ii, single_level };

const char* to_string(Method method);

struct PotentialConfig {
  std::string name;  // "quadratic" or "power"
  int dim = 1;
  std::optional<double> p;
  std::optional<double> scale;
  std::vector<double> center;
  std::optional<double> penalty_alpha;
};

/// Named observable: "coord:k" (0-based), "norm", "norm2", or the test
/// observable "const:c".
struct ObservableSpec {
  enum class Kind { coord, norm, norm2, constant };
  Kind kind = Kind::coord;
  int index = 0;
  double constant = 0;
  std::string text = "coord:0";

  static ObservableSpec parse(const std::string& text);
  Observable function() const;
};

struct ExperimentConfig {
  PotentialConfig potential;
  double sigma = 1;
  double epsilon = 0.1;
  Method method = Method::penalized;
  std::optional<double> delta;
  std::optional<double> rho;
  std::optional<double> c_r;
  std::optional<double> tau;
  std::optional<double> gamma0;
  bool statement_mode = false;
  ObservableSpec f;
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  double safety_T_multiplier = 1;
  std::vector<double> epsilons;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// The unpenalized potential described by the config.
PotentialModel build_potential(const PotentialConfig& config);

}  // namespace mlgibbs

#endif  // MLGIBBS_CONFIG_HPP
