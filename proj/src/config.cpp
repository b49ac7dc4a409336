#include "mlgibbs/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace mlgibbs {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ConfigError(prefix + item.key(), "unknown field");
  }
}

double number(const json& obj, const std::string& key, const std::string& field) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(field, "must be a number");
  return v.get<double>();
}

double positive(const json& obj, const std::string& key, const std::string& field) {
  const double v = number(obj, key, field);
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(field, "must be a positive finite number");
  return v;
}

std::optional<double> optional_positive(const json& obj, const std::string& key) {
  if (!obj.contains(key)) return std::nullopt;
  return positive(obj, key, key);
}

std::uint64_t unsigned_integer(const json& obj, const std::string& key, const std::string& field) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(field, "must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string_field(const json& obj, const std::string& key, const std::string& field) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(field, "must be a string");
  return v.get<std::string>();
}

PotentialConfig parse_potential(const json& obj) {
  if (!obj.is_object()) throw ConfigError("potential", "must be an object");
  reject_unknown(obj, {"name", "dim", "p", "scale", "center", "penalty_alpha"}, "potential.");
  PotentialConfig pc;
  if (!obj.contains("name")) throw ConfigError("potential.name", "required");
  pc.name = string_field(obj, "name", "potential.name");
  if (obj.contains("dim")) {
    const std::uint64_t d = unsigned_integer(obj, "dim", "potential.dim");
    if (d == 0 || d > 1'000'000) throw ConfigError("potential.dim", "must be a positive integer");
    pc.dim = static_cast<int>(d);
  }
  if (obj.contains("penalty_alpha")) pc.penalty_alpha = positive(obj, "penalty_alpha", "potential.penalty_alpha");
  if (pc.name == "quadratic") {
    if (obj.contains("p")) throw ConfigError("potential.p", "not a parameter of the quadratic potential");
    pc.scale = obj.contains("scale") ? positive(obj, "scale", "potential.scale") : 1.0;
    if (obj.contains("center")) {
      const json& c = obj.at("center");
      if (!c.is_array()) throw ConfigError("potential.center", "must be an array of numbers");
      for (const auto& v : c) {
        if (!v.is_number()) throw ConfigError("potential.center", "must be an array of numbers");
        pc.center.push_back(v.get<double>());
      }
      if (static_cast<int>(pc.center.size()) != pc.dim) {
        throw ConfigError("potential.center", "length must equal potential.dim");
      }
    } else {
      pc.center.assign(static_cast<std::size_t>(pc.dim), 0.0);
    }
  } else if (pc.name == "power") {
    if (obj.contains("scale") || obj.contains("center")) {
      throw ConfigError("potential", "scale/center are not parameters of the power potential");
    }
    if (!obj.contains("p")) throw ConfigError("potential.p", "required for the power potential");
    pc.p = number(obj, "p", "potential.p");
    if (!(*pc.p > 0.5 && *pc.p <= 1)) throw ConfigError("potential.p", "must lie in (1/2, 1]");
  } else {
    throw ConfigError("potential.name", "unknown potential '" + pc.name + "' (expected quadratic or power)");
  }
  return pc;
}

Method parse_method(const std::string& text) {
  if (text == "penalized") return Method::penalized;
  if (text == "weak_i") return Method::weak_i;
  if (text == "weak_ii") return Method::weak_ii;
  if (text == "single_level") return Method::single_level;
  throw ConfigError("method", "unknown method '" + text + "'");
}

}  // namespace

const char* to_string(Method method) {
  switch (method) {
    case Method::penalized: return "penalized";
    case Method::weak_i: return "weak_i";
    case Method::weak_ii: return "weak_ii";
    case Method::single_level: return "single_level";
  }
  return "unknown";
}

ObservableSpec ObservableSpec::parse(const std::string& text) {
  ObservableSpec spec;
  spec.text = text;
  if (text == "norm") {
    spec.kind = Kind::norm;
  } else if (text == "norm2") {
    spec.kind = Kind::norm2;
  } else if (text.rfind("coord:", 0) == 0) {
    spec.kind = Kind::coord;
    const std::string idx = text.substr(6);
    if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("f", "coordinate index must be a nonnegative integer");
    }
    spec.index = std::stoi(idx);
  } else if (text.rfind("const:", 0) == 0) {
    spec.kind = Kind::constant;
    try {
      std::size_t used = 0;
      spec.constant = std::stod(text.substr(6), &used);
      if (used != text.size() - 6) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("f", "constant observable needs a number, e.g. const:1.5");
    }
  } else {
    throw ConfigError("f", "unsupported observable '" + text + "' (custom observables are not supported)");
  }
  return spec;
}

Observable ObservableSpec::function() const {
  switch (kind) {
    case Kind::coord: {
      const Eigen::Index i = index;
      return [i](const VectorXd& x) { return x(i); };
    }
    case Kind::norm: return [](const VectorXd& x) { return x.norm(); };
    case Kind::norm2: return [](const VectorXd& x) { return x.squaredNorm(); };
    case Kind::constant: {
      const double c = constant;
      return [c](const VectorXd&) { return c; };
    }
  }
  throw ConfigError("f", "unsupported observable");
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config", "top level must be a JSON object");
  reject_unknown(doc,
                 {"potential", "sigma", "epsilon", "method", "delta", "rho", "c_r", "tau", "gamma0", "statement_mode",
                  "f", "replicates", "seed", "safety_T_multiplier", "epsilons"},
                 "");
  ExperimentConfig cfg;
  if (!doc.contains("potential")) throw ConfigError("potential", "required");
  cfg.potential = parse_potential(doc.at("potential"));
  if (doc.contains("sigma")) cfg.sigma = positive(doc, "sigma", "sigma");
  if (!doc.contains("epsilon")) throw ConfigError("epsilon", "required");
  cfg.epsilon = positive(doc, "epsilon", "epsilon");
  if (!doc.contains("method")) throw ConfigError("method", "required");
  cfg.method = parse_method(string_field(doc, "method", "method"));
  cfg.delta = optional_positive(doc, "delta");
  if (cfg.delta && *cfg.delta > 0.25) throw ConfigError("delta", "must lie in (0, 1/4]");
  cfg.rho = optional_positive(doc, "rho");
  if (cfg.rho && *cfg.rho >= 1) throw ConfigError("rho", "must lie in (0, 1)");
  cfg.c_r = optional_positive(doc, "c_r");
  if (doc.contains("tau")) {
    const double tau = number(doc, "tau", "tau");
    if (!(tau >= 0)) throw ConfigError("tau", "must be nonnegative");
    cfg.tau = tau;
  }
  cfg.gamma0 = optional_positive(doc, "gamma0");
  if (doc.contains("statement_mode")) {
    if (!doc.at("statement_mode").is_boolean()) throw ConfigError("statement_mode", "must be a boolean");
    cfg.statement_mode = doc.at("statement_mode").get<bool>();
  }
  if (doc.contains("f")) cfg.f = ObservableSpec::parse(string_field(doc, "f", "f"));
  if (cfg.f.kind == ObservableSpec::Kind::coord && cfg.f.index >= cfg.potential.dim) {
    throw ConfigError("f", "coordinate index out of range for potential.dim");
  }
  if (doc.contains("replicates")) {
    cfg.replicates = unsigned_integer(doc, "replicates", "replicates");
    if (cfg.replicates == 0) throw ConfigError("replicates", "must be positive");
  }
  if (doc.contains("seed")) cfg.seed = unsigned_integer(doc, "seed", "seed");
  if (doc.contains("safety_T_multiplier")) {
    cfg.safety_T_multiplier = positive(doc, "safety_T_multiplier", "safety_T_multiplier");
  }
  if (doc.contains("epsilons")) {
    const json& e = doc.at("epsilons");
    if (!e.is_array()) throw ConfigError("epsilons", "must be an array of positive numbers");
    for (const auto& v : e) {
      if (!v.is_number() || !(v.get<double>() > 0)) throw ConfigError("epsilons", "must be an array of positive numbers");
      cfg.epsilons.push_back(v.get<double>());
    }
  }
  if (cfg.potential.penalty_alpha && cfg.method != Method::penalized) {
    throw ConfigError("potential.penalty_alpha", "only meaningful with method penalized");
  }
  if ((cfg.method == Method::weak_i || cfg.method == Method::weak_ii) && cfg.potential.name != "power") {
    throw ConfigError("c_lower", "method " + std::string(to_string(cfg.method)) +
                                     " needs a parametric weak-convexity profile (c_lower, r); potential '" +
                                     cfg.potential.name + "' does not provide one");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

PotentialModel build_potential(const PotentialConfig& config) {
  if (config.name == "quadratic") {
    const VectorXd center = Eigen::Map<const VectorXd>(config.center.data(), static_cast<Eigen::Index>(config.center.size()));
    return make_quadratic<double>(config.dim, center, config.scale.value_or(1.0));
  }
  if (config.name == "power") return make_power<double>(config.dim, *config.p);
  throw ConfigError("potential.name", "unknown potential '" + config.name + "'");
}

}  // namespace mlgibbs
