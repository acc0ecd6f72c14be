#include "kramers/config.hpp"

#include <set>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/models.hpp"

namespace kramers {

namespace {

class ParamReader {
 public:
  ParamReader(const std::string& model, const nlohmann::json& params) : model_(model), params_(params) {
    if (!params_.is_object()) throw ConfigError(model_ + ": params must be a JSON object");
  }

  void read(const char* key, double& target) {
    known_.insert(key);
    if (!params_.contains(key)) return;
    const auto& v = params_.at(key);
    if (!v.is_number()) throw ConfigError(model_ + ": parameter '" + key + "' must be a number");
    target = v.get<double>();
  }

  void read(const char* key, int& target) {
    known_.insert(key);
    if (!params_.contains(key)) return;
    const auto& v = params_.at(key);
    if (!v.is_number_integer()) throw ConfigError(model_ + ": parameter '" + key + "' must be an integer");
    target = v.get<int>();
  }

  void finish() const {
    for (const auto& [key, value] : params_.items()) {
      if (!known_.contains(key)) {
        std::ostringstream os;
        os << model_ << ": unknown parameter '" << key << "' (known:";
        for (const auto& k : known_) os << ' ' << k;
        os << ')';
        throw ConfigError(os.str());
      }
    }
  }

 private:
  std::string model_;
  const nlohmann::json& params_;
  std::set<std::string> known_;
};

}  // namespace

std::vector<std::string> builtin_model_names() {
  return {"constant", "wall-gravity", "dlvo-pair", "rotational-pore"};
}

Model make_model(const std::string& name, const nlohmann::json& params) {
  ParamReader r(name, params);
  if (name == "wall-gravity") {
    WallGravityParams p;
    r.read("a", p.a);
    r.read("b", p.b);
    r.read("B", p.B);
    r.read("kappa", p.kappa);
    r.read("lambda", p.lambda);
    r.read("G_eff", p.G_eff);
    r.read("kBT", p.kBT);
    r.read("D_max", p.D_max);
    r.finish();
    return wall_gravity_model(p);
  }
  if (name == "dlvo-pair") {
    DlvoPairParams p;
    r.read("k_spring", p.k_spring);
    r.read("c", p.c);
    r.read("l", p.l);
    r.read("kBT", p.kBT);
    r.read("D_SE", p.D_SE);
    r.read("alpha", p.alpha);
    r.finish();
    return dlvo_pair_model(p);
  }
  if (name == "rotational-pore") {
    RotationalPoreParams p;
    r.read("C", p.C);
    r.read("B", p.B);
    r.read("kappa", p.kappa);
    r.read("Omega", p.Omega);
    r.read("kBT", p.kBT);
    r.read("D0", p.D0);
    r.read("beta", p.beta);
    r.finish();
    return rotational_pore_model(p);
  }
  if (name == "constant") {
    ConstantParams p;
    r.read("n", p.n);
    r.read("gamma", p.gamma);
    r.read("sigma", p.sigma);
    r.read("stiffness", p.stiffness);
    r.finish();
    return constant_model(p);
  }
  std::ostringstream os;
  os << "unknown model '" << name << "'; built-in models:";
  for (const auto& n : builtin_model_names()) os << ' ' << n;
  throw ConfigError(os.str());
}

Model model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("model") || !doc.at("model").is_string()) {
    throw ConfigError("model document must be an object with a string field \"model\"");
  }
  const nlohmann::json params = doc.contains("params") ? doc.at("params") : nlohmann::json::object();
  return make_model(doc.at("model").get<std::string>(), params);
}

nlohmann::json model_to_json(const Model& model) { return {{"model", model.name}, {"params", model.params}}; }

Vector default_initial_position(const Model& model) {
  switch (model.domain.kind()) {
    case DomainKind::Interval:
      return Vector::Constant(1, 0.5 * (model.domain.lower() + model.domain.upper()));
    case DomainKind::HalfPlaneOrdered: {
      Vector x(2);
      x << -1.0, 1.0;
      return x;
    }
    case DomainKind::Disk: {
      Vector x(2);
      x << 0.5 * model.domain.radius(), 0.0;
      return x;
    }
    case DomainKind::AllSpace:
      break;
  }
  return Vector::Ones(model.n);
}

}  // namespace kramers
