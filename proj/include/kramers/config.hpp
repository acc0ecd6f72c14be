#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kramers/model.hpp"

namespace kramers {

std::vector<std::string> builtin_model_names();

// Builds a built-in model from its name and a (possibly partial) parameter
// object. Throws ConfigError for unknown names or parameters.
Model make_model(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

// {"model": name, "params": {...}}
Model model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const Model& model);

// Starting point used when none is given: the wall-gravity midpoint (a+b)/2,
// (-1, 1) for the particle pair, (0.5, 0) in the pore, 1 per coordinate for
// the constant benchmark.
Vector default_initial_position(const Model& model);

}  // namespace kramers
