#pragma once

#include <json.hpp>

#include "priorbo/priors.hpp"

namespace priorbo {

/// Prior specification objects:
///   {"type": "uniform"}
///   {"type": "truncated_gaussian", "mean": [...], "variance": [...]}   ("std" accepted instead of "variance")
///   {"type": "gamma_product", "dimensions": [{"shape", "rate", "transform": "identity"|"log",
///                                             "origin"?, "scale"?} | null, ...]}
///   {"type": "discrete", "weights": [...]}
/// plus an optional positive "scale". The support comes from the enclosing domain.
nlohmann::json prior_to_json(const OptimumPrior& prior);

/// Throws ValidationError naming the offending field (prefixed with `path`).
OptimumPrior prior_from_json(const nlohmann::json& spec, const Support& support, const std::string& path = "prior");

}  // namespace priorbo
