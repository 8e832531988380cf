#include "priorbo/prior_json.hpp"

#include <string>

#include "priorbo/errors.hpp"

namespace priorbo {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_field(const json& spec, const char* key, const std::string& path) {
  if (!spec.contains(key)) throw ValidationError(path + "." + key, "missing");
  const json& arr = spec.at(key);
  if (!arr.is_array()) throw ValidationError(path + "." + key, "must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ValidationError(path + "." + key + "[" + std::to_string(i) + "]", "must be a number");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

double number_field(const json& spec, const char* key, const std::string& path) {
  if (!spec.contains(key) || !spec.at(key).is_number()) throw ValidationError(path + "." + key, "must be a number");
  return spec.at(key).get<double>();
}

}  // namespace

json prior_to_json(const OptimumPrior& prior) {
  json out;
  const auto& shape = prior.shape();
  if (std::holds_alternative<OptimumPrior::Uniform>(shape)) {
    out["type"] = "uniform";
  } else if (const auto* g = std::get_if<OptimumPrior::TruncatedGaussian>(&shape)) {
    out["type"] = "truncated_gaussian";
    out["mean"] = vector_json(g->mean);
    out["variance"] = vector_json(g->variance);
  } else if (const auto* gp = std::get_if<OptimumPrior::GammaProduct>(&shape)) {
    out["type"] = "gamma_product";
    json dims = json::array();
    for (const auto& f : gp->factors) {
      if (!f) {
        dims.push_back(nullptr);
        continue;
      }
      json d{{"shape", f->shape},
             {"rate", f->rate},
             {"transform", f->transform == Transform::kLog ? "log" : "identity"},
             {"scale", f->scale}};
      if (f->origin) d["origin"] = *f->origin;
      dims.push_back(std::move(d));
    }
    out["dimensions"] = std::move(dims);
  } else {
    out["type"] = "discrete";
    out["weights"] = vector_json(std::get<OptimumPrior::DiscreteTable>(shape).weights);
  }
  if (prior.scale() != 1.0) out["scale"] = prior.scale();
  return out;
}

OptimumPrior prior_from_json(const json& spec, const Support& support, const std::string& path) {
  if (!spec.is_object()) throw ValidationError(path, "must be an object");
  if (!spec.contains("type") || !spec.at("type").is_string()) throw ValidationError(path + ".type", "missing");
  const std::string type = spec.at("type").get<std::string>();
  const double scale = spec.contains("scale") ? number_field(spec, "scale", path) : 1.0;

  OptimumPrior::Shape shape;
  if (type == "uniform") {
    shape = OptimumPrior::Uniform{};
  } else if (type == "truncated_gaussian") {
    Vector mean = vector_field(spec, "mean", path);
    Vector variance;
    if (spec.contains("variance")) {
      variance = vector_field(spec, "variance", path);
    } else if (spec.contains("std")) {
      Vector sd = vector_field(spec, "std", path);
      if (!(sd.array() > 0.0).all()) throw ValidationError(path + ".std", "entries must be strictly positive");
      variance = sd.array().square();
    } else {
      throw ValidationError(path + ".variance", "missing");
    }
    shape = OptimumPrior::TruncatedGaussian{std::move(mean), std::move(variance)};
  } else if (type == "gamma_product") {
    if (!spec.contains("dimensions") || !spec.at("dimensions").is_array())
      throw ValidationError(path + ".dimensions", "must be an array");
    OptimumPrior::GammaProduct gp;
    const json& dims = spec.at("dimensions");
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const std::string p = path + ".dimensions[" + std::to_string(i) + "]";
      if (dims[i].is_null()) {
        gp.factors.emplace_back(std::nullopt);
        continue;
      }
      if (!dims[i].is_object()) throw ValidationError(p, "must be an object or null");
      GammaFactor f;
      f.shape = number_field(dims[i], "shape", p);
      f.rate = number_field(dims[i], "rate", p);
      const std::string t = dims[i].value("transform", std::string("identity"));
      if (t == "log") {
        f.transform = Transform::kLog;
      } else if (t != "identity") {
        throw ValidationError(p + ".transform", "must be \"identity\" or \"log\"");
      }
      if (dims[i].contains("origin")) f.origin = number_field(dims[i], "origin", p);
      if (dims[i].contains("scale")) f.scale = number_field(dims[i], "scale", p);
      gp.factors.emplace_back(f);
    }
    shape = std::move(gp);
  } else if (type == "discrete") {
    shape = OptimumPrior::DiscreteTable{vector_field(spec, "weights", path)};
  } else {
    throw ValidationError(path + ".type", "unknown prior type \"" + type + "\"");
  }

  try {
    return OptimumPrior(std::move(shape), support, scale);
  } catch (const ValidationError& e) {
    throw ValidationError(e.field().empty() ? path : path + "." + e.field(), e.message());
  } catch (const InputError& e) {
    throw ValidationError(path, e.what());
  }
}

}  // namespace priorbo
