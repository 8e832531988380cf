#include "priorbo/http_api.hpp"

#include <regex>

#include <httplib.h>

#include "priorbo/errors.hpp"
#include "priorbo/prior_json.hpp"

namespace priorbo {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

ApiResponse error_response(int status, const std::string& kind, const std::string& message,
                           const std::string& field = {}) {
  json body = {{"error", kind}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  return json_response(status, body);
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError("body", std::string("invalid JSON: ") + e.what());
  }
}

std::size_t query_count(const ApiRequest& r, const char* key, std::size_t fallback) {
  const auto it = r.query.find(key);
  if (it == r.query.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw ValidationError(key, "must be a nonnegative integer");
  }
}

json ask_json(const Suggestion& s) { return suggestion_to_json(s); }

json density_json(const Campaign& c, const MaximizerCloud& cloud, std::uint64_t seed) {
  json pts = cloud_to_json(cloud);
  const double sign = c.spec().sense == Sense::kMinimize ? -1.0 : 1.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) pts[i]["raw_value"] = sign * cloud.raw_values[i];
  return {{"seed_used", seed}, {"degenerate", cloud.degenerate}, {"cloud", std::move(pts)}};
}

ApiResponse route(CampaignStore& store, const ApiRequest& r) {
  static const std::regex campaign_re("^/campaigns/([A-Za-z0-9_-]+)(/[a-z]+)?$");
  const std::string& m = r.method;

  if (r.path == "/campaigns") {
    if (m == "POST") {
      const std::string id = store.create(parse_body(r.body));
      return json_response(201, store.get(id));
    }
    if (m == "GET") return json_response(200, store.list());
    return error_response(405, "method_not_allowed", m + " " + r.path);
  }
  if (r.path == "/campaigns/import") {
    if (m != "POST") return error_response(405, "method_not_allowed", m + " " + r.path);
    const std::string id = store.import_campaign(parse_body(r.body));
    return json_response(201, store.get(id));
  }
  if (r.path == "/priors/preview" || r.path == "/priors/validate") {
    if (m != "POST") return error_response(405, "method_not_allowed", m + " " + r.path);
    const json body = parse_body(r.body);
    if (!body.is_object() || !body.contains("domain") || !body.contains("prior"))
      throw ValidationError("body", "needs domain and prior");
    if (r.path == "/priors/validate") {
      prior_from_json(body.at("prior"), domain_from_json(body.at("domain")), "prior");
      return json_response(200, {{"valid", true}});
    }
    const std::size_t points = body.contains("points") && (body.at("points").is_number_unsigned() || body.at("points").is_number_integer())
                                   ? body.at("points").get<std::size_t>()
                                   : 101;
    return json_response(200, prior_preview(body.at("domain"), body.at("prior"), points));
  }

  std::smatch match;
  if (!std::regex_match(r.path, match, campaign_re)) return error_response(404, "not_found", "no route " + r.path);
  const std::string id = match[1];
  const std::string action = match[2].matched ? match[2].str().substr(1) : "";

  if (action.empty() && m == "GET") return json_response(200, store.get(id));
  if (action == "ask" && m == "POST") return json_response(200, ask_json(store.ask(id)));
  if (action == "tell" && m == "POST") return json_response(200, store.tell(id, parse_body(r.body)));
  if (action == "skip" && m == "POST") return json_response(200, store.skip(id));
  if (action == "archive" && m == "POST") return json_response(200, store.archive(id));
  if (action == "export" && m == "GET") return json_response(200, store.export_campaign(id));
  if (action == "trace" && m == "GET") return {200, "text/csv", store.trace_csv(id)};
  if (action == "density" && m == "GET") {
    const std::size_t n = query_count(r, "n", 200);
    if (n == 0 || n > 100000) throw ValidationError("n", "must be between 1 and 100000");
    std::optional<std::uint64_t> seed;
    if (r.query.count("seed")) seed = query_count(r, "seed", 0);
    std::uint64_t used = 0;
    const MaximizerCloud cloud = store.density(id, n, seed, &used);
    return json_response(200, density_json(store.snapshot(id), cloud, used));
  }
  return error_response(404, "not_found", "no route " + m + " " + r.path);
}

}  // namespace

ApiResponse error_response_for(const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) return error_response(400, "validation", v->message(), v->field());
  if (dynamic_cast<const InputError*>(&e) != nullptr) {
    std::string kind = "invalid_input";
    if (dynamic_cast<const OutOfDomain*>(&e) || dynamic_cast<const OutOfBox*>(&e)) kind = "out_of_domain";
    else if (dynamic_cast<const NonFiniteValue*>(&e)) kind = "non_finite_value";
    else if (dynamic_cast<const NoObservations*>(&e)) kind = "no_observations";
    return error_response(400, kind, e.what());
  }
  if (dynamic_cast<const NotFound*>(&e) != nullptr) return error_response(404, "not_found", e.what());
  if (dynamic_cast<const PendingSuggestionExists*>(&e) != nullptr) return error_response(409, "pending_suggestion", e.what());
  if (dynamic_cast<const Conflict*>(&e) != nullptr) return error_response(409, "conflict", e.what());
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return error_response(500, "numeric_failure", e.what());
  return error_response(500, "internal", e.what());
}

ApiResponse handle_request(CampaignStore& store, const ApiRequest& request) {
  try {
    return route(store, request);
  } catch (const std::exception& e) {
    return error_response_for(e);
  }
}

void install_routes(httplib::Server& server, CampaignStore& store) {
  auto adapter = [&store](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const ApiResponse out = handle_request(store, r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
    res.set_header("Access-Control-Allow-Origin", "*");
  };
  const std::string any = R"(/.*)";
  server.Get(any, adapter);
  server.Post(any, adapter);
  server.Options(any, [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

}  // namespace priorbo
