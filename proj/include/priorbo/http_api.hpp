#pragma once

#include <map>
#include <string>

#include "priorbo/campaign.hpp"

namespace httplib {
class Server;
}

namespace priorbo {

struct ApiRequest {
  std::string method;  // GET, POST
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Routes one request. Errors become 400 (validation), 404 (not found),
/// 409 (conflict) or 500 (numeric failure) with a JSON body
/// {"error": kind, "message": ..., "field"?: ...}.
ApiResponse handle_request(CampaignStore& store, const ApiRequest& request);

/// Status and JSON error body for an exception thrown while serving a request.
ApiResponse error_response_for(const std::exception& e);

/// Installs every route on an httplib server.
void install_routes(httplib::Server& server, CampaignStore& store);

}  // namespace priorbo
