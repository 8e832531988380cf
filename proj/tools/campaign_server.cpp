// campaign_server: HTTP ask-tell service over a campaign data directory.

#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "priorbo/http_api.hpp"

// after Eigen: resolv.h defines a _res macro
#include <httplib.h>

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priorbo campaign service"};
  std::string data_dir = env_or("PRIORBO_DATA_DIR", "campaigns");
  std::string bind = env_or("PRIORBO_BIND", "127.0.0.1:8080");
  std::size_t default_n = std::stoul(env_or("PRIORBO_DEFAULT_N", "0"));
  std::size_t default_m = std::stoul(env_or("PRIORBO_DEFAULT_M", "0"));
  app.add_option("--data-dir", data_dir, "journal directory (env PRIORBO_DATA_DIR)");
  app.add_option("--bind", bind, "host:port (env PRIORBO_BIND)");
  app.add_option("--default-n", default_n, "posterior samples for new campaigns, 0 for 100*D (env PRIORBO_DEFAULT_N)");
  app.add_option("--default-m", default_m, "random features for new campaigns, 0 for 500*D (env PRIORBO_DEFAULT_M)");
  CLI11_PARSE(app, argc, argv);

  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--bind must be host:port\n";
    return 2;
  }
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "bad port in --bind\n";
    return 2;
  }

  try {
    priorbo::StoreOptions options;
    options.default_num_samples = default_n;
    options.default_feature_count = default_m;
    priorbo::CampaignStore store(data_dir, options);
    httplib::Server server;
    priorbo::install_routes(server, store);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (port == 0) {
      port = server.bind_to_any_port(host);
      if (port < 0) throw std::runtime_error("cannot bind " + host);
    } else if (!server.bind_to_port(host, port)) {
      throw std::runtime_error("cannot bind " + bind);
    }
    std::cout << "listening on " << host << ':' << port << std::endl;
    server.listen_after_bind();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
