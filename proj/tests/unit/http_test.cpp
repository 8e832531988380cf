#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>
#include <unistd.h>

#include "priorbo/errors.hpp"
#include "priorbo/http_api.hpp"

#include <httplib.h>

using namespace priorbo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class HttpApi : public ::testing::Test {
 protected:
  void SetUp() override {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() / ("priorbo_http_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir_);
    StoreOptions o;
    o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    store_ = std::make_unique<CampaignStore>(dir_, o);
  }
  void TearDown() override {
    store_.reset();
    fs::remove_all(dir_);
  }

  ApiResponse call(const std::string& method, const std::string& path, const json& body = nullptr,
                   std::map<std::string, std::string> query = {}) {
    return handle_request(*store_, {method, path, std::move(query), body.is_null() ? "" : body.dump()});
  }

  std::string create(const json& prior = {{"type", "uniform"}}) {
    const auto r = call("POST", "/campaigns", spec(prior));
    EXPECT_EQ(r.status, 201) << r.body;
    return json::parse(r.body).at("id").get<std::string>();
  }

  static json spec(const json& prior) {
    return {{"name", "http"},
            {"domain", {{"type", "box"}, {"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}}},
            {"prior", prior},
            {"strategy", "psg"},
            {"config", {{"num_samples", 20}, {"feature_count", 200}, {"restarts", 3}, {"base_seed", 3}}}};
  }

  fs::path dir_;
  std::unique_ptr<CampaignStore> store_;
};

}  // namespace

TEST_F(HttpApi, CreateListGet) {
  const auto id = create();
  const auto list = call("GET", "/campaigns");
  EXPECT_EQ(list.status, 200);
  EXPECT_EQ(json::parse(list.body).size(), 1u);
  const auto got = call("GET", "/campaigns/" + id);
  EXPECT_EQ(got.status, 200);
  EXPECT_EQ(json::parse(got.body).at("status"), "active");
}

TEST_F(HttpApi, AskShapeAndConflict) {
  const auto id = create();
  const auto ask = call("POST", "/campaigns/" + id + "/ask");
  ASSERT_EQ(ask.status, 200) << ask.body;
  const json s = json::parse(ask.body);
  for (const char* key : {"point", "strategy", "seed_used", "cloud"}) EXPECT_TRUE(s.contains(key)) << key;
  EXPECT_EQ(s.at("cloud").size(), 20u);
  EXPECT_TRUE(s.at("cloud")[0].contains("point"));
  EXPECT_TRUE(s.at("cloud")[0].contains("weight"));
  const auto again = call("POST", "/campaigns/" + id + "/ask");
  EXPECT_EQ(again.status, 409);
  EXPECT_EQ(json::parse(again.body).at("error"), "pending_suggestion");
}

TEST_F(HttpApi, TellAndErrors) {
  const auto id = create();
  const json s = json::parse(call("POST", "/campaigns/" + id + "/ask").body);
  const auto ok = call("POST", "/campaigns/" + id + "/tell", {{"input", s.at("point")}, {"value", 0.7}});
  ASSERT_EQ(ok.status, 200) << ok.body;
  EXPECT_EQ(json::parse(ok.body).at("resolved"), 0);

  const auto outside = call("POST", "/campaigns/" + id + "/tell", {{"input", {2.0, 0.5}}, {"value", 0.7}});
  EXPECT_EQ(outside.status, 400);
  EXPECT_EQ(json::parse(outside.body).at("error"), "out_of_domain");
  const auto nan = call("POST", "/campaigns/" + id + "/tell", {{"input", {0.2, 0.5}}, {"value", "NaN"}});
  EXPECT_EQ(nan.status, 400);
  EXPECT_EQ(json::parse(nan.body).at("error"), "non_finite_value");
  const auto bad = handle_request(*store_, {"POST", "/campaigns/" + id + "/tell", {}, "{oops"});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(json::parse(bad.body).at("field"), "body");
}

TEST_F(HttpApi, ValidationCarriesField) {
  auto s = spec({{"type", "truncated_gaussian"}, {"mean", {0.5, 0.5}}, {"variance", {0.1, -1.0}}});
  const auto r = call("POST", "/campaigns", s);
  EXPECT_EQ(r.status, 400);
  const json b = json::parse(r.body);
  EXPECT_EQ(b.at("error"), "validation");
  EXPECT_EQ(b.at("field").get<std::string>().rfind("prior", 0), 0u);
}

TEST_F(HttpApi, NotFoundAndUnknownRoutes) {
  EXPECT_EQ(call("GET", "/campaigns/missing").status, 404);
  EXPECT_EQ(call("POST", "/campaigns/missing/ask").status, 404);
  EXPECT_EQ(call("GET", "/nothing").status, 404);
  EXPECT_EQ(call("GET", "/campaigns/x/frobnicate").status, 404);
  EXPECT_EQ(call("DELETE", "/campaigns").status, 405);
}

TEST_F(HttpApi, DensityQuery) {
  const auto id = create();
  const auto r = call("GET", "/campaigns/" + id + "/density", nullptr, {{"n", "7"}});
  ASSERT_EQ(r.status, 200) << r.body;
  const json b = json::parse(r.body);
  EXPECT_EQ(b.at("cloud").size(), 7u);
  for (const auto& p : b.at("cloud")) EXPECT_EQ(p.at("weight").get<double>(), 1.0 / 7.0);
  EXPECT_TRUE(b.at("cloud")[0].contains("raw_value"));
  const auto pinned = call("GET", "/campaigns/" + id + "/density", nullptr, {{"n", "7"}, {"seed", "42"}});
  EXPECT_EQ(json::parse(pinned.body).at("seed_used"), 42);
  EXPECT_EQ(call("GET", "/campaigns/" + id + "/density", nullptr, {{"n", "0"}}).status, 400);
  EXPECT_EQ(call("GET", "/campaigns/" + id + "/density", nullptr, {{"n", "abc"}}).status, 400);
}

TEST_F(HttpApi, ExportImportTraceSkipArchive) {
  const auto id = create();
  const json s = json::parse(call("POST", "/campaigns/" + id + "/ask").body);
  call("POST", "/campaigns/" + id + "/tell", {{"input", s.at("point")}, {"value", 1.25}});
  const auto exported = call("GET", "/campaigns/" + id + "/export");
  ASSERT_EQ(exported.status, 200);
  EXPECT_EQ(call("POST", "/campaigns/import", json::parse(exported.body)).status, 409);

  const auto trace = call("GET", "/campaigns/" + id + "/trace");
  EXPECT_EQ(trace.content_type, "text/csv");
  EXPECT_EQ(trace.body.substr(0, trace.body.find('\n')), "seed,iter,x_0,x_1,y,best,simple_regret,cum_regret");

  EXPECT_EQ(call("POST", "/campaigns/" + id + "/skip").status, 409);
  call("POST", "/campaigns/" + id + "/ask");
  EXPECT_EQ(call("POST", "/campaigns/" + id + "/skip").status, 200);
  EXPECT_EQ(call("POST", "/campaigns/" + id + "/archive").status, 200);
  EXPECT_EQ(call("POST", "/campaigns/" + id + "/ask").status, 409);

  fs::path other = dir_.string() + "_import";
  fs::remove_all(other);
  CampaignStore fresh(other);
  const auto imported = handle_request(fresh, {"POST", "/campaigns/import", {}, exported.body});
  EXPECT_EQ(imported.status, 201) << imported.body;
  fs::remove_all(other);
}

TEST(HttpErrors, StatusMapping) {
  auto check = [](const std::exception& e, int status, const std::string& kind) {
    const ApiResponse r = error_response_for(e);
    EXPECT_EQ(r.status, status) << kind;
    EXPECT_EQ(json::parse(r.body).at("error"), kind);
  };
  check(ValidationError("prior.mean", "missing"), 400, "validation");
  check(ConfigError("bad"), 400, "invalid_input");
  check(OutOfDomain("x"), 400, "out_of_domain");
  check(NonFiniteValue("x"), 400, "non_finite_value");
  check(NotFound("x"), 404, "not_found");
  check(PendingSuggestionExists("x"), 409, "pending_suggestion");
  check(CampaignArchived("x"), 409, "conflict");
  check(NumericFailure("cholesky failed at jitter 1e-4"), 500, "numeric_failure");
  check(CholeskyFailure("x"), 500, "numeric_failure");
  check(std::runtime_error("x"), 500, "internal");
  EXPECT_EQ(json::parse(error_response_for(NumericFailure("diag")).body).at("message"), "diag");
}

TEST_F(HttpApi, PriorValidateAndPreview) {
  const json domain = {{"type", "box"}, {"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}};
  EXPECT_EQ(call("POST", "/priors/validate", {{"domain", domain}, {"prior", {{"type", "uniform"}}}}).status, 200);
  const auto bad = call("POST", "/priors/validate",
                        {{"domain", domain}, {"prior", {{"type", "truncated_gaussian"}, {"mean", {0.5}}, {"std", {0.1}}}}});
  EXPECT_EQ(bad.status, 400);
  const auto preview = call("POST", "/priors/preview",
                            {{"domain", domain},
                             {"prior", {{"type", "truncated_gaussian"}, {"mean", {0.5, 0.2}}, {"std", {0.25, 0.1}}}},
                             {"points", 21}});
  ASSERT_EQ(preview.status, 200);
  EXPECT_EQ(json::parse(preview.body).at("dimensions").size(), 2u);
}

TEST_F(HttpApi, RealSocketRoundTrip) {
  httplib::Server server;
  install_routes(server, *store_);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/campaigns", spec({{"type", "uniform"}}).dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const auto id = json::parse(created->body).at("id").get<std::string>();
  auto ask = client.Post("/campaigns/" + id + "/ask", "", "application/json");
  ASSERT_TRUE(ask);
  EXPECT_EQ(ask->status, 200);
  EXPECT_EQ(ask->get_header_value("Access-Control-Allow-Origin"), "*");
  auto dens = client.Get("/campaigns/" + id + "/density?n=4");
  ASSERT_TRUE(dens);
  EXPECT_EQ(json::parse(dens->body).at("cloud").size(), 4u);
  auto missing = client.Get("/campaigns/zzz");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto options = client.Options("/campaigns");
  ASSERT_TRUE(options);
  EXPECT_EQ(options->status, 204);

  server.stop();
  th.join();
}
