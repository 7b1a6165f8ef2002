#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "ccn/config.hpp"
#include "test_support.hpp"

#include "httplib.h"

using namespace ccn;

TEST(JsonIo, PipelineConfigRoundTripAndPartialOverride) {
  PipelineConfig c;
  c.memory_slots = 8;
  c.dir_inclusive = false;
  c.care_variant = CareVariant::fusion;
  c.candidate_plan_overrides = {{CandidateLabel::sampled3, {1.1, 0.97}}};
  const json j = c;
  PipelineConfig back;
  from_json(j, back);
  EXPECT_EQ(json(back), j);

  PipelineConfig partial;
  from_json(json{{"kappa_base", 0.8}}, partial);
  EXPECT_EQ(partial.kappa_base, 0.8);
  EXPECT_EQ(partial.memory_slots, 16);
}

TEST(JsonIo, MatrixRoundTrip) {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const json j = matrix_to_json(m);
  EXPECT_EQ(j["data"], json::array({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  EXPECT_EQ(matrix_from_json(j), m);
  json bad = j;
  bad["data"].erase(0);
  EXPECT_ANY_THROW(matrix_from_json(bad));
}

TEST(JsonIo, TraceRoundTrip) {
  SelectionTrace t;
  t.care_signal = 0.4;
  t.kappa = 0.74;
  t.candidates.push_back(ccn::testing::scored(CandidateLabel::ccn, {4, 2, 1, 4}, "hello"));
  t.feasible_labels = {CandidateLabel::ccn};
  t.chosen_label = CandidateLabel::ccn;
  const json j = t;
  EXPECT_EQ(json(j.get<SelectionTrace>()), j);
}

TEST(JsonIo, FileHelpers) {
  ccn::testing::TempDir dir;
  write_json_file(dir / "a.json", json{{"x", 1}});
  EXPECT_EQ(read_json_file(dir / "a.json")["x"], 1);
  write_text_file(dir / "b.txt", "not json");
  EXPECT_THROW(read_json_file(dir / "b.txt"), DataError);
  EXPECT_THROW(read_json_file(dir / "missing.json"), DataError);
}

TEST(ServiceConfig, Defaults) {
  const auto c = service_config_from_json(json::object());
  EXPECT_EQ(c.backend_kind, "mock");
  EXPECT_EQ(c.listen_addr, "127.0.0.1:8080");
  EXPECT_EQ(c.session_ttl_seconds, 3600);
  EXPECT_EQ(c.pipeline.embed_dim, 128);
}

TEST(ServiceConfig, ParsesFields) {
  const auto c = service_config_from_json(
      json{{"pipeline", {{"memory_slots", 4}}},
           {"backend", {{"kind", "http"}, {"base_url", "http://h:1/v1"}, {"timeout_ms", 5}}},
           {"listen_addr", "0.0.0.0:9000"},
           {"session_ttl_seconds", 60}});
  EXPECT_EQ(c.pipeline.memory_slots, 4);
  EXPECT_EQ(c.backend_kind, "http");
  EXPECT_EQ(c.backend.base_url, "http://h:1/v1");
  EXPECT_EQ(c.backend.timeout_ms, 5);
  EXPECT_EQ(c.session_ttl_seconds, 60);
}

TEST(ServiceConfig, Errors) {
  EXPECT_THROW(service_config_from_json(json::array()), DataError);
  EXPECT_THROW(service_config_from_json(json{{"listen_addr", 5}}), DataError);
  EXPECT_THROW(service_config_from_json(json{{"session_ttl_seconds", 0}}), InvalidArgument);
  EXPECT_THROW(service_config_from_json(json{{"pipeline", {{"memory_slots", 0}}}}),
               InvalidArgument);
  EXPECT_THROW(load_service_config("/nonexistent/ccn.json"), DataError);
}

TEST(ServiceConfig, ListenAddr) {
  EXPECT_EQ(parse_listen_addr("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_listen_addr("localhost:0").second, 0);
  EXPECT_THROW(parse_listen_addr("8080"), InvalidArgument);
  EXPECT_THROW(parse_listen_addr("h:"), InvalidArgument);
  EXPECT_THROW(parse_listen_addr("h:99999"), InvalidArgument);
  EXPECT_THROW(parse_listen_addr("h:80x"), InvalidArgument);
}

TEST(ServiceConfig, EnvOverridesListen) {
  ServiceConfig c;
  ::setenv("CCN_LISTEN_ADDR", "0.0.0.0:7000", 1);
  apply_env(c);
  ::unsetenv("CCN_LISTEN_ADDR");
  EXPECT_EQ(c.listen_addr, "0.0.0.0:7000");
}

TEST(BuildComponents, DefaultsAndControllerFile) {
  const auto plain = build_components(ServiceConfig{});
  EXPECT_FALSE(plain.controller_loaded);
  EXPECT_EQ(plain.pipeline->backend().name(), "mock");

  ccn::testing::TempDir dir;
  const auto path = dir / "controller.json";
  CareController::token_regressor(RegressorParams::init({}, 9), true).save(path);
  ServiceConfig with_file;
  with_file.controller_path = path.string();
  const auto loaded = build_components(with_file);
  EXPECT_TRUE(loaded.controller_loaded);
  EXPECT_TRUE(loaded.pipeline->controller().trained());

  ServiceConfig mismatch = with_file;
  mismatch.pipeline.care_variant = CareVariant::fusion;
  EXPECT_THROW(build_components(mismatch), DataError);

  ServiceConfig fusion;
  fusion.pipeline.care_variant = CareVariant::fusion;
  EXPECT_EQ(build_components(fusion).pipeline->controller().variant(), CareVariant::fusion);

  ServiceConfig unknown;
  unknown.backend_kind = "telepathy";
  EXPECT_THROW(build_components(unknown), InvalidArgument);
}

TEST(RemoteEvaluator, ScoresAndErrors) {
  httplib::Server server;
  json last;
  std::mutex m;
  server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    {
      std::lock_guard lock(m);
      last = body;
    }
    if (body["response"] == "broken") {
      res.set_content("{\"autonomy\": 9}", "application/json");
      return;
    }
    res.set_content(
        json{{"autonomy", 4.0}, {"dependency", 2.0}, {"coercion", 1.5}, {"support", 3.0}}.dump(),
        "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::jthread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEvaluatorConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/score";
  cfg.timeout_ms = 2000;
  cfg.backoff_ms = 1;
  RemoteEvaluator eval(cfg);
  const auto s = eval.score(ccn::testing::student_context(), "fine");
  EXPECT_EQ(s, (AxisScores{4.0, 2.0, 1.5, 3.0}));
  {
    std::lock_guard lock(m);
    EXPECT_EQ(last["response"], "fine");
    EXPECT_EQ(last["context"]["memory_facts"].size(), 2u);
  }
  try {
    eval.score(ccn::testing::student_context(), "broken");
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::malformed_body);
  }
  server.stop();
}
