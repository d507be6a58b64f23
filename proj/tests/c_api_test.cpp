// Exercises the shared library through its C header only.
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "doctest.h"
#include "censmte/censmte.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  cm_string_free(s);
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("censmte_capi_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cm_table* simulated(std::size_t n, std::uint64_t seed) {
  cm_table* t = nullptr;
  REQUIRE(cm_simulate(R"({"clusters": 20})", n, seed, 1, nullptr, &t) == CM_OK);
  return t;
}

}  // namespace

TEST_CASE("version string") { CHECK(std::strlen(cm_version()) > 0); }

TEST_CASE("toy check through the C layer") {
  char* out = nullptr;
  int pass = 0;
  REQUIRE(cm_toy_check(nullptr, &out, &pass) == CM_OK);
  CHECK(pass == 1);
  auto j = json::parse(take(out));
  CHECK(j["dmte_1"] == 0.05);
  CHECK(j["ate"] == 5.55);
}

TEST_CASE("errors come back as codes with a JSON description") {
  cm_table* t = nullptr;
  CHECK(cm_table_load_csv("/nonexistent/file.csv", nullptr, &t) == CM_IO);
  CHECK(t == nullptr);
  auto err = json::parse(cm_last_error());
  CHECK(err["code"] == CM_IO);
  CHECK(err["error"].is_string());
  CHECK(err["message"].get<std::string>().find("nonexistent") != std::string::npos);

  CHECK(cm_toy_check("{not json", nullptr, nullptr) != CM_OK);
  CHECK(cm_simulate(R"({"censoring": {"law": "uniform", "lo": 5, "hi": 1}})", 10, 1, 1, nullptr, &t) ==
        CM_INVALID_SPEC);
  CHECK(cm_table_rows(nullptr, nullptr) == CM_INVALID_ARGUMENT);
}

TEST_CASE("simulate, save, reload") {
  auto dir = scratch("roundtrip");
  cm_table* t = simulated(1200, 4);
  size_t rows = 0;
  REQUIRE(cm_table_rows(t, &rows) == CM_OK);
  CHECK(rows == 1200);
  const auto path = (dir / "t.csv").string();
  REQUIRE(cm_table_save_csv(t, path.c_str()) == CM_OK);
  cm_table* back = nullptr;
  REQUIRE(cm_table_load_csv(path.c_str(), R"({"x": "x", "cluster": "cluster"})", &back) == CM_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(cm_table_summary_json(t, &a) == CM_OK);
  REQUIRE(cm_table_summary_json(back, &b) == CM_OK);
  CHECK(take(a) == take(b));
  cm_table_free(back);
  cm_table_free(t);
}

TEST_CASE("estimate, bootstrap and write outputs") {
  auto dir = scratch("estimate");
  cm_table* t = simulated(2000, 9);
  json config = {{"grid_size", 6}, {"v_points", 4}, {"tau", {0.5}}, {"boot_B", 5}, {"seed", 2},
                 {"out_dir", dir.string()}};
  cm_result* r = nullptr;
  REQUIRE(cm_estimate(t, config.dump().c_str(), &r) == CM_OK);
  REQUIRE(cm_bootstrap(t, r, config.dump().c_str()) == CM_OK);
  char* csv = nullptr;
  REQUIRE(cm_result_surfaces_csv(r, &csv) == CM_OK);
  const std::string text = take(csv);
  CHECK(text.rfind("functional,y_or_tau,v,x,value,lo,hi\n", 0) == 0);
  REQUIRE(cm_result_write(r, t) == CM_OK);
  CHECK(std::filesystem::exists(dir / "surfaces.csv"));
  CHECK(std::filesystem::exists(dir / "surfaces.csv.meta.json"));
  CHECK(std::filesystem::exists(dir / "diagnostics.json"));
  CHECK(slurp(dir / "surfaces.csv") == text);
  char* diag = nullptr;
  REQUIRE(cm_result_diagnostics_json(r, t, &diag) == CM_OK);
  auto d = json::parse(take(diag));
  CHECK(d.contains("first_stage"));

  json bcfg = config;
  bcfg["breakdown"] = true;
  REQUIRE(cm_bounds_write(r, t, bcfg.dump().c_str()) == CM_OK);
  CHECK(slurp(dir / "breakdown.csv").rfind("y,bbar\n", 0) == 0);
  cm_result_free(r);
  cm_table_free(t);
}

TEST_CASE("bootstrap on a single cluster reports TooFewClusters") {
  cm_table* t = nullptr;
  REQUIRE(cm_simulate("{}", 800, 1, 1, nullptr, &t) == CM_OK);
  json config = {{"grid_size", 4}, {"v_points", 3}, {"tau", {0.5}}, {"boot_B", 2}};
  cm_result* r = nullptr;
  REQUIRE(cm_estimate(t, config.dump().c_str(), &r) == CM_OK);
  CHECK(cm_bootstrap(t, r, config.dump().c_str()) == CM_TOO_FEW_CLUSTERS);
  config["cluster_weights"] = false;
  CHECK(cm_bootstrap(t, r, config.dump().c_str()) == CM_OK);
  cm_result_free(r);
  cm_table_free(t);
}

TEST_CASE("free functions accept null") {
  cm_table_free(nullptr);
  cm_result_free(nullptr);
  cm_string_free(nullptr);
}
