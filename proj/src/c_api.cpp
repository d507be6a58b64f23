#include "censmte/censmte.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "censmte/error.hpp"
#include "censmte/oracle.hpp"
#include "censmte/pipeline.hpp"

struct cm_table {
  censmte::ObservationTable table;
};

struct cm_result {
  censmte::RunConfig config;
  censmte::RunResult run;
};

namespace {

using censmte::Error;
using censmte::ErrorCode;
using nlohmann::json;

thread_local std::string lastError = "{}";

cm_status fail(ErrorCode code, const std::string& message, json detail = json::object()) {
  lastError = Error(code, message, std::move(detail)).toJson().dump();
  return static_cast<cm_status>(static_cast<int>(code));
}

// Runs body and converts every exception into a status plus error JSON.
template <class Body>
cm_status guarded(Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    lastError = e.toJson().dump();
    return static_cast<cm_status>(static_cast<int>(e.code()));
  } catch (const json::exception& e) {
    return fail(ErrorCode::kParse, std::string("invalid JSON argument: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCode::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCode::kInternal, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parseOrEmpty(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  return json::parse(text);
}

censmte::RunConfig parseConfig(const char* text) { return censmte::runConfigFromJson(parseOrEmpty(text)); }

}  // namespace

extern "C" {

const char* cm_version(void) { return "0.1.0"; }

const char* cm_last_error(void) { return lastError.c_str(); }

void cm_string_free(char* s) { std::free(s); }

cm_status cm_table_load_csv(const char* path, const char* column_map_json, cm_table** out) {
  return guarded([&] {
    if (!path || !out) return fail(ErrorCode::kInvalidArgument, "path and out must be non-null");
    *out = nullptr;
    censmte::RunConfig cfg;
    if (column_map_json) cfg = censmte::runConfigFromJson({{"columns", json::parse(column_map_json)}});
    auto* t = new cm_table{censmte::loadCsv(path, cfg.columns)};
    *out = t;
    return CM_OK;
  });
}

cm_status cm_table_save_csv(const cm_table* table, const char* path) {
  return guarded([&] {
    if (!table || !path) return fail(ErrorCode::kInvalidArgument, "table and path must be non-null");
    censmte::saveCsv(table->table, path);
    return CM_OK;
  });
}

cm_status cm_table_rows(const cm_table* table, size_t* rows) {
  if (!table || !rows) return fail(ErrorCode::kInvalidArgument, "table and rows must be non-null");
  *rows = table->table.size();
  return CM_OK;
}

cm_status cm_table_summary_json(const cm_table* table, char** out) {
  return guarded([&] {
    if (!table || !out) return fail(ErrorCode::kInvalidArgument, "table and out must be non-null");
    const auto& t = table->table;
    json levels = json::array();
    for (const auto& l : t.xLevels()) {
      levels.push_back({{"label", l.label}, {"rows", l.rows}, {"treated", l.treated}, {"untreated", l.rows - l.treated}});
    }
    const json j = {{"rows", t.size()},
                    {"treated", t.treatedCount()},
                    {"untreated", t.size() - t.treatedCount()},
                    {"gamma_c_hat", t.gammaCHat()},
                    {"levels", levels},
                    {"clusters", t.numClusters()},
                    {"deciders", t.deciderLabels().size()}};
    *out = duplicate(j.dump());
    return CM_OK;
  });
}

void cm_table_free(cm_table* table) { delete table; }

cm_status cm_table_prepare(const cm_table* table, const char* config_json, cm_table** out,
                           char** report_json) {
  return guarded([&] {
    if (!table || !out) return fail(ErrorCode::kInvalidArgument, "table and out must be non-null");
    *out = nullptr;
    const auto cfg = parseConfig(config_json);
    auto prepared = censmte::prepareTable(table->table, cfg);
    if (report_json) {
      json r = {{"rows_in", table->table.size()},
                {"rows_out", prepared.table.size()},
                {"dropped_by_caseload_filter", prepared.droppedByFilter},
                {"dropped_by_instrument_clipping", prepared.droppedByClipping}};
      if (prepared.zLow) r["z_range"] = {*prepared.zLow, *prepared.zHigh};
      *report_json = duplicate(r.dump());
    }
    *out = new cm_table{std::move(prepared.table)};
    return CM_OK;
  });
}

cm_status cm_simulate(const char* spec_json, size_t n, uint64_t seed, unsigned threads,
                      const char* latent_path, cm_table** out) {
  return guarded([&] {
    if (!out) return fail(ErrorCode::kInvalidArgument, "out must be non-null");
    *out = nullptr;
    const auto spec = censmte::dgpSpecFromJson(parseOrEmpty(spec_json));
    auto sim = censmte::simulate(spec, n, seed, threads);
    if (latent_path && *latent_path) censmte::saveLatentCsv(sim.latent, latent_path);
    *out = new cm_table{std::move(sim.table)};
    return CM_OK;
  });
}

cm_status cm_estimate(const cm_table* table, const char* config_json, cm_result** out) {
  return guarded([&] {
    if (!table || !out) return fail(ErrorCode::kInvalidArgument, "table and out must be non-null");
    *out = nullptr;
    auto cfg = parseConfig(config_json);
    auto* r = new cm_result{cfg, {}};
    try {
      r->run = censmte::runEstimate(table->table, cfg);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    return CM_OK;
  });
}

cm_status cm_bootstrap(const cm_table* table, cm_result* result, const char* config_json) {
  return guarded([&] {
    if (!table || !result) return fail(ErrorCode::kInvalidArgument, "table and result must be non-null");
    const auto cfg = config_json ? parseConfig(config_json) : result->config;
    censmte::runBootstrapInto(result->run, table->table, cfg);
    result->config = cfg;
    return CM_OK;
  });
}

cm_status cm_result_diagnostics_json(const cm_result* result, const cm_table* table, char** out) {
  return guarded([&] {
    if (!result || !table || !out) return fail(ErrorCode::kInvalidArgument, "arguments must be non-null");
    *out = duplicate(censmte::diagnosticsJson(result->run, table->table, result->config).dump());
    return CM_OK;
  });
}

cm_status cm_result_surfaces_csv(const cm_result* result, char** out) {
  return guarded([&] {
    if (!result || !out) return fail(ErrorCode::kInvalidArgument, "result and out must be non-null");
    *out = duplicate(censmte::surfacesCsv(result->run, result->config));
    return CM_OK;
  });
}

cm_status cm_result_write(const cm_result* result, const cm_table* table) {
  return guarded([&] {
    if (!result || !table) return fail(ErrorCode::kInvalidArgument, "result and table must be non-null");
    censmte::writeEstimateOutputs(result->run, table->table, result->config);
    return CM_OK;
  });
}

void cm_result_free(cm_result* result) { delete result; }

cm_status cm_bounds_write(const cm_result* result, const cm_table* table, const char* config_json) {
  return guarded([&] {
    if (!result || !table) return fail(ErrorCode::kInvalidArgument, "result and table must be non-null");
    const auto cfg = config_json ? parseConfig(config_json) : result->config;
    const auto run = censmte::runBounds(result->run, table->table, cfg);
    censmte::writeBoundsOutputs(run, cfg);
    return CM_OK;
  });
}

cm_status cm_toy_check(const char* fixture_json, char** out_json, int* pass) {
  return guarded([&] {
    const auto pmf = fixture_json ? censmte::pmfFromJson(json::parse(fixture_json)) : censmte::toyPmf();
    const auto check = censmte::runToyCheck(pmf);
    if (out_json) *out_json = duplicate(check.toJson().dump());
    if (pass) *pass = check.pass ? 1 : 0;
    return CM_OK;
  });
}

}  // extern "C"
