// Exercises the shared library through its C interface only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "psane/psane.h"

#include <cstring>
#include <filesystem>
#include <string>

namespace {

std::string take(char* s)
{
    std::string out = s ? s : "";
    psane_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("version and argument checks")
{
    CHECK(std::strlen(psane_version()) > 0);
    psane_scenario* s = nullptr;
    CHECK(psane_scenario_preset(nullptr, &s) == PSANE_ERR_ARGUMENT);
    CHECK(std::strlen(psane_last_error()) > 0);
    CHECK(psane_trial_metrics_get(nullptr, nullptr) == PSANE_ERR_ARGUMENT);
    psane_scenario_free(nullptr);
    psane_trial_free(nullptr);
    psane_batch_free(nullptr);
}

TEST_CASE("configuration errors carry the field")
{
    psane_scenario* s = nullptr;
    CHECK(psane_scenario_from_json("{\"h\": 1.5}", &s) == PSANE_ERR_CONFIG);
    CHECK(s == nullptr);
    CHECK(std::string(psane_last_error_field()) == "h");

    REQUIRE(psane_scenario_preset("env1", &s) == PSANE_OK);
    CHECK(psane_scenario_override(s, "h=2") == PSANE_ERR_CONFIG);
    char* json = nullptr;
    REQUIRE(psane_scenario_to_json(s, &json) == PSANE_OK);
    CHECK(take(json).find("\"h\": 0.8") != std::string::npos);
    psane_scenario_free(s);

    CHECK(psane_scenario_load("/nonexistent.json", &s) == PSANE_ERR_IO);
}

TEST_CASE("a trial through the handle API")
{
    psane_scenario* s = nullptr;
    REQUIRE(psane_scenario_preset("env1", &s) == PSANE_OK);
    REQUIRE(psane_scenario_override(s, "time_budget=80") == PSANE_OK);
    psane_trial* t = nullptr;
    REQUIRE(psane_trial_run(s, &t) == PSANE_OK);
    psane_trial* t2 = nullptr;
    REQUIRE(psane_trial_run(s, &t2) == PSANE_OK);
    psane_scenario_free(s);

    psane_trial_metrics m;
    REQUIRE(psane_trial_metrics_get(t, &m) == PSANE_OK);
    CHECK(m.epochs > 0);
    CHECK(m.samples == 3 + m.measurement_firings);
    CHECK(m.safety_violations == 0);
    CHECK(m.lipschitz > 0.0);

    char* a = nullptr;
    char* b = nullptr;
    REQUIRE(psane_trial_events_csv(t, &a) == PSANE_OK);
    REQUIRE(psane_trial_events_csv(t2, &b) == PSANE_OK);
    CHECK(take(a) == take(b));

    char* summary = nullptr;
    REQUIRE(psane_trial_summary_json(t, &summary) == PSANE_OK);
    CHECK(take(summary).find("outcome") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "psane_capi_run";
    std::filesystem::remove_all(dir);
    CHECK(psane_trial_write(t, dir.c_str(), 0) == PSANE_OK);
    CHECK(psane_trial_write(t, dir.c_str(), 0) == PSANE_ERR_IO);
    CHECK(psane_trial_write(t, dir.c_str(), 1) == PSANE_OK);
    size_t images = 0;
    char* warnings = nullptr;
    CHECK(psane_render(dir.c_str(), 4, &images, &warnings) == PSANE_OK);
    CHECK(images > 0);
    take(warnings);
    std::filesystem::remove_all(dir);

    psane_trial_free(t);
    psane_trial_free(t2);
}

TEST_CASE("batches through the handle API")
{
    psane_batch* b = nullptr;
    CHECK(psane_batch_from_json("{\"environments\": [{\"preset\": \"env1\"}], \"seeds\": []}", ".", &b) ==
          PSANE_ERR_CONFIG);
    REQUIRE(psane_batch_from_json("{\"environments\": [{\"preset\": \"env1\", \"overrides\": [\"time_budget=40\"]}],"
                                  " \"seeds\": [1, 2], \"strategies\": [\"PGH\", \"PSANE\"]}",
                                  ".", &b) == PSANE_OK);
    size_t n = 0;
    CHECK(psane_batch_trial_count(b, &n) == PSANE_ERR_ARGUMENT);
    CHECK(psane_batch_set_workers(b, 0) == PSANE_ERR_CONFIG);
    REQUIRE(psane_batch_set_workers(b, 2) == PSANE_OK);
    REQUIRE(psane_batch_run(b, nullptr, 0) == PSANE_OK);
    REQUIRE(psane_batch_trial_count(b, &n) == PSANE_OK);
    CHECK(n == 4);
    size_t failed = 1;
    REQUIRE(psane_batch_failed_count(b, &failed) == PSANE_OK);
    CHECK(failed == 0);
    char* csv = nullptr;
    REQUIRE(psane_batch_aggregate_csv(b, &csv) == PSANE_OK);
    const std::string first = take(csv);
    CHECK(first.find("PSANE") != std::string::npos);

    REQUIRE(psane_batch_set_workers(b, 1) == PSANE_OK);
    REQUIRE(psane_batch_run(b, nullptr, 0) == PSANE_OK);
    REQUIRE(psane_batch_aggregate_csv(b, &csv) == PSANE_OK);
    CHECK(take(csv) == first);
    psane_batch_free(b);

    psane_batch* f = nullptr;
    REQUIRE(psane_batch_load(PSANE_SCENARIO_DIR "/navigation.json", &f) == PSANE_OK);
    psane_batch_free(f);
}
