#include "mfggp.h"

#include <string>

#include "core/common.hpp"
#include "core/runner.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
mfggp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MFGGP_OK;
  } catch (const mfggp::InputError& e) {
    g_last_error = e.what();
    return MFGGP_ERROR_INVALID_ARGUMENT;
  } catch (const mfggp::SolverError& e) {
    g_last_error = e.what();
    return MFGGP_ERROR_SOLVER;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MFGGP_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MFGGP_ERROR_INTERNAL;
  }
}

}  // namespace

struct mfggp_result {
  mfggp::ResultRecord record;
  std::string serialized;
};

extern "C" {

const char* mfggp_version(void) { return "1.0.0"; }

const char* mfggp_last_error(void) { return g_last_error.c_str(); }

static mfggp_status run_config(mfggp::ExperimentConfig cfg, const char* output_dir,
                               mfggp_result** out) {
  if (out == nullptr) {
    g_last_error = "output handle pointer is NULL";
    return MFGGP_ERROR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    if (output_dir != nullptr) cfg.output_dir = output_dir;
    auto* handle = new mfggp_result{mfggp::run_experiment(cfg), {}};
    handle->serialized = handle->record.dump();
    *out = handle;
  });
}

mfggp_status mfggp_run_json(const char* config_json, const char* output_dir,
                            mfggp_result** out) {
  if (config_json == nullptr) {
    g_last_error = "config_json is NULL";
    return MFGGP_ERROR_INVALID_ARGUMENT;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const std::exception& e) {
    g_last_error = std::string("config is not valid JSON: ") + e.what();
    return MFGGP_ERROR_INVALID_ARGUMENT;
  }
  mfggp::ExperimentConfig cfg;
  mfggp_status status = guarded([&] { cfg = mfggp::ExperimentConfig::from_json(j); });
  if (status != MFGGP_OK) return status;
  return run_config(std::move(cfg), output_dir, out);
}

mfggp_status mfggp_run_file(const char* config_path, const char* output_dir,
                            mfggp_result** out) {
  if (config_path == nullptr) {
    g_last_error = "config_path is NULL";
    return MFGGP_ERROR_INVALID_ARGUMENT;
  }
  mfggp::ExperimentConfig cfg;
  mfggp_status status = guarded([&] { cfg = mfggp::ExperimentConfig::from_file(config_path); });
  if (status != MFGGP_OK)
    return status == MFGGP_ERROR_INVALID_ARGUMENT &&
                   g_last_error.rfind("cannot open", 0) == 0
               ? MFGGP_ERROR_IO
               : status;
  return run_config(std::move(cfg), output_dir, out);
}

const char* mfggp_result_json(const mfggp_result* result) {
  return result == nullptr ? "" : result->serialized.c_str();
}

mfggp_status mfggp_result_number(const mfggp_result* result, const char* dotted_path,
                                 double* value) {
  if (result == nullptr || dotted_path == nullptr || value == nullptr) {
    g_last_error = "NULL argument";
    return MFGGP_ERROR_INVALID_ARGUMENT;
  }
  return guarded([&] { *value = result->record.number_at(dotted_path); });
}

void mfggp_result_free(mfggp_result* result) { delete result; }

}  // extern "C"
