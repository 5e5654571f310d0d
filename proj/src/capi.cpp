/*
 * capi.cpp
 *
 * This source file is part of the otto project.
 *
 * Copyright 2026 the otto authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "otto.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "otto/bus.hpp"
#include "otto/client.hpp"
#include "otto/harness.hpp"
#include "otto/log.hpp"
#include "otto/server.hpp"
#include "otto/storage.hpp"
#include "otto/tcp.hpp"
#include "otto/types.hpp"

namespace {

thread_local std::string tl_error;

otto_status fail(otto_status status, const std::string& msg) {
  tl_error = msg;
  return status;
}

otto_status ok() {
  tl_error.clear();
  return OTTO_OK;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

struct otto_server {
  std::shared_ptr<otto::InProcessBus> bus;
  std::unique_ptr<otto::TcpGateway> gateway;
  std::shared_ptr<otto::CsvStorage> storage;
  std::unique_ptr<otto::Server> server;
};

struct otto_client {
  std::shared_ptr<otto::TcpBus> bus;
  std::unique_ptr<otto::Client> client;
  otto::ApplicationDescription desc;
};

const char* otto_version(void) { return "0.1.0"; }

const char* otto_last_error(void) { return tl_error.c_str(); }

void otto_string_free(char* s) { std::free(s); }

otto_status otto_description_validate(const char* description_json, char** problems_out) {
  if (problems_out) *problems_out = nullptr;
  if (!description_json || !problems_out)
    return fail(OTTO_EINVAL, "description_json and problems_out are required");
  try {
    const auto desc = otto::ApplicationDescription::from_json(description_json);
    const auto problems = otto::validate_description(desc);
    if (problems.empty()) return ok();
    std::string joined;
    for (const auto& p : problems) {
      if (!joined.empty()) joined += '\n';
      joined += p;
    }
    *problems_out = dup_string(joined);
    return fail(OTTO_EINVAL, "description has problems");
  } catch (const std::exception& e) {
    return fail(OTTO_EINVAL, e.what());
  }
}

otto_status otto_server_start(const otto_server_options* options, otto_server** out) {
  if (out) *out = nullptr;
  if (!options || !out || !options->storage_dir)
    return fail(OTTO_EINVAL, "options with a storage_dir and an out pointer are required");
  if (options->log_level) {
    const std::string level = options->log_level;
    if (level == "error")
      otto::log::set_level(otto::log::Level::error);
    else if (level == "warn")
      otto::log::set_level(otto::log::Level::warn);
    else if (level == "info")
      otto::log::set_level(otto::log::Level::info);
    else if (level == "debug")
      otto::log::set_level(otto::log::Level::debug);
    else
      return fail(OTTO_EINVAL, "unknown log level '" + level + "'");
  }
  auto handle = std::make_unique<otto_server>();
  try {
    handle->bus = std::make_shared<otto::InProcessBus>();
    handle->gateway = std::make_unique<otto::TcpGateway>(handle->bus, options->port);
    handle->storage = std::make_shared<otto::CsvStorage>(options->storage_dir);
    otto::ServerOptions so;
    if (options->heartbeat_seconds > 0) so.heartbeat_seconds = options->heartbeat_seconds;
    handle->server = std::make_unique<otto::Server>(handle->bus, handle->storage, so);
    handle->server->start();
  } catch (const otto::Error& e) {
    return fail(OTTO_EIO, e.what());
  } catch (const std::exception& e) {
    return fail(OTTO_EINTERNAL, e.what());
  }
  *out = handle.release();
  return ok();
}

unsigned short otto_server_port(const otto_server* server) {
  return server && server->gateway ? server->gateway->port() : 0;
}

otto_status otto_server_stop(otto_server* server) {
  if (!server) return fail(OTTO_EINVAL, "NULL server handle");
  try {
    server->server->stop();
    server->gateway->stop();
  } catch (const std::exception& e) {
    delete server;
    return fail(OTTO_EINTERNAL, e.what());
  }
  delete server;
  return ok();
}

otto_status otto_client_start(const char* app_name, const char* description_json,
                              const char* broker_address, const char* client_id,
                              otto_client** out) {
  if (out) *out = nullptr;
  if (!app_name || !description_json || !client_id || !out)
    return fail(OTTO_EINVAL, "app_name, description_json, client_id and out are required");
  const char* broker_env = std::getenv("OTTO_BROKER");
  const char* broker = broker_env ? broker_env : broker_address;
  if (!broker) return fail(OTTO_EINVAL, "no broker address (argument or OTTO_BROKER)");

  auto handle = std::make_unique<otto_client>();
  try {
    handle->desc = otto::ApplicationDescription::from_json(description_json);
    if (handle->desc.app_name != app_name)
      return fail(OTTO_EINVAL, "description app_name '" + handle->desc.app_name +
                                   "' does not match '" + app_name + "'");
    const auto problems = otto::validate_description(handle->desc);
    if (!problems.empty()) return fail(OTTO_EINVAL, "invalid description: " + problems.front());
    handle->bus = std::make_shared<otto::TcpBus>(broker);
    otto::ClientOptions co;
    co.client_id = client_id;
    const otto::ApplicationDescription desc = handle->desc;
    handle->client = std::make_unique<otto::Client>(handle->bus, app_name,
                                                    [desc] { return desc; }, co);
    handle->client->start();
  } catch (const otto::Error& e) {
    return fail(OTTO_EINVAL, e.what());
  } catch (const std::exception& e) {
    return fail(OTTO_EINTERNAL, e.what());
  }
  *out = handle.release();
  return ok();
}

otto_status otto_client_get_config(otto_client* client, const double* features,
                                   size_t n_features, double* knobs_out, size_t n_knobs) {
  if (!client || (!features && n_features > 0) || !knobs_out)
    return fail(OTTO_EINVAL, "client, features (when n_features > 0) and knobs_out required");
  if (n_features != client->desc.features.size())
    return fail(OTTO_EINVAL, "n_features does not match the description");
  if (n_knobs != client->desc.knobs.size())
    return fail(OTTO_EINVAL, "n_knobs does not match the description");
  try {
    otto::FeatureVector f;
    f.values.assign(features, features + n_features);
    const otto::KnobConfig config = client->client->get_config(f);
    if (config.size() != n_knobs) return fail(OTTO_EINTERNAL, "configuration size mismatch");
    for (size_t i = 0; i < n_knobs; ++i) knobs_out[i] = config[i];
  } catch (const otto::Error& e) {
    return fail(OTTO_ESTATE, e.what());
  } catch (const std::exception& e) {
    return fail(OTTO_EINTERNAL, e.what());
  }
  return ok();
}

otto_status otto_client_report(otto_client* client, const double* knobs, size_t n_knobs,
                               const double* features, size_t n_features,
                               const double* metrics, size_t n_metrics) {
  if (!client || !knobs || (!features && n_features > 0) || !metrics)
    return fail(OTTO_EINVAL, "client, knobs and metrics are required");
  if (n_knobs != client->desc.knobs.size() || n_features != client->desc.features.size() ||
      n_metrics != client->desc.efps.size())
    return fail(OTTO_EINVAL, "array sizes do not match the description");
  try {
    otto::KnobConfig config;
    config.values.assign(knobs, knobs + n_knobs);
    otto::FeatureVector f;
    f.values.assign(features, features + n_features);
    otto::EfpVector m;
    m.values.assign(metrics, metrics + n_metrics);
    client->client->report(config, f, m);
  } catch (const otto::Error& e) {
    return fail(OTTO_EINVAL, e.what());
  } catch (const std::exception& e) {
    return fail(OTTO_EINTERNAL, e.what());
  }
  return ok();
}

otto_status otto_client_set_requirements(otto_client* client, const char* requirements_json) {
  if (!client || !requirements_json)
    return fail(OTTO_EINVAL, "client and requirements_json are required");
  try {
    const auto j = nlohmann::json::parse(requirements_json);
    const auto efp_index = [&](const std::string& name) {
      for (size_t i = 0; i < client->desc.efps.size(); ++i)
        if (client->desc.efps[i] == name) return static_cast<int>(i);
      throw otto::Error("requirements: unknown EFP '" + name + "'");
    };
    otto::Requirements reqs;
    if (j.contains("rank")) {
      const auto& rank = j.at("rank");
      reqs.rank_efp = efp_index(rank.at("efp").get<std::string>());
      const std::string dir = rank.value("direction", "minimize");
      if (dir != "minimize" && dir != "maximize")
        throw otto::Error("requirements: direction must be minimize or maximize");
      reqs.maximize = dir == "maximize";
    }
    if (j.contains("constraints")) {
      for (const auto& jc : j.at("constraints")) {
        otto::Requirements::Constraint c;
        c.efp = efp_index(jc.at("efp").get<std::string>());
        const std::string op = jc.at("op").get<std::string>();
        if (op != "le" && op != "ge") throw otto::Error("requirements: op must be le or ge");
        c.is_upper = op == "le";
        c.threshold = jc.at("threshold").get<double>();
        c.priority = jc.value("priority", 0);
        reqs.constraints.push_back(c);
      }
    }
    client->client->set_requirements(reqs);
  } catch (const otto::Error& e) {
    return fail(OTTO_EINVAL, e.what());
  } catch (const std::exception& e) {
    return fail(OTTO_EINVAL, e.what());
  }
  return ok();
}

int otto_client_has_knowledge(const otto_client* client) {
  return client && client->client->has_knowledge() ? 1 : 0;
}

otto_status otto_client_stop(otto_client* client) {
  if (!client) return fail(OTTO_EINVAL, "NULL client handle");
  try {
    client->client->stop();
    client->bus->stop();
  } catch (const std::exception& e) {
    delete client;
    return fail(OTTO_EINTERNAL, e.what());
  }
  delete client;
  return ok();
}

otto_status otto_harness_run(const char* spec_path, const char* out_dir,
                             unsigned long long seed) {
  if (!spec_path || !out_dir) return fail(OTTO_EINVAL, "spec_path and out_dir are required");
  std::ifstream in(spec_path);
  if (!in) return fail(OTTO_EIO, std::string("cannot read ") + spec_path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    const int rc = otto::harness::run_experiment_text(text.str(), out_dir, seed);
    if (rc != 0)
      return fail(OTTO_EINTERNAL, "experiment failed; partial results kept in " +
                                      std::string(out_dir));
  } catch (const otto::Error& e) {
    return fail(OTTO_EINVAL, e.what());
  } catch (const std::exception& e) {
    return fail(OTTO_EINTERNAL, e.what());
  }
  return ok();
}

}  // extern "C"
