/*
 * otto_cli.cpp
 *
 * Command-line entry points: the tuning server, the experiment harness and
 * a description validator. Everything goes through the public C API.
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

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "otto.h"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otto: distributed online autotuning"};
  app.set_version_flag("--version", otto_version());
  app.require_subcommand(1);

  auto* server_cmd = app.add_subcommand("server", "Run the tuning server");
  std::string storage_dir = "otto-data";
  unsigned port = 1887;
  double heartbeat = 0.0;
  std::string log_level = "info";
  server_cmd->add_option("--storage", storage_dir, "Directory for per-application state")
      ->capture_default_str();
  server_cmd->add_option("--port", port, "TCP port; 0 picks an ephemeral one")
      ->capture_default_str()
      ->check(CLI::Range(0u, 65535u));
  server_cmd->add_option("--heartbeat", heartbeat, "Client heartbeat period in seconds");
  server_cmd->add_option("--log-level", log_level, "error, warn, info or debug")
      ->capture_default_str()
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  auto* harness_cmd = app.add_subcommand("harness", "Run reproducible experiments");
  harness_cmd->require_subcommand(1);
  auto* run_cmd = harness_cmd->add_subcommand("run", "Run an experiment spec file");
  std::string spec_path;
  std::string out_dir = "results";
  unsigned long long seed = 0;
  run_cmd->add_option("spec", spec_path, "Experiment spec (key = value lines)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--seed", seed, "Seed override (0 keeps the spec's seed)");

  auto* validate_cmd = app.add_subcommand("validate", "Validate an application description");
  std::string desc_path;
  validate_cmd->add_option("file", desc_path, "Description JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  if (server_cmd->parsed()) {
    otto_server_options options{};
    options.storage_dir = storage_dir.c_str();
    options.port = static_cast<unsigned short>(port);
    options.heartbeat_seconds = heartbeat;
    options.log_level = log_level.c_str();
    otto_server* server = nullptr;
    if (otto_server_start(&options, &server) != OTTO_OK) {
      std::cerr << "error: " << otto_last_error() << '\n';
      return 1;
    }
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "otto server listening on port " << otto_server_port(server) << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    otto_server_stop(server);
    return 0;
  }

  if (validate_cmd->parsed()) {
    std::ifstream in(desc_path);
    if (!in) {
      std::cerr << "error: cannot read " << desc_path << '\n';
      return 1;
    }
    std::ostringstream text;
    text << in.rdbuf();
    char* problems = nullptr;
    const otto_status rc = otto_description_validate(text.str().c_str(), &problems);
    if (rc == OTTO_OK) {
      std::cout << "ok\n";
      return 0;
    }
    if (problems) {
      std::cerr << problems << '\n';
      otto_string_free(problems);
    } else {
      std::cerr << "error: " << otto_last_error() << '\n';
    }
    return 1;
  }

  if (run_cmd->parsed()) {
    if (otto_harness_run(spec_path.c_str(), out_dir.c_str(), seed) != OTTO_OK) {
      std::cerr << "error: " << otto_last_error() << '\n';
      return 1;
    }
    std::cout << "results written to " << out_dir << '\n';
    return 0;
  }
  return 0;
}
