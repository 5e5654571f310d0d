/*
 * harness.hpp
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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otto/types.hpp"

namespace otto::harness {

/// b1 = x^2 - y, b2 = -0.5 x - y - 1 on -7 <= x, y <= 4 (out of range throws).
EfpVector binh(double x, double y);

/// k1 = sum_{i=1..2} -10 exp(-0.2 sqrt(x_i^2 + x_{i+1}^2)),
/// k2 = sum_{i=1..3} |x_i|^0.8 + 5 sin(x_i^3) on -5 <= x_i <= 5.
EfpVector kursawe(double x1, double x2, double x3);

/// Synthetic docking-like workload. Knobs: poses in 1..8, skip in 1..6.
/// Ligand features: atoms ~ uniform integers [28, 153], rotamers ~ uniform
/// integers [2, 53]. The published time oracle (zero-noise) is
///   time = 4 + 2.5 poses + 1.5 skip + 0.12 atoms + 0.35 rotamers
///        + 0.055 poses*atoms + 0.19 skip*rotamers
/// (monotone in both features) and quality = 50 + 10 poses - 5 skip
/// + 0.5 poses*skip. Noisy mode multiplies time by exp(N(0, sigma^2)).
struct Ligand {
  double atoms = 0;
  double rotamers = 0;
};

/// Deterministic ligand stream: item `index` of the stream named by `seed`.
Ligand docklike_ligand(std::uint64_t seed, std::uint64_t index);

double docklike_time(const KnobConfig& config, double atoms, double rotamers);
double docklike_quality(const KnobConfig& config);

/// Lognormal multiplicative noise, deterministic per (seed, index).
double docklike_noise(double sigma, std::uint64_t seed, std::uint64_t index);

/// Application descriptions used by experiments and tests.
ApplicationDescription binh_description();
ApplicationDescription kursawe_description();
ApplicationDescription docklike_description();

/// Experiment definition, parsed from "key = value" text (lists are
/// comma-separated). Keys: app (binh|kursawe|docklike), mode
/// (accuracy|timing|clusters|fault), budgets, clients, cluster_counts,
/// repeats, repetitions, eval_cost_ms, noise_sigma, kill_one, late_joiner,
/// seed.
struct ExperimentSpec {
  std::string app = "binh";
  std::string mode = "accuracy";
  std::vector<int> budgets = {10, 20, 30, 40, 50};
  std::vector<int> clients = {1, 2, 4, 8};
  std::vector<int> cluster_counts = {1, 2, 3, 4, 5, 6, 7, 8};
  int repeats = 20;
  int repetitions = 1;
  double eval_cost_ms = 0.0;
  double noise_sigma = 0.0;
  bool kill_one = false;
  bool late_joiner = false;
  std::uint64_t seed = 0;

  static ExperimentSpec parse(const std::string& text);
};

/// Runs the experiment and writes its CSV outputs under out_dir:
///   accuracy -> metrics_vs_samples.csv (direct pipeline per budget/repeat)
///   timing   -> timing.csv (broker + server + N clients per client count)
///   clusters -> cluster_swing.csv (per-cluster EFP spread vs cluster count)
///   fault    -> fault.csv + payloads.csv (kill/rejoin correctness evidence)
/// Returns 0 on success; partial results are preserved on failure.
int run_experiment(const ExperimentSpec& spec, const std::string& out_dir, std::uint64_t seed);

/// Convenience: parse text, override the seed, run.
int run_experiment_text(const std::string& spec_text, const std::string& out_dir,
                        std::uint64_t seed);

}  // namespace otto::harness
