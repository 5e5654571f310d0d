/*
 * harness.cpp
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

#include "otto/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "otto/bus.hpp"
#include "otto/client.hpp"
#include "otto/clustering.hpp"
#include "otto/csv.hpp"
#include "otto/doe.hpp"
#include "otto/evaluate.hpp"
#include "otto/knowledge.hpp"
#include "otto/log.hpp"
#include "otto/model.hpp"
#include "otto/restriction.hpp"
#include "otto/server.hpp"
#include "otto/storage.hpp"

namespace otto::harness {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// splitmix64; hand-rolled so streams are identical across platforms.
struct SplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo && v <= hi))
    throw Error(std::string(what) + " out of range [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "]: " + std::to_string(v));
}

}  // namespace

EfpVector binh(double x, double y) {
  check_range(x, -7.0, 4.0, "binh x");
  check_range(y, -7.0, 4.0, "binh y");
  return EfpVector{{x * x - y, -0.5 * x - y - 1.0}};
}

EfpVector kursawe(double x1, double x2, double x3) {
  const double x[3] = {x1, x2, x3};
  for (double v : x) check_range(v, -5.0, 5.0, "kursawe x");
  double k1 = 0.0;
  for (int i = 0; i < 2; ++i)
    k1 += -10.0 * std::exp(-0.2 * std::sqrt(x[i] * x[i] + x[i + 1] * x[i + 1]));
  double k2 = 0.0;
  for (int i = 0; i < 3; ++i)
    k2 += std::pow(std::abs(x[i]), 0.8) + 5.0 * std::sin(x[i] * x[i] * x[i]);
  return EfpVector{{k1, k2}};
}

Ligand docklike_ligand(std::uint64_t seed, std::uint64_t index) {
  SplitMix g{mix(seed, index)};
  Ligand lig;
  lig.atoms = static_cast<double>(28 + g.next() % 126);    // 28..153
  lig.rotamers = static_cast<double>(2 + g.next() % 52);   // 2..53
  return lig;
}

double docklike_time(const KnobConfig& config, double atoms, double rotamers) {
  const double poses = config[0], skip = config[1];
  return 4.0 + 2.5 * poses + 1.5 * skip + 0.12 * atoms + 0.35 * rotamers +
         0.055 * poses * atoms + 0.19 * skip * rotamers;
}

double docklike_quality(const KnobConfig& config) {
  const double poses = config[0], skip = config[1];
  return 50.0 + 10.0 * poses - 5.0 * skip + 0.5 * poses * skip;
}

double docklike_noise(double sigma, std::uint64_t seed, std::uint64_t index) {
  if (sigma <= 0.0) return 1.0;
  SplitMix g{mix(seed ^ 0x6e6f697365ULL, index)};
  double u1 = g.uniform();
  while (u1 <= 0.0) u1 = g.uniform();
  const double u2 = g.uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return std::exp(sigma * z);
}

ApplicationDescription binh_description() {
  ApplicationDescription d;
  d.app_name = "binh";
  d.knobs = {KnobDomain::range("x", -7, 4, 1), KnobDomain::range("y", -7, 4, 1)};
  d.efps = {"b1", "b2"};
  return d;
}

ApplicationDescription kursawe_description() {
  ApplicationDescription d;
  d.app_name = "kursawe";
  d.knobs = {KnobDomain::range("x1", -5, 5, 1), KnobDomain::range("x2", -5, 5, 1),
             KnobDomain::range("x3", -5, 5, 1)};
  d.efps = {"k1", "k2"};
  return d;
}

ApplicationDescription docklike_description() {
  ApplicationDescription d;
  d.app_name = "docklike";
  d.knobs = {KnobDomain::range("poses", 1, 8, 1), KnobDomain::range("skip", 1, 6, 1)};
  d.efps = {"time", "quality"};
  d.features = {"atoms", "rotamers"};
  d.cluster_params.method = ClusterMethod::kmeans;
  d.cluster_params.k = 5;
  return d;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (...) {
      throw Error("experiment spec: bad integer '" + item + "' for " + key);
    }
  }
  if (out.empty()) throw Error("experiment spec: empty list for " + key);
  return out;
}

int parse_int(const std::string& value, const std::string& key) {
  try {
    return std::stoi(value);
  } catch (...) {
    throw Error("experiment spec: bad integer '" + value + "' for " + key);
  }
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    return std::stod(value);
  } catch (...) {
    throw Error("experiment spec: bad number '" + value + "' for " + key);
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error("experiment spec: bad boolean '" + value + "' for " + key);
}

}  // namespace

ExperimentSpec ExperimentSpec::parse(const std::string& text) {
  ExperimentSpec spec;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("experiment spec line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "app") {
      if (value != "binh" && value != "kursawe" && value != "docklike")
        throw Error("experiment spec: unknown app '" + value + "'");
      spec.app = value;
    } else if (key == "mode") {
      if (value != "accuracy" && value != "timing" && value != "clusters" && value != "fault")
        throw Error("experiment spec: unknown mode '" + value + "'");
      spec.mode = value;
    } else if (key == "budgets") {
      spec.budgets = parse_int_list(value, key);
    } else if (key == "clients") {
      spec.clients = parse_int_list(value, key);
    } else if (key == "cluster_counts") {
      spec.cluster_counts = parse_int_list(value, key);
    } else if (key == "repeats") {
      spec.repeats = parse_int(value, key);
    } else if (key == "repetitions") {
      spec.repetitions = parse_int(value, key);
    } else if (key == "eval_cost_ms") {
      spec.eval_cost_ms = parse_double(value, key);
    } else if (key == "noise_sigma") {
      spec.noise_sigma = parse_double(value, key);
    } else if (key == "kill_one") {
      spec.kill_one = parse_bool(value, key);
    } else if (key == "late_joiner") {
      spec.late_joiner = parse_bool(value, key);
    } else if (key == "seed") {
      try {
        spec.seed = std::stoull(value);
      } catch (...) {
        throw Error("experiment spec: bad seed '" + value + "'");
      }
    } else {
      throw Error("experiment spec: unknown key '" + key + "'");
    }
  }
  return spec;
}

namespace {

ApplicationDescription description_for(const std::string& app) {
  if (app == "binh") return binh_description();
  if (app == "kursawe") return kursawe_description();
  if (app == "docklike") return docklike_description();
  throw Error("unknown application '" + app + "'");
}

/// Ligand features for docklike; the analytic apps have none.
FeatureVector features_for(const std::string& app, std::uint64_t stream_seed,
                           std::uint64_t index) {
  if (app != "docklike") return FeatureVector{};
  const Ligand lig = docklike_ligand(stream_seed, index);
  return FeatureVector{{lig.atoms, lig.rotamers}};
}

EfpVector eval_app(const std::string& app, const KnobConfig& config, const FeatureVector& f,
                   double noise_sigma, std::uint64_t noise_seed, std::uint64_t index) {
  if (app == "binh") return binh(config[0], config[1]);
  if (app == "kursawe") return kursawe(config[0], config[1], config[2]);
  const double t = docklike_time(config, f[0], f[1]) * docklike_noise(noise_sigma, noise_seed, index);
  return EfpVector{{t, docklike_quality(config)}};
}

std::ofstream open_csv(const fs::path& path, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << header << '\n';
  return out;
}

int run_accuracy(const ExperimentSpec& spec, const fs::path& out_dir, std::uint64_t seed) {
  auto csv_out = open_csv(out_dir / "metrics_vs_samples.csv",
                          "app,efp,budget,repeat,seed,family,eligible,forced,regime,"
                          "val_signed_r2,val_mae_adj,grid_signed_r2,grid_mae_adj");

  ApplicationDescription base = description_for(spec.app);
  const auto grid = apply_restrictions(
      full_factorial(base.knobs),
      Restriction::compile(base.doe_params.restriction, base.knobs));
  const std::size_t nk = base.knobs.size(), nf = base.features.size();

  for (int budget : spec.budgets) {
    for (int rep = 0; rep < spec.repeats; ++rep) {
      const std::uint64_t sr =
          mix(seed, mix(static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(rep)));
      ApplicationDescription desc = base;
      desc.doe_params.n = budget;
      desc.doe_params.repetitions = spec.repetitions;

      const Design design = generate_design(desc, {}, sr);
      if (design.points.empty()) throw Error("accuracy: empty design");

      std::vector<Observation> observations;
      std::uint64_t counter = 0;
      for (const auto& p : design.points)
        for (int r = 0; r < design.repetitions; ++r) {
          Observation o;
          o.client_id = "harness";
          o.config = p;
          o.features = features_for(spec.app, sr, counter);
          o.metrics = eval_app(spec.app, p, o.features, spec.noise_sigma, sr, counter);
          o.timestamp_ms = static_cast<std::int64_t>(++counter);
          observations.push_back(std::move(o));
        }

      // Grid truth is evaluated at the mean observed features (the analytic
      // apps have none, so this is a no-op for them).
      FeatureVector mean_f;
      if (nf > 0) {
        mean_f.values.assign(nf, 0.0);
        for (const auto& o : observations)
          for (std::size_t d = 0; d < nf; ++d) mean_f[d] += o.features[d];
        for (std::size_t d = 0; d < nf; ++d)
          mean_f[d] /= static_cast<double>(observations.size());
      }

      for (std::size_t e = 0; e < desc.efps.size(); ++e) {
        const Dataset data = Dataset::from_observations(desc, observations, e);
        const ValidationReport report = evaluate_candidates(data, desc.learn_params, sr);
        SelectionOutcome sel = select_model(report, desc.learn_params, 0, false);
        const bool any_eligible = !sel.eligible.empty();
        if (sel.chosen.empty()) sel = select_model(report, desc.learn_params, 0, true);
        const ModelPtr model = fit_final(sel.chosen, data, desc.learn_params, sr);

        Eigen::VectorXd actual(static_cast<Eigen::Index>(grid.size()));
        Eigen::VectorXd predicted(static_cast<Eigen::Index>(grid.size()));
        Eigen::VectorXd x(static_cast<Eigen::Index>(nk + nf));
        for (std::size_t i = 0; i < grid.size(); ++i) {
          for (std::size_t k = 0; k < nk; ++k) x(static_cast<Eigen::Index>(k)) = grid[i][k];
          for (std::size_t d = 0; d < nf; ++d) x(static_cast<Eigen::Index>(nk + d)) = mean_f[d];
          predicted(static_cast<Eigen::Index>(i)) = model->predict(x);
          actual(static_cast<Eigen::Index>(i)) =
              eval_app(spec.app, grid[i], mean_f, 0.0, 0, 0)[e];
        }

        double val_r2 = 0.0, val_mae = 0.0;
        for (const auto& c : report.candidates)
          if (c.family == sel.chosen) {
            val_r2 = c.signed_r2;
            val_mae = c.mae_adj;
          }

        csv_out << spec.app << ',' << desc.efps[e] << ',' << budget << ',' << rep << ',' << sr
                << ',' << sel.chosen << ',' << (any_eligible ? 1 : 0) << ','
                << (sel.forced ? 1 : 0) << ',' << to_string(report.regime) << ','
                << csv::format_double(val_r2) << ',' << csv::format_double(val_mae) << ','
                << csv::format_double(signed_r2(actual, predicted)) << ','
                << csv::format_double(mae_adj(actual, predicted).value) << '\n';
      }
    }
  }
  return 0;
}

/// A polling worker: evaluates design assignments through the oracle and
/// reports them; idles (without reporting) when it has nothing assigned.
struct SimClient {
  std::shared_ptr<Client> client;
  std::thread worker;
  std::atomic<bool> stop{false};
  std::atomic<int> evaluated{0};
  std::atomic<bool> abandoned{false};
};

void run_worker(SimClient& sim, const std::string& app, double eval_cost_ms, double noise_sigma,
                std::uint64_t stream_seed, int kill_after) {
  std::uint64_t counter = 0;
  while (!sim.stop) {
    const FeatureVector f = features_for(app, stream_seed, counter);
    const auto [config, source] = sim.client->get_config_ex(f);
    if (source == ConfigSource::assigned) {
      if (eval_cost_ms > 0)
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(eval_cost_ms));
      sim.client->report(config, f, eval_app(app, config, f, noise_sigma, stream_seed, counter));
      ++counter;
      const int done = ++sim.evaluated;
      if (kill_after > 0 && done >= kill_after) {
        sim.client->abandon();
        sim.abandoned = true;
        return;
      }
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
}

int run_timing(const ExperimentSpec& spec, const fs::path& out_dir, std::uint64_t seed) {
  auto csv_out =
      open_csv(out_dir / "timing.csv", "app,clients,repeat,t2k_ms,explore_ms,modeling_ms");

  for (int n_clients : spec.clients) {
    for (int rep = 0; rep < spec.repeats; ++rep) {
      const std::uint64_t sr = mix(
          seed, mix(static_cast<std::uint64_t>(n_clients), static_cast<std::uint64_t>(rep)));
      ApplicationDescription desc = description_for(spec.app);
      desc.doe_params.n = spec.budgets.front();
      desc.doe_params.repetitions = spec.repetitions;

      auto bus = std::make_shared<InProcessBus>();
      const fs::path state =
          out_dir / ("state_timing_" + std::to_string(n_clients) + "_" + std::to_string(rep));
      auto storage = std::make_shared<CsvStorage>(state.string());
      ServerOptions so;
      so.heartbeat_seconds = 1.0;
      so.rng_seed = sr;
      Server server(bus, storage, so);
      server.start();

      std::vector<std::unique_ptr<SimClient>> sims;
      for (int i = 0; i < n_clients; ++i) {
        auto sim = std::make_unique<SimClient>();
        ClientOptions co;
        co.client_id = "w" + std::to_string(i);
        co.heartbeat_seconds = 0.5;
        sim->client = std::make_shared<Client>(bus, desc.app_name,
                                               [desc] { return desc; }, co);
        sim->client->start();
        sims.push_back(std::move(sim));
      }
      for (std::size_t i = 0; i < sims.size(); ++i) {
        SimClient* sim = sims[i].get();
        const std::uint64_t ws = mix(sr, 1000 + i);
        sim->worker = std::thread([sim, &spec, ws] {
          run_worker(*sim, spec.app, spec.eval_cost_ms, spec.noise_sigma, ws, -1);
        });
      }

      const bool ok = server.wait_for_phase(desc.app_name, Phase::serving,
                                            std::chrono::milliseconds(600000));
      const auto status = server.app_status(desc.app_name);
      for (auto& sim : sims) sim->stop = true;
      for (auto& sim : sims) {
        if (sim->worker.joinable()) sim->worker.join();
        sim->client->stop();
      }
      server.stop();
      if (!ok || !status)
        throw Error("timing: server did not reach the serving phase in time");

      using fms = std::chrono::duration<double, std::milli>;
      const double t2k = fms(status->knowledge_ready - status->first_hello).count();
      const double explore = fms(status->explore_done - status->first_hello).count();
      const double modeling = fms(status->knowledge_ready - status->explore_done).count();
      csv_out << spec.app << ',' << n_clients << ',' << rep << ',' << csv::format_double(t2k)
              << ',' << csv::format_double(explore) << ',' << csv::format_double(modeling)
              << '\n';
      csv_out.flush();

      std::error_code ec;
      fs::remove_all(state, ec);
    }
  }
  return 0;
}

int run_clusters(const ExperimentSpec& spec, const fs::path& out_dir, std::uint64_t seed) {
  auto csv_out = open_csv(out_dir / "cluster_swing.csv", "app,k,repeat,normalized_range");

  // The most feature-sensitive corner of the docklike knob grid: per-cluster
  // time spread is widest here, which is what clustering should shrink.
  const KnobConfig probe{{8.0, 6.0}};
  constexpr std::size_t kLigands = 200;

  for (int k : spec.cluster_counts) {
    for (int rep = 0; rep < spec.repeats; ++rep) {
      const std::uint64_t sr =
          mix(seed, mix(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(rep)));
      std::vector<FeatureVector> feats;
      std::vector<double> times;
      feats.reserve(kLigands);
      times.reserve(kLigands);
      for (std::size_t i = 0; i < kLigands; ++i) {
        const Ligand lig = docklike_ligand(sr, i);
        feats.push_back(FeatureVector{{lig.atoms, lig.rotamers}});
        times.push_back(docklike_time(probe, lig.atoms, lig.rotamers));
      }
      const auto [tmin, tmax] = std::minmax_element(times.begin(), times.end());
      const double global_range = *tmax - *tmin;

      ClusterParams cp;
      cp.method = ClusterMethod::kmeans;
      cp.k = k;
      const auto centroids = cluster_features(feats, cp, sr);

      std::vector<double> lo(centroids.size(), std::numeric_limits<double>::infinity());
      std::vector<double> hi(centroids.size(), -std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < kLigands; ++i) {
        const std::size_t c = nearest_centroid(feats[i], centroids);
        lo[c] = std::min(lo[c], times[i]);
        hi[c] = std::max(hi[c], times[i]);
      }
      double sum = 0.0;
      std::size_t populated = 0;
      for (std::size_t c = 0; c < centroids.size(); ++c)
        if (hi[c] >= lo[c]) {
          sum += hi[c] - lo[c];
          ++populated;
        }
      const double mean_range = populated ? sum / static_cast<double>(populated) : 0.0;
      csv_out << "docklike," << k << ',' << rep << ','
              << csv::format_double(global_range > 0 ? mean_range / global_range : 0.0) << '\n';
    }
  }
  return 0;
}

std::string fnv64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int run_fault(const ExperimentSpec& spec, const fs::path& out_dir, std::uint64_t seed) {
  ApplicationDescription desc = description_for(spec.app);
  desc.doe_params.n = spec.budgets.front();
  desc.doe_params.repetitions = spec.repetitions;

  auto bus = std::make_shared<InProcessBus>();
  const fs::path state = out_dir / "state_fault";
  auto storage = std::make_shared<CsvStorage>(state.string());
  ServerOptions so;
  so.heartbeat_seconds = 0.3;
  so.rng_seed = mix(seed, 77);
  Server server(bus, storage, so);
  server.start();

  const int n_clients = spec.clients.empty() ? 4 : spec.clients.front();
  std::vector<std::unique_ptr<SimClient>> sims;
  for (int i = 0; i < n_clients; ++i) {
    auto sim = std::make_unique<SimClient>();
    ClientOptions co;
    co.client_id = "c" + std::to_string(i);
    co.heartbeat_seconds = 0.3;
    sim->client = std::make_shared<Client>(bus, desc.app_name, [desc] { return desc; }, co);
    sim->client->start();
    sims.push_back(std::move(sim));
  }
  for (std::size_t i = 0; i < sims.size(); ++i) {
    SimClient* sim = sims[i].get();
    const std::uint64_t ws = mix(seed, 2000 + i);
    const int kill_after = (spec.kill_one && i == 0) ? 2 : -1;
    sim->worker = std::thread([sim, &spec, ws, kill_after] {
      run_worker(*sim, spec.app, spec.eval_cost_ms, spec.noise_sigma, ws, kill_after);
    });
  }

  const bool ok =
      server.wait_for_phase(desc.app_name, Phase::serving, std::chrono::milliseconds(300000));
  for (auto& sim : sims) sim->stop = true;
  for (auto& sim : sims)
    if (sim->worker.joinable()) sim->worker.join();
  if (!ok) {
    for (auto& sim : sims) sim->client->stop();
    server.stop();
    throw Error("fault: server did not reach the serving phase in time");
  }

  const auto wait_knowledge = [](Client& c, double timeout_s) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
      if (c.has_knowledge()) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return false;
  };

  struct PayloadRow {
    std::string client_id, role, payload;
    bool received = false;
  };
  std::vector<PayloadRow> payloads;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i]->abandoned) continue;  // died mid-run, receives nothing
    PayloadRow row;
    row.client_id = "c" + std::to_string(i);
    row.role = "survivor";
    row.received = wait_knowledge(*sims[i]->client, 15.0);
    row.payload = sims[i]->client->knowledge_payload();
    payloads.push_back(std::move(row));
  }

  if (spec.late_joiner) {
    Client late(bus, desc.app_name, [desc] { return desc; },
                ClientOptions{"late", 0.3, 10000});
    late.start();
    PayloadRow row;
    row.client_id = "late";
    row.role = "late_joiner";
    row.received = wait_knowledge(late, 15.0);
    row.payload = late.knowledge_payload();
    payloads.push_back(std::move(row));
    late.stop();
  }

  for (auto& sim : sims) sim->client->stop();
  server.stop();

  // Coverage evidence: every planned design unit must have been observed.
  const auto doe = storage->read_doe(desc.app_name, desc);
  const auto observations = storage->read_observations(desc.app_name, desc);
  std::map<KnobConfig, int> owed;
  for (const auto& row : doe) owed[row.config] += row.remaining_repetitions;
  std::map<KnobConfig, int> got;
  for (const auto& o : observations) ++got[o.config];

  auto fault_csv = open_csv(out_dir / "fault.csv", "config,owed,observed,covered");
  for (const auto& [config, units] : owed) {
    std::string cfg;
    for (std::size_t k = 0; k < config.size(); ++k) {
      if (k) cfg += ' ';
      cfg += csv::format_double(config[k]);
    }
    const int observed = got.count(config) ? got.at(config) : 0;
    fault_csv << cfg << ',' << units << ',' << observed << ','
              << (observed >= units ? 1 : 0) << '\n';
  }

  auto payload_csv =
      open_csv(out_dir / "payloads.csv", "client_id,role,received,bytes,hash,identical_to_first");
  const std::string* first = nullptr;
  for (const auto& row : payloads)
    if (row.received && !row.payload.empty()) {
      first = &row.payload;
      break;
    }
  for (const auto& row : payloads) {
    const bool identical = first && row.payload == *first;
    payload_csv << row.client_id << ',' << row.role << ',' << (row.received ? 1 : 0) << ','
                << row.payload.size() << ',' << fnv64_hex(row.payload) << ','
                << (identical ? 1 : 0) << '\n';
  }
  return 0;
}

}  // namespace

int run_experiment(const ExperimentSpec& spec, const std::string& out_dir, std::uint64_t seed) {
  try {
    fs::create_directories(out_dir);
    if (spec.mode == "accuracy") return run_accuracy(spec, out_dir, seed);
    if (spec.mode == "timing") return run_timing(spec, out_dir, seed);
    if (spec.mode == "clusters") return run_clusters(spec, out_dir, seed);
    if (spec.mode == "fault") return run_fault(spec, out_dir, seed);
    throw Error("experiment spec: unknown mode '" + spec.mode + "'");
  } catch (const std::exception& e) {
    log::error(std::string("experiment failed: ") + e.what());
    return 1;
  }
}

int run_experiment_text(const std::string& spec_text, const std::string& out_dir,
                        std::uint64_t seed) {
  ExperimentSpec spec = ExperimentSpec::parse(spec_text);
  if (seed != 0) spec.seed = seed;
  return run_experiment(spec, out_dir, spec.seed);
}

}  // namespace otto::harness
