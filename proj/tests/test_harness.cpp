#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "otto/harness.hpp"
#include "otto/types.hpp"

using namespace otto;
using namespace otto::harness;

namespace {

std::string fresh_dir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}() ^
                            static_cast<std::uint64_t>(
                                std::chrono::steady_clock::now().time_since_epoch().count())};
  auto path = std::filesystem::temp_directory_path() /
              ("otto_harness_test_" + tag + "_" + std::to_string(rng()));
  std::filesystem::create_directories(path);
  return path.string();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("binh objectives match their closed forms") {
    auto v = binh(1.0, 2.0);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(-1.0));         // 1^2 - 2
    CHECK(v[1] == doctest::Approx(-3.5));         // -0.5 - 2 - 1
    v = binh(-7.0, 4.0);                          // the corners are inside
    CHECK(v[0] == doctest::Approx(45.0));
    CHECK(v[1] == doctest::Approx(-1.5));
    CHECK_THROWS_AS(binh(-7.1, 0.0), Error);
    CHECK_THROWS_AS(binh(0.0, 4.5), Error);
  }

  TEST_CASE("kursawe objectives match their closed forms") {
    // At the origin both exponentials are exp(0): k1 = -20, k2 = 0.
    auto v = kursawe(0.0, 0.0, 0.0);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(-20.0));
    CHECK(v[1] == doctest::Approx(0.0));

    const double x1 = 1.0, x2 = -2.0, x3 = 3.0;
    const double k1 = -10.0 * std::exp(-0.2 * std::sqrt(x1 * x1 + x2 * x2)) -
                      10.0 * std::exp(-0.2 * std::sqrt(x2 * x2 + x3 * x3));
    const double k2 = std::pow(std::abs(x1), 0.8) + 5.0 * std::sin(x1 * x1 * x1) +
                      std::pow(std::abs(x2), 0.8) + 5.0 * std::sin(x2 * x2 * x2) +
                      std::pow(std::abs(x3), 0.8) + 5.0 * std::sin(x3 * x3 * x3);
    v = kursawe(x1, x2, x3);
    CHECK(v[0] == doctest::Approx(k1).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(k2).epsilon(1e-12));
    CHECK_THROWS_AS(kursawe(-5.5, 0.0, 0.0), Error);
    CHECK_THROWS_AS(kursawe(0.0, 0.0, 5.5), Error);
  }

  TEST_CASE("docklike oracle follows the published polynomial") {
    const KnobConfig c{{3.0, 2.0}};
    const double atoms = 50.0, rotamers = 10.0;
    const double expected_time = 4.0 + 2.5 * 3 + 1.5 * 2 + 0.12 * atoms + 0.35 * rotamers +
                                 0.055 * 3 * atoms + 0.19 * 2 * rotamers;
    CHECK(docklike_time(c, atoms, rotamers) == doctest::Approx(expected_time).epsilon(1e-12));
    CHECK(docklike_quality(c) == doctest::Approx(50.0 + 30.0 - 10.0 + 0.5 * 6.0));

    // Time grows with either feature at any fixed config.
    CHECK(docklike_time(c, atoms + 1, rotamers) > docklike_time(c, atoms, rotamers));
    CHECK(docklike_time(c, atoms, rotamers + 1) > docklike_time(c, atoms, rotamers));
  }

  TEST_CASE("ligand streams are bounded integers, deterministic per seed") {
    for (std::uint64_t i = 0; i < 200; ++i) {
      const Ligand lig = docklike_ligand(7, i);
      CHECK(lig.atoms >= 28.0);
      CHECK(lig.atoms <= 153.0);
      CHECK(lig.rotamers >= 2.0);
      CHECK(lig.rotamers <= 53.0);
      CHECK(lig.atoms == std::floor(lig.atoms));
      CHECK(lig.rotamers == std::floor(lig.rotamers));
    }
    const Ligand again = docklike_ligand(7, 3);
    CHECK(again.atoms == docklike_ligand(7, 3).atoms);
    CHECK(again.rotamers == docklike_ligand(7, 3).rotamers);

    bool any_differs = false;
    for (std::uint64_t i = 0; i < 10 && !any_differs; ++i)
      any_differs = docklike_ligand(7, i).atoms != docklike_ligand(8, i).atoms ||
                    docklike_ligand(7, i).rotamers != docklike_ligand(8, i).rotamers;
    CHECK(any_differs);
  }

  TEST_CASE("docklike noise is lognormal with the requested sigma") {
    CHECK(docklike_noise(0.0, 42, 0) == doctest::Approx(1.0));
    CHECK(docklike_noise(0.5, 42, 17) == docklike_noise(0.5, 42, 17));
    CHECK(docklike_noise(0.5, 42, 17) != docklike_noise(0.5, 43, 17));

    const double sigma = 0.5;
    const int n = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double m = docklike_noise(sigma, 42, static_cast<std::uint64_t>(i));
      CHECK(m > 0.0);
      const double l = std::log(m);
      sum += l;
      sum2 += l * l;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(mean) < 0.05);
    CHECK(sd == doctest::Approx(sigma).epsilon(0.1));
  }

  TEST_CASE("built-in application descriptions are valid") {
    for (const auto& desc : {binh_description(), kursawe_description(), docklike_description()})
      CHECK(validate_description(desc).empty());

    const auto binh_d = binh_description();
    CHECK(binh_d.knobs.size() == 2);
    CHECK(binh_d.knobs[0].values.front() == -7.0);
    CHECK(binh_d.knobs[0].values.back() == 4.0);
    CHECK(binh_d.efps == std::vector<std::string>{"b1", "b2"});
    CHECK(binh_d.features.empty());

    const auto dock_d = docklike_description();
    CHECK(dock_d.features == std::vector<std::string>{"atoms", "rotamers"});
    CHECK(dock_d.cluster_params.method == ClusterMethod::kmeans);
  }

  TEST_CASE("experiment specs parse key = value text") {
    SUBCASE("defaults survive an empty spec") {
      const auto spec = ExperimentSpec::parse("");
      CHECK(spec.app == "binh");
      CHECK(spec.mode == "accuracy");
      CHECK(spec.budgets == std::vector<int>{10, 20, 30, 40, 50});
      CHECK(spec.clients == std::vector<int>{1, 2, 4, 8});
      CHECK(spec.repeats == 20);
      CHECK(spec.repetitions == 1);
      CHECK(spec.eval_cost_ms == 0.0);
      CHECK_FALSE(spec.kill_one);
      CHECK_FALSE(spec.late_joiner);
    }

    SUBCASE("every key is honored; comments and blanks are skipped") {
      const auto spec = ExperimentSpec::parse(
          "# which app\n"
          "app = kursawe\n"
          "mode = fault\n"
          "\n"
          "budgets = 5, 10\n"
          "clients = 3\n"
          "cluster_counts = 2,4\n"
          "repeats = 7\n"
          "repetitions = 2\n"
          "eval_cost_ms = 12.5  # per evaluation\n"
          "noise_sigma = 0.25\n"
          "kill_one = yes\n"
          "late_joiner = false\n"
          "seed = 99\n");
      CHECK(spec.app == "kursawe");
      CHECK(spec.mode == "fault");
      CHECK(spec.budgets == std::vector<int>{5, 10});
      CHECK(spec.clients == std::vector<int>{3});
      CHECK(spec.cluster_counts == std::vector<int>{2, 4});
      CHECK(spec.repeats == 7);
      CHECK(spec.repetitions == 2);
      CHECK(spec.eval_cost_ms == doctest::Approx(12.5));
      CHECK(spec.noise_sigma == doctest::Approx(0.25));
      CHECK(spec.kill_one);
      CHECK_FALSE(spec.late_joiner);
      CHECK(spec.seed == 99);
    }

    SUBCASE("malformed input is rejected with a reason") {
      CHECK_THROWS_AS(ExperimentSpec::parse("app = doom"), Error);
      CHECK_THROWS_AS(ExperimentSpec::parse("mode = sideways"), Error);
      CHECK_THROWS_AS(ExperimentSpec::parse("color = red"), Error);
      CHECK_THROWS_AS(ExperimentSpec::parse("budgets = ,"), Error);
      CHECK_THROWS_AS(ExperimentSpec::parse("repeats = many"), Error);
      CHECK_THROWS_AS(ExperimentSpec::parse("kill_one = maybe"), Error);
      CHECK_THROWS_AS(ExperimentSpec::parse("just a line"), Error);
    }
  }

  TEST_CASE("a small accuracy run writes the metrics csv") {
    const auto out = fresh_dir("accuracy");
    const int rc = run_experiment_text("app = binh\nmode = accuracy\nbudgets = 12\nrepeats = 1\n",
                                       out, 5);
    CHECK(rc == 0);

    std::ifstream in(std::filesystem::path(out) / "metrics_vs_samples.csv");
    REQUIRE(in.good());
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header ==
          "app,efp,budget,repeat,seed,family,eligible,forced,regime,"
          "val_signed_r2,val_mae_adj,grid_signed_r2,grid_mae_adj");
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) rows.push_back(line);
    CHECK(rows.size() == 2);  // one row per EFP
    for (const auto& row : rows) CHECK(row.substr(0, 5) == "binh,");
  }
}
