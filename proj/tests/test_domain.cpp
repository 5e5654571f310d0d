#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "otto/csv.hpp"
#include "otto/restriction.hpp"
#include "otto/types.hpp"

using namespace otto;

namespace {

ApplicationDescription demo_description() {
  ApplicationDescription d;
  d.app_name = "demo";
  d.knobs = {KnobDomain::range("a", 0, 3, 1), KnobDomain::range("b", -1, 1, 0.5)};
  d.efps = {"time", "quality"};
  d.features = {"size"};
  d.cluster_params.method = ClusterMethod::kmeans;
  return d;
}

}  // namespace

TEST_SUITE("domain") {

TEST_CASE("range builds an inclusive grid") {
  auto k = KnobDomain::range("x", 1, 4, 1);
  CHECK(k.name == "x");
  CHECK(k.values == std::vector<double>{1, 2, 3, 4});

  // The endpoint survives accumulated rounding: 0.1 steps never land on 0.7
  // exactly, but the tolerance keeps the last point in.
  auto f = KnobDomain::range("x", 0.1, 0.7, 0.1);
  REQUIRE(f.values.size() == 7);
  CHECK(f.values.back() == doctest::Approx(0.7));

  // A step overshooting hi leaves just the start point.
  auto s = KnobDomain::range("x", 2, 3, 10);
  CHECK(s.values == std::vector<double>{2});

  CHECK_THROWS_AS(KnobDomain::range("x", 0, 1, 0), Error);
  CHECK_THROWS_AS(KnobDomain::range("x", 0, 1, -0.5), Error);
}

TEST_CASE("nearest_value_index snaps and breaks ties downward") {
  KnobDomain k{"x", {0, 10, 20}};
  CHECK(nearest_value_index(k, -3) == 0);
  CHECK(nearest_value_index(k, 4.9) == 0);
  CHECK(nearest_value_index(k, 5.1) == 1);
  CHECK(nearest_value_index(k, 5.0) == 0);  // exact midpoint: lower wins
  CHECK(nearest_value_index(k, 15.0) == 1);
  CHECK(nearest_value_index(k, 99) == 2);
}

TEST_CASE("config_in_domain requires an exact grid member per knob") {
  std::vector<KnobDomain> knobs = {KnobDomain::range("a", 0, 2, 1), KnobDomain::range("b", 0, 1, 1)};
  CHECK(config_in_domain(knobs, KnobConfig{{1, 0}}));
  CHECK(config_in_domain(knobs, KnobConfig{{2, 1}}));
  CHECK_FALSE(config_in_domain(knobs, KnobConfig{{1.5, 0}}));
  CHECK_FALSE(config_in_domain(knobs, KnobConfig{{1, 0, 0}}));  // arity mismatch
  CHECK_FALSE(config_in_domain(knobs, KnobConfig{{1}}));
}

TEST_CASE("restrictions evaluate like the reference expression") {
  std::vector<KnobDomain> knobs = {KnobDomain::range("a", 0, 4, 1), KnobDomain::range("b", 0, 4, 1)};
  auto r = Restriction::compile("a + b <= 4 && (a * 2 != b || a >= 3)", knobs);
  for (double a = 0; a <= 4; ++a)
    for (double b = 0; b <= 4; ++b) {
      const bool want = (a + b <= 4) && (a * 2 != b || a >= 3);
      CHECK(r.evaluate(KnobConfig{{a, b}}) == want);
    }
}

TEST_CASE("restriction corner cases") {
  std::vector<KnobDomain> knobs = {KnobDomain::range("a", 0, 4, 1)};

  auto empty = Restriction::compile("", knobs);
  CHECK(empty.always_true());
  CHECK(empty.evaluate(KnobConfig{{3}}));

  auto neg = Restriction::compile("-a > -2", knobs);
  CHECK(neg.evaluate(KnobConfig{{1}}));
  CHECK_FALSE(neg.evaluate(KnobConfig{{3}}));

  auto div = Restriction::compile("a / 2 < 1.5", knobs);
  CHECK(div.evaluate(KnobConfig{{2}}));
  CHECK_FALSE(div.evaluate(KnobConfig{{4}}));

  CHECK_THROWS_AS(Restriction::compile("a >", knobs), Error);
  CHECK_THROWS_AS(Restriction::compile("c < 1", knobs), Error);   // unknown knob
  CHECK_THROWS_AS(Restriction::compile("a ^ 2 < 1", knobs), Error);
  CHECK_THROWS_AS(Restriction::compile("(a < 1", knobs), Error);
}

TEST_CASE("validate_description accepts a well-formed description") {
  CHECK(validate_description(demo_description()).empty());
}

TEST_CASE("validate_description flags each malformed field") {
  auto problems = [](ApplicationDescription d) { return validate_description(d); };

  auto base = demo_description();

  SUBCASE("names") {
    auto d = base;
    d.app_name = "";
    CHECK_FALSE(problems(d).empty());
    d.app_name = "a,b";
    CHECK_FALSE(problems(d).empty());
    d.app_name = "a/b";
    CHECK_FALSE(problems(d).empty());
  }
  SUBCASE("knobs") {
    auto d = base;
    d.knobs.clear();
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.knobs[0].values = {};
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.knobs[0].values = {1, 1};  // not strictly increasing
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.knobs[0].values = {1, std::nan("")};
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.knobs[1].name = "a";  // duplicate
    CHECK_FALSE(problems(d).empty());
  }
  SUBCASE("efps and features") {
    auto d = base;
    d.efps = {};
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.efps = {"time", "time"};
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.features = {"si,ze"};
    CHECK_FALSE(problems(d).empty());
  }
  SUBCASE("doe") {
    auto d = base;
    d.doe_params.n = 1;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.doe_params.epsilon = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.doe_params.repetitions = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.doe_params.restriction = "bogus <";
    CHECK_FALSE(problems(d).empty());
  }
  SUBCASE("learn") {
    auto d = base;
    d.learn_params.v_f = 1.0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.learn_params.k_folds = 1;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.learn_params.eps_m = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.learn_params.max_iterations = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.learn_params.max_iterations = -1;  // -1 means unbounded and is fine
    CHECK(problems(d).empty());
  }
  SUBCASE("clustering") {
    auto d = base;
    d.cluster_params.k = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.cluster_params.eps_dist = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.cluster_params.min_pts = 0;
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.cluster_params.method = ClusterMethod::none;  // but features declared
    CHECK_FALSE(problems(d).empty());
    d = base;
    d.cluster_params.method = ClusterMethod::manual;
    CHECK_FALSE(problems(d).empty());  // no centroids given
    d.cluster_params.manual_centroids = {FeatureVector{{1.0, 2.0}}};
    CHECK_FALSE(problems(d).empty());  // wrong dimension
    d.cluster_params.manual_centroids = {FeatureVector{{1.0}}};
    CHECK(problems(d).empty());
  }
}

TEST_CASE("description JSON round trip") {
  auto d = demo_description();
  d.doe_params.n = 17;
  d.doe_params.epsilon = 0.35;
  d.doe_params.repetitions = 3;
  d.doe_params.restriction = "a + b <= 3";
  d.learn_params.eps_r = 0.6;
  d.learn_params.eps_m = 0.05;
  d.learn_params.max_iterations = 4;
  d.learn_params.k_folds = 7;
  d.learn_params.v_f = 0.25;
  d.learn_params.rng_seed = 99;
  d.cluster_params.method = ClusterMethod::manual;
  d.cluster_params.k = 2;
  d.cluster_params.manual_centroids = {FeatureVector{{0.5}}, FeatureVector{{2.5}}};

  auto back = ApplicationDescription::from_json(d.to_json());
  CHECK(back.app_name == d.app_name);
  REQUIRE(back.knobs.size() == 2);
  CHECK(back.knobs[0].name == "a");
  CHECK(back.knobs[1].values == d.knobs[1].values);
  CHECK(back.efps == d.efps);
  CHECK(back.features == d.features);
  CHECK(back.doe_params.n == 17);
  CHECK(back.doe_params.epsilon == 0.35);
  CHECK(back.doe_params.repetitions == 3);
  CHECK(back.doe_params.restriction == "a + b <= 3");
  CHECK(back.learn_params.eps_r == 0.6);
  CHECK(back.learn_params.eps_m == 0.05);
  CHECK(back.learn_params.max_iterations == 4);
  CHECK(back.learn_params.k_folds == 7);
  CHECK(back.learn_params.v_f == 0.25);
  CHECK(back.learn_params.rng_seed == 99);
  CHECK(back.cluster_params.method == ClusterMethod::manual);
  CHECK(back.cluster_params.k == 2);
  REQUIRE(back.cluster_params.manual_centroids.size() == 2);
  CHECK(back.cluster_params.manual_centroids[1].values == std::vector<double>{2.5});
}

TEST_CASE("description JSON field names and defaults") {
  auto j = nlohmann::json::parse(demo_description().to_json());
  CHECK(j.at("name") == "demo");
  CHECK(j.at("knobs").at(0).at("name") == "a");
  CHECK(j.at("doe").at("n") == 40);
  CHECK(j.at("learn").at("k_folds") == 5);
  CHECK(j.at("clustering").at("method") == "kmeans");

  // Omitted sections fall back to the documented defaults.
  auto d = ApplicationDescription::from_json(
      R"({"name":"m","knobs":[{"name":"x","values":[0,1]}],"efps":["t"]})");
  CHECK(d.doe_params.n == 40);
  CHECK(d.doe_params.epsilon == 0.2);
  CHECK(d.learn_params.eps_r == 0.5);
  CHECK(d.learn_params.v_f == 0.2);
  CHECK(d.cluster_params.method == ClusterMethod::none);
  CHECK(d.features.empty());

  CHECK_THROWS_AS(ApplicationDescription::from_json("not json"), Error);
  CHECK_THROWS_AS(ApplicationDescription::from_json(R"({"knobs":[]})"), Error);
}

TEST_CASE("cluster method names round trip") {
  for (auto m : {ClusterMethod::none, ClusterMethod::kmeans, ClusterMethod::dbscan,
                 ClusterMethod::manual})
    CHECK(cluster_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(cluster_method_from_string("agglomerative"), Error);
}

TEST_CASE("numeric fields round trip bit-exactly through text") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, -2.5e-308, 1.7976931348623157e308, 42.125,
                   -99.000000001, 6.02214076e23}) {
    const std::string s = csv::format_double(v);
    CHECK(csv::parse_double(s, 1) == v);
  }
  CHECK_THROWS_AS(csv::parse_double("abc", 1), Error);
  CHECK_THROWS_AS(csv::parse_double("1.5x", 2), Error);
  CHECK_THROWS_AS(csv::parse_double("", 3), Error);
  CHECK_THROWS_AS(csv::parse_double("nan", 1), Error);
  CHECK_THROWS_AS(csv::parse_double("inf", 1), Error);
}

TEST_CASE("line splitting and joining") {
  CHECK(csv::split_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(csv::split_line("a,,c") == std::vector<std::string>{"a", "", "c"});
  CHECK(csv::split_line("") == std::vector<std::string>{""});
  CHECK(csv::join({"a", "b", "c"}) == "a,b,c");
  CHECK(csv::join({csv::format_double(1.5)}) == csv::split_line(csv::join({"1.5"}))[0]);
  CHECK_NOTHROW(csv::expect_columns({"a", "b"}, 2));
  CHECK_THROWS_AS(csv::expect_columns({"a", "b"}, 3), Error);
}

TEST_CASE("observation codec round trip") {
  auto d = demo_description();
  csv::ObservationCodec codec(d);
  CHECK(codec.columns() == 2 + 2 + 1 + 2);
  CHECK(codec.header() == "client_id,a,b,size,time,quality,timestamp");

  Observation obs;
  obs.client_id = "worker-1";
  obs.config = KnobConfig{{2, -0.5}};
  obs.features = FeatureVector{{17.25}};
  obs.metrics = EfpVector{{0.125, 88.8}};
  obs.timestamp_ms = 1234567;

  auto back = codec.decode(codec.encode(obs));
  CHECK(back.client_id == obs.client_id);
  CHECK(back.config == obs.config);
  CHECK(back.features.values == obs.features.values);
  CHECK(back.metrics.values == obs.metrics.values);
  CHECK(back.timestamp_ms == obs.timestamp_ms);

  CHECK_THROWS_AS(codec.decode("worker-1,2"), Error);  // arity
  CHECK_THROWS_AS(codec.decode("w,2,x,17,0.1,88,5"), Error);  // bad number
}

TEST_CASE("doe codec round trip") {
  auto d = demo_description();
  csv::DoeCodec codec(d);
  CHECK(codec.header() == "a,b,remaining_repetitions");
  csv::DoeRow row{KnobConfig{{3, 0.5}}, 4};
  CHECK(codec.decode(codec.encode(row)) == row);
  CHECK_THROWS_AS(codec.decode("3,0.5"), Error);
}

TEST_CASE("operating point codec round trip") {
  auto d = demo_description();
  csv::OperatingPointCodec codec(d);
  CHECK(codec.header() == "a,b,size,time,quality");
  OperatingPoint op;
  op.config = KnobConfig{{1, 0}};
  op.features = FeatureVector{{3.5}};
  op.expected = EfpVector{{0.25, 91.0}};
  auto back = codec.decode(codec.encode(op));
  CHECK(back.config == op.config);
  CHECK(back.features.values == op.features.values);
  CHECK(back.expected.values == op.expected.values);
}

TEST_CASE("centroid codec round trip, including featureless descriptions") {
  auto d = demo_description();
  csv::CentroidCodec codec(d);
  FeatureVector c{{7.75}};
  CHECK(codec.decode(codec.encode(c)).values == c.values);

  auto plain = demo_description();
  plain.features.clear();
  plain.cluster_params.method = ClusterMethod::none;
  csv::CentroidCodec empty_codec(plain);
  const std::string line = empty_codec.encode(FeatureVector{});
  CHECK(empty_codec.decode(line).values.empty());
}

TEST_CASE("report rows round trip") {
  csv::ReportRow row{"time", "bagged_mars", "kfold_rotating_holdout", 0.91, 0.03, "chosen"};
  auto back = csv::decode_report_row(csv::encode_report_row(row));
  CHECK(back.efp == row.efp);
  CHECK(back.family == row.family);
  CHECK(back.regime == row.regime);
  CHECK(back.signed_r2 == row.signed_r2);
  CHECK(back.mae_adj == row.mae_adj);
  CHECK(back.status == row.status);
  CHECK(csv::report_header() == "efp,family,regime,signed_r2,mae_adj,status");
}

}  // TEST_SUITE
