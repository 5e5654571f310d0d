#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <doctest.h>

#include "otto/bus.hpp"
#include "otto/message.hpp"
#include "otto/tcp.hpp"

using namespace otto;
using namespace std::chrono_literals;

namespace {

/// Reference segment matcher: '+' matches exactly one segment.
bool oracle_matches(const std::string& pattern, const std::string& topic) {
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      auto slash = s.find('/', start);
      if (slash == std::string::npos) {
        parts.push_back(s.substr(start));
        return parts;
      }
      parts.push_back(s.substr(start, slash - start));
      start = slash + 1;
    }
  };
  auto p = split(pattern), t = split(topic);
  if (p.size() != t.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != "+" && p[i] != t[i]) return false;
  return true;
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("frame bytes are length-prefixed big-endian") {
  auto buf = encode_message(Message{"ab", "xy"});
  REQUIRE(buf.size() == 12);
  const unsigned char want[12] = {0, 0, 0, 2, 'a', 'b', 0, 0, 0, 2, 'x', 'y'};
  for (int i = 0; i < 12; ++i) CHECK(static_cast<unsigned char>(buf[i]) == want[i]);

  // Lengths above 255 exercise the higher-order bytes.
  Message big{"t", std::string(513, 'z')};
  auto bbuf = encode_message(big);
  CHECK(static_cast<unsigned char>(bbuf[5 + 0]) == 0);
  CHECK(static_cast<unsigned char>(bbuf[5 + 1]) == 0);
  CHECK(static_cast<unsigned char>(bbuf[5 + 2]) == 2);
  CHECK(static_cast<unsigned char>(bbuf[5 + 3]) == 1);  // 513 = 0x201
}

TEST_CASE("frames decode incrementally from a byte stream") {
  Message a{"margot/app/welcome", "otto.hello.v1\nclient-1"};
  Message b{"x", ""};
  auto stream = encode_message(a);
  auto more = encode_message(b);
  stream.insert(stream.end(), more.begin(), more.end());

  // Feeding one byte at a time: nothing decodes until a full frame arrived.
  std::string partial;
  std::vector<Message> got;
  for (char c : stream) {
    partial.push_back(c);
    std::size_t used = 0;
    auto m = decode_message(partial, used);
    if (m) {
      got.push_back(*m);
      partial.erase(0, used);
    } else {
      CHECK(used == 0);
    }
  }
  REQUIRE(got.size() == 2);
  CHECK(got[0] == a);
  CHECK(got[1] == b);
  CHECK(partial.empty());
}

TEST_CASE("frame limits reject hostile sizes") {
  CHECK_THROWS_AS(encode_message(Message{std::string(70000, 't'), "p"}), Error);
  CHECK_THROWS_AS(encode_message(Message{"t", std::string(kMaxPayloadBytes + 1, 'p')}), Error);

  // A forged oversize header fails decode rather than allocating.
  std::string forged = {0x7f, 0x7f, 0x7f, 0x7f};
  forged.resize(32, 'a');
  std::size_t used = 0;
  CHECK_THROWS_AS(decode_message(forged, used), Error);
}

TEST_CASE("topic matching agrees with the segment oracle") {
  const std::vector<std::string> patterns = {
      "margot/app/welcome", "margot/+/welcome", "margot/app/+", "+/+/+",
      "margot/app/observation/+", "+", "margot/+/info/client"};
  const std::vector<std::string> topics = {
      "margot/app/welcome", "margot/other/welcome", "margot/app/observation",
      "margot/app/observation/c1", "margot", "margot/app", "a/b/c",
      "margot/app/info/client"};
  for (const auto& p : patterns)
    for (const auto& t : topics) CHECK(topic_matches(p, t) == oracle_matches(p, t));
}

TEST_CASE("topic build and parse round trip") {
  CHECK(make_topic("app", channel::welcome) == "margot/app/welcome");
  CHECK(make_topic("app", channel::explore, "c1") == "margot/app/explore/c1");

  auto parts = parse_topic("margot/swaptions/observation/worker-3");
  REQUIRE(parts);
  CHECK(parts->app == "swaptions");
  CHECK(parts->channel == channel::observation);
  CHECK(parts->client_id == "worker-3");

  auto bare = parse_topic("margot/app/knowledge");
  REQUIRE(bare);
  CHECK(bare->client_id.empty());

  CHECK_FALSE(parse_topic("margot"));
  CHECK_FALSE(parse_topic("other/app/welcome"));
  CHECK_FALSE(parse_topic(""));
}

TEST_CASE("payload schema line and body round trip") {
  auto payload = build_payload(schema::observation, {"c1", "1,2,3"});
  auto parsed = parse_payload(payload);
  CHECK(parsed.schema == schema::observation);
  REQUIRE(parsed.lines.size() == 2);
  CHECK(parsed.lines[0] == "c1");
  CHECK(parsed.lines[1] == "1,2,3");

  // Blank lines inside the body survive positionally.
  auto holey = parse_payload(build_payload("otto.x.v1", {"a", "", "b"}));
  REQUIRE(holey.lines.size() == 3);
  CHECK(holey.lines[1].empty());

  auto empty = parse_payload(build_payload("otto.x.v1", {}));
  CHECK(empty.schema == "otto.x.v1");
  CHECK(empty.lines.empty());
}

TEST_CASE("knowledge payloads round trip centroids, ops and tags") {
  ApplicationDescription desc;
  desc.app_name = "kp";
  desc.knobs = {KnobDomain::range("a", 0, 1, 1)};
  desc.efps = {"t"};
  desc.features = {"s"};
  desc.cluster_params.method = ClusterMethod::kmeans;

  KnowledgeBase kb;
  kb.centroids = {FeatureVector{{1.5}}, FeatureVector{{9.0}}};
  for (const auto& c : kb.centroids)
    for (double a : {0.0, 1.0}) {
      OperatingPoint op;
      op.config = KnobConfig{{a}};
      op.features = c;
      op.expected = EfpVector{{10 * a + c[0]}};
      kb.ops.push_back(op);
    }
  kb.model_tags = {ModelTag{"t", "kriging", 0.99, 0.01}};

  auto payload = build_knowledge_payload(desc, kb);
  auto back = parse_knowledge_payload(desc, payload);
  REQUIRE(back.centroids.size() == 2);
  CHECK(back.centroids == kb.centroids);
  REQUIRE(back.ops.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.ops[i].config == kb.ops[i].config);
    CHECK(back.ops[i].features.values == kb.ops[i].features.values);
    CHECK(back.ops[i].expected.values == kb.ops[i].expected.values);
  }
  REQUIRE(back.model_tags.size() == 1);
  CHECK(back.model_tags[0].efp == "t");
  CHECK(back.model_tags[0].family == "kriging");
  CHECK(back.model_tags[0].signed_r2 == 0.99);
  CHECK(back.model_tags[0].mae_adj == 0.01);

  // Zero-feature apps ship one dimensionless centroid.
  ApplicationDescription plain = desc;
  plain.features.clear();
  plain.cluster_params.method = ClusterMethod::none;
  KnowledgeBase flat;
  flat.centroids = {FeatureVector{}};
  OperatingPoint op;
  op.config = KnobConfig{{1}};
  op.expected = EfpVector{{4.5}};
  flat.ops = {op};
  flat.model_tags = {ModelTag{"t", "linear1", 0.9, 0.05}};
  auto flat_back = parse_knowledge_payload(plain, build_knowledge_payload(plain, flat));
  REQUIRE(flat_back.centroids.size() == 1);
  CHECK(flat_back.centroids[0].empty());
  REQUIRE(flat_back.ops.size() == 1);
  CHECK(flat_back.ops[0].expected.values == std::vector<double>{4.5});

  CHECK_THROWS_AS(parse_knowledge_payload(desc, "otto.knowledge.v1\ncentroids notanumber"),
                  Error);
  // Truncation anywhere inside a declared section is fatal.
  CHECK_THROWS_AS(parse_knowledge_payload(desc, payload.substr(0, payload.size() / 2)), Error);
  // So is a schema other than the knowledge one.
  ParsedPayload reparsed = parse_payload(payload);
  CHECK_THROWS_AS(parse_knowledge_payload(desc, build_payload(schema::hello, reparsed.lines)),
                  Error);
}

TEST_CASE("in-process bus routes by pattern in publish order") {
  InProcessBus bus;
  auto all = bus.subscribe("margot/app/+");
  auto welcome_only = bus.subscribe("margot/app/welcome");

  CHECK(bus.publish(Message{"margot/app/welcome", "w"}));
  CHECK(bus.publish(Message{"margot/app/observation", "o1"}));
  CHECK(bus.publish(Message{"margot/other/welcome", "elsewhere"}));

  auto m1 = all->pop(100ms);
  auto m2 = all->pop(100ms);
  REQUIRE(m1);
  REQUIRE(m2);
  CHECK(m1->payload == "w");
  CHECK(m2->payload == "o1");
  CHECK_FALSE(all->pop(10ms));  // the third topic matched nothing

  auto w = welcome_only->pop(100ms);
  REQUIRE(w);
  CHECK(w->payload == "w");
  CHECK_FALSE(welcome_only->pop(10ms));
}

TEST_CASE("one subscription with several patterns delivers once") {
  InProcessBus bus;
  auto sub = bus.subscribe(std::vector<std::string>{"a/+/c", "a/b/+"});
  bus.publish(Message{"a/b/c", "both-match"});
  auto m = sub->pop(100ms);
  REQUIRE(m);
  CHECK(m->payload == "both-match");
  CHECK_FALSE(sub->pop(10ms));  // exactly once despite two matching patterns
}

TEST_CASE("closing a subscription unblocks its consumer") {
  InProcessBus bus;
  auto sub = bus.subscribe("t");
  std::thread closer([&] {
    std::this_thread::sleep_for(50ms);
    sub->close();
  });
  auto m = sub->pop(5000ms);  // returns early, not after 5 s
  CHECK_FALSE(m);
  CHECK(sub->closed());
  closer.join();
  CHECK_FALSE(sub->pop(1ms));
  bus.prune();
  CHECK(bus.publish(Message{"t", "late"}));  // closed subs are skipped
}

TEST_CASE("tcp gateway bridges the framed wire to the broker") {
  auto broker = std::make_shared<InProcessBus>();
  TcpGateway gateway(broker, 0);  // ephemeral port
  const auto address = "127.0.0.1:" + std::to_string(gateway.port());

  TcpBus remote(address);
  auto remote_sub = remote.subscribe("margot/app/+");
  auto local_sub = broker->subscribe("margot/app/welcome");
  std::this_thread::sleep_for(100ms);  // allow the $sub frame to land

  // Remote -> local, echoed back to the remote's own matching subscription.
  CHECK(remote.publish(Message{"margot/app/welcome", "hello"}));
  auto lm = local_sub->pop(2000ms);
  REQUIRE(lm);
  CHECK(lm->payload == "hello");
  auto echo = remote_sub->pop(2000ms);
  REQUIRE(echo);
  CHECK(echo->payload == "hello");

  // Local -> remote, with a payload big enough to span many TCP segments.
  const std::string blob(1 << 20, 'k');
  CHECK(broker->publish(Message{"margot/app/knowledge", blob}));
  auto rm = remote_sub->pop(5000ms);
  REQUIRE(rm);
  CHECK(rm->topic == "margot/app/knowledge");
  CHECK(rm->payload.size() == blob.size());
  CHECK(rm->payload == blob);

  remote.stop();
  gateway.stop();
}

TEST_CASE("tcp bus address parsing") {
  auto [host, port] = parse_broker_address("10.0.0.1:1887");
  CHECK(host == "10.0.0.1");
  CHECK(port == 1887);
  auto [h2, p2] = parse_broker_address("localhost");
  CHECK(h2 == "localhost");
  CHECK(p2 == 1887);  // default port
  auto [h3, p3] = parse_broker_address("tcp://farm:2000");
  CHECK(h3 == "farm");
  CHECK(p3 == 2000);
  auto [h4, p4] = parse_broker_address("");
  CHECK(h4 == "127.0.0.1");  // loopback default
  CHECK(p4 == 1887);
  CHECK_THROWS_AS(parse_broker_address("host:notaport"), Error);
  CHECK_THROWS_AS(parse_broker_address("host:0"), Error);
}

}  // TEST_SUITE
