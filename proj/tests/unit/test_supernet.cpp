#include <algorithm>
#include <set>

#include "doctest.h"

#include "mmeq/netmodel.hpp"
#include "mmeq/supernet.hpp"

#include "../support/oracles.hpp"

using namespace mmeq;

namespace {

const LinkRecord& link_named(const Supernetwork& net, const std::string& id) {
  const auto a = net.find_link(id);
  REQUIRE_MESSAGE(a.has_value(), id);
  return net.links()[*a];
}

}  // namespace

TEST_SUITE("supernet") {

TEST_CASE("mini tour layout") {
  const auto cfg = load_scenario_json(oracle::mini_scenario());
  const auto net = build_supernetwork(cfg);
  REQUIRE(net.groups().size() == 1);
  CHECK(net.groups()[0].layers.size() == 2);
  // origin->dep x2, two legs x2 modes, car>car and bus>bus, egress x2.
  CHECK(net.links().size() == 10);
  CHECK(net.services().size() == 4);

  const auto& access_bus = link_named(net, "k1:access:bus");
  CHECK(access_bus.kind == LinkKind::Access);
  CHECK(access_bus.subscription == std::optional<std::string>("ticket"));
  const auto& leg = link_named(net, "k1:0:H>W:car");
  CHECK(leg.kind == LinkKind::ModeSpecific);
  CHECK(leg.congestion_group == std::optional<std::string>("road"));
  CHECK(leg.length_km == doctest::Approx(2.0));
  CHECK(net.find_service("H>W:car").has_value());
}

TEST_CASE("a private vehicle is kept for the whole tour") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex1.json");
  const auto net = build_supernetwork(cfg);
  for (const auto& l : net.links()) {
    if (l.kind != LinkKind::Interchange) continue;
    const auto& layers = net.groups()[l.group].layers;
    const bool from_car = layers[l.from_layer].mode == "car";
    const bool to_car = layers[l.layer].mode == "car";
    CHECK_MESSAGE(from_car == to_car, l.id);
  }
}

TEST_CASE("shared legs merge into one service link") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex1.json");
  const auto net = build_supernetwork(cfg);
  CHECK(net.groups().size() == 2);
  CHECK(net.services().size() == 15);
  const auto s = net.find_service("L2>L1:carsharing");
  REQUIRE(s);
  const auto& sv = net.services()[*s];
  CHECK(sv.members.size() == 2);
  CHECK(sv.fleet_capacity);
  for (std::size_t a : sv.members) {
    CHECK(net.links()[a].service == s);
    CHECK(net.links()[a].mode == std::optional<std::string>("carsharing"));
  }
  CHECK(net.services()[*net.find_service("H1>L2:carsharing")].members.size() == 1);

  // Every mode link belongs to exactly one service.
  std::size_t mode_links = 0, members = 0;
  for (const auto& l : net.links()) mode_links += l.kind == LinkKind::ModeSpecific;
  for (const auto& sv2 : net.services()) members += sv2.members.size();
  CHECK(mode_links == members);
}

TEST_CASE("congestion groups pool the road per leg") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex1.json");
  const auto net = build_supernetwork(cfg);
  const auto groups = congestion_groups(net);
  REQUIRE(groups.count("L2>L1|road"));
  // car and car-sharing, in both chain groups.
  CHECK(groups.at("L2>L1|road").size() == 4);
  CHECK(groups.at("H1>L2|road").size() == 2);
  std::size_t total = 0;
  for (const auto& [_, v] : groups) total += v.size();
  std::size_t mode_links = 0;
  for (const auto& l : net.links()) mode_links += l.kind == LinkKind::ModeSpecific;
  CHECK(total == mode_links);
}

TEST_CASE("package contexts open only from home") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex2.json");
  const auto net = build_supernetwork(cfg);
  CHECK(net.find_service("L2>L1:carsharing@pkg").has_value());
  CHECK(net.find_service("L2>L1:bus@pkg").has_value());
  for (const auto& l : net.links()) {
    if (l.kind == LinkKind::Interchange) {
      const auto& layers = net.groups()[l.group].layers;
      CHECK_MESSAGE(layers[l.from_layer].context == layers[l.layer].context, l.id);
    }
    if (l.kind == LinkKind::Access && l.context == "pkg") {
      CHECK(l.subscription == std::optional<std::string>("pkg"));
    }
  }
}

TEST_CASE("class link sets respect allowed modes") {
  auto doc = oracle::mini_scenario();
  doc["classes"].push_back(doc["classes"][0]);
  doc["classes"][1]["id"] = "k2";
  doc["classes"][1]["allowed_modes"] = {"bus"};
  const auto cfg = load_scenario_json(doc);
  const auto net = build_supernetwork(cfg);
  REQUIRE(net.num_classes() == 2);
  CHECK(net.group_of_class(0) == net.group_of_class(1));
  for (std::size_t a : net.class_links(1)) {
    const auto& m = net.links()[a].mode;
    CHECK((!m || *m == "bus"));
  }
  CHECK(net.class_links(1).size() < net.class_links(0).size());
  CHECK(std::is_sorted(net.class_links(0).begin(), net.class_links(0).end()));
}

TEST_CASE("a leg without usable modes is rejected") {
  auto doc = oracle::mini_scenario();
  doc["trip_links"][1]["modes"] = {"car"};
  doc["classes"][0]["allowed_modes"] = {"bus"};
  const auto cfg = load_scenario_json(doc);
  CHECK_THROWS_AS(build_supernetwork(cfg), EmptyModeSet);
}

TEST_CASE("graphviz export names every link") {
  const auto cfg = load_scenario_json(oracle::mini_scenario());
  const auto net = build_supernetwork(cfg);
  const auto dot = to_dot(net);
  CHECK(dot.rfind("digraph", 0) == 0);
  for (const auto& l : net.links()) CHECK(dot.find(l.id) != std::string::npos);
}

}  // TEST_SUITE
