#include <algorithm>
#include <random>

#include "doctest.h"

#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/supernet.hpp"

#include "../support/oracles.hpp"

using namespace mmeq;

TEST_SUITE("pathset") {

TEST_CASE("every path is a connected origin-destination walk") {
  for (const char* f : {"/ex1.json", "/ex2.json", "/ex3_entrant.json"}) {
    CAPTURE(f);
    const auto cfg = load_scenario(std::string(MMEQ_SCENARIO_DIR) + f);
    const auto net = build_supernetwork(cfg);
    const auto ps = build_path_set(net, cfg);
    REQUIRE(ps.blocks().size() == cfg.classes.size());
    for (std::size_t p = 0; p < ps.size(); ++p) {
      const auto& path = ps.paths()[p];
      const auto& g = net.groups()[net.group_of_class(ps.class_of_path(p))];
      REQUIRE_FALSE(path.links.empty());
      CHECK(net.links()[path.links.front()].tail == g.origin);
      CHECK(net.links()[path.links.back()].head == g.destination);
      for (std::size_t i = 1; i < path.links.size(); ++i) {
        CHECK(net.links()[path.links[i - 1]].head == net.links()[path.links[i]].tail);
      }
      CHECK(std::is_sorted(path.subscriptions.begin(), path.subscriptions.end()));
      CHECK(std::adjacent_find(path.subscriptions.begin(), path.subscriptions.end()) ==
            path.subscriptions.end());
    }
  }
}

TEST_CASE("golden example path counts") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex1.json");
  const auto net = build_supernetwork(cfg);
  const auto ps = build_path_set(net, cfg);
  // Per class: car throughout, or any of the 2^3 bus/car-sharing mixes.
  CHECK(ps.size() == 27);
  for (const auto& b : ps.blocks()) CHECK(b.size() == 9);
  const auto again = build_path_set(net, cfg);
  for (std::size_t p = 0; p < ps.size(); ++p) CHECK(again.paths()[p].links == ps.paths()[p].links);
}

TEST_CASE("package paths honor the usage rule") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex2.json");
  const auto net = build_supernetwork(cfg);
  const auto ps = build_path_set(net, cfg);
  int package_paths = 0;
  for (const auto& path : ps.paths()) {
    const bool in_package = std::find(path.subscriptions.begin(), path.subscriptions.end(),
                                      "pkg") != path.subscriptions.end();
    if (!in_package) continue;
    ++package_paths;
    bool uses_bus = false;
    for (std::size_t a : path.links) {
      const auto& l = net.links()[a];
      if (l.kind == LinkKind::ModeSpecific) {
        CHECK(l.context == "pkg");
        uses_bus |= *l.mode == "bus";
      }
    }
    CHECK(uses_bus);
    // Package members carry no separate mode subscription.
    CHECK(path.subscriptions.size() == 1);
  }
  // 2^3 - 1 mixes with at least one bus leg, per class.
  CHECK(package_paths == 3 * 7);
}

TEST_CASE("path cap") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex1.json");
  const auto net = build_supernetwork(cfg);
  CHECK(enumerate_paths(net, cfg, 0).size() == 9);
  CHECK_THROWS_AS(enumerate_paths(net, cfg, 0, 5), PathExplosion);
}

TEST_CASE("path_link_flows is linear and conserves demand") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex1.json");
  const auto net = build_supernetwork(cfg);
  const auto ps = build_path_set(net, cfg);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(ps.size()), y(ps.size()), z(ps.size());
    const double a = u(rng), b = u(rng);
    for (std::size_t p = 0; p < ps.size(); ++p) {
      x[p] = u(rng);
      y[p] = u(rng);
      z[p] = a * x[p] + b * y[p];
    }
    const auto fx = path_link_flows(x, ps), fy = path_link_flows(y, ps),
               fz = path_link_flows(z, ps);
    for (std::size_t l = 0; l < ps.num_links(); ++l) {
      CHECK(fz.total[l] == doctest::Approx(a * fx.total[l] + b * fy.total[l]).epsilon(1e-12));
      double sum = 0.0;
      for (std::size_t k = 0; k < ps.num_classes(); ++k) sum += fx.per_class[k][l];
      CHECK(sum == doctest::Approx(fx.total[l]).epsilon(1e-12));
    }
  }

  // Flow out of each origin equals the class demand.
  std::vector<double> x(ps.size(), 0.0);
  for (const auto& b : ps.blocks()) {
    for (std::size_t p = b.begin; p < b.end; ++p) x[p] = b.demand / b.size();
  }
  const auto f = path_link_flows(x, ps);
  for (std::size_t k = 0; k < ps.num_classes(); ++k) {
    const auto origin = net.groups()[net.group_of_class(k)].origin;
    double out = 0.0;
    for (std::size_t a : net.out_links(origin)) out += f.per_class[k][a];
    CHECK(out == doctest::Approx(cfg.classes[k].demand).epsilon(1e-12));
  }

  CHECK_THROWS_AS(path_link_flows(std::vector<double>(ps.size() + 1), ps), DimensionMismatch);
}

TEST_CASE("incidence columns agree with path lists") {
  const auto cfg = load_scenario(MMEQ_SCENARIO_DIR "/ex2.json");
  const auto net = build_supernetwork(cfg);
  const auto ps = build_path_set(net, cfg);
  for (std::size_t a = 0; a < ps.num_links(); ++a) {
    for (std::size_t p : ps.paths_on_link(a)) CHECK(ps.uses_link(p, a));
  }
  for (std::size_t p = 0; p < ps.size(); ++p) {
    for (std::size_t a : ps.paths()[p].links) {
      const auto& col = ps.paths_on_link(a);
      CHECK(std::find(col.begin(), col.end(), p) != col.end());
    }
  }
}

}  // TEST_SUITE
