#include "mmeq/pathset.hpp"

#include <algorithm>
#include <set>

namespace mmeq {

namespace {

bool satisfies_usage_rules(const Path& path, const Supernetwork& net,
                           const ScenarioConfig& cfg) {
  for (const auto& sub_id : path.subscriptions) {
    const auto* sub = cfg.find_subscription(sub_id);
    if (!sub || sub->kind != Subscription::Kind::Package || !sub->must_use_mode) {
      continue;
    }
    const bool used = std::any_of(
        path.links.begin(), path.links.end(), [&](std::size_t a) {
          const auto& l = net.links()[a];
          return l.kind == LinkKind::ModeSpecific && l.context == sub_id &&
                 l.mode == sub->must_use_mode;
        });
    if (!used) return false;
  }
  return true;
}

}  // namespace

std::vector<Path> enumerate_paths(const Supernetwork& net,
                                  const ScenarioConfig& cfg,
                                  std::size_t class_index, std::size_t cap) {
  const auto& group = net.groups()[net.group_of_class(class_index)];
  std::vector<bool> allowed(net.links().size(), false);
  for (std::size_t a : net.class_links(class_index)) allowed[a] = true;

  std::vector<Path> out;
  std::vector<std::size_t> stack_links;
  std::size_t explored = 0;

  // Iterative DFS over (node, next out-link position).
  std::vector<std::pair<std::size_t, std::size_t>> stack{{group.origin, 0}};
  while (!stack.empty()) {
    auto& [node, pos] = stack.back();
    const auto& outs = net.out_links(node);
    if (node == group.destination) {
      Path p;
      p.links = stack_links;
      std::set<std::string> subs;
      for (std::size_t a : p.links) {
        if (net.links()[a].subscription) subs.insert(*net.links()[a].subscription);
      }
      p.subscriptions.assign(subs.begin(), subs.end());
      if (++explored > cap) {
        throw PathExplosion("class '" + cfg.classes[class_index].id +
                            "' exceeds the path cap of " + std::to_string(cap));
      }
      if (satisfies_usage_rules(p, net, cfg)) out.push_back(std::move(p));
      stack.pop_back();
      if (!stack_links.empty()) stack_links.pop_back();
      continue;
    }
    while (pos < outs.size() && !allowed[outs[pos]]) ++pos;
    if (pos == outs.size()) {
      stack.pop_back();
      if (!stack_links.empty()) stack_links.pop_back();
      continue;
    }
    const std::size_t link = outs[pos++];
    stack_links.push_back(link);
    stack.emplace_back(net.links()[link].head, 0);
  }

  std::sort(out.begin(), out.end(),
            [](const Path& a, const Path& b) { return a.links < b.links; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Path& a, const Path& b) {
                          return a.links == b.links;
                        }),
            out.end());
  if (out.empty()) {
    throw NoFeasiblePath("class '" + cfg.classes[class_index].id +
                         "' has no feasible path");
  }
  return out;
}

PathSet::PathSet(std::vector<Path> paths, std::vector<Block> blocks,
                 std::size_t num_links, std::size_t num_classes)
    : paths_(std::move(paths)),
      blocks_(std::move(blocks)),
      link_paths_(num_links),
      num_links_(num_links),
      num_classes_(num_classes) {
  path_block_.assign(paths_.size(), 0);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (std::size_t p = blocks_[b].begin; p < blocks_[b].end; ++p) {
      path_block_[p] = b;
    }
  }
  for (std::size_t p = 0; p < paths_.size(); ++p) {
    for (std::size_t a : paths_[p].links) {
      if (a >= num_links) throw DimensionMismatch("path link out of range");
      link_paths_[a].push_back(p);
    }
  }
}

bool PathSet::uses_link(std::size_t p, std::size_t a) const {
  const auto& l = link_paths_[a];
  return std::binary_search(l.begin(), l.end(), p);
}

std::vector<double> PathSet::demands() const {
  std::vector<double> d;
  d.reserve(blocks_.size());
  for (const auto& b : blocks_) d.push_back(b.demand);
  return d;
}

PathSet build_path_set(const Supernetwork& net, const ScenarioConfig& cfg) {
  std::vector<Path> all;
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
    auto paths = enumerate_paths(net, cfg, k, cfg.path_cap);
    const auto& cls = cfg.classes[k];
    Block b;
    b.class_index = k;
    b.class_id = cls.id;
    b.od = cls.trip_chain.front() + "->" + cls.trip_chain.back();
    b.begin = all.size();
    b.end = all.size() + paths.size();
    b.demand = cls.demand;
    blocks.push_back(b);
    for (auto& p : paths) all.push_back(std::move(p));
  }
  return PathSet(std::move(all), std::move(blocks), net.links().size(),
                 cfg.classes.size());
}

void path_link_flows(std::span<const double> x, const PathSet& ps,
                     LinkFlows& out) {
  if (x.size() != ps.size()) {
    throw DimensionMismatch("path-flow vector has " + std::to_string(x.size()) +
                            " entries, expected " + std::to_string(ps.size()));
  }
  const std::size_t num_links = ps.num_links();
  out.per_class.resize(ps.num_classes());
  for (auto& row : out.per_class) row.assign(num_links, 0.0);
  out.total.assign(num_links, 0.0);
  for (std::size_t p = 0; p < ps.size(); ++p) {
    if (x[p] == 0.0) continue;
    auto& row = out.per_class[ps.class_of_path(p)];
    for (std::size_t a : ps.paths()[p].links) row[a] += x[p];
  }
  for (const auto& row : out.per_class) {
    for (std::size_t a = 0; a < num_links; ++a) out.total[a] += row[a];
  }
}

LinkFlows path_link_flows(std::span<const double> x, const PathSet& ps) {
  LinkFlows out;
  path_link_flows(x, ps, out);
  return out;
}

}  // namespace mmeq
