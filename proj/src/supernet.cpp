#include "mmeq/supernet.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace mmeq {

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::Access:
      return "access";
    case LinkKind::Egress:
      return "egress";
    case LinkKind::ModeSpecific:
      return "mode";
    case LinkKind::Interchange:
      return "interchange";
    case LinkKind::Subscription:
      return "subscription";
  }
  return "?";
}

std::optional<std::size_t> Supernetwork::find_link(const std::string& id) const {
  for (const auto& l : links_) {
    if (l.id == id) return l.index;
  }
  return std::nullopt;
}

std::optional<std::size_t> Supernetwork::find_service(
    const std::string& id) const {
  for (const auto& s : services_) {
    if (s.id == id) return s.index;
  }
  return std::nullopt;
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool mode_uses_fleet(const ScenarioConfig& cfg, const std::string& mode) {
  auto it = cfg.cost_params.find(mode);
  if (it == cfg.cost_params.end()) return false;
  const auto& p = it->second;
  for (const auto* tf : {&p.access, &p.wait, &p.main, &p.park, &p.egress}) {
    if (*tf && (*tf)->uses_fleet()) return true;
  }
  return false;
}

}  // namespace

Supernetwork build_supernetwork(const ScenarioConfig& cfg) {
  Supernetwork net;
  auto is_private = [&](const std::string& mode) {
    const auto* m = cfg.find_mode(mode);
    return m && m->private_vehicle;
  };
  const std::size_t num_classes = cfg.classes.size();
  net.class_links_.resize(num_classes);
  net.class_group_.resize(num_classes);
  for (const auto& k : cfg.classes) net.class_ids_.push_back(k.id);

  // Chain groups in order of first appearance.
  for (std::size_t k = 0; k < num_classes; ++k) {
    const auto& chain = cfg.classes[k].trip_chain;
    auto it = std::find_if(net.groups_.begin(), net.groups_.end(),
                           [&](const ChainGroup& g) { return g.chain == chain; });
    if (it == net.groups_.end()) {
      ChainGroup g;
      g.chain = chain;
      net.groups_.push_back(g);
      it = std::prev(net.groups_.end());
    }
    it->classes.push_back(k);
    net.class_group_[k] = static_cast<std::size_t>(it - net.groups_.begin());
  }

  auto add_node = [&](std::size_t group, int loc, int layer,
                      NodeRecord::Role role, std::string label) {
    net.nodes_.push_back(NodeRecord{group, loc, layer, role, std::move(label)});
    net.out_.emplace_back();
    return net.nodes_.size() - 1;
  };
  auto add_link = [&](LinkRecord rec) {
    rec.index = net.links_.size();
    net.out_[rec.tail].push_back(rec.index);
    net.links_.push_back(std::move(rec));
  };

  for (std::size_t gi = 0; gi < net.groups_.size(); ++gi) {
    auto& g = net.groups_[gi];
    for (std::size_t j = 0; j < g.classes.size(); ++j) {
      g.id += (j ? "+" : "") + cfg.classes[g.classes[j]].id;
    }

    std::vector<std::string> modes;  // declaration order
    for (const auto& m : cfg.modes) {
      for (std::size_t k : g.classes) {
        if (contains(cfg.classes[k].allowed_modes, m.id)) {
          modes.push_back(m.id);
          break;
        }
      }
    }
    std::vector<std::string> contexts{kBaseContext};
    for (const auto& m : modes) g.layers.push_back(Layer{m, kBaseContext});
    for (const auto& s : cfg.subscriptions) {
      if (s.kind != Subscription::Kind::Package) continue;
      bool any = false;
      for (const auto& m : modes) {
        if (contains(s.member_modes, m)) {
          g.layers.push_back(Layer{m, s.id});
          any = true;
        }
      }
      if (any) contexts.push_back(s.id);
    }

    const int n = static_cast<int>(g.chain.size()) - 1;  // number of legs
    const int num_layers = static_cast<int>(g.layers.size());
    auto layers_in = [&](const std::string& ctx) {
      std::vector<int> out;
      for (int l = 0; l < num_layers; ++l) {
        if (g.layers[l].context == ctx) out.push_back(l);
      }
      return out;
    };

    g.origin = add_node(gi, 0, -1, NodeRecord::Role::Origin,
                        g.id + ":origin:" + g.chain.front());
    std::vector<std::vector<std::size_t>> arr(n + 1,
                                              std::vector<std::size_t>(num_layers));
    std::vector<std::vector<std::size_t>> dep = arr;
    for (const auto& ctx : contexts) {
      const auto ls = layers_in(ctx);
      const bool merged = ls.size() == 1;
      for (int i = 0; i <= n; ++i) {
        for (int l : ls) {
          const auto base = g.id + ":" + std::to_string(i) + ":" +
                            g.chain[i] + ":" + g.layers[l].label();
          if (merged) {
            const auto role = i == n ? NodeRecord::Role::Arrive
                                     : NodeRecord::Role::Depart;
            arr[i][l] = dep[i][l] = add_node(gi, i, l, role, base);
            continue;
          }
          if (i > 0) arr[i][l] = add_node(gi, i, l, NodeRecord::Role::Arrive, base + ":arr");
          if (i < n) dep[i][l] = add_node(gi, i, l, NodeRecord::Role::Depart, base + ":dep");
        }
      }
    }
    g.destination = add_node(gi, n, -1, NodeRecord::Role::Destination,
                             g.id + ":destination:" + g.chain.back());

    auto entry_subscription = [&](int layer) -> std::optional<std::string> {
      const auto& L = g.layers[layer];
      if (L.context != kBaseContext) return L.context;
      if (const auto* s = cfg.mode_subscription(L.mode)) return s->id;
      return std::nullopt;
    };

    for (int i = 0; i <= n; ++i) {
      if (i == 0) {
        for (int l = 0; l < num_layers; ++l) {
          LinkRecord rec;
          rec.id = g.id + ":access:" + g.layers[l].label();
          rec.kind = g.layers[l].context == kBaseContext ? LinkKind::Access
                                                         : LinkKind::Subscription;
          rec.tail = g.origin;
          rec.head = dep[0][l];
          rec.group = gi;
          rec.layer = l;
          rec.location_index = 0;
          rec.from_location = rec.to_location = g.chain[0];
          rec.context = g.layers[l].context;
          rec.subscription = entry_subscription(l);
          add_link(std::move(rec));
        }
      }
      if (i > 0 && i < n) {
        for (const auto& ctx : contexts) {
          const auto ls = layers_in(ctx);
          if (ls.size() == 1) continue;
          for (int from : ls) {
            for (int to : ls) {
              if (from != to && (is_private(g.layers[from].mode) ||
                                 is_private(g.layers[to].mode))) {
                continue;
              }
              LinkRecord rec;
              rec.id = g.id + ":" + std::to_string(i) + ":" + g.chain[i] +
                       ":" + g.layers[from].label() + ">" + g.layers[to].label();
              rec.kind = LinkKind::Interchange;
              rec.tail = arr[i][from];
              rec.head = dep[i][to];
              rec.group = gi;
              rec.layer = to;
              rec.from_layer = from;
              rec.location_index = i;
              rec.from_location = rec.to_location = g.chain[i];
              rec.context = ctx;
              if (from != to && ctx == kBaseContext) {
                rec.subscription = entry_subscription(to);
              }
              add_link(std::move(rec));
            }
          }
        }
      }
      if (i < n) {
        const auto* leg = cfg.find_trip_link(g.chain[i], g.chain[i + 1]);
        for (int l = 0; l < num_layers; ++l) {
          const auto& mode = g.layers[l].mode;
          if (!leg || (!leg->modes.empty() && !contains(leg->modes, mode))) {
            continue;
          }
          LinkRecord rec;
          rec.id = g.id + ":" + std::to_string(i) + ":" + g.chain[i] + ">" +
                   g.chain[i + 1] + ":" + g.layers[l].label();
          rec.kind = LinkKind::ModeSpecific;
          rec.tail = dep[i][l];
          rec.head = arr[i + 1][l];
          rec.group = gi;
          rec.layer = l;
          rec.location_index = i;
          rec.from_location = g.chain[i];
          rec.to_location = g.chain[i + 1];
          rec.mode = mode;
          rec.context = g.layers[l].context;
          if (const auto* m = cfg.find_mode(mode)) {
            rec.congestion_group = m->congestion_group;
          }
          rec.length_km = leg->length_km;
          rec.fleet_capacity = mode_uses_fleet(cfg, mode);
          add_link(std::move(rec));
        }
      }
      if (i == n) {
        for (int l = 0; l < num_layers; ++l) {
          LinkRecord rec;
          rec.id = g.id + ":egress:" + g.layers[l].label();
          rec.kind = LinkKind::Egress;
          rec.tail = arr[n][l];
          rec.head = g.destination;
          rec.group = gi;
          rec.layer = l;
          rec.from_layer = l;
          rec.location_index = n;
          rec.from_location = rec.to_location = g.chain[n];
          rec.context = g.layers[l].context;
          add_link(std::move(rec));
        }
      }
    }

    // Service links, shared across chain groups.
    for (auto& l : net.links_) {
      if (l.group != gi || l.kind != LinkKind::ModeSpecific) continue;
      const auto sid = l.from_location + ">" + l.to_location + ":" +
                       g.layers[l.layer].label();
      auto it = std::find_if(net.services_.begin(), net.services_.end(),
                             [&](const ServiceLink& s) { return s.id == sid; });
      if (it == net.services_.end()) {
        ServiceLink s;
        s.index = net.services_.size();
        s.id = sid;
        s.from_location = l.from_location;
        s.to_location = l.to_location;
        s.mode = *l.mode;
        s.context = l.context;
        s.congestion_group = l.congestion_group;
        s.length_km = l.length_km;
        s.fleet_capacity = l.fleet_capacity;
        net.services_.push_back(s);
        it = std::prev(net.services_.end());
      }
      it->members.push_back(l.index);
      l.service = it->index;
    }

    // Per-class usable links.
    for (std::size_t k : g.classes) {
      const auto& cls = cfg.classes[k];
      auto usable = [&](int layer) {
        return layer < 0 || contains(cls.allowed_modes, g.layers[layer].mode);
      };
      std::vector<bool> leg_served(n, false);
      for (const auto& l : net.links_) {
        if (l.group != gi) continue;
        if (!usable(l.layer) || !usable(l.from_layer)) continue;
        net.class_links_[k].push_back(l.index);
        if (l.kind == LinkKind::ModeSpecific) leg_served[l.location_index] = true;
      }
      for (int i = 0; i < n; ++i) {
        if (!leg_served[i]) {
          throw EmptyModeSet("class '" + cls.id + "' has no usable mode on leg " +
                             g.chain[i] + "->" + g.chain[i + 1]);
        }
      }
    }
  }
  return net;
}

std::map<std::string, std::vector<std::size_t>> congestion_groups(
    const Supernetwork& net) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& l : net.links()) {
    if (l.kind != LinkKind::ModeSpecific) continue;
    const auto key = l.congestion_group
                         ? l.from_location + ">" + l.to_location + "|" +
                               *l.congestion_group
                         : "service|" + net.services()[*l.service].id;
    out[key].push_back(l.index);
  }
  return out;
}

std::string to_dot(const Supernetwork& net) {
  std::ostringstream os;
  os << "digraph supernetwork {\n  rankdir=LR;\n  node [shape=circle, fontsize=9];\n";
  for (std::size_t gi = 0; gi < net.groups().size(); ++gi) {
    const auto& g = net.groups()[gi];
    os << "  subgraph cluster_" << gi << " {\n    label=\"" << g.id << "\";\n";
    for (std::size_t n = 0; n < net.nodes().size(); ++n) {
      const auto& node = net.nodes()[n];
      if (node.group != gi) continue;
      os << "    n" << n << " [label=\"" << node.label << "\"";
      if (node.layer < 0) os << ", shape=doublecircle";
      os << "];\n";
    }
    os << "  }\n";
  }
  for (const auto& l : net.links()) {
    const char* style = "solid";
    switch (l.kind) {
      case LinkKind::Access:
      case LinkKind::Egress:
      case LinkKind::Subscription:
        style = "dashed";
        break;
      case LinkKind::Interchange:
        style = "dotted";
        break;
      case LinkKind::ModeSpecific:
        break;
    }
    os << "  n" << l.tail << " -> n" << l.head << " [label=\"" << l.id;
    if (l.subscription) os << " [" << *l.subscription << "]";
    os << "\", style=" << style << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace mmeq
