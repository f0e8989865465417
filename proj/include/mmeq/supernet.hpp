#pragma once

// Expansion of trip chains into the multi-modal trip-chain supernetwork.
//
// Per chain group (classes with an identical trip chain) the builder lays
// out one layer per (mode, context). The base context holds every mode;
// each package subscription adds a context of its member modes that can
// only be entered from home. Node roles:
//
//   origin --Access--> dep(0, L) --ModeSpecific--> arr(1, L)
//   arr(i, L) --Interchange--> dep(i, L')   (same context, any L')
//   arr(n, L) --Egress--> destination
//
// A context with a single layer merges arr(i, L) and dep(i, L).

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmeq/netmodel.hpp"

namespace mmeq {

inline constexpr const char* kBaseContext = "base";

class EmptyModeSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LinkKind { Access, Egress, ModeSpecific, Interchange, Subscription };

std::string to_string(LinkKind kind);

struct Layer {
  std::string mode;
  std::string context;
  std::string label() const {
    return context == kBaseContext ? mode : mode + "@" + context;
  }
};

struct NodeRecord {
  enum class Role { Origin, Arrive, Depart, Destination };
  std::size_t group = 0;
  int location_index = 0;
  int layer = -1;  // -1 for centroids
  Role role = Role::Origin;
  std::string label;
};

struct LinkRecord {
  std::size_t index = 0;
  std::string id;
  LinkKind kind = LinkKind::Access;
  std::size_t tail = 0;
  std::size_t head = 0;
  std::size_t group = 0;
  int layer = -1;      // layer of the head (Access/Interchange/ModeSpecific)
                       // or tail (Egress)
  int from_layer = -1;  // Interchange/Egress only
  int location_index = 0;
  std::string from_location;
  std::string to_location;
  std::optional<std::string> mode;  // ModeSpecific only
  std::string context = kBaseContext;
  std::optional<std::string> subscription;
  std::optional<std::string> congestion_group;
  double length_km = 0.0;
  bool fleet_capacity = false;
  std::optional<std::size_t> service;  // ModeSpecific only
};

/// One modal service on one leg. Mode-specific links of different chain
/// groups that run the same leg in the same layer share it: own-link flows
/// and fleet capacities are taken per service link.
struct ServiceLink {
  std::size_t index = 0;
  std::string id;  // "{from}>{to}:{layer}"
  std::string from_location;
  std::string to_location;
  std::string mode;
  std::string context = kBaseContext;
  std::optional<std::string> congestion_group;
  double length_km = 0.0;
  bool fleet_capacity = false;
  std::vector<std::size_t> members;
};

struct ChainGroup {
  std::string id;
  std::vector<std::string> chain;
  std::vector<std::size_t> classes;  // indices into ScenarioConfig::classes
  std::vector<Layer> layers;
  std::size_t origin = 0;
  std::size_t destination = 0;
};

class Supernetwork {
 public:
  const std::vector<NodeRecord>& nodes() const { return nodes_; }
  const std::vector<LinkRecord>& links() const { return links_; }
  const std::vector<ChainGroup>& groups() const { return groups_; }
  const std::vector<std::size_t>& out_links(std::size_t node) const {
    return out_[node];
  }
  /// Sorted link indices usable by class `k`.
  const std::vector<std::size_t>& class_links(std::size_t k) const {
    return class_links_[k];
  }
  std::size_t group_of_class(std::size_t k) const { return class_group_[k]; }
  std::size_t num_classes() const { return class_links_.size(); }
  const std::vector<std::string>& class_ids() const { return class_ids_; }

  const std::vector<ServiceLink>& services() const { return services_; }

  std::optional<std::size_t> find_link(const std::string& id) const;
  std::optional<std::size_t> find_service(const std::string& id) const;

 private:
  friend Supernetwork build_supernetwork(const ScenarioConfig& cfg);

  std::vector<NodeRecord> nodes_;
  std::vector<LinkRecord> links_;
  std::vector<ChainGroup> groups_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> class_links_;
  std::vector<std::size_t> class_group_;
  std::vector<std::string> class_ids_;
  std::vector<ServiceLink> services_;
};

/// Throws EmptyModeSet when a class has no usable mode on some leg.
Supernetwork build_supernetwork(const ScenarioConfig& cfg);

/// Mode-specific links partitioned by (leg, congestion group). Links of
/// ungrouped modes are grouped by service link.
std::map<std::string, std::vector<std::size_t>> congestion_groups(
    const Supernetwork& net);

/// Graphviz rendering.
std::string to_dot(const Supernetwork& net);

}  // namespace mmeq
