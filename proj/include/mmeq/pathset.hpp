#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmeq/netmodel.hpp"
#include "mmeq/supernet.hpp"

namespace mmeq {

class NoFeasiblePath : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PathExplosion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Path {
  std::vector<std::size_t> links;
  std::vector<std::string> subscriptions;  // sorted, each charged once
};

/// Contiguous slice [begin, end) of the global path-flow vector holding the
/// paths of one (class, OD) pair.
struct Block {
  std::size_t class_index = 0;
  std::string class_id;
  std::string od;
  std::size_t begin = 0;
  std::size_t end = 0;
  double demand = 0.0;
  std::size_t size() const { return end - begin; }
};

/// Enumerates every origin-destination path of class `class_index` that the
/// class may use: only its own modes, package usage rules honored.
/// Paths are sorted lexicographically by link index sequence.
std::vector<Path> enumerate_paths(const Supernetwork& net,
                                  const ScenarioConfig& cfg,
                                  std::size_t class_index,
                                  std::size_t cap = 100000);

class PathSet {
 public:
  PathSet() = default;
  PathSet(std::vector<Path> paths, std::vector<Block> blocks,
          std::size_t num_links, std::size_t num_classes);

  const std::vector<Path>& paths() const { return paths_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return paths_.size(); }
  std::size_t num_links() const { return num_links_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t block_of_path(std::size_t p) const { return path_block_[p]; }
  std::size_t class_of_path(std::size_t p) const {
    return blocks_[path_block_[p]].class_index;
  }
  /// Paths traversing link `a` (column of the link-path incidence).
  const std::vector<std::size_t>& paths_on_link(std::size_t a) const {
    return link_paths_[a];
  }
  bool uses_link(std::size_t p, std::size_t a) const;
  std::vector<double> demands() const;

 private:
  std::vector<Path> paths_;
  std::vector<Block> blocks_;
  std::vector<std::size_t> path_block_;
  std::vector<std::vector<std::size_t>> link_paths_;
  std::size_t num_links_ = 0;
  std::size_t num_classes_ = 0;
};

/// All classes, one block per class, in scenario class order.
PathSet build_path_set(const Supernetwork& net, const ScenarioConfig& cfg);

struct LinkFlows {
  std::vector<std::vector<double>> per_class;  // [class][link]
  std::vector<double> total;                   // [link]
};

/// f_a^k = sum_p x_p delta_ap over class-k paths; f_a = sum_k f_a^k.
LinkFlows path_link_flows(std::span<const double> x, const PathSet& ps);

/// Same as above, writing into preallocated storage.
void path_link_flows(std::span<const double> x, const PathSet& ps,
                     LinkFlows& out);

}  // namespace mmeq
