#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "sidforge/core.hpp"

namespace sidforge {

// Rounds half away from zero to `decimals` places. Reported percentages use
// this (half-up for the non-negative values we emit).
inline double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The small nudge absorbs representation error such as 30.525 stored as
  // 30.52499999...
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

struct CollisionStats {
  std::size_t n_items = 0;
  // Percentage of items whose SID is shared with at least one other item.
  double coll_percent = 0.0;
  std::size_t g_max = 0;
  std::size_t n_sids = 0;
  // collision-group size -> number of SIDs with that size (size 1 included).
  std::map<std::size_t, std::size_t> group_size_histogram;

  double coll_percent_rounded() const { return round_half_up(coll_percent, 2); }
};

inline CollisionStats collision_stats(const SidIndex& index) {
  if (index.n_items() == 0) throw Error(ErrorCode::EmptyIndex, "index has no items");
  CollisionStats stats;
  stats.n_items = index.n_items();
  stats.n_sids = index.inverse().size();
  for (const auto& [sid, items] : index.inverse()) {
    stats.g_max = std::max(stats.g_max, items.size());
    ++stats.group_size_histogram[items.size()];
  }
  std::size_t shared = 0;
  for (const auto& [size, count] : stats.group_size_histogram) {
    if (size >= 2) shared += size * count;
  }
  stats.coll_percent = 100.0 * static_cast<double>(shared) / static_cast<double>(stats.n_items);
  return stats;
}

// Coll.% by a direct per-item scan, independent of the histogram path.
inline double collision_percent_by_scan(const SidIndex& index) {
  if (index.n_items() == 0) throw Error(ErrorCode::EmptyIndex, "index has no items");
  std::size_t shared = 0;
  for (const auto& sid : index.forward()) {
    if (index.group_size(sid) > 1) ++shared;
  }
  return 100.0 * static_cast<double>(shared) / static_cast<double>(index.n_items());
}

// Items sharing one length-(L-1) prefix.
struct PrefixGroup {
  SidSequence prefix;
  std::vector<ItemId> items;  // ascending
  // Minimum number of last-level changes that make the group's last codes
  // pairwise distinct: |group| - |distinct last codes|.
  std::size_t rho = 0;
};

struct PrefixGroupTable {
  std::vector<PrefixGroup> groups;  // lexicographic by prefix
  std::size_t max_size = 0;
  double mean_size = 0.0;
  std::size_t rho_total = 0;
};

inline PrefixGroupTable prefix_groups(const SidIndex& index) {
  const std::size_t len = index.sid_len();
  if (len < 2) {
    throw Error(ErrorCode::SidTooShort, "prefix groups need L >= 2, got L=" + std::to_string(len));
  }
  std::map<SidSequence, std::vector<ItemId>> by_prefix;
  for (ItemId i = 0; i < index.n_items(); ++i) {
    by_prefix[index.forward()[i].prefix(len - 1)].push_back(i);
  }

  PrefixGroupTable table;
  table.groups.reserve(by_prefix.size());
  for (auto& [prefix, items] : by_prefix) {
    std::set<Code> last_codes;
    for (ItemId i : items) last_codes.insert(index.forward()[i].back());
    PrefixGroup group{prefix, std::move(items), 0};
    group.rho = group.items.size() - last_codes.size();
    table.max_size = std::max(table.max_size, group.items.size());
    table.rho_total += group.rho;
    table.groups.push_back(std::move(group));
  }
  if (!table.groups.empty()) {
    table.mean_size = static_cast<double>(index.n_items()) / static_cast<double>(table.groups.size());
  }
  return table;
}

struct CapacityReport {
  bool satisfied = true;
  std::size_t max_size = 0;
  double mean_size = 0.0;
  std::size_t codebook_size = 0;
  std::vector<SidSequence> violating_prefixes;
};

// Last-level capacity: every prefix group must fit in V distinct codes.
inline CapacityReport capacity_check(const PrefixGroupTable& table, std::size_t codebook_size) {
  CapacityReport report;
  report.max_size = table.max_size;
  report.mean_size = round_half_up(table.mean_size, 2);
  report.codebook_size = codebook_size;
  for (const auto& group : table.groups) {
    if (group.items.size() > codebook_size) report.violating_prefixes.push_back(group.prefix);
  }
  report.satisfied = report.violating_prefixes.empty();
  return report;
}

}  // namespace sidforge
