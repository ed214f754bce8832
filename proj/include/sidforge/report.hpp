#pragma once

// JSON views of the library's reports. Key order is fixed by nlohmann's
// sorted object map, and doubles print in shortest round-trip form, so equal
// reports serialise to identical bytes.

#include <string>
#include <vector>

#include <json.hpp>

#include "sidforge/cce.hpp"
#include "sidforge/collision.hpp"
#include "sidforge/dataset.hpp"
#include "sidforge/zcr.hpp"

namespace sidforge {

inline constexpr const char* kToolVersion = "0.1.0";

inline nlohmann::json sid_to_json(const SidSequence& s) { return std::vector<Code>(s.begin(), s.end()); }

inline nlohmann::json to_json(const CollisionStats& s) {
  nlohmann::json histogram = nlohmann::json::array();
  for (const auto& [size, count] : s.group_size_histogram) histogram.push_back({size, count});
  return {{"n_items", s.n_items},
          {"n_sids", s.n_sids},
          {"coll_percent", s.coll_percent_rounded()},
          {"coll_percent_exact", s.coll_percent},
          {"g_max", s.g_max},
          {"histogram", std::move(histogram)},
          {"rounding", "half-up, 2 decimals"}};
}

inline nlohmann::json to_json(const PrefixGroupTable& table, const CapacityReport& cap) {
  nlohmann::json violating = nlohmann::json::array();
  for (const auto& p : cap.violating_prefixes) violating.push_back(sid_to_json(p));
  return {{"groups", table.groups.size()},
          {"max", table.max_size},
          {"mean", cap.mean_size},
          {"rho_total", table.rho_total},
          {"codebook_size", cap.codebook_size},
          {"capacity_ok", cap.satisfied},
          {"violating_prefixes", std::move(violating)}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& m : r.per_k) {
    nlohmann::json row = {{"k", m.k},
                          {"sid_hit", m.sid_hit},
                          {"sid_ndcg", m.sid_ndcg},
                          {"item_hit", m.item_hit},
                          {"item_ndcg", m.item_ndcg}};
    row["inflation_percent"] = m.inflation_percent ? nlohmann::json(*m.inflation_percent) : nlohmann::json();
    per_k.push_back(std::move(row));
  }
  return {{"n_records", r.n_records},
          {"skipped_targets", r.skipped_targets},
          {"short_beams", r.short_beams},
          {"metrics", std::move(per_k)}};
}

inline nlohmann::json to_json(const ReassignmentReport& r, bool include_changes = true) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups) {
    nlohmann::json row = {{"prefix", sid_to_json(g.prefix)},
                          {"size", g.size},
                          {"rho", g.rho},
                          {"delta_d", g.delta_d}};
    if (include_changes) {
      nlohmann::json changed = nlohmann::json::array();
      for (const auto& c : g.changes) {
        changed.push_back({{"item", c.item},
                           {"old_code", c.old_code},
                           {"new_code", c.new_code},
                           {"delta", c.delta}});
      }
      row["changed"] = std::move(changed);
    }
    groups.push_back(std::move(row));
  }
  nlohmann::json oversize = nlohmann::json::array();
  for (const auto& p : r.oversize_prefixes) oversize.push_back(sid_to_json(p));
  return {{"method", to_string(r.method)},
          {"n_reass", r.n_reass},
          {"rho_total", r.rho_total},
          {"delta_d_total", r.delta_d_total},
          {"groups_processed", r.groups.size()},
          {"oversize_prefixes", std::move(oversize)},
          {"per_group", std::move(groups)}};
}

inline nlohmann::json to_json(const DatasetStats& s) {
  return {{"users", s.n_users},
          {"items", s.n_items},
          {"interactions", s.n_interactions},
          {"avg_len", s.avg_len},
          {"sparsity_percent", s.sparsity_percent}};
}

inline nlohmann::json envelope(const std::string& command, nlohmann::json config, nlohmann::json result) {
  return {{"tool_version", kToolVersion},
          {"command", command},
          {"config", std::move(config)},
          {"result", std::move(result)}};
}

}  // namespace sidforge
