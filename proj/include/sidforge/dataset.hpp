#pragma once

// Interaction ingestion: iterative k-core filtering, dense id assignment and
// the chronological leave-one-out split.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sidforge/core.hpp"
#include "sidforge/io.hpp"

namespace sidforge {

// Orders all-digit ids numerically and everything else lexicographically
// (numeric ids first). Dense ids "0".."n-1" therefore map to themselves.
inline bool natural_less(std::string_view a, std::string_view b) {
  auto numeric = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const bool na = numeric(a), nb = numeric(b);
  if (na != nb) return na;
  if (na) {
    auto strip = [](std::string_view s) {
      const auto p = s.find_first_not_of('0');
      return p == std::string_view::npos ? std::string_view("0") : s.substr(p);
    };
    const auto sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
  }
  return a < b;
}

struct DatasetStats {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_interactions = 0;
  double avg_len = 0.0;
  double sparsity_percent = 0.0;
};

struct SplitDataset {
  std::vector<std::string> user_ids;  // dense user -> original id
  std::vector<std::string> item_ids;  // dense item -> original id
  InteractionLog full;                // chronological, all retained interactions
  InteractionLog train;               // all but the last two per user
  std::vector<ItemId> validation;     // second-to-last per user
  std::vector<ItemId> test;           // last per user
  // Retained rows with original ids, by dense user then chronological order.
  std::vector<RawInteraction> filtered;
  // Timestamps aligned with `full`.
  std::vector<std::vector<std::string>> timestamps;

  DatasetStats stats() const {
    DatasetStats s;
    s.n_users = user_ids.size();
    s.n_items = item_ids.size();
    s.n_interactions = full.n_interactions();
    if (s.n_users) s.avg_len = static_cast<double>(s.n_interactions) / static_cast<double>(s.n_users);
    if (s.n_users && s.n_items) {
      s.sparsity_percent = 100.0 * (1.0 - static_cast<double>(s.n_interactions) /
                                              (static_cast<double>(s.n_users) * s.n_items));
    }
    return s;
  }
};

// Drops users and items with fewer than `k_core` interactions until none
// remain, then splits each user's chronological sequence leave-one-out.
// Timestamp ties keep input order. k_core >= 3 so every user has a train,
// validation and test interaction.
inline SplitDataset preprocess(const std::vector<RawInteraction>& raw, std::size_t k_core = 5) {
  if (k_core < 3) throw Error(ErrorCode::BadInput, "k-core must be >= 3 for a leave-one-out split");

  std::vector<char> alive(raw.size(), 1);
  for (bool changed = true; changed;) {
    changed = false;
    std::unordered_map<std::string, std::size_t> user_deg, item_deg;
    for (std::size_t r = 0; r < raw.size(); ++r) {
      if (!alive[r]) continue;
      ++user_deg[raw[r].user];
      ++item_deg[raw[r].item];
    }
    for (std::size_t r = 0; r < raw.size(); ++r) {
      if (alive[r] && (user_deg[raw[r].user] < k_core || item_deg[raw[r].item] < k_core)) {
        alive[r] = 0;
        changed = true;
      }
    }
  }

  std::map<std::string, std::vector<std::size_t>, decltype(&natural_less)> by_user(&natural_less);
  std::map<std::string, ItemId, decltype(&natural_less)> items(&natural_less);
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (!alive[r]) continue;
    by_user[raw[r].user].push_back(r);
    items.emplace(raw[r].item, 0);
  }
  if (by_user.empty()) throw Error(ErrorCode::AllFiltered, "no interactions survive the k-core filter");

  SplitDataset ds;
  for (auto& [id, dense] : items) {
    dense = static_cast<ItemId>(ds.item_ids.size());
    ds.item_ids.push_back(id);
  }
  for (auto& [user, rows] : by_user) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return raw[a].time < raw[b].time; });
    ds.user_ids.push_back(user);
    std::vector<ItemId> seq;
    std::vector<std::string> times;
    for (std::size_t r : rows) {
      seq.push_back(items.at(raw[r].item));
      times.push_back(raw[r].timestamp);
      ds.filtered.push_back(raw[r]);
    }
    ds.test.push_back(seq[seq.size() - 1]);
    ds.validation.push_back(seq[seq.size() - 2]);
    ds.train.sequences.emplace_back(seq.begin(), seq.end() - 2);
    ds.full.sequences.push_back(std::move(seq));
    ds.timestamps.push_back(std::move(times));
  }
  return ds;
}

// Groups dense-id interaction rows (item column must be an integer id) into
// per-user chronological sequences. Users keep their natural id order.
inline InteractionLog interactions_to_log(const std::vector<RawInteraction>& rows) {
  std::map<std::string, std::vector<std::size_t>, decltype(&natural_less)> by_user(&natural_less);
  for (std::size_t r = 0; r < rows.size(); ++r) by_user[rows[r].user].push_back(r);
  InteractionLog log;
  for (auto& [user, idx] : by_user) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].time < rows[b].time; });
    std::vector<ItemId> seq;
    for (std::size_t r : idx) seq.push_back(detail::parse_number<ItemId>(rows[r].item, "dense item id"));
    log.sequences.push_back(std::move(seq));
  }
  return log;
}

}  // namespace sidforge
