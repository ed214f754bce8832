#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sidforge/error.hpp"

namespace sidforge {

// Dense item index in [0, N).
using ItemId = std::uint32_t;
// One codeword index in [0, V). Codes are 0-based everywhere.
using Code = std::uint32_t;

// A fixed-length sequence of codes identifying an item (its Semantic ID).
class SidSequence {
 public:
  SidSequence() = default;
  SidSequence(std::initializer_list<Code> codes) : codes_(codes) {}
  explicit SidSequence(std::vector<Code> codes) : codes_(std::move(codes)) {}

  std::size_t size() const noexcept { return codes_.size(); }
  bool empty() const noexcept { return codes_.empty(); }
  Code operator[](std::size_t level) const { return codes_[level]; }
  Code& operator[](std::size_t level) { return codes_[level]; }
  Code back() const { return codes_.back(); }

  std::span<const Code> codes() const noexcept { return codes_; }
  auto begin() const noexcept { return codes_.begin(); }
  auto end() const noexcept { return codes_.end(); }

  // The first `len` codes.
  SidSequence prefix(std::size_t len) const {
    return SidSequence(std::vector<Code>(codes_.begin(), codes_.begin() + len));
  }

  std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < codes_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(codes_[i]);
    }
    return out + "]";
  }

  friend bool operator==(const SidSequence&, const SidSequence&) = default;
  friend auto operator<=>(const SidSequence&, const SidSequence&) = default;

 private:
  std::vector<Code> codes_;
};

struct SidSequenceHash {
  std::size_t operator()(const SidSequence& s) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (Code c : s) {
      h ^= static_cast<std::size_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// Bidirectional item <-> SID lookup table. Immutable after construction.
//
// `inverse` is ordered lexicographically by SID and each item list is sorted
// ascending, so iteration over groups is deterministic.
class SidIndex {
 public:
  using InverseMap = std::map<SidSequence, std::vector<ItemId>>;

  SidIndex() = default;

  // Builds from the per-item SIDs; item i gets forward[i].
  SidIndex(std::vector<SidSequence> forward, std::size_t sid_len, std::size_t codebook_size)
      : sid_len_(sid_len), codebook_size_(codebook_size), forward_(std::move(forward)) {
    for (ItemId i = 0; i < forward_.size(); ++i) {
      const auto& s = forward_[i];
      if (s.size() != sid_len_) {
        throw Error(ErrorCode::BadSidLength, "item " + std::to_string(i) + " has " +
                                                 std::to_string(s.size()) + " codes, expected " +
                                                 std::to_string(sid_len_));
      }
      for (Code c : s) {
        if (c >= codebook_size_) {
          throw Error(ErrorCode::CodeOutOfRange, "item " + std::to_string(i) + " code " +
                                                     std::to_string(c) + " >= V=" +
                                                     std::to_string(codebook_size_));
        }
      }
      inverse_[s].push_back(i);  // ascending by construction
    }
  }

  std::size_t n_items() const noexcept { return forward_.size(); }
  std::size_t sid_len() const noexcept { return sid_len_; }
  std::size_t codebook_size() const noexcept { return codebook_size_; }

  const SidSequence& sid(ItemId item) const {
    if (item >= forward_.size()) {
      throw Error(ErrorCode::UnknownItem, "item " + std::to_string(item) + " not in index");
    }
    return forward_[item];
  }
  const std::vector<SidSequence>& forward() const noexcept { return forward_; }
  const InverseMap& inverse() const noexcept { return inverse_; }

  // Items sharing SID `s`; empty when no item has it.
  std::span<const ItemId> group(const SidSequence& s) const {
    auto it = inverse_.find(s);
    if (it == inverse_.end()) return {};
    return it->second;
  }
  std::size_t group_size(const SidSequence& s) const { return group(s).size(); }

 private:
  std::size_t sid_len_ = 0;
  std::size_t codebook_size_ = 0;
  std::vector<SidSequence> forward_;
  InverseMap inverse_;
};

// Builds an index from explicit (item, SID) pairs. The pairs must cover
// 0..N-1 exactly once, in any order.
inline SidIndex build_sid_index(const std::vector<std::pair<ItemId, SidSequence>>& assignments,
                                std::size_t sid_len, std::size_t codebook_size) {
  const std::size_t n = assignments.size();
  std::vector<SidSequence> forward(n);
  std::vector<bool> seen(n, false);
  for (const auto& [item, sid] : assignments) {
    if (item >= n) {
      throw Error(ErrorCode::MissingItem, "item id " + std::to_string(item) +
                                              " leaves a gap; ids must be dense in [0, " +
                                              std::to_string(n) + ")");
    }
    if (seen[item]) {
      throw Error(ErrorCode::DuplicateItem, "item " + std::to_string(item) + " assigned twice");
    }
    seen[item] = true;
    forward[item] = sid;
  }
  return SidIndex(std::move(forward), sid_len, codebook_size);
}

// C(s): the items whose SID equals s. Unknown SIDs yield an empty group.
inline std::vector<ItemId> collision_group(const SidIndex& index, const SidSequence& s) {
  auto g = index.group(s);
  return {g.begin(), g.end()};
}

// Per-user chronologically ordered item sequences; user id = position.
struct InteractionLog {
  std::vector<std::vector<ItemId>> sequences;

  std::size_t n_users() const noexcept { return sequences.size(); }

  std::size_t n_interactions() const noexcept {
    std::size_t total = 0;
    for (const auto& s : sequences) total += s.size();
    return total;
  }

  // Largest referenced item id + 1 (0 for an empty log).
  std::size_t item_bound() const noexcept {
    std::size_t bound = 0;
    for (const auto& s : sequences)
      for (ItemId i : s) bound = std::max<std::size_t>(bound, std::size_t{i} + 1);
    return bound;
  }

  void validate(std::size_t n_items) const {
    for (std::size_t u = 0; u < sequences.size(); ++u) {
      if (sequences[u].empty()) {
        throw Error(ErrorCode::BadInput, "user " + std::to_string(u) + " has no interactions");
      }
      for (ItemId i : sequences[u]) {
        if (i >= n_items) {
          throw Error(ErrorCode::UnknownItem, "user " + std::to_string(u) + " references item " +
                                                  std::to_string(i));
        }
      }
    }
  }
};

}  // namespace sidforge
