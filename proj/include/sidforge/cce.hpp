#pragma once

// Collision-corrected evaluation of ranked SID beams.
//
// A beam of SIDs is expanded into an item ranking by concatenating the
// collision groups of its SIDs in beam order. The target item's group occupies
// positions p .. p+g-1 of that ranking; of those, m fall inside the top K.
// ItemHit@K credits m/g and ItemNDCG@K sums the log discounts of the m in-window
// positions, divided by g. SIDs absent from the index contribute no positions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <unordered_set>
#include <vector>

#include "sidforge/core.hpp"
#include "sidforge/detail/parallel.hpp"

namespace sidforge {

// Keeps the first occurrence of every SID, preserving rank order.
inline std::vector<SidSequence> dedupe_beams(std::vector<SidSequence> beams) {
  std::unordered_set<SidSequence, SidSequenceHash> seen;
  std::vector<SidSequence> out;
  out.reserve(beams.size());
  for (auto& s : beams) {
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

// One evaluated test case. Beams are rank ordered (rank 1 first) and
// deduplicated on construction.
struct BeamRecord {
  std::uint64_t user = 0;
  ItemId target_item = 0;
  std::vector<SidSequence> beams;

  BeamRecord() = default;
  BeamRecord(std::uint64_t user_id, ItemId target, std::vector<SidSequence> ranked)
      : user(user_id), target_item(target), beams(dedupe_beams(std::move(ranked))) {}
};

struct ExpandedMatch {
  std::size_t rank = 0;        // r: first 1-based rank of the target SID within top K, 0 if absent
  std::size_t group_size = 0;  // g = |C(s_target)|
  std::size_t start = 0;       // p: expanded start position (1-based), 0 if absent
  std::size_t in_window = 0;   // m: target-group items at expanded positions <= K
  std::size_t k = 0;
};

// 1 / log2(pos + 1), the standard NDCG discount for 1-based position `pos`.
inline double log_discount(std::size_t pos) {
  return 1.0 / (std::log(static_cast<double>(pos) + 1.0) / std::numbers::ln2);
}

inline ExpandedMatch match_target(std::span<const SidSequence> beam, const SidIndex& index,
                                  ItemId target, std::size_t k) {
  const SidSequence& target_sid = index.sid(target);  // throws UnknownItem
  ExpandedMatch match;
  match.k = k;
  match.group_size = index.group_size(target_sid);
  std::size_t before = 0;
  const std::size_t depth = std::min(k, beam.size());
  for (std::size_t q = 0; q < depth; ++q) {
    if (beam[q] == target_sid) {
      match.rank = q + 1;
      break;
    }
    before += index.group_size(beam[q]);
  }
  if (match.rank == 0) return match;
  match.start = 1 + before;
  const std::size_t room = k + 1 > match.start ? k + 1 - match.start : 0;
  match.in_window = std::min(match.group_size, room);
  return match;
}

// m / g. A zero-size group scores 0.
inline double item_hit(const ExpandedMatch& match) {
  if (match.group_size == 0) return 0.0;
  return static_cast<double>(match.in_window) / static_cast<double>(match.group_size);
}

// (1/g) * sum_{e=1..m} 1/log2(p+e); no IDCG normalisation (IDCG is 1).
inline double item_ndcg(const ExpandedMatch& match) {
  if (match.group_size == 0 || match.in_window == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t e = 0; e < match.in_window; ++e) sum += log_discount(match.start + e);
  return sum / static_cast<double>(match.group_size);
}

struct SidMetrics {
  double hit = 0.0;
  double ndcg = 0.0;
};

// Conventional SID-level Hit@K / NDCG@K on the (deduplicated) beam.
inline SidMetrics sid_metrics(std::span<const SidSequence> beam, const SidSequence& target_sid,
                              std::size_t k) {
  const std::size_t depth = std::min(k, beam.size());
  for (std::size_t q = 0; q < depth; ++q) {
    if (beam[q] == target_sid) return {1.0, log_discount(q + 1)};
  }
  return {};
}

inline std::optional<double> inflation_percent(double sid_hit, double item_hit_value) {
  if (item_hit_value == 0.0) return std::nullopt;
  return (sid_hit / item_hit_value - 1.0) * 100.0;
}

struct MetricsAtK {
  std::size_t k = 0;
  double sid_hit = 0.0;
  double sid_ndcg = 0.0;
  double item_hit = 0.0;
  double item_ndcg = 0.0;
  std::optional<double> inflation_percent;  // null when item_hit == 0
};

struct MetricsReport {
  std::vector<MetricsAtK> per_k;  // ascending K
  std::size_t n_records = 0;
  // Records whose target item is not in the index; they score 0 everywhere.
  std::size_t skipped_targets = 0;
  // Records whose deduplicated beam is shorter than the largest K.
  std::size_t short_beams = 0;

  const MetricsAtK& at(std::size_t k) const {
    for (const auto& m : per_k)
      if (m.k == k) return m;
    throw Error(ErrorCode::BadInput, "K=" + std::to_string(k) + " was not evaluated");
  }
};

// Per-K means over all records. Per-record scores may be computed by several
// workers; the reduction always runs in record order, so the result does not
// depend on `workers`.
inline MetricsReport evaluate(std::span<const BeamRecord> records, const SidIndex& index,
                              const std::vector<std::size_t>& ks, std::size_t workers = 1) {
  if (records.empty()) throw Error(ErrorCode::EmptyEvaluation, "no beam records to evaluate");
  std::set<std::size_t> k_set(ks.begin(), ks.end());
  if (k_set.empty() || *k_set.begin() == 0) {
    throw Error(ErrorCode::BadInput, "cutoffs K must be a non-empty set of positive integers");
  }
  const std::vector<std::size_t> sorted_ks(k_set.begin(), k_set.end());
  const std::size_t nk = sorted_ks.size();
  const std::size_t k_max = sorted_ks.back();

  // Row r holds [sid_hit, sid_ndcg, item_hit, item_ndcg] for each K.
  std::vector<double> scores(records.size() * nk * 4, 0.0);
  std::vector<unsigned char> skipped(records.size(), 0), short_beam(records.size(), 0);

  detail::parallel_for(records.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const BeamRecord& rec = records[r];
      short_beam[r] = rec.beams.size() < k_max;
      if (rec.target_item >= index.n_items()) {
        skipped[r] = 1;
        continue;
      }
      const SidSequence& target_sid = index.sid(rec.target_item);
      for (std::size_t j = 0; j < nk; ++j) {
        const auto sid = sid_metrics(rec.beams, target_sid, sorted_ks[j]);
        const auto match = match_target(rec.beams, index, rec.target_item, sorted_ks[j]);
        double* row = &scores[(r * nk + j) * 4];
        row[0] = sid.hit;
        row[1] = sid.ndcg;
        row[2] = item_hit(match);
        row[3] = item_ndcg(match);
      }
    }
  });

  MetricsReport report;
  report.n_records = records.size();
  std::vector<detail::KahanSum> sums(nk * 4);
  for (std::size_t r = 0; r < records.size(); ++r) {
    report.skipped_targets += skipped[r];
    report.short_beams += short_beam[r];
    for (std::size_t c = 0; c < nk * 4; ++c) sums[c].add(scores[r * nk * 4 + c]);
  }
  const double n = static_cast<double>(records.size());
  for (std::size_t j = 0; j < nk; ++j) {
    MetricsAtK m;
    m.k = sorted_ks[j];
    m.sid_hit = sums[j * 4 + 0].value() / n;
    m.sid_ndcg = sums[j * 4 + 1].value() / n;
    m.item_hit = sums[j * 4 + 2].value() / n;
    m.item_ndcg = sums[j * 4 + 3].value() / n;
    m.inflation_percent = inflation_percent(m.sid_hit, m.item_hit);
    report.per_k.push_back(m);
  }
  return report;
}

}  // namespace sidforge
