#pragma once

// Synthetic beam generation for exercising the evaluation path without a
// trained generator.

#include <cstddef>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

#include "sidforge/cce.hpp"
#include "sidforge/core.hpp"

namespace sidforge {

struct SynthBeamConfig {
  std::size_t beam_width = 20;
  // Probability that the target SID is planted at rank r+1, tried in rank
  // order until one succeeds. Missing ranks have probability 0.
  std::vector<double> target_hit_prob;
  // Probability that a filler is a uniformly random code sequence (possibly
  // assigned to no item) instead of the SID of a random indexed item.
  double random_fraction = 0.0;
  std::uint64_t seed = 42;

  void validate() const {
    for (double p : target_hit_prob)
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::BadInput, "hit probabilities must lie in [0,1]");
    if (!(random_fraction >= 0.0 && random_fraction <= 1.0)) {
      throw Error(ErrorCode::BadInput, "random fraction must lie in [0,1]");
    }
    if (beam_width == 0) throw Error(ErrorCode::BadInput, "beam width must be >= 1");
  }
};

// One record per target; record r gets user id r. Each record draws from its
// own generator seeded with (seed, r), and the planting decision is drawn
// before any filler, so two indexes over the same items see the same planted
// ranks for the same seed.
inline std::vector<BeamRecord> synth_beams(const SidIndex& index, const std::vector<ItemId>& targets,
                                           const SynthBeamConfig& cfg) {
  cfg.validate();
  if (index.n_items() == 0) throw Error(ErrorCode::EmptyIndex, "index has no items");
  std::vector<BeamRecord> records;
  records.reserve(targets.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_item(0, index.n_items() - 1);
  std::uniform_int_distribution<Code> any_code(0, static_cast<Code>(index.codebook_size() - 1));

  for (std::size_t r = 0; r < targets.size(); ++r) {
    const SidSequence& target_sid = index.sid(targets[r]);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    std::mt19937_64 rng(seq);

    std::size_t planted = cfg.beam_width;  // none
    for (std::size_t q = 0; q < cfg.beam_width; ++q) {
      const double p = q < cfg.target_hit_prob.size() ? cfg.target_hit_prob[q] : 0.0;
      if (unit(rng) < p) {
        planted = q;
        break;
      }
    }

    std::unordered_set<SidSequence, SidSequenceHash> used{target_sid};
    std::vector<SidSequence> beam;
    beam.reserve(cfg.beam_width);
    const std::size_t max_attempts = 50 * cfg.beam_width + 100;
    std::size_t attempts = 0;
    for (std::size_t q = 0; q < cfg.beam_width; ++q) {
      if (q == planted) {
        beam.push_back(target_sid);
        continue;
      }
      while (attempts++ < max_attempts) {
        SidSequence candidate;
        if (cfg.random_fraction > 0.0 && unit(rng) < cfg.random_fraction) {
          std::vector<Code> codes(index.sid_len());
          for (auto& c : codes) c = any_code(rng);
          candidate = SidSequence(std::move(codes));
        } else {
          candidate = index.forward()[any_item(rng)];
        }
        if (used.insert(candidate).second) {
          beam.push_back(std::move(candidate));
          break;
        }
      }
    }
    records.emplace_back(r, targets[r], std::move(beam));
  }
  return records;
}

}  // namespace sidforge
