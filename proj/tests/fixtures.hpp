#pragma once

// Input builders shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "sidforge/cce.hpp"
#include "sidforge/quantization.hpp"
#include "sidforge/zcr.hpp"

namespace sidforge::fixture {

// Items 14 and 1943 share last code 206 in a 256-code last level. Only codes
// 206 and 111 are cheap; everything else costs 200 or more.
inline constexpr ItemId kPairItems[2] = {14, 1943};
inline constexpr Code kSharedCode = 206;
inline constexpr Code kSpareCode = 111;

inline CostMatrix shared_code_pair_costs() {
  CostMatrix d{2, 256, std::vector<double>(2 * 256)};
  for (std::size_t c = 0; c < 256; ++c) {
    d(0, c) = 200.0 + static_cast<double>(c);
    d(1, c) = 210.0 + static_cast<double>(c);
  }
  d(0, kSharedCode) = 154.02;
  d(1, kSharedCode) = 154.74;
  d(0, kSpareCode) = 167.78;
  d(1, kSpareCode) = 175.39;
  return d;
}

struct ZcrInstance {
  SidIndex index;
  QuantizationModel model;
};

// Random index and model of matching shape. Prefix groups hold at most
// `max_group` items (keep it <= v for the capacity condition) and draw their
// last codes from a few values so that most groups collide.
inline ZcrInstance random_zcr_instance(std::mt19937_64& rng, std::size_t n_prefixes, std::size_t levels,
                                       std::size_t v, std::size_t dim, std::size_t max_group) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<SidSequence> forward;
  std::uniform_int_distribution<Code> code(0, static_cast<Code>(v - 1));
  std::size_t prefix_space = 1;
  for (std::size_t l = 0; l + 1 < levels; ++l) prefix_space *= v;
  if (n_prefixes > prefix_space) throw Error(ErrorCode::BadInput, "too many prefixes for the code space");
  for (std::size_t p = 0; p < n_prefixes; ++p) {
    std::vector<Code> prefix(levels - 1);
    // Distinct prefixes: p written in base v.
    std::size_t rest = p;
    for (std::size_t l = 0; l + 1 < levels; ++l) {
      prefix[l] = static_cast<Code>(rest % v);
      rest /= v;
    }
    const std::size_t size = 1 + rng() % max_group;
    const std::size_t spread = 1 + rng() % std::min<std::size_t>(v, 3);
    std::vector<Code> palette(spread);
    for (auto& c : palette) c = code(rng);
    for (std::size_t i = 0; i < size; ++i) {
      auto codes = prefix;
      codes.push_back(palette[rng() % spread]);
      forward.emplace_back(std::move(codes));
    }
  }
  std::shuffle(forward.begin(), forward.end(), rng);

  QuantizationModel model;
  model.levels = levels;
  model.codebook_size = v;
  model.dim = dim;
  model.n_items = forward.size();
  model.codebooks.resize(levels * v * dim);
  model.residuals.resize(forward.size() * dim);
  for (auto& x : model.codebooks) x = gauss(rng);
  // Residuals sit near their native last-level codeword and, as after a real
  // quantizer, strictly nearer to it than to any other codeword.
  const float* last = model.codebooks.data() + (levels - 1) * v * dim;
  for (std::size_t i = 0; i < forward.size(); ++i) {
    float* r = model.residuals.data() + i * dim;
    const float* own = last + forward[i].back() * dim;
    auto dist = [&](const float* e) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) acc += double(r[k] - e[k]) * double(r[k] - e[k]);
      return acc;
    };
    for (bool nearest = false; !nearest;) {
      for (std::size_t k = 0; k < dim; ++k) r[k] = own[k] + 0.5f * gauss(rng);
      nearest = true;
      for (std::size_t c = 0; c < v && nearest; ++c) {
        if (c != forward[i].back()) nearest = dist(last + c * dim) > dist(own);
      }
    }
  }
  return {SidIndex(std::move(forward), levels, v), std::move(model)};
}

struct CceInstance {
  std::vector<SidSequence> forward;
  std::vector<SidSequence> beam;  // deduplicated
  ItemId target = 0;
  std::size_t k = 1;
};

// Small random index (N <= 50, L <= 3, V <= 8), K in 1..10, and a beam of up
// to 13 SIDs that may contain the target. Unless `indexed_only` is set, about
// a quarter of the other beam entries are arbitrary code sequences.
inline CceInstance random_cce_instance(std::mt19937_64& rng, bool indexed_only) {
  CceInstance inst;
  const std::size_t n = 1 + rng() % 50;
  const std::size_t len = 1 + rng() % 3;
  const Code v = 1 + rng() % 8;
  inst.k = 1 + rng() % 10;
  std::uniform_int_distribution<Code> code(0, v - 1);
  auto random_sid = [&] {
    std::vector<Code> c(len);
    for (auto& x : c) x = code(rng);
    return SidSequence(std::move(c));
  };
  for (std::size_t i = 0; i < n; ++i) inst.forward.push_back(random_sid());
  inst.target = static_cast<ItemId>(rng() % n);
  const std::size_t width = rng() % 13;
  for (std::size_t q = 0; q < width; ++q) {
    const bool indexed = indexed_only || rng() % 4 != 0;
    inst.beam.push_back(indexed ? inst.forward[rng() % n] : random_sid());
  }
  if (rng() % 2) {
    const std::size_t pos = width ? rng() % (width + 1) : 0;
    inst.beam.insert(inst.beam.begin() + static_cast<std::ptrdiff_t>(pos), inst.forward[inst.target]);
  }
  inst.beam = dedupe_beams(std::move(inst.beam));
  return inst;
}

}  // namespace sidforge::fixture
