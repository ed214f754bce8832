#pragma once

// Zero-collision reassignment of last-level codes.
//
// Items are partitioned by their first L-1 codes. Inside a prefix group with
// rho > 0 collisions and at most V items, the last-level codes are re-chosen
// so that they are pairwise distinct, exactly rho items change code, and the
// summed cost increase D[i, new] - D[i, native] is minimal, where D is the
// squared distance between the item's last-level residual and a codeword.
// The prefix codes never change, so groups are independent subproblems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sidforge/collision.hpp"
#include "sidforge/core.hpp"
#include "sidforge/detail/parallel.hpp"
#include "sidforge/hungarian.hpp"
#include "sidforge/quantization.hpp"

namespace sidforge {

// Squared distances for the items of one group (rows) against all V
// last-level codewords (columns). Always double precision.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t row, std::size_t col) const { return data[row * cols + col]; }
  double& operator()(std::size_t row, std::size_t col) { return data[row * cols + col]; }
};

// `residuals` is rows x dim, `codebook` is codes x dim, both row-major.
inline CostMatrix cost_matrix(std::span<const float> residuals, std::span<const float> codebook,
                              std::size_t dim) {
  if (dim == 0 || residuals.size() % dim != 0 || codebook.size() % dim != 0) {
    throw Error(ErrorCode::DimMismatch, "residual/codeword buffers are not multiples of d=" +
                                            std::to_string(dim));
  }
  CostMatrix d{residuals.size() / dim, codebook.size() / dim, {}};
  d.data.resize(d.rows * d.cols);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const float* r = residuals.data() + i * dim;
    for (std::size_t c = 0; c < d.cols; ++c) {
      const float* e = codebook.data() + c * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = static_cast<double>(r[k]) - static_cast<double>(e[k]);
        acc += diff * diff;
      }
      d(i, c) = acc;
    }
  }
  return d;
}

// Cost matrix of the listed items against the model's last-level codebook.
inline CostMatrix cost_matrix(const QuantizationModel& model, std::span<const ItemId> items) {
  std::vector<float> gathered;
  gathered.reserve(items.size() * model.dim);
  for (ItemId i : items) {
    auto r = model.residual(i);
    gathered.insert(gathered.end(), r.begin(), r.end());
  }
  return cost_matrix(gathered, model.codebook(model.levels - 1), model.dim);
}

struct CodeChange {
  ItemId item = 0;
  Code old_code = 0;
  Code new_code = 0;
  double delta = 0.0;  // D[item, new] - D[item, old]
};

struct GroupSolution {
  std::vector<Code> codes;  // new last-level code per group member, input order
  std::vector<CodeChange> changes;
  double delta_d = 0.0;
};

inline std::size_t last_level_rho(std::span<const Code> native) {
  return native.size() - std::set<Code>(native.begin(), native.end()).size();
}

namespace detail {

inline void check_group(std::span<const ItemId> items, std::span<const Code> native,
                        const CostMatrix& d, std::size_t codebook_size) {
  if (items.size() != native.size() || d.rows != items.size()) {
    throw Error(ErrorCode::DimMismatch, "group items, native codes and cost rows disagree");
  }
  if (d.cols != codebook_size) {
    throw Error(ErrorCode::DimMismatch, "cost matrix has " + std::to_string(d.cols) +
                                            " columns, expected V=" +
                                            std::to_string(codebook_size));
  }
  for (Code c : native) {
    if (c >= codebook_size) throw Error(ErrorCode::CodeOutOfRange, "native code >= V");
  }
  if (items.size() > codebook_size) {
    throw Error(ErrorCode::GroupExceedsCapacity, "group of " + std::to_string(items.size()) +
                                                     " items exceeds V=" +
                                                     std::to_string(codebook_size));
  }
}

inline GroupSolution finish(std::span<const ItemId> items, std::span<const Code> native,
                            const CostMatrix& d, std::vector<Code> codes) {
  GroupSolution out;
  out.codes = std::move(codes);
  for (std::size_t r = 0; r < items.size(); ++r) {
    if (out.codes[r] == native[r]) continue;
    const double delta = d(r, out.codes[r]) - d(r, native[r]);
    out.changes.push_back({items[r], native[r], out.codes[r], delta});
    out.delta_d += delta;
  }
  return out;
}

}  // namespace detail

// Minimum-cost distinct last-level codes for one prefix group with exactly
// rho changes. The change count is enforced with a big-M term: moving item i
// off its native code costs M + D[i,c] - D[i,native], with M larger than any
// achievable spread of summed deltas, so the solver minimises the number of
// changes first and the cost increase second. rho is the least possible
// number of changes, so the result satisfies the exact-rho constraint.
inline GroupSolution solve_group(std::span<const ItemId> items, std::span<const Code> native,
                                 const CostMatrix& d, std::size_t codebook_size) {
  detail::check_group(items, native, d, codebook_size);
  const std::size_t n = items.size();
  const std::size_t rho = last_level_rho(native);
  if (rho == 0) return detail::finish(items, native, d, {native.begin(), native.end()});

  // Any two assignments' summed deltas differ by less than the sum of the
  // per-item delta ranges (the native delta 0 lies inside each range).
  double big_m = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t c = 0; c < codebook_size; ++c) {
      const double delta = d(r, c) - d(r, native[r]);
      lo = std::min(lo, delta);
      hi = std::max(hi, delta);
    }
    big_m += hi - lo;
  }
  std::vector<double> costs(n * codebook_size);
  for (std::size_t r = 0; r < n; ++r) {
    const double base = d(r, native[r]);
    for (std::size_t c = 0; c < codebook_size; ++c) {
      costs[r * codebook_size + c] = (c == native[r] ? 0.0 : big_m) + (d(r, c) - base);
    }
  }
  const auto assignment = solve_assignment(costs, n, codebook_size);
  std::vector<Code> codes(n);
  for (std::size_t r = 0; r < n; ++r) codes[r] = static_cast<Code>(assignment.row_to_col[r]);
  auto out = detail::finish(items, native, d, std::move(codes));
  if (out.changes.size() != rho) {
    throw Error(ErrorCode::BadInput, "cost scale too large to separate change count from cost");
  }
  return out;
}

// The sequential nearest-unused-code baseline: within each set of items
// sharing a native code, the item with the smallest native distance keeps it
// (ties: lower item id) and the others, in order of native distance, take
// their nearest code not used by anyone in the group (ties: lower code).
inline GroupSolution greedy_group(std::span<const ItemId> items, std::span<const Code> native,
                                  const CostMatrix& d, std::size_t codebook_size) {
  detail::check_group(items, native, d, codebook_size);
  const std::size_t n = items.size();
  std::map<Code, std::vector<std::size_t>> by_code;
  for (std::size_t r = 0; r < n; ++r) by_code[native[r]].push_back(r);

  std::vector<char> used(codebook_size, 0);
  for (Code c : native) used[c] = 1;
  std::vector<Code> codes(native.begin(), native.end());
  for (auto& [code, members] : by_code) {
    if (members.size() < 2) continue;
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (d(a, code) != d(b, code)) return d(a, code) < d(b, code);
      return items[a] < items[b];
    });
    for (std::size_t k = 1; k < members.size(); ++k) {
      const std::size_t r = members[k];
      std::size_t best = codebook_size;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < codebook_size; ++c) {
        if (!used[c] && d(r, c) < best_cost) {
          best_cost = d(r, c);
          best = c;
        }
      }
      codes[r] = static_cast<Code>(best);
      used[best] = 1;
    }
  }
  return detail::finish(items, native, d, std::move(codes));
}

enum class ReassignMethod { Zcr, Greedy };

inline std::string to_string(ReassignMethod m) { return m == ReassignMethod::Zcr ? "zcr" : "greedy"; }

struct GroupReassignment {
  SidSequence prefix;
  std::size_t size = 0;
  std::size_t rho = 0;
  double delta_d = 0.0;
  std::vector<CodeChange> changes;
};

struct ReassignmentReport {
  ReassignMethod method = ReassignMethod::Zcr;
  std::size_t n_reass = 0;
  double delta_d_total = 0.0;
  std::size_t rho_total = 0;  // over processed groups
  std::vector<GroupReassignment> groups;         // processed groups, prefix order
  std::vector<SidSequence> oversize_prefixes;    // skipped: size > V
};

inline void check_model(const SidIndex& index, const QuantizationModel& model) {
  if (index.sid_len() < 2) {
    throw Error(ErrorCode::SidTooShort, "last-level reassignment needs L >= 2");
  }
  if (model.levels != index.sid_len() || model.codebook_size != index.codebook_size() ||
      model.n_items != index.n_items()) {
    throw Error(ErrorCode::ModelMismatch,
                "model (L=" + std::to_string(model.levels) + ", V=" +
                    std::to_string(model.codebook_size) + ", N=" + std::to_string(model.n_items) +
                    ") does not match index (L=" + std::to_string(index.sid_len()) + ", V=" +
                    std::to_string(index.codebook_size()) + ", N=" +
                    std::to_string(index.n_items()) + ")");
  }
  model.validate();
}

// Runs one group solver over every prefix group that needs and admits
// reassignment. Groups may be solved by several workers; results are merged
// in prefix order and are identical for any worker count.
inline std::pair<SidIndex, ReassignmentReport> reassign(const SidIndex& index,
                                                        const QuantizationModel& model,
                                                        ReassignMethod method,
                                                        std::size_t workers = 1) {
  check_model(index, model);
  const auto table = prefix_groups(index);
  const std::size_t v = index.codebook_size();

  ReassignmentReport report;
  report.method = method;
  std::vector<const PrefixGroup*> active;
  for (const auto& g : table.groups) {
    if (g.rho == 0) continue;
    if (g.items.size() > v) {
      report.oversize_prefixes.push_back(g.prefix);
      continue;
    }
    active.push_back(&g);
  }

  std::vector<GroupSolution> solutions(active.size());
  detail::parallel_for(active.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto& g = *active[k];
      std::vector<Code> native;
      native.reserve(g.items.size());
      for (ItemId i : g.items) native.push_back(index.forward()[i].back());
      const auto d = cost_matrix(model, g.items);
      solutions[k] = method == ReassignMethod::Zcr ? solve_group(g.items, native, d, v)
                                                   : greedy_group(g.items, native, d, v);
    }
  });

  std::vector<SidSequence> forward = index.forward();
  detail::KahanSum total;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto& g = *active[k];
    auto& sol = solutions[k];
    for (std::size_t r = 0; r < g.items.size(); ++r) {
      forward[g.items[r]][index.sid_len() - 1] = sol.codes[r];
    }
    report.n_reass += sol.changes.size();
    report.rho_total += g.rho;
    for (const auto& ch : sol.changes) total.add(ch.delta);
    report.groups.push_back({g.prefix, g.items.size(), g.rho, sol.delta_d, std::move(sol.changes)});
  }
  report.delta_d_total = total.value();
  return {SidIndex(std::move(forward), index.sid_len(), v), std::move(report)};
}

inline std::pair<SidIndex, ReassignmentReport> zcr(const SidIndex& index,
                                                   const QuantizationModel& model,
                                                   std::size_t workers = 1) {
  return reassign(index, model, ReassignMethod::Zcr, workers);
}

inline std::pair<SidIndex, ReassignmentReport> greedy_reassign(const SidIndex& index,
                                                               const QuantizationModel& model,
                                                               std::size_t workers = 1) {
  return reassign(index, model, ReassignMethod::Greedy, workers);
}

// True iff every SID in the index identifies exactly one item.
inline bool verify_zero_collision(const SidIndex& index) {
  return std::all_of(index.inverse().begin(), index.inverse().end(),
                     [](const auto& entry) { return entry.second.size() == 1; });
}

}  // namespace sidforge
