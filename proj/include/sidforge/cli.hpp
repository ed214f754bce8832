#pragma once

// The sid-forge command line. Exit codes: 0 success, 1 validation error or
// bad usage, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sidforge/cce.hpp"
#include "sidforge/collab.hpp"
#include "sidforge/collision.hpp"
#include "sidforge/dataset.hpp"
#include "sidforge/io.hpp"
#include "sidforge/report.hpp"
#include "sidforge/rkmeans.hpp"
#include "sidforge/synth.hpp"
#include "sidforge/zcr.hpp"

namespace sidforge::cli {

namespace detail {

inline void write_json(const std::string& path, const nlohmann::json& doc) {
  auto out = open_output(path, true);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path, true);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// Thrown by a command that ran correctly but whose check failed.
struct CheckFailed {};

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sid-forge: Semantic-ID collision analysis, collision-corrected evaluation and "
               "zero-collision reassignment",
               "sid-forge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // analyze
  std::string index_path, json_path;
  auto* analyze = app.add_subcommand("analyze", "Collision and prefix-group statistics of a SID index");
  analyze->add_option("--index", index_path, "SID index file")->required();
  analyze->add_option("--json", json_path, "Write the JSON report here");

  // capacity-check
  std::size_t capacity_v = 0;
  auto* capacity = app.add_subcommand("capacity-check",
                                      "Check that every prefix group fits in the last-level codebook "
                                      "(exit 1 if not)");
  capacity->add_option("--index", index_path, "SID index file")->required();
  capacity->add_option("--codebook", capacity_v, "Codebook size V (default: the index's V)");
  capacity->add_option("--json", json_path, "Write the JSON report here");

  // tokenize
  std::string embeddings_path, out_index, out_model;
  std::size_t levels = 4, codebook = 256, iters = 20, workers = 1;
  std::uint64_t seed = 42;
  auto* tok = app.add_subcommand("tokenize", "Residual k-means tokenizer");
  tok->add_option("--embeddings", embeddings_path, "SFEMB1 embedding file")->required();
  tok->add_option("--levels", levels, "SID length L")->capture_default_str();
  tok->add_option("--codebook", codebook, "Codebook size V")->capture_default_str();
  tok->add_option("--iters", iters, "Lloyd iterations per level")->capture_default_str();
  tok->add_option("--seed", seed, "Random seed")->capture_default_str();
  tok->add_option("--workers", workers, "Worker threads")->capture_default_str();
  tok->add_option("--out-index", out_index, "Output SID index")->required();
  tok->add_option("--out-model", out_model, "Output SFQM1 model")->required();
  tok->add_option("--json", json_path, "Write the JSON report here");

  // reassign
  std::string model_path, method_name = "zcr", report_path;
  bool strict = false;
  auto* reass = app.add_subcommand("reassign", "Zero-collision last-level reassignment");
  reass->add_option("--index", index_path, "Native SID index")->required();
  reass->add_option("--model", model_path, "SFQM1 model")->required();
  reass->add_option("--method", method_name, "zcr | greedy")
      ->check(CLI::IsMember({"zcr", "greedy"}))
      ->capture_default_str();
  reass->add_option("--out-index", out_index, "Output SID index")->required();
  reass->add_option("--report", report_path, "Write the JSON report here");
  reass->add_flag("--strict", strict, "Exit 1 if any prefix group exceeds the codebook size");
  reass->add_option("--workers", workers, "Worker threads")->capture_default_str();

  // evaluate
  std::string beams_path;
  std::vector<std::size_t> ks{5, 10};
  auto* eval = app.add_subcommand("evaluate", "SID-level and collision-corrected item-level metrics");
  eval->add_option("--index", index_path, "SID index")->required();
  eval->add_option("--beams", beams_path, "Beam JSON Lines file")->required();
  eval->add_option("--k", ks, "Cutoffs, comma separated")->delimiter(',')->capture_default_str();
  eval->add_option("--json", json_path, "Write the JSON report here");
  eval->add_option("--workers", workers, "Worker threads")->capture_default_str();

  // embed-cf
  std::string interactions_path, out_path;
  std::size_t window = 3, holdout = 2, dim = 256, n_items_opt = 0;
  auto* ecf = app.add_subcommand("embed-cf", "PPMI + truncated SVD collaborative embeddings");
  ecf->add_option("--interactions", interactions_path, "Dense-id interaction TSV")->required();
  ecf->add_option("--window", window, "Co-occurrence window")->capture_default_str();
  ecf->add_option("--holdout", holdout, "Trailing items per user to hold out")->capture_default_str();
  ecf->add_option("--dim", dim, "Embedding dimension k")->capture_default_str();
  ecf->add_option("--n-items", n_items_opt, "Item count (default: max item id + 1)");
  ecf->add_option("--seed", seed, "Random seed")->capture_default_str();
  ecf->add_option("--out", out_path, "Output SFEMB1 file")->required();
  ecf->add_option("--json", json_path, "Write the JSON report here");

  // fuse
  std::string text_path, cf_path;
  double alpha = 0.5;
  std::size_t fuse_dim = 0;
  auto* fz = app.add_subcommand("fuse", "PCA fusion of textual and collaborative embeddings");
  fz->add_option("--text", text_path, "Textual SFEMB1 embeddings")->required();
  fz->add_option("--cf", cf_path, "Collaborative SFEMB1 embeddings")->required();
  fz->add_option("--alpha", alpha, "Weight of the collaborative block")->capture_default_str();
  fz->add_option("--dim", fuse_dim, "Output dimension (default: text dimension)");
  fz->add_option("--out", out_path, "Output SFEMB1 file")->required();
  fz->add_option("--json", json_path, "Write the JSON report here");

  // preprocess
  std::size_t k_core = 5;
  std::string out_dir;
  auto* prep = app.add_subcommand("preprocess", "k-core filtering and leave-one-out split");
  prep->add_option("--interactions", interactions_path, "Raw interaction TSV")->required();
  prep->add_option("--k-core", k_core, "Minimum interactions per user and item")->capture_default_str();
  prep->add_option("--out-dir", out_dir, "Output directory")->required();
  prep->add_option("--json", json_path, "Write the JSON report here");

  // synth-beams
  SynthBeamConfig synth_cfg;
  std::size_t n_records = 0;
  auto* synth = app.add_subcommand("synth-beams", "Synthetic beam file with planted targets");
  synth->add_option("--index", index_path, "SID index")->required();
  synth->add_option("--out", out_path, "Output JSON Lines file")->required();
  synth->add_option("--beam-width", synth_cfg.beam_width, "Beam width")->capture_default_str();
  synth->add_option("--hit-prob", synth_cfg.target_hit_prob,
                    "Per-rank planting probabilities, comma separated")
      ->delimiter(',');
  synth->add_option("--random-fraction", synth_cfg.random_fraction,
                    "Share of fillers drawn as random code sequences")
      ->capture_default_str();
  synth->add_option("--records", n_records, "Number of records (0: one per item)")->capture_default_str();
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--json", json_path, "Write the JSON report here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (analyze->parsed()) {
      const auto index = load_sid_index(index_path);
      const auto stats = collision_stats(index);
      nlohmann::json result = to_json(stats);
      out << "items " << stats.n_items << "  coll% " << detail::fixed(stats.coll_percent_rounded(), 2)
          << "  g_max " << stats.g_max << '\n';
      if (index.sid_len() >= 2) {
        const auto table = prefix_groups(index);
        const auto cap = capacity_check(table, index.codebook_size());
        result["prefix"] = to_json(table, cap);
        out << "prefix groups " << table.groups.size() << "  max " << table.max_size << " (mean "
            << detail::fixed(cap.mean_size, 2) << ")  rho_total " << table.rho_total
            << "  capacity " << (cap.satisfied ? "ok" : "VIOLATED") << '\n';
      } else {
        result["prefix"] = nullptr;
      }
      if (!json_path.empty()) {
        detail::write_json(json_path, envelope("analyze", {{"index", index_path}}, result));
      }
    } else if (capacity->parsed()) {
      const auto index = load_sid_index(index_path);
      const std::size_t v = capacity_v ? capacity_v : index.codebook_size();
      const auto table = prefix_groups(index);
      const auto cap = capacity_check(table, v);
      out << "max " << cap.max_size << " (" << detail::fixed(cap.mean_size, 2) << ") vs V=" << v
          << ": " << (cap.satisfied ? "satisfied" : "violated") << '\n';
      for (const auto& p : cap.violating_prefixes) out << "  oversize prefix " << p.to_string() << '\n';
      if (!json_path.empty()) {
        detail::write_json(json_path, envelope("capacity-check", {{"index", index_path}, {"codebook", v}},
                                               to_json(table, cap)));
      }
      if (!cap.satisfied) throw detail::CheckFailed{};
    } else if (tok->parsed()) {
      const auto emb = load_embeddings(embeddings_path);
      const auto res = tokenize(emb, levels, codebook, iters, seed, workers);
      save_sid_index(out_index, res.index);
      save_model(out_model, res.model);
      const auto stats = collision_stats(res.index);
      out << "tokenized " << emb.n << " items into L=" << levels << " V=" << codebook << "  coll% "
          << detail::fixed(stats.coll_percent_rounded(), 2) << '\n';
      if (!json_path.empty()) {
        nlohmann::json inertia = nlohmann::json::array();
        for (const auto& l : res.levels) inertia.push_back(l.inertia);
        detail::write_json(json_path,
                           envelope("tokenize",
                                    {{"embeddings", embeddings_path}, {"levels", levels},
                                     {"codebook", codebook}, {"iters", iters}, {"seed", seed},
                                     {"out_index", out_index}, {"out_model", out_model}},
                                    {{"level_inertia", inertia}, {"collision", to_json(stats)}}));
      }
    } else if (reass->parsed()) {
      const auto index = load_sid_index(index_path);
      const auto model = load_model(model_path);
      const auto method = method_name == "zcr" ? ReassignMethod::Zcr : ReassignMethod::Greedy;
      auto [reassigned, report] = reassign(index, model, method, workers);
      save_sid_index(out_index, reassigned);
      const bool collision_free = verify_zero_collision(reassigned);
      out << method_name << ": n_reass " << report.n_reass << "  sum dD " << detail::fixed(report.delta_d_total)
          << "  oversize groups " << report.oversize_prefixes.size() << "  collision-free "
          << (collision_free ? "yes" : "no") << '\n';
      if (!report_path.empty()) {
        auto result = to_json(report);
        result["collision_free"] = collision_free;
        detail::write_json(report_path,
                           envelope("reassign",
                                    {{"index", index_path}, {"model", model_path}, {"method", method_name},
                                     {"out_index", out_index}, {"strict", strict}},
                                    result));
      }
      if (strict && !report.oversize_prefixes.empty()) throw detail::CheckFailed{};
    } else if (eval->parsed()) {
      const auto index = load_sid_index(index_path);
      const auto records = load_beams(beams_path);
      const auto report = evaluate(records, index, ks, workers);
      for (const auto& m : report.per_k) {
        out << "K=" << m.k << "  Hit " << detail::fixed(m.sid_hit) << "  NDCG " << detail::fixed(m.sid_ndcg)
            << "  ItemHit " << detail::fixed(m.item_hit) << "  ItemNDCG " << detail::fixed(m.item_ndcg)
            << "  Infl% "
            << (m.inflation_percent ? detail::fixed(*m.inflation_percent, 2) : std::string("n/a")) << '\n';
      }
      if (report.skipped_targets) err << "warning: " << report.skipped_targets << " targets not in index\n";
      if (report.short_beams) err << "warning: " << report.short_beams << " beams shorter than max K\n";
      if (!json_path.empty()) {
        detail::write_json(json_path, envelope("evaluate",
                                               {{"index", index_path}, {"beams", beams_path}, {"k", ks}},
                                               to_json(report)));
      }
    } else if (ecf->parsed()) {
      const auto log = interactions_to_log(load_interactions(interactions_path));
      const std::size_t n = std::max(n_items_opt, log.item_bound());
      const auto ppmi = build_ppmi(log, n, window, holdout);
      const auto emb = truncated_svd(ppmi, dim, seed);
      save_embeddings(out_path, emb);
      out << "embedded " << emb.n << " items in " << emb.d << " dims (" << ppmi.nonZeros()
          << " PPMI entries)\n";
      if (!json_path.empty()) {
        detail::write_json(json_path,
                           envelope("embed-cf",
                                    {{"interactions", interactions_path}, {"window", window},
                                     {"holdout", holdout}, {"dim", dim}, {"seed", seed}, {"out", out_path}},
                                    {{"n_items", emb.n}, {"ppmi_nonzeros", ppmi.nonZeros()}}));
      }
    } else if (fz->parsed()) {
      const auto text = load_embeddings(text_path);
      const auto cf = load_embeddings(cf_path);
      const std::size_t d_out = fuse_dim ? fuse_dim : text.d;
      const auto fused = fuse(text, cf, alpha, d_out);
      save_embeddings(out_path, fused);
      out << "fused " << fused.n << " items into " << fused.d << " dims\n";
      if (!json_path.empty()) {
        detail::write_json(json_path, envelope("fuse",
                                               {{"text", text_path}, {"cf", cf_path}, {"alpha", alpha},
                                                {"dim", d_out}, {"out", out_path}},
                                               {{"n_items", fused.n}, {"dim", fused.d}}));
      }
    } else if (prep->parsed()) {
      const auto ds = preprocess(load_interactions(interactions_path), k_core);
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec) throw Error(ErrorCode::Io, "cannot create '" + out_dir + "': " + ec.message());
      const std::filesystem::path dir(out_dir);
      {
        std::ostringstream s;
        write_interactions(s, ds.filtered);
        detail::write_text((dir / "filtered.tsv").string(), s.str());
      }
      auto id_table = [](const std::vector<std::string>& ids) {
        std::ostringstream s;
        for (std::size_t i = 0; i < ids.size(); ++i) s << i << '\t' << ids[i] << '\n';
        return s.str();
      };
      detail::write_text((dir / "users.tsv").string(), id_table(ds.user_ids));
      detail::write_text((dir / "items.tsv").string(), id_table(ds.item_ids));
      std::ostringstream all, train, valid, test;
      for (std::size_t u = 0; u < ds.full.sequences.size(); ++u) {
        const auto& seq = ds.full.sequences[u];
        for (std::size_t p = 0; p < seq.size(); ++p) {
          const std::string row = std::to_string(u) + '\t' + std::to_string(seq[p]) + '\t' +
                                  ds.timestamps[u][p] + '\n';
          all << row;
          (p + 2 < seq.size() ? train : p + 2 == seq.size() ? valid : test) << row;
        }
      }
      detail::write_text((dir / "interactions.tsv").string(), all.str());
      detail::write_text((dir / "train.tsv").string(), train.str());
      detail::write_text((dir / "valid.tsv").string(), valid.str());
      detail::write_text((dir / "test.tsv").string(), test.str());
      const auto st = ds.stats();
      out << "users " << st.n_users << "  items " << st.n_items << "  interactions " << st.n_interactions
          << "  avg len " << detail::fixed(st.avg_len, 2) << "  sparsity "
          << detail::fixed(st.sparsity_percent, 2) << "%\n";
      if (!json_path.empty()) {
        detail::write_json(json_path, envelope("preprocess",
                                               {{"interactions", interactions_path}, {"k_core", k_core},
                                                {"out_dir", out_dir}},
                                               to_json(st)));
      }
    } else if (synth->parsed()) {
      synth_cfg.seed = seed;
      const auto index = load_sid_index(index_path);
      std::vector<ItemId> targets;
      if (n_records == 0) {
        for (ItemId i = 0; i < index.n_items(); ++i) targets.push_back(i);
      } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, index.n_items() - 1);
        for (std::size_t r = 0; r < n_records; ++r) targets.push_back(static_cast<ItemId>(pick(rng)));
      }
      const auto records = synth_beams(index, targets, synth_cfg);
      save_beams(out_path, records);
      out << "wrote " << records.size() << " beam records\n";
      if (!json_path.empty()) {
        detail::write_json(json_path,
                           envelope("synth-beams",
                                    {{"index", index_path}, {"out", out_path},
                                     {"beam_width", synth_cfg.beam_width},
                                     {"hit_prob", synth_cfg.target_hit_prob},
                                     {"random_fraction", synth_cfg.random_fraction},
                                     {"records", n_records}, {"seed", seed}},
                                    {{"records", records.size()}}));
      }
    }
  } catch (const detail::CheckFailed&) {
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Io ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sidforge::cli
