#pragma once

// On-disk formats.
//
//   SID index   text: "#sid v=<V> l=<L> n=<N>\n" then one "<item>\t<c1>,...,<cL>\n"
//               per item in ascending id order. Codes are 0-based.
//   Model       binary, little-endian: "SFQM1", u32 L, V, d, N, then L*V*d
//               float32 codebooks (level-major) and N*d float32 residuals.
//   Embeddings  binary, little-endian: "SFEMB1", u32 n, d, then n*d float32.
//   Beams       JSON Lines: {"user":u,"target_item":i,"beams":[[c1,...],...]}.
//   Interactions TSV: user_id <TAB> item_id <TAB> timestamp.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sidforge/cce.hpp"
#include "sidforge/core.hpp"
#include "sidforge/embedding.hpp"
#include "sidforge/quantization.hpp"

namespace sidforge {

namespace detail {

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::Format, "bad " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::Format, "truncated header");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline void write_floats(std::ostream& out, const std::vector<float>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) write_u32(out, std::bit_cast<std::uint32_t>(f));
  }
}

inline std::vector<float> read_floats(std::istream& in, std::size_t count) {
  std::vector<float> values(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(count * sizeof(float)))) {
      throw Error(ErrorCode::Format, "truncated float payload");
    }
  } else {
    for (auto& f : values) f = std::bit_cast<float>(read_u32(in));
  }
  return values;
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw Error(ErrorCode::Format, "missing '" + std::string(magic) + "' magic");
  }
}

inline void expect_eof(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::Format, "trailing bytes after payload");
  }
}

inline std::uint32_t checked_u32(std::size_t v, std::string_view what) {
  if (v > 0xffffffffu) throw Error(ErrorCode::Format, std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return out;
}

// --- SID index -------------------------------------------------------------

inline void write_sid_index(std::ostream& out, const SidIndex& index) {
  out << "#sid v=" << index.codebook_size() << " l=" << index.sid_len() << " n=" << index.n_items()
      << '\n';
  for (ItemId i = 0; i < index.n_items(); ++i) {
    out << i << '\t';
    const auto& s = index.forward()[i];
    for (std::size_t l = 0; l < s.size(); ++l) {
      if (l) out << ',';
      out << s[l];
    }
    out << '\n';
  }
}

inline SidIndex read_sid_index(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Format, "empty SID index file");
  const auto head = detail::split(line, ' ');
  if (head.size() != 4 || head[0] != "#sid" || !head[1].starts_with("v=") ||
      !head[2].starts_with("l=") || !head[3].starts_with("n=")) {
    throw Error(ErrorCode::Format, "bad SID index header: '" + line + "'");
  }
  const auto v = detail::parse_number<std::size_t>(head[1].substr(2), "V");
  const auto l = detail::parse_number<std::size_t>(head[2].substr(2), "L");
  const auto n = detail::parse_number<std::size_t>(head[3].substr(2), "N");

  std::vector<SidSequence> forward;
  forward.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) throw Error(ErrorCode::Format, "blank line in SID index");
    const auto cols = detail::split(line, '\t');
    if (cols.size() != 2) throw Error(ErrorCode::Format, "expected 'item<TAB>codes': '" + line + "'");
    const auto item = detail::parse_number<std::size_t>(cols[0], "item id");
    if (item != forward.size()) {
      throw Error(ErrorCode::Format, "item ids must be 0..N-1 in ascending order; got " +
                                         std::to_string(item) + " at line " +
                                         std::to_string(forward.size() + 2));
    }
    std::vector<Code> codes;
    for (auto tok : detail::split(cols[1], ',')) codes.push_back(detail::parse_number<Code>(tok, "code"));
    forward.emplace_back(std::move(codes));
  }
  if (forward.size() != n) {
    throw Error(ErrorCode::Format, "header says n=" + std::to_string(n) + " but file has " +
                                       std::to_string(forward.size()) + " items");
  }
  return SidIndex(std::move(forward), l, v);
}

inline void save_sid_index(const std::string& path, const SidIndex& index) {
  auto out = open_output(path, true);
  write_sid_index(out, index);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline SidIndex load_sid_index(const std::string& path) {
  auto in = open_input(path, true);
  return read_sid_index(in);
}

// --- quantization model ------------------------------------------------------

inline void write_model(std::ostream& out, const QuantizationModel& model) {
  model.validate();
  out.write("SFQM1", 5);
  detail::write_u32(out, detail::checked_u32(model.levels, "L"));
  detail::write_u32(out, detail::checked_u32(model.codebook_size, "V"));
  detail::write_u32(out, detail::checked_u32(model.dim, "d"));
  detail::write_u32(out, detail::checked_u32(model.n_items, "N"));
  detail::write_floats(out, model.codebooks);
  detail::write_floats(out, model.residuals);
}

inline QuantizationModel read_model(std::istream& in) {
  detail::expect_magic(in, "SFQM1");
  QuantizationModel m;
  m.levels = detail::read_u32(in);
  m.codebook_size = detail::read_u32(in);
  m.dim = detail::read_u32(in);
  m.n_items = detail::read_u32(in);
  m.codebooks = detail::read_floats(in, m.levels * m.codebook_size * m.dim);
  m.residuals = detail::read_floats(in, m.n_items * m.dim);
  detail::expect_eof(in);
  m.validate();
  return m;
}

inline void save_model(const std::string& path, const QuantizationModel& model) {
  auto out = open_output(path, true);
  write_model(out, model);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline QuantizationModel load_model(const std::string& path) {
  auto in = open_input(path, true);
  return read_model(in);
}

// --- embeddings --------------------------------------------------------------

inline void write_embeddings(std::ostream& out, const EmbeddingMatrix& m) {
  out.write("SFEMB1", 6);
  detail::write_u32(out, detail::checked_u32(m.n, "n"));
  detail::write_u32(out, detail::checked_u32(m.d, "d"));
  detail::write_floats(out, m.data);
}

inline EmbeddingMatrix read_embeddings(std::istream& in) {
  detail::expect_magic(in, "SFEMB1");
  const std::size_t n = detail::read_u32(in);
  const std::size_t d = detail::read_u32(in);
  EmbeddingMatrix m(n, d, detail::read_floats(in, n * d));
  detail::expect_eof(in);
  return m;
}

inline void save_embeddings(const std::string& path, const EmbeddingMatrix& m) {
  auto out = open_output(path, true);
  write_embeddings(out, m);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline EmbeddingMatrix load_embeddings(const std::string& path) {
  auto in = open_input(path, true);
  return read_embeddings(in);
}

// --- beams -------------------------------------------------------------------

inline nlohmann::json beam_record_to_json(const BeamRecord& rec) {
  nlohmann::json beams = nlohmann::json::array();
  for (const auto& s : rec.beams) beams.push_back(std::vector<Code>(s.begin(), s.end()));
  return {{"user", rec.user}, {"target_item", rec.target_item}, {"beams", std::move(beams)}};
}

inline void write_beams(std::ostream& out, const std::vector<BeamRecord>& records) {
  for (const auto& rec : records) out << beam_record_to_json(rec).dump() << '\n';
}

inline std::vector<BeamRecord> read_beams(std::istream& in) {
  std::vector<BeamRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      std::vector<SidSequence> beams;
      for (const auto& b : j.at("beams")) beams.emplace_back(b.get<std::vector<Code>>());
      records.emplace_back(j.at("user").get<std::uint64_t>(), j.at("target_item").get<ItemId>(),
                           std::move(beams));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Format, "beam file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

inline void save_beams(const std::string& path, const std::vector<BeamRecord>& records) {
  auto out = open_output(path, true);
  write_beams(out, records);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline std::vector<BeamRecord> load_beams(const std::string& path) {
  auto in = open_input(path, true);
  return read_beams(in);
}

// --- interactions ------------------------------------------------------------

struct RawInteraction {
  std::string user;
  std::string item;
  std::string timestamp;  // kept verbatim for round-tripping
  double time = 0.0;
};

inline std::vector<RawInteraction> read_interactions(std::istream& in) {
  std::vector<RawInteraction> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = detail::split(line, '\t');
    if (cols.size() != 3) {
      throw Error(ErrorCode::Format, "interactions line " + std::to_string(lineno) +
                                         ": expected 3 tab-separated columns");
    }
    RawInteraction row{std::string(cols[0]), std::string(cols[1]), std::string(cols[2]), 0.0};
    row.time = detail::parse_number<double>(cols[2], "timestamp");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_interactions(std::ostream& out, const std::vector<RawInteraction>& rows) {
  for (const auto& r : rows) out << r.user << '\t' << r.item << '\t' << r.timestamp << '\n';
}

inline std::vector<RawInteraction> load_interactions(const std::string& path) {
  auto in = open_input(path, true);
  return read_interactions(in);
}

}  // namespace sidforge
