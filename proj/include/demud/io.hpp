// Copyright 2026 The demud Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Feature-matrix file formats.
//
//   CSV    header `id[,label],f0,f1,...`; one item per line.
//   FMX1   "FMX1", u32 n, u32 d, u8 label flag, n id records, n optional
//          label records (u16 length + UTF-8 bytes each), then n*d f64
//          row-major values. All integers and floats little-endian.
//   TSV    labels only, `id<TAB>class` per line.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <vector>

#include "demud/error.hpp"
#include "demud/feature_matrix.hpp"

namespace demud::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline void put_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64s(std::ostream& os, const double* values, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values),
             static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < count; ++i)
      put_u64(os, std::bit_cast<std::uint64_t>(values[i]));
  }
}

inline void put_string(std::ostream& os, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max())
    throw FormatError("string longer than 65535 bytes: '" + s.substr(0, 32) + "...'");
  put_u16(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

/// Bounds-checked reader over an input stream with a known payload size.
class Reader {
 public:
  Reader(std::istream& is, std::uint64_t size, std::string path)
      : is_(is), remaining_(size), path_(std::move(path)) {}

  std::uint64_t remaining() const { return remaining_; }

  void read(void* dst, std::uint64_t count, const char* what) {
    if (count > remaining_)
      throw FormatError(path_ + ": truncated payload while reading " + what);
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (!is_) throw FormatError(path_ + ": read failure while reading " + what);
    remaining_ -= count;
  }

  std::uint8_t u8(const char* what) {
    unsigned char b = 0;
    read(&b, 1, what);
    return b;
  }

  std::uint16_t u16(const char* what) {
    unsigned char b[2];
    read(b, 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    read(b, 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::string str(const char* what) {
    const std::uint16_t len = u16(what);
    std::string s(len, '\0');
    if (len > 0) read(s.data(), len, what);
    return s;
  }

  void f64s(double* dst, std::uint64_t count, const char* what) {
    if (count > remaining_ / sizeof(double))
      throw FormatError(path_ + ": truncated payload while reading " + what);
    read(dst, count * sizeof(double), what);
    if constexpr (std::endian::native != std::endian::little) {
      for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t raw = 0;
        std::memcpy(&raw, dst + i, 8);
        dst[i] = std::bit_cast<double>(__builtin_bswap64(raw));
      }
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::istream& is_;
  std::uint64_t remaining_;
  std::string path_;
};

inline std::ifstream open_in(const std::filesystem::path& path,
                             std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path,
                              std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

inline constexpr std::array<char, 4> kFmxMagic = {'F', 'M', 'X', '1'};

/// Reads a CSV feature file. The `id` column must come first; a column
/// named `label` anywhere after it is taken as the class label.
inline FeatureMatrix load_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string p = path.string();
  std::string line;
  std::size_t lineno = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    for (auto f : detail::split(line, ',')) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw ParseError(p, 0, "", "empty file");
  if (header.front().size() >= 3 && header.front().compare(0, 3, "\xEF\xBB\xBF") == 0)
    header.front().erase(0, 3);
  if (header.front() != "id")
    throw ParseError(p, lineno, header.front(), "first column must be 'id'");

  std::optional<std::size_t> label_col;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_col) throw ParseError(p, lineno, "label", "duplicate label column");
      label_col = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (feature_cols.empty()) throw ParseError(p, lineno, "", "no feature columns");

  std::vector<std::string> ids;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  LabelMap labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size())
      throw ParseError(p, lineno, "",
                       "ragged row: expected " + std::to_string(header.size()) +
                           " cells, found " + std::to_string(cells.size()));
    std::string id(cells[0]);
    if (id.empty()) throw ParseError(p, lineno, "id", "empty id");
    if (!seen.insert(id).second)
      throw ParseError(p, lineno, "id", "duplicate id '" + id + "'");
    for (std::size_t c : feature_cols) {
      const auto v = detail::parse_double(cells[c]);
      if (!v)
        throw ParseError(p, lineno, header[c],
                         "non-numeric value '" + std::string(cells[c]) + "'");
      if (!std::isfinite(*v))
        throw ParseError(p, lineno, header[c], "non-finite value");
      values.push_back(*v);
    }
    if (label_col) labels.set(id, std::string(cells[*label_col]));
    ids.push_back(std::move(id));
  }
  if (ids.empty()) throw ParseError(p, lineno, "", "no data rows");

  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  RowMatrix data = Eigen::Map<const RowMatrix>(values.data(), n, d);
  std::optional<LabelMap> lm;
  if (label_col) lm = std::move(labels);
  return FeatureMatrix(std::move(ids), std::move(data), std::move(lm));
}

/// Writes the CSV form read by load_csv. Values use shortest round-trip text.
inline void save_csv(const FeatureMatrix& fm, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "id";
  if (fm.has_labels()) out << ",label";
  for (std::size_t c = 0; c < fm.dim(); ++c) out << ",f" << c;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    out << fm.id(r);
    if (fm.has_labels()) out << ',' << fm.labels()->at(fm.id(r));
    for (std::size_t c = 0; c < fm.dim(); ++c) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, fm.data()(r, c));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void save_binary(const FeatureMatrix& fm, const std::filesystem::path& path) {
  if (fm.rows() > std::numeric_limits<std::uint32_t>::max() ||
      fm.dim() > std::numeric_limits<std::uint32_t>::max())
    throw FormatError("matrix too large for FMX1");
  auto out = detail::open_out(path, std::ios::out | std::ios::binary);
  out.write(kFmxMagic.data(), 4);
  detail::put_u32(out, static_cast<std::uint32_t>(fm.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(fm.dim()));
  const unsigned char flag = fm.has_labels() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&flag), 1);
  for (const auto& id : fm.ids()) detail::put_string(out, id);
  if (fm.has_labels())
    for (const auto& id : fm.ids()) detail::put_string(out, fm.labels()->at(id));
  detail::put_f64s(out, fm.data().data(), fm.rows() * fm.dim());
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline FeatureMatrix load_binary(const std::filesystem::path& path) {
  auto in = detail::open_in(path, std::ios::in | std::ios::binary);
  const std::string p = path.string();
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot stat '" + p + "'");
  detail::Reader rd(in, size, p);

  char magic[4] = {};
  if (size < 4) throw FormatError(p + ": file too short for FMX1 header");
  rd.read(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kFmxMagic.begin()))
    throw FormatError(p + ": bad magic (expected FMX1)");
  const std::uint64_t n = rd.u32("row count");
  const std::uint64_t d = rd.u32("column count");
  const std::uint8_t flag = rd.u8("label flag");
  if (flag > 1) throw FormatError(p + ": invalid label flag");
  if (n > 0 && d == 0) throw FormatError(p + ": zero feature dimension");
  if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / sizeof(double) / d)
    throw FormatError(p + ": n*d overflows");
  if (n * d > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max()))
    throw FormatError(p + ": n*d overflows");
  // Each id record needs at least its 2-byte length.
  if (n * 2 > rd.remaining()) throw FormatError(p + ": truncated payload in ids");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) ids.push_back(rd.str("item id"));
  std::optional<LabelMap> labels;
  if (flag == 1) {
    labels.emplace();
    for (std::uint64_t i = 0; i < n; ++i) labels->set(ids[i], rd.str("label"));
  }
  if (n * d * sizeof(double) > rd.remaining())
    throw FormatError(p + ": truncated payload: declared " + std::to_string(n) +
                      " rows of " + std::to_string(d) + " values");
  RowMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  rd.f64s(data.data(), n * d, "values");
  if (rd.remaining() != 0) throw FormatError(p + ": trailing bytes after payload");
  try {
    return FeatureMatrix(std::move(ids), std::move(data), std::move(labels));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(p + ": " + e.what());
  }
}

/// `id<TAB>class` per line; blank lines ignored.
inline LabelMap load_labels_tsv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string p = path.string();
  LabelMap labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(p, lineno, "", "expected id<TAB>class");
    std::string id = line.substr(0, tab);
    std::string cls = line.substr(tab + 1);
    if (id.empty()) throw ParseError(p, lineno, "id", "empty id");
    if (labels.contains(id)) throw ParseError(p, lineno, "id", "duplicate id '" + id + "'");
    labels.set(id, cls);
  }
  if (labels.empty()) throw ParseError(p, 0, "", "empty file");
  return labels;
}

inline void save_labels_tsv(const LabelMap& labels, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  for (const auto& [id, cls] : labels.entries()) out << id << '\t' << cls << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

/// Labels restricted to the items of `fm`; every item must be covered.
inline LabelMap restrict_labels(const LabelMap& labels, const FeatureMatrix& fm) {
  LabelMap out;
  for (const auto& id : fm.ids()) out.set(id, labels.at(id));
  return out;
}

/// Dispatches on magic bytes: FMX1 binary, otherwise CSV.
inline FeatureMatrix load_features(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error("cannot open '" + path.string() + "' for reading");
    char magic[4] = {};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::equal(magic, magic + 4, kFmxMagic.begin()))
      return load_binary(path);
  }
  return load_csv(path);
}

}  // namespace demud::io
