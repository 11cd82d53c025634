// core/src/corpusio.cc

// Copyright 2026 The phonepool Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "phonepool/corpusio.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "phonepool/error.h"

namespace phonepool {

namespace {

std::vector<std::string_view> Tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string LineError(const std::string& what, int line_no) {
  return what + " at line " + std::to_string(line_no);
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return is;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

void CheckWritten(const std::ostream& os, const std::string& path) {
  if (!os) throw IoError("write failed for '" + path + "'");
}

void FormatValue(std::string& out, double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

ArchiveWriter::ArchiveWriter(const std::string& path)
    : file_(std::make_unique<std::ofstream>(path)), os_(file_.get()), path_(path) {
  if (!*file_) throw IoError("cannot open '" + path + "' for writing");
}

void ArchiveWriter::Write(const std::string& utterance_id, const Matrix& matrix) {
  if (utterance_id.empty() || Tokens(utterance_id).size() != 1) {
    throw ValidationError("archive: invalid utterance id '" + utterance_id + "'");
  }
  if (!matrix.allFinite()) throw ValidationError("archive: non-finite value in '" + utterance_id + "'");
  std::string out = utterance_id;
  if (matrix.rows() == 0) {
    out += "  [ ]\n";
  } else {
    out += "  [\n";
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      out += "  ";
      for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
        if (c > 0) out += ' ';
        FormatValue(out, matrix(r, c));
      }
      out += r + 1 == matrix.rows() ? " ]\n" : "\n";
    }
  }
  os_->write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!*os_) throw IoError("archive write failed" + (path_.empty() ? "" : " for '" + path_ + "'"));
}

void ArchiveWriter::Close() {
  os_->flush();
  if (file_) {
    file_->close();
    if (!*file_) throw IoError("archive close failed for '" + path_ + "'");
  }
}

ArchiveReader::ArchiveReader(const std::string& path)
    : file_(std::make_unique<std::ifstream>(path)), is_(file_.get()) {
  if (!*file_) throw IoError("cannot open '" + path + "' for reading");
}

bool ArchiveReader::GetLine(std::string& line) {
  if (!std::getline(*is_, line)) return false;
  ++line_no_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::optional<ArchiveEntry> ArchiveReader::Next() {
  std::string line;
  std::vector<std::string_view> toks;
  while (true) {
    if (!GetLine(line)) return std::nullopt;
    toks = Tokens(line);
    if (!toks.empty()) break;
  }
  const int header_line = line_no_;
  if (toks.size() < 2 || toks[1] != "[") {
    throw ValidationError(LineError("malformed archive header: expected 'utt-id  ['", line_no_));
  }
  ArchiveEntry entry;
  entry.utterance_id = std::string(toks[0]);

  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  bool closed = false;
  // Tokens after '[' on the header line form an (optional) first row.
  std::vector<std::string_view> row_toks(toks.begin() + 2, toks.end());
  bool first = true;
  while (!closed) {
    if (!first) {
      if (!GetLine(line)) {
        throw ValidationError(LineError("unterminated matrix for '" + entry.utterance_id +
                                            "' starting", header_line));
      }
      row_toks = Tokens(line);
      if (row_toks.empty()) continue;
    }
    first = false;
    if (!row_toks.empty() && row_toks.back() == "]") {
      closed = true;
      row_toks.pop_back();
    } else if (!row_toks.empty() && row_toks.back().size() > 1 && row_toks.back().back() == ']') {
      closed = true;
      row_toks.back().remove_suffix(1);
    }
    if (row_toks.empty()) continue;
    for (std::string_view t : row_toks) {
      if (t == "[" || t == "]") throw ValidationError(LineError("unexpected bracket", line_no_));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ValidationError(LineError("invalid number '" + std::string(t) + "'", line_no_));
      }
      if (!std::isfinite(v)) throw ValidationError(LineError("non-finite value", line_no_));
      values.push_back(v);
    }
    auto width = static_cast<Eigen::Index>(row_toks.size());
    if (cols < 0) {
      cols = width;
    } else if (width != cols) {
      throw ValidationError("ragged row at line " + std::to_string(line_no_));
    }
    ++rows;
  }
  entry.matrix.resize(rows, std::max<Eigen::Index>(cols, 0));
  if (rows > 0) entry.matrix = Eigen::Map<const Matrix>(values.data(), rows, cols);
  return entry;
}

std::vector<ArchiveEntry> ReadArchive(const std::string& path) {
  ArchiveReader reader(path);
  std::vector<ArchiveEntry> entries;
  while (auto e = reader.Next()) entries.push_back(std::move(*e));
  return entries;
}

void WriteArchive(const std::string& path, const std::vector<ArchiveEntry>& entries) {
  ArchiveWriter writer(path);
  for (const auto& e : entries) writer.Write(e.utterance_id, e.matrix);
  writer.Close();
}

std::vector<FeatureMatrix> ReadFeatureArchive(const std::string& path) {
  ArchiveReader reader(path);
  std::vector<FeatureMatrix> out;
  while (auto e = reader.Next()) {
    FeatureMatrix fm;
    fm.utterance_id = std::move(e->utterance_id);
    fm.data = std::move(e->matrix);
    out.push_back(std::move(fm));
  }
  return out;
}

void WriteFeatureArchive(const std::string& path, const std::vector<FeatureMatrix>& features) {
  ArchiveWriter writer(path);
  for (const auto& fm : features) writer.Write(fm);
  writer.Close();
}

namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

constexpr const char* kManifestColumns[] = {"utt_id", "speaker_id", "audio_path",
                                            "duration_ms", "transcript", "translation"};

}  // namespace

Manifest ReadManifest(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("manifest: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = SplitTabs(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : kManifestColumns) {
    if (!col.contains(name)) throw ValidationError(std::string("manifest: missing column '") + name + "'");
  }

  Manifest manifest;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = SplitTabs(line);
    if (f.size() != header.size()) {
      throw ValidationError("manifest: expected " + std::to_string(header.size()) +
                            " fields at line " + std::to_string(line_no));
    }
    ManifestRecord r;
    r.utterance_id = f[col["utt_id"]];
    r.speaker_id = f[col["speaker_id"]];
    r.audio_path = f[col["audio_path"]];
    r.transcript = f[col["transcript"]];
    r.translation = f[col["translation"]];
    const std::string& dur = f[col["duration_ms"]];
    auto [ptr, ec] = std::from_chars(dur.data(), dur.data() + dur.size(), r.duration_ms);
    if (!dur.empty() && (ec != std::errc() || ptr != dur.data() + dur.size())) {
      throw ValidationError("manifest: invalid duration '" + dur + "' at line " + std::to_string(line_no));
    }
    if (r.utterance_id.empty()) throw ValidationError("manifest: empty utt_id at line " + std::to_string(line_no));
    if (r.audio_path.empty()) {
      throw ValidationError("manifest: empty audio_path at line " + std::to_string(line_no));
    }
    if (!seen.insert(r.utterance_id).second) {
      throw ValidationError("manifest: duplicate utterance id '" + r.utterance_id + "'");
    }
    manifest.push_back(std::move(r));
  }
  return manifest;
}

Manifest ReadManifest(const std::string& path) {
  std::ifstream is = OpenIn(path);
  return ReadManifest(is);
}

void WriteManifest(std::ostream& os, const Manifest& manifest) {
  os << "utt_id\tspeaker_id\taudio_path\tduration_ms\ttranscript\ttranslation\n";
  for (const auto& r : manifest) {
    os << r.utterance_id << '\t' << r.speaker_id << '\t' << r.audio_path << '\t' << r.duration_ms
       << '\t' << r.transcript << '\t' << r.translation << '\n';
  }
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream is = OpenIn(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void WriteTextFile(const std::string& path, const std::string& contents) {
  std::ofstream os = OpenOut(path);
  os << contents;
  CheckWritten(os, path);
}

PhonemeInventory ReadInventory(const std::string& path) {
  std::vector<std::string> symbols;
  for (std::string& line : ReadLines(path)) {
    auto t = Tokens(line);
    if (t.empty()) continue;
    if (t.size() != 1) throw ValidationError("inventory: expected one symbol per line in '" + path + "'");
    symbols.emplace_back(t[0]);
  }
  return PhonemeInventory(std::move(symbols));
}

void WriteInventory(const std::string& path, const PhonemeInventory& inventory) {
  std::string out;
  for (const auto& s : inventory.symbols()) out += s + "\n";
  WriteTextFile(path, out);
}

std::vector<FrameAlignment> ReadAlignments(std::istream& is, const PhonemeInventory& inventory) {
  std::vector<FrameAlignment> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (Tokens(line).empty()) continue;
    try {
      out.push_back(ParseFrameAlignment(line, inventory));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
  }
  return out;
}

std::vector<FrameAlignment> ReadAlignments(const std::string& path,
                                           const PhonemeInventory& inventory) {
  std::ifstream is = OpenIn(path);
  return ReadAlignments(is, inventory);
}

void WriteAlignments(const std::string& path, const std::vector<FrameAlignment>& alignments,
                     const PhonemeInventory& inventory) {
  std::ofstream os = OpenOut(path);
  for (const auto& a : alignments) os << FormatFrameAlignment(a, inventory) << '\n';
  CheckWritten(os, path);
}

MergeTable ReadMergeTable(const std::string& path) {
  MergeTable table;
  int line_no = 0;
  for (const std::string& line : ReadLines(path)) {
    ++line_no;
    auto t = Tokens(line);
    if (t.empty()) continue;
    if (t.size() != 2) {
      throw ValidationError("merge table: expected 'left right' at line " + std::to_string(line_no));
    }
    table.Append({std::string(t[0]), std::string(t[1])});
  }
  return table;
}

void WriteMergeTable(const std::string& path, const MergeTable& merges) {
  std::string out;
  for (const auto& [l, r] : merges.merges()) out += l + " " + r + "\n";
  WriteTextFile(path, out);
}

Vocab ReadVocab(const std::string& path) {
  std::vector<std::string> tokens = ReadLines(path);
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return Vocab(std::move(tokens));
}

void WriteVocab(const std::string& path, const Vocab& vocab) {
  std::string out;
  for (const auto& t : vocab.tokens()) out += t + "\n";
  WriteTextFile(path, out);
}

std::string FormatSegments(const PooledSequence& pooled, const PhonemeInventory& inventory) {
  std::string out = pooled.utterance_id;
  for (const auto& seg : pooled.segments) {
    out += ' ';
    out += seg.label < inventory.size() ? inventory.Symbol(seg.label) : std::to_string(seg.label);
    out += ':' + std::to_string(seg.start_frame) + ':' + std::to_string(seg.end_frame);
  }
  return out;
}

void WriteSegments(const std::string& path, const std::vector<PooledSequence>& pooled,
                   const PhonemeInventory& inventory) {
  std::ofstream os = OpenOut(path);
  for (const auto& p : pooled) os << FormatSegments(p, inventory) << '\n';
  CheckWritten(os, path);
}

std::vector<std::pair<std::string, std::string>> ReadKeyedLines(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& line : ReadLines(path)) {
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_first_of(" \t", b);
    std::string key = line.substr(b, e == std::string::npos ? std::string::npos : e - b);
    std::string rest;
    if (e != std::string::npos) {
      std::size_t r = line.find_first_not_of(" \t", e);
      if (r != std::string::npos) rest = line.substr(r);
    }
    out.emplace_back(std::move(key), std::move(rest));
  }
  return out;
}

void WriteKeyedLines(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& lines) {
  std::string out;
  for (const auto& [k, v] : lines) out += k + (v.empty() ? "" : " " + v) + "\n";
  WriteTextFile(path, out);
}

}  // namespace phonepool
