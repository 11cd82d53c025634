// core/include/phonepool/corpusio.h

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

#ifndef PHONEPOOL_CORPUSIO_H_
#define PHONEPOOL_CORPUSIO_H_

#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phonepool/alignment.h"
#include "phonepool/features.h"
#include "phonepool/matrix.h"
#include "phonepool/pooling.h"
#include "phonepool/textproc.h"

namespace phonepool {

struct ArchiveEntry {
  std::string utterance_id;
  Matrix matrix;
};

// Text matrix archive:
//   utt-id  [
//     v11 v12 ...
//     vN1 ... vNd ]
// Values are written with 9 significant digits; an empty matrix is "utt-id  [ ]".

/// Streaming writer; entries go straight to the stream.
class ArchiveWriter {
 public:
  explicit ArchiveWriter(std::ostream& os) : os_(&os) {}
  explicit ArchiveWriter(const std::string& path);

  void Write(const std::string& utterance_id, const Matrix& matrix);
  void Write(const FeatureMatrix& fm) { Write(fm.utterance_id, fm.data); }
  void Close();

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
  std::string path_;
};

/// Streaming reader; holds at most one entry in memory.
class ArchiveReader {
 public:
  explicit ArchiveReader(std::istream& is) : is_(&is) {}
  explicit ArchiveReader(const std::string& path);

  /// Next entry, or nullopt at end of input. Throws ValidationError with the
  /// line number on malformed input.
  std::optional<ArchiveEntry> Next();

 private:
  bool GetLine(std::string& line);

  std::unique_ptr<std::ifstream> file_;
  std::istream* is_;
  int line_no_ = 0;
};

std::vector<ArchiveEntry> ReadArchive(const std::string& path);
void WriteArchive(const std::string& path, const std::vector<ArchiveEntry>& entries);

std::vector<FeatureMatrix> ReadFeatureArchive(const std::string& path);
void WriteFeatureArchive(const std::string& path, const std::vector<FeatureMatrix>& features);

struct ManifestRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string audio_path;
  double duration_ms = 0.0;
  std::string transcript;
  std::string translation;

  bool operator==(const ManifestRecord&) const = default;
};

using Manifest = std::vector<ManifestRecord>;

/// Tab-separated with header "utt_id speaker_id audio_path duration_ms
/// transcript translation" (columns located by name).
Manifest ReadManifest(std::istream& is);
Manifest ReadManifest(const std::string& path);
void WriteManifest(std::ostream& os, const Manifest& manifest);

PhonemeInventory ReadInventory(const std::string& path);
void WriteInventory(const std::string& path, const PhonemeInventory& inventory);

std::vector<FrameAlignment> ReadAlignments(std::istream& is, const PhonemeInventory& inventory);
std::vector<FrameAlignment> ReadAlignments(const std::string& path,
                                           const PhonemeInventory& inventory);
void WriteAlignments(const std::string& path, const std::vector<FrameAlignment>& alignments,
                     const PhonemeInventory& inventory);

/// Merge table: one "left right" pair per line.
MergeTable ReadMergeTable(const std::string& path);
void WriteMergeTable(const std::string& path, const MergeTable& merges);

/// Vocab: one token per line, line index = id.
Vocab ReadVocab(const std::string& path);
void WriteVocab(const std::string& path, const Vocab& vocab);

/// Segments sidecar: "utt-id label:start:end ...".
std::string FormatSegments(const PooledSequence& pooled, const PhonemeInventory& inventory);
void WriteSegments(const std::string& path, const std::vector<PooledSequence>& pooled,
                   const PhonemeInventory& inventory);

/// "key rest-of-line" files (utt2spk, target text).
std::vector<std::pair<std::string, std::string>> ReadKeyedLines(const std::string& path);
void WriteKeyedLines(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& lines);

std::vector<std::string> ReadLines(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& contents);

}  // namespace phonepool

#endif  // PHONEPOOL_CORPUSIO_H_
