// tools/src/commands_features.cc

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

#include <filesystem>
#include <map>
#include <memory>
#include <set>

#include "commands.h"
#include "phonepool/alignment.h"
#include "phonepool/corpusio.h"
#include "phonepool/error.h"
#include "phonepool/features.h"
#include "phonepool/parallel.h"
#include "phonepool/pooling.h"
#include "phonepool/wav.h"

namespace phonepool::cli {

namespace {

std::map<std::string, const FrameAlignment*> IndexAlignments(
    const std::vector<FrameAlignment>& alis) {
  std::map<std::string, const FrameAlignment*> index;
  for (const auto& a : alis) {
    if (!index.emplace(a.utterance_id, &a).second) {
      throw ValidationError("duplicate alignment for '" + a.utterance_id + "'");
    }
  }
  return index;
}

const FrameAlignment& FindAlignment(const std::map<std::string, const FrameAlignment*>& index,
                                    const std::string& utt) {
  auto it = index.find(utt);
  if (it == index.end()) throw ValidationError("no alignment for utterance '" + utt + "'");
  return *it->second;
}

std::set<int> SilenceLabels(const PhonemeInventory& inv, const std::vector<std::string>& names) {
  std::set<int> out;
  if (names.empty()) {
    for (const char* s : {"sil", "sp", "SIL", kBlankSymbol.data()}) {
      if (auto i = inv.IndexOf(s)) out.insert(*i);
    }
    return out;
  }
  for (const auto& n : names) {
    auto i = inv.IndexOf(n);
    if (!i) throw ValidationError("silence symbol '" + n + "' is not in the inventory");
    out.insert(*i);
  }
  return out;
}

void AddFrontendOptions(CLI::App* sub, FrontendConfig& cfg) {
  sub->add_option("--window-ms", cfg.window_ms, "Analysis window length (ms)")->capture_default_str();
  sub->add_option("--shift-ms", cfg.shift_ms, "Frame shift (ms)")->capture_default_str();
  sub->add_option("--num-mel-bins", cfg.num_mel_bins, "Number of mel filters")->capture_default_str();
  sub->add_option("--fft-size", cfg.fft_size, "FFT size (0: next power of two)")->capture_default_str();
  sub->add_option("--preemphasis", cfg.preemphasis, "Pre-emphasis coefficient")->capture_default_str();
  sub->add_option("--log-floor", cfg.log_floor, "Energy floor before log")->capture_default_str();
  sub->add_option("--dither", cfg.dither, "Dither amplitude (0: off)")->capture_default_str();
  sub->add_option("--dither-seed", cfg.dither_seed, "Dither seed")->capture_default_str();
  sub->add_option("--low-freq", cfg.low_freq_hz, "Lowest mel edge (Hz)")->capture_default_str();
  sub->add_option("--high-freq", cfg.high_freq_hz,
                  "Highest mel edge (Hz); <= 0 is an offset from Nyquist")->capture_default_str();
}

}  // namespace

void RegisterFeatureCommands(CLI::App& app, Context& ctx) {
  {
    struct Opts {
      std::string manifest, out, utt2spk;
      FrontendConfig frontend;
      int jobs = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("fbank", "Compute log-Mel filterbank features for a manifest");
    sub->add_option("--manifest", o->manifest, "Manifest TSV (audio paths relative to it)")->required();
    sub->add_option("--out", o->out, "Output feature archive")->required();
    sub->add_option("--utt2spk", o->utt2spk, "Also write an utterance-to-speaker map");
    AddFrontendOptions(sub, o->frontend);
    sub->add_option("--jobs", o->jobs, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([o, &ctx] {
      Manifest manifest = ReadManifest(o->manifest);
      const auto base = std::filesystem::path(o->manifest).parent_path();
      std::vector<FeatureMatrix> feats(manifest.size());
      parallel_for(manifest.size(), o->jobs, [&](std::size_t i) {
        const ManifestRecord& rec = manifest[i];
        std::filesystem::path audio(rec.audio_path);
        if (audio.is_relative()) audio = base / audio;
        Waveform wave = ReadWavFile(audio.string());
        wave.utterance_id = rec.utterance_id;
        wave.speaker_id = rec.speaker_id;
        feats[i] = ComputeLogMel(wave, o->frontend);
      });
      WriteFeatureArchive(o->out, feats);
      if (!o->utt2spk.empty()) {
        std::vector<std::pair<std::string, std::string>> lines;
        for (const auto& r : manifest) lines.emplace_back(r.utterance_id, r.speaker_id);
        WriteKeyedLines(o->utt2spk, lines);
      }
      ctx.err << "fbank: wrote " << feats.size() << " utterances to " << o->out << '\n';
    });
  }
  {
    struct Opts {
      std::string in, out, utt2spk, manifest;
      double var_floor = kCmvnVarianceFloor;
      int jobs = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("cmvn", "Per-speaker mean and variance normalization");
    sub->add_option("--in", o->in, "Input feature archive")->required();
    sub->add_option("--out", o->out, "Output feature archive")->required();
    auto* u2s = sub->add_option("--utt2spk", o->utt2spk, "Utterance-to-speaker map");
    auto* man = sub->add_option("--manifest", o->manifest, "Manifest giving speaker ids");
    u2s->excludes(man);
    sub->add_option("--var-floor", o->var_floor, "Variance floor")->capture_default_str();
    sub->add_option("--jobs", o->jobs, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([o, &ctx] {
      if (o->utt2spk.empty() && o->manifest.empty()) {
        throw ValidationError("cmvn: one of --utt2spk or --manifest is required");
      }
      std::map<std::string, std::string> spk;
      if (!o->utt2spk.empty()) {
        for (auto& [k, v] : ReadKeyedLines(o->utt2spk)) spk[k] = v;
      } else {
        for (const auto& r : ReadManifest(o->manifest)) spk[r.utterance_id] = r.speaker_id;
      }
      std::vector<FeatureMatrix> feats = ReadFeatureArchive(o->in);
      for (auto& f : feats) {
        auto it = spk.find(f.utterance_id);
        if (it == spk.end()) throw ValidationError("cmvn: no speaker for utterance '" + f.utterance_id + "'");
        f.speaker_id = it->second;
      }
      auto normed = ApplySpeakerCmvn(feats, o->var_floor, o->jobs);
      WriteFeatureArchive(o->out, normed);
      ctx.err << "cmvn: normalized " << normed.size() << " utterances\n";
    });
  }
  {
    struct Opts {
      std::string inventory, spliced, features, out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("ali-expand",
                                   "Expand spliced CTC labels (3 frames each) to frame alignments");
    sub->add_option("--inventory", o->inventory, "Phoneme inventory, one symbol per line")->required();
    sub->add_option("--spliced", o->spliced, "Spliced label file: utt lab1 lab2 ...")->required();
    sub->add_option("--features", o->features, "Feature archive giving frame counts")->required();
    sub->add_option("--out", o->out, "Output frame alignment file")->required();
    sub->callback([o, &ctx] {
      PhonemeInventory inv = ReadInventory(o->inventory);
      auto spliced = ReadAlignments(o->spliced, inv);
      auto index = IndexAlignments(spliced);
      std::vector<FrameAlignment> out;
      ArchiveReader reader(o->features);
      while (auto entry = reader.Next()) {
        const FrameAlignment& s = FindAlignment(index, entry->utterance_id);
        SplicedLabelSequence seq{s.utterance_id, s.labels};
        out.push_back(ExpandCtcLabels(seq, static_cast<int>(entry->matrix.rows())));
      }
      WriteAlignments(o->out, out, inv);
      ctx.err << "ali-expand: expanded " << out.size() << " utterances\n";
    });
  }
  {
    struct Opts {
      std::string features, alignments, inventory, out, segments, stats, stats_json, blank_mode = "keep";
      std::vector<std::string> silence;
      int jobs = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("pool", "Average features over runs of identical phoneme labels");
    sub->add_option("--features", o->features, "Input feature archive")->required();
    sub->add_option("--alignments", o->alignments, "Frame alignment file")->required();
    sub->add_option("--inventory", o->inventory, "Phoneme inventory")->required();
    sub->add_option("--out", o->out, "Pooled feature archive")->required();
    sub->add_option("--segments", o->segments, "Segment sidecar: utt sym:start:end ...");
    sub->add_option("--stats", o->stats, "Stats report path (default: stdout)");
    sub->add_option("--stats-json", o->stats_json, "Stats report as JSON");
    sub->add_option("--blank-mode", o->blank_mode, "CTC blank handling")
        ->check(CLI::IsMember({"keep", "drop", "merge"}))->capture_default_str();
    sub->add_option("--silence", o->silence, "Silence symbols for stats (default: sil, sp, <blk>)");
    sub->add_option("--jobs", o->jobs, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([o, &ctx] {
      PhonemeInventory inv = ReadInventory(o->inventory);
      const BlankMode mode = *ParseBlankMode(o->blank_mode);
      if (mode != BlankMode::kKeep && !inv.blank_index()) {
        throw ValidationError("pool: --blank-mode " + o->blank_mode + " needs <blk> in the inventory");
      }
      auto feats = ReadFeatureArchive(o->features);
      auto alis = ReadAlignments(o->alignments, inv);
      auto index = IndexAlignments(alis);
      std::vector<FrameAlignment> ordered;
      for (const auto& f : feats) ordered.push_back(FindAlignment(index, f.utterance_id));
      std::vector<PooledSequence> pooled(feats.size());
      parallel_for(feats.size(), o->jobs, [&](std::size_t i) {
        pooled[i] = PoolRuns(feats[i], ordered[i], mode, inv.blank_index());
      });
      std::vector<FeatureMatrix> out;
      for (const auto& p : pooled) out.push_back(p.ToFeatureMatrix());
      WriteFeatureArchive(o->out, out);
      if (!o->segments.empty()) WriteSegments(o->segments, pooled, inv);
      PoolingStats stats = CorpusStats(ordered, SilenceLabels(inv, o->silence));
      Emit(ctx, o->stats, FormatStats(stats));
      if (!o->stats_json.empty()) WriteTextFile(o->stats_json, StatsToJson(stats).dump(2) + "\n");
    });
  }
  {
    struct Opts {
      std::string in, out;
      int n = 2;
      int jobs = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("stride", "Fixed-stride downsampling (keep every n-th frame)");
    sub->add_option("--in", o->in, "Input feature archive")->required();
    sub->add_option("--out", o->out, "Output feature archive")->required();
    sub->add_option("--n", o->n, "Stride")->capture_default_str();
    sub->add_option("--jobs", o->jobs, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([o, &ctx] {
      if (o->n < 1) throw ValidationError("stride: --n must be >= 1");
      auto feats = ReadFeatureArchive(o->in);
      std::vector<FeatureMatrix> out(feats.size());
      parallel_for(feats.size(), o->jobs,
                   [&](std::size_t i) { out[i] = StrideDownsample(feats[i], o->n); });
      WriteFeatureArchive(o->out, out);
      ctx.err << "stride: wrote " << out.size() << " utterances\n";
    });
  }
  {
    struct Opts {
      std::string alignments, inventory, features, out, json;
      std::vector<std::string> silence;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("stats", "Corpus statistics of phoneme runs");
    sub->add_option("--alignments", o->alignments, "Frame alignment file")->required();
    sub->add_option("--inventory", o->inventory, "Phoneme inventory")->required();
    sub->add_option("--features", o->features, "Feature archive to validate lengths against");
    sub->add_option("--silence", o->silence, "Silence symbols (default: sil, sp, <blk>)");
    sub->add_option("--out", o->out, "Report path (default: stdout)");
    sub->add_option("--json", o->json, "Report as JSON");
    sub->callback([o, &ctx] {
      PhonemeInventory inv = ReadInventory(o->inventory);
      auto alis = ReadAlignments(o->alignments, inv);
      if (!o->features.empty()) {
        auto index = IndexAlignments(alis);
        ArchiveReader reader(o->features);
        while (auto entry = reader.Next()) {
          FeatureMatrix f{entry->utterance_id, "", std::move(entry->matrix)};
          ValidatePair(f, FindAlignment(index, f.utterance_id));
        }
      }
      PoolingStats stats = CorpusStats(alis, SilenceLabels(inv, o->silence));
      Emit(ctx, o->out, FormatStats(stats));
      if (!o->json.empty()) WriteTextFile(o->json, StatsToJson(stats).dump(2) + "\n");
    });
  }
}

}  // namespace phonepool::cli
