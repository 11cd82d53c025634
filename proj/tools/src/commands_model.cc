// tools/src/commands_model.cc

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

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>

#include "commands.h"
#include "phonepool/corpusio.h"
#include "phonepool/error.h"
#include "phonepool/nnet/beam_search.h"
#include "phonepool/nnet/checkpoint.h"
#include "phonepool/nnet/grad_check.h"
#include "phonepool/nnet/train.h"
#include "phonepool/parallel.h"
#include "phonepool/textproc.h"
#include "phonepool/toy.h"

namespace phonepool::cli {

namespace {

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void AddEncoderOptions(CLI::App* sub, nnet::EncoderConfig& enc, bool& no_downsample,
                       std::string& norm) {
  sub->add_option("--hidden", enc.hidden, "Encoder BiLSTM width (both directions)")->capture_default_str();
  sub->add_option("--num-blocks", enc.num_blocks, "LSTM/NiN blocks before the last BiLSTM")->capture_default_str();
  sub->add_flag("--no-downsample", no_downsample, "Disable the 2x time reduction of each NiN block");
  sub->add_option("--norm", norm, "Normalization in NiN blocks")
      ->check(CLI::IsMember({"batch", "layer"}))->capture_default_str();
}

void AddDecoderOptions(CLI::App* sub, nnet::DecoderConfig& dec) {
  sub->add_option("--embed-dims", dec.target_embed_dims, "Target embedding size")->capture_default_str();
  sub->add_option("--attn-hidden", dec.attn_hidden, "Attention MLP width")->capture_default_str();
  sub->add_option("--decoder-hidden", dec.hidden, "Decoder LSTM width")->capture_default_str();
}

void AddTrainOptions(CLI::App* sub, nnet::TrainConfig& t) {
  sub->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--lr-decay", t.lr_decay, "Plateau decay factor")->capture_default_str();
  sub->add_option("--batch-size", t.avg_batch_size, "Average utterances per batch")->capture_default_str();
  sub->add_option("--recurrent-dropout", t.recurrent_dropout, "Variational dropout rate")->capture_default_str();
  sub->add_option("--token-dropout", t.target_token_dropout, "Target token dropout rate")->capture_default_str();
  sub->add_option("--label-smoothing", t.label_smoothing, "Label smoothing")->capture_default_str();
  sub->add_option("--max-src-frames", t.max_src_frames, "Drop longer training utterances")->capture_default_str();
  sub->add_option("--seed", t.seed, "Random seed")->capture_default_str();
}

nnet::NormKind ParseNorm(const std::string& s) {
  return s == "layer" ? nnet::NormKind::kLayer : nnet::NormKind::kBatch;
}

std::map<std::string, std::string> ReadTextMap(const std::string& path) {
  std::map<std::string, std::string> m;
  for (auto& [k, v] : ReadKeyedLines(path)) {
    if (!m.emplace(k, NormalizeTarget(v)).second) {
      throw ValidationError("duplicate text entry for '" + k + "' in " + path);
    }
  }
  return m;
}

std::vector<nnet::Example> MakeDataset(const std::string& features,
                                       const std::map<std::string, std::string>& text,
                                       const VocabSpec& vocab) {
  std::vector<nnet::Example> data;
  ArchiveReader reader(features);
  while (auto entry = reader.Next()) {
    auto it = text.find(entry->utterance_id);
    if (it == text.end()) throw ValidationError("no text for utterance '" + entry->utterance_id + "'");
    data.push_back({entry->utterance_id, std::move(entry->matrix), Tokenize(it->second, vocab)});
  }
  return data;
}

void AddToyCorpusOptions(CLI::App* sub, ToyCorpusConfig& c) {
  sub->add_option("--num-utterances", c.num_utterances, "Utterances")->capture_default_str();
  sub->add_option("--num-symbols", c.num_symbols, "Source symbol vocabulary")->capture_default_str();
  sub->add_option("--dims", c.dims, "Feature dimensions")->capture_default_str();
  sub->add_option("--min-run", c.min_run, "Minimum frames per symbol")->capture_default_str();
  sub->add_option("--max-run", c.max_run, "Maximum frames per symbol")->capture_default_str();
  sub->add_option("--min-symbols", c.min_symbols, "Minimum symbols per utterance")->capture_default_str();
  sub->add_option("--max-symbols", c.max_symbols, "Maximum symbols per utterance")->capture_default_str();
  sub->add_option("--noise-std", c.noise_std, "Frame noise standard deviation")->capture_default_str();
  sub->add_option("--dev-fraction", c.dev_fraction, "Fraction held out as dev")->capture_default_str();
}

}  // namespace

void RegisterModelCommands(CLI::App& app, Context& ctx) {
  {
    struct Opts {
      std::string features, text, dev_features, dev_text, unit = "chars", merge_table, out, log;
      int bpe_merges = 1000;
      nnet::EncoderConfig enc;
      nnet::DecoderConfig dec;
      nnet::TrainConfig train;
      bool no_downsample = false;
      bool omit_timing = false;
      std::string norm = "batch";
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("train", "Train the attentional encoder-decoder");
    sub->add_option("--features", o->features, "Training feature archive")->required();
    sub->add_option("--text", o->text, "Training targets: utt-id translation")->required();
    sub->add_option("--dev-features", o->dev_features, "Dev feature archive");
    sub->add_option("--dev-text", o->dev_text, "Dev targets");
    sub->add_option("--unit", o->unit, "Target unit")
        ->check(CLI::IsMember({"chars", "words", "bpe"}))->capture_default_str();
    auto* mt = sub->add_option("--merge-table", o->merge_table, "Existing merge table (bpe)");
    auto* bm = sub->add_option("--bpe-merges", o->bpe_merges, "Merges to learn when no table is given")
                   ->capture_default_str();
    mt->excludes(bm);
    sub->add_option("--out", o->out, "Checkpoint output")->required();
    sub->add_option("--log", o->log, "Per-epoch JSON lines log");
    sub->add_flag("--omit-timing", o->omit_timing, "Leave wall-clock fields out of the log");
    AddEncoderOptions(sub, o->enc, o->no_downsample, o->norm);
    AddDecoderOptions(sub, o->dec);
    AddTrainOptions(sub, o->train);
    sub->callback([o, &ctx] {
      if (o->dev_features.empty() != o->dev_text.empty()) {
        throw ValidationError("train: --dev-features and --dev-text go together");
      }
      TargetUnit unit = *ParseTargetUnit(o->unit);
      if (unit != TargetUnit::kBpe && !o->merge_table.empty()) {
        throw ValidationError("train: --merge-table requires --unit bpe");
      }
      auto text = ReadTextMap(o->text);
      std::vector<std::string> corpus;
      for (auto& [k, v] : text) corpus.push_back(v);
      std::optional<MergeTable> merges;
      if (unit == TargetUnit::kBpe) {
        merges = o->merge_table.empty() ? BpeLearn(corpus, o->bpe_merges) : ReadMergeTable(o->merge_table);
      }
      VocabSpec vocab = BuildVocabSpec(corpus, unit, merges);
      auto train = MakeDataset(o->features, text, vocab);
      std::vector<nnet::Example> dev;
      if (!o->dev_features.empty()) dev = MakeDataset(o->dev_features, ReadTextMap(o->dev_text), vocab);
      if (train.empty()) throw ValidationError("train: no training utterances");

      nnet::EncoderConfig enc = o->enc;
      enc.input_dims = static_cast<int>(train.front().source.cols());
      enc.downsample = !o->no_downsample;
      enc.norm = ParseNorm(o->norm);
      nnet::DecoderConfig dec = o->dec;
      dec.vocab_size = vocab.vocab.size();
      nnet::Seq2SeqModel model(enc, dec, o->train.seed);

      std::ostringstream log;
      auto result = nnet::Train(model, train, dev, o->train, [&](const nnet::EpochRecord& r) {
        log << nnet::ToJson(r, !o->omit_timing).dump() << '\n';
        ctx.err << "epoch " << r.epoch << " loss " << Fmt("%.4f", r.train_loss) << " dev_acc "
                << Fmt("%.4f", r.dev_accuracy) << " lr " << Fmt("%g", r.lr) << '\n';
        return true;
      });
      nnet::SaveCheckpoint(o->out, model, o->train, o->train.seed, vocab);
      if (!o->log.empty()) WriteTextFile(o->log, log.str());
      ctx.out << "trained " << result.log.size() << " epochs on " << result.num_train_examples
              << " utterances (" << result.num_filtered << " filtered)\n";
    });
  }
  {
    struct Opts {
      std::string model, features, out, ref, json;
      int beam = 0;
      double len_norm = -1.0;
      int max_length = 0;
      int jobs = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("decode", "Beam-search decode a feature archive");
    sub->add_option("--model", o->model, "Checkpoint")->required();
    sub->add_option("--features", o->features, "Feature archive")->required();
    sub->add_option("--out", o->out, "Hypotheses: utt-id text (default: stdout)");
    sub->add_option("--beam", o->beam, "Beam size (default: from the checkpoint)");
    sub->add_option("--len-norm", o->len_norm, "Length-normalization exponent (default: from the checkpoint)");
    sub->add_option("--max-length", o->max_length, "Maximum output length (0: 3 x encoder length + 10)");
    sub->add_option("--ref", o->ref, "Reference text for BLEU: utt-id translation");
    sub->add_option("--json", o->json, "Structured report (BLEU, counts)");
    sub->add_option("--jobs", o->jobs, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([o, &ctx] {
      nnet::Checkpoint ck = nnet::LoadCheckpoint(o->model);
      nnet::DecodeOptions opts;
      opts.beam = o->beam > 0 ? o->beam : ck.train.beam;
      opts.len_norm_exp = o->len_norm >= 0.0 ? o->len_norm : ck.train.len_norm_exp;
      opts.max_length = o->max_length;
      auto entries = ReadArchive(o->features);
      std::vector<std::string> hyps(entries.size());
      parallel_for(entries.size(), o->jobs, [&](std::size_t i) {
        auto best = nnet::BeamSearch(*ck.model, entries[i].matrix, opts).front();
        hyps[i] = Detokenize(best.tokens, ck.vocab);
      });
      std::ostringstream os;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        os << entries[i].utterance_id << ' ' << hyps[i] << '\n';
      }
      Emit(ctx, o->out, os.str());
      nlohmann::json report{{"utterances", entries.size()}, {"beam", opts.beam},
                            {"len_norm_exp", opts.len_norm_exp}};
      if (!o->ref.empty()) {
        auto refs = ReadTextMap(o->ref);
        std::vector<std::vector<std::string>> h, r;
        for (std::size_t i = 0; i < entries.size(); ++i) {
          auto it = refs.find(entries[i].utterance_id);
          if (it == refs.end()) throw ValidationError("no reference for '" + entries[i].utterance_id + "'");
          h.push_back(SplitWords(NormalizeTarget(hyps[i])));
          r.push_back(SplitWords(it->second));
        }
        double bleu = CorpusBleu(h, r);
        report["bleu"] = bleu;
        ctx.err << "BLEU " << Fmt("%.2f", bleu) << '\n';
      }
      if (!o->json.empty()) WriteTextFile(o->json, report.dump(2) + "\n");
    });
  }
  {
    struct Opts {
      std::uint64_t seed = 7;
      std::string json;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("gradcheck", "Finite-difference gradient checks of the model pieces");
    sub->add_option("--seed", o->seed, "Random seed")->capture_default_str();
    sub->add_option("--json", o->json, "Structured report");
    sub->callback([o, &ctx] {
      auto results = nnet::RunStandardGradChecks(o->seed);
      nlohmann::json j = nlohmann::json::array();
      int failed = 0;
      for (const auto& r : results) {
        ctx.out << r.name << " max_rel_error=" << Fmt("%.3e", r.max_rel_error)
                << " tolerance=" << Fmt("%.0e", r.tolerance) << " checked=" << r.num_checked << ' '
                << (r.passed ? "PASS" : "FAIL");
        if (!r.passed && !r.worst_tensor.empty()) ctx.out << " worst=" << r.worst_tensor;
        for (const auto& n : r.nonfinite) ctx.out << " nonfinite=" << n;
        ctx.out << '\n';
        j.push_back({{"name", r.name}, {"max_rel_error", r.max_rel_error},
                     {"tolerance", r.tolerance}, {"checked", r.num_checked},
                     {"worst_tensor", r.worst_tensor}, {"nonfinite", r.nonfinite},
                     {"passed", r.passed}});
        if (!r.passed) ++failed;
      }
      if (!o->json.empty()) WriteTextFile(o->json, j.dump(2) + "\n");
      if (failed > 0) throw ValidationError("gradcheck: " + std::to_string(failed) + " check(s) failed");
    });
  }
  {
    struct Opts {
      ToyCorpusConfig corpus;
      std::string out_dir;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("toygen", "Generate the synthetic frames-to-words corpus");
    sub->add_option("--out-dir", o->out_dir, "Output directory")->required();
    sub->add_option("--seed", o->corpus.seed, "Random seed")->capture_default_str();
    AddToyCorpusOptions(sub, o->corpus);
    sub->callback([o, &ctx] {
      ToyCorpus corpus = GenerateToyCorpus(o->corpus);
      namespace fs = std::filesystem;
      std::error_code ec;
      fs::create_directories(o->out_dir, ec);
      if (ec) throw IoError("cannot create '" + o->out_dir + "': " + ec.message());
      const fs::path root(o->out_dir);
      WriteInventory((root / "inventory.txt").string(), corpus.inventory);
      for (const auto& [name, utts] : {std::pair{"train", &corpus.train}, std::pair{"dev", &corpus.dev}}) {
        fs::create_directories(root / name, ec);
        if (ec) throw IoError("cannot create '" + (root / name).string() + "': " + ec.message());
        std::vector<FeatureMatrix> feats;
        std::vector<FrameAlignment> alis;
        std::vector<std::pair<std::string, std::string>> text;
        for (const auto& u : *utts) {
          feats.push_back(u.features);
          alis.push_back(u.alignment);
          text.emplace_back(u.features.utterance_id, u.translation);
        }
        WriteFeatureArchive((root / name / "feats.ark").string(), feats);
        WriteAlignments((root / name / "ali.txt").string(), alis, corpus.inventory);
        WriteKeyedLines((root / name / "text").string(), text);
      }
      ctx.out << "toygen: " << corpus.train.size() << " train and " << corpus.dev.size()
              << " dev utterances in " << o->out_dir << '\n';
    });
  }
  {
    struct Opts {
      ToyCorpusConfig corpus;
      CompareConfig compare = CompareConfig::ToyDefaults();
      std::uint64_t seed = 1;
      std::string out, json, norm = "batch";
      bool omit_timing = false;
      bool progress = false;
      bool downsample = false;
      std::vector<std::string> conditions{"pooled", "frames", "stride"};
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("compare",
                                   "Frames vs pooled vs fixed-stride inputs on the synthetic corpus");
    sub->add_option("--seed", o->seed, "Seed for the corpus, model and training")->capture_default_str();
    AddToyCorpusOptions(sub, o->corpus);
    sub->add_option("--epochs", o->compare.train.epochs, "Epoch budget per condition")->capture_default_str();
    sub->add_option("--threshold", o->compare.threshold, "Dev accuracy threshold")->capture_default_str();
    sub->add_option("--stride", o->compare.stride, "Stride of the fixed-stride condition")->capture_default_str();
    sub->add_option("--lr", o->compare.train.lr, "Adam learning rate")->capture_default_str();
    sub->add_option("--hidden", o->compare.encoder.hidden, "Encoder BiLSTM width")->capture_default_str();
    sub->add_option("--decoder-hidden", o->compare.decoder.hidden, "Decoder LSTM width")->capture_default_str();
    sub->add_option("--attn-hidden", o->compare.decoder.attn_hidden, "Attention MLP width")->capture_default_str();
    sub->add_option("--embed-dims", o->compare.decoder.target_embed_dims, "Target embedding size")
        ->capture_default_str();
    sub->add_flag("--downsample", o->downsample, "Enable encoder 4x time downsampling");
    sub->add_option("--conditions", o->conditions, "Conditions to run")
        ->check(CLI::IsMember({"pooled", "frames", "stride"}))->capture_default_str();
    sub->add_option("--out", o->out, "Report path (default: stdout)");
    sub->add_option("--json", o->json, "Structured report");
    sub->add_flag("--omit-timing", o->omit_timing, "Leave wall-clock fields out of the reports");
    sub->add_flag("--progress", o->progress, "Print per-epoch progress to stderr");
    sub->callback([o, &ctx] {
      ToyCorpusConfig cc = o->corpus;
      cc.seed = o->seed;
      CompareConfig cfg = o->compare;
      cfg.train.seed = o->seed;
      cfg.encoder.downsample = o->downsample;
      cfg.conditions.clear();
      for (const auto& c : o->conditions) {
        cfg.conditions.push_back(c == "pooled"   ? SourceCondition::kPooled
                                 : c == "frames" ? SourceCondition::kFrames
                                                 : SourceCondition::kStride);
      }
      ToyCorpus corpus = GenerateToyCorpus(cc);
      ComparisonReport report = RunComparison(corpus, cfg, o->progress ? &ctx.err : nullptr);
      Emit(ctx, o->out, FormatReport(report, !o->omit_timing));
      if (!o->json.empty()) {
        WriteTextFile(o->json, ReportToJson(report, !o->omit_timing).dump(2) + "\n");
      }
    });
  }
}

}  // namespace phonepool::cli
