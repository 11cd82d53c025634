// core/src/nnet/checkpoint.cc

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

#include "phonepool/nnet/checkpoint.h"

#include <fstream>

#include "phonepool/error.h"

namespace phonepool::nnet {

namespace {
constexpr const char* kFormat = "phonepool-checkpoint";
}  // namespace

nlohmann::json CheckpointToJson(const Seq2SeqModel& model, const TrainConfig& train,
                                std::uint64_t seed, const VocabSpec& vocab) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  j["encoder"] = ToJson(model.encoder_config());
  j["decoder"] = ToJson(model.decoder_config());
  j["train"] = ToJson(train);
  j["seed"] = seed;
  j["vocab_hash"] = vocab.vocab.Hash();
  nlohmann::json v;
  v["unit"] = std::string(TargetUnitName(vocab.unit));
  v["tokens"] = vocab.vocab.tokens();
  if (vocab.merges) {
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& [a, b] : vocab.merges->merges()) merges.push_back({a, b});
    v["merges"] = std::move(merges);
  }
  j["vocab"] = std::move(v);
  nlohmann::json tensors = nlohmann::json::array();
  for (const Parameter* p : model.params().All()) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    tensors.push_back({{"name", p->name},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()},
                       {"data", std::move(data)}});
  }
  j["tensors"] = std::move(tensors);
  return j;
}

Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != kFormat) throw ValidationError("checkpoint: unrecognized format");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ValidationError("checkpoint: unsupported version " + j.at("version").dump());
    }
    Checkpoint ck;
    ck.encoder = EncoderConfigFromJson(j.at("encoder"));
    ck.decoder = DecoderConfigFromJson(j.at("decoder"));
    ck.train = TrainConfigFromJson(j.at("train"));
    ck.seed = j.at("seed").get<std::uint64_t>();

    const auto& v = j.at("vocab");
    auto unit = ParseTargetUnit(v.at("unit").get<std::string>());
    if (!unit) throw ValidationError("checkpoint: unknown target unit");
    ck.vocab.unit = *unit;
    ck.vocab.vocab = Vocab(v.at("tokens").get<std::vector<std::string>>());
    if (v.contains("merges")) {
      std::vector<SymbolPair> merges;
      for (const auto& m : v.at("merges")) {
        merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
      }
      ck.vocab.merges = MergeTable(std::move(merges));
    }
    if (ck.vocab.vocab.Hash() != j.at("vocab_hash").get<std::string>()) {
      throw ValidationError("checkpoint: vocabulary hash mismatch");
    }
    if (ck.vocab.vocab.size() != ck.decoder.vocab_size) {
      throw ValidationError("checkpoint: vocabulary size does not match decoder output");
    }

    ck.model = std::make_unique<Seq2SeqModel>(ck.encoder, ck.decoder, ck.seed);
    std::size_t loaded = 0;
    for (const auto& t : j.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      Parameter& p = ck.model->params().Get(name);
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (rows != p.value.rows() || cols != p.value.cols() ||
          static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw ValidationError("checkpoint: shape mismatch for tensor '" + name + "'");
      }
      std::copy(data.begin(), data.end(), p.value.data());
      ++loaded;
    }
    if (loaded != ck.model->params().All().size()) {
      throw ValidationError("checkpoint: missing tensors");
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: malformed: ") + e.what());
  }
}

void SaveCheckpoint(const std::string& path, const Seq2SeqModel& model, const TrainConfig& train,
                    std::uint64_t seed, const VocabSpec& vocab) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << CheckpointToJson(model, train, seed, vocab).dump() << '\n';
  if (!os) throw IoError("write failed for '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint: malformed '" + path + "': " + e.what());
  }
  return CheckpointFromJson(j);
}

}  // namespace phonepool::nnet
