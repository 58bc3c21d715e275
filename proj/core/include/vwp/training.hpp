#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vwp/corpus.hpp"
#include "vwp/decoding.hpp"
#include "vwp/metrics.hpp"
#include "vwp/model.hpp"
#include "vwp/optimizer.hpp"
#include "vwp/vocab.hpp"

namespace vwp {

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 8;
  AdamConfig adam;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  /// Validation decoding; nucleus with a fixed seed keeps selection deterministic.
  DecodingConfig validation{DecodingMode::kNucleus, 0.1, 200, 1234};
  /// Test decoding after selection.
  DecodingConfig test{DecodingMode::kGreedy, 0.1, 200, 0};
  std::string checkpoint_dir;  // empty: keep best parameters in memory only

  void validate() const;
};

/// One training example per (sequence, story) pair.
std::vector<InputLayout> build_examples(const ModelConfig& config,
                                        const std::vector<ImageSequenceRecord>& records);

/// One shuffled pass with Adam updates. Returns the mean training loss.
/// Throws kTraining, naming epoch and batch, on a non-finite loss.
double train_epoch(StoryGenModel& model, const std::vector<InputLayout>& examples,
                   const TrainConfig& config, std::uint64_t seed, std::size_t epoch);

/// Mean evaluation-mode loss.
double mean_loss(const StoryGenModel& model, const std::vector<InputLayout>& examples);

/// Teacher-forced argmax accuracy over loss positions whose target passes
/// `count_target` (all positions when empty).
double next_token_accuracy(const StoryGenModel& model, const std::vector<InputLayout>& examples,
                           const std::function<bool(TokenId)>& count_target = {});

/// 1-based epoch with the highest score, earliest on ties.
std::size_t select_best(const std::vector<double>& scores);

/// Surface tokens of a story for metric computation (specials dropped).
Tokens metric_tokens(const std::vector<TokenId>& ids, const Vocabulary& vocab);

/// Decodes one story per record and pairs it with the record's stories.
std::vector<EvalPair> decode_for_eval(const StoryGenModel& model,
                                      const std::vector<ImageSequenceRecord>& records,
                                      const Vocabulary& vocab, const DecodingConfig& decoding);

struct RunLog {
  std::uint64_t seed = 0;
  std::vector<double> train_loss;
  std::vector<double> val_meteor;
  std::size_t best_epoch = 0;  // 1-based
  std::string best_checkpoint;
  std::map<std::string, double> test_metrics;
  std::string error;
};

std::string runlog_json(const std::vector<RunLog>& runs, const MetricReport& aggregate);

struct FitResult {
  std::vector<RunLog> runs;
  std::vector<StoryGenModel> best_models;  // one per completed seed
  MetricReport aggregate;
};

/// Trains one model per seed, selects the epoch with the best validation
/// METEOR, scores the test split (validation split when test is empty) and
/// aggregates across seeds. On failure the completed runs are written to
/// <checkpoint_dir>/runlog.json before the error propagates.
FitResult fit(const TrainConfig& config, const DatasetSplits& splits, const ModelConfig& model_config,
              const Vocabulary& vocab, const std::string& system_name = "model");

}  // namespace vwp
