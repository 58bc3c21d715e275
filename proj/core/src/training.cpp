#include "vwp/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "vwp/checkpoint.hpp"
#include "vwp/errors.hpp"
#include "vwp/kernels.hpp"
#include "vwp/log.hpp"

namespace vwp {

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::kConfig, "epochs must be at least 1");
  if (batch_size < 1) fail(ErrorKind::kConfig, "batch size must be at least 1");
  if (seeds.empty()) fail(ErrorKind::kConfig, "at least one seed is required");
  if (!(adam.lr >= 0.0)) fail(ErrorKind::kConfig, "learning rate must be non-negative");
  validation.validate();
  test.validate();
}

std::vector<InputLayout> build_examples(const ModelConfig& config,
                                        const std::vector<ImageSequenceRecord>& records) {
  std::vector<InputLayout> out;
  for (const auto& r : records) {
    const Conditioning cond = make_conditioning(config, r);
    for (std::size_t s = 0; s < r.stories.size(); ++s) {
      const auto& tokens = r.stories[s].tokens;
      if (tokens.empty()) {
        fail(ErrorKind::kData, "sequence '" + r.id + "' story " + std::to_string(s) +
                                   " has no encoded tokens");
      }
      try {
        out.push_back(assemble_input(config, cond, tokens));
      } catch (const Error& e) {
        throw Error(e.kind(), "sequence '" + r.id + "' story " + std::to_string(s) + ": " + e.what());
      }
    }
  }
  return out;
}

double train_epoch(StoryGenModel& model, const std::vector<InputLayout>& examples,
                   const TrainConfig& config, std::uint64_t seed, std::size_t epoch) {
  if (examples.empty()) fail(ErrorKind::kData, "empty training set");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(Rng::mix(seed, 2 * epoch));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
  Rng dropout_rng(Rng::mix(seed, 2 * epoch + 1));
  const ForwardOptions options{true, &dropout_rng};

  double total = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    const double scale = 1.0 / static_cast<double>(end - start);
    model.params().zero_grad();
    for (std::size_t k = start; k < end; ++k) {
      const double loss = story_loss_backward(model, examples[order[k]], options, scale);
      if (!std::isfinite(loss)) {
        fail(ErrorKind::kTraining, "non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_index));
      }
      total += loss;
    }
    if (config.clip_norm > 0.0) {
      const double norm = clip_grad_norm(model.params(), config.clip_norm);
      if (!std::isfinite(norm)) {
        fail(ErrorKind::kTraining, "non-finite gradient at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_index));
      }
    }
    adam_step(model.params(), config.adam);
  }
  return total / static_cast<double>(examples.size());
}

double mean_loss(const StoryGenModel& model, const std::vector<InputLayout>& examples) {
  if (examples.empty()) fail(ErrorKind::kData, "empty evaluation set");
  double total = 0.0;
  for (const auto& ex : examples) total += story_loss(model, ex);
  return total / static_cast<double>(examples.size());
}

double next_token_accuracy(const StoryGenModel& model, const std::vector<InputLayout>& examples,
                           const std::function<bool(TokenId)>& count_target) {
  std::size_t hits = 0, total = 0;
  for (const auto& ex : examples) {
    const Tensor logits = forward_logits(model, ex);
    for (std::size_t t = 0; t < ex.length(); ++t) {
      if (!ex.loss_mask[t]) continue;
      if (count_target && !count_target(ex.targets[t])) continue;
      ++total;
      if (argmax(logits.row(t)) == ex.targets[t]) ++hits;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::size_t select_best(const std::vector<double>& scores) {
  if (scores.empty()) fail(ErrorKind::kData, "no epochs scored");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best + 1;
}

Tokens metric_tokens(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  Tokens out;
  for (TokenId id : ids) {
    if (id == special::kPad || id == special::kBos || id == special::kEos) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

std::vector<EvalPair> decode_for_eval(const StoryGenModel& model,
                                      const std::vector<ImageSequenceRecord>& records,
                                      const Vocabulary& vocab, const DecodingConfig& decoding) {
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.stories.empty()) continue;
    DecodingConfig dc = decoding;
    dc.seed = Rng::mix(decoding.seed, i);
    EvalPair p;
    p.hypothesis = metric_tokens(generate(model, make_conditioning(model.config(), r), dc), vocab);
    for (const auto& s : r.stories) p.references.push_back(metric_tokens(s.tokens, vocab));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::string runlog_json(const std::vector<RunLog>& runs, const MetricReport& aggregate) {
  nlohmann::json j;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json o = {{"seed", r.seed},
                        {"train_loss", r.train_loss},
                        {"val_meteor", r.val_meteor},
                        {"best_epoch", r.best_epoch},
                        {"best_checkpoint", r.best_checkpoint},
                        {"test_metrics", r.test_metrics}};
    if (!r.error.empty()) o["error"] = r.error;
    arr.push_back(std::move(o));
  }
  j["runs"] = arr;
  j["aggregate"] = nlohmann::json::parse(report_json(aggregate));
  return j.dump(2);
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kData, "cannot write " + path);
  out << text << '\n';
}

}  // namespace

FitResult fit(const TrainConfig& config, const DatasetSplits& splits, const ModelConfig& model_config,
              const Vocabulary& vocab, const std::string& system_name) {
  config.validate();
  if (splits.train.empty()) fail(ErrorKind::kData, "empty training split");
  if (splits.val.empty()) fail(ErrorKind::kData, "empty validation split");
  const auto& eval_split = splits.test.empty() ? splits.val : splits.test;
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  FitResult result;
  std::map<std::string, std::vector<std::map<std::string, double>>> per_seed;
  auto write_log = [&] {
    if (config.checkpoint_dir.empty()) return;
    write_text(config.checkpoint_dir + "/runlog.json", runlog_json(result.runs, result.aggregate));
  };

  for (const auto seed : config.seeds) {
    RunLog log;
    log.seed = seed;
    try {
      ModelConfig mc = model_config;
      mc.seed = seed;
      StoryGenModel model = build_model(mc);
      const auto examples = build_examples(mc, splits.train);
      ParamStore best_params;
      for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double loss = train_epoch(model, examples, config, seed, epoch);
        const auto pairs = decode_for_eval(model, splits.val, vocab, config.validation);
        const double m = meteor(pairs);
        log.train_loss.push_back(loss);
        log.val_meteor.push_back(m);
        log_info("seed " + std::to_string(seed) + " epoch " + std::to_string(epoch) +
                 " loss " + std::to_string(loss) + " val METEOR " + std::to_string(m));
        if (select_best(log.val_meteor) == epoch) {
          best_params = model.params();
          log.best_epoch = epoch;
          if (!config.checkpoint_dir.empty()) {
            log.best_checkpoint = config.checkpoint_dir + "/seed" + std::to_string(seed) + ".ckpt";
            save_checkpoint(log.best_checkpoint, StoryGenModel(mc, best_params));
          }
        }
      }
      StoryGenModel best(mc, std::move(best_params));
      best.params().clear_grad();
      log.test_metrics = evaluate_all(decode_for_eval(best, eval_split, vocab, config.test));
      per_seed[system_name].push_back(log.test_metrics);
      result.best_models.push_back(std::move(best));
      result.runs.push_back(std::move(log));
    } catch (const Error& e) {
      log.error = e.what();
      result.runs.push_back(std::move(log));
      if (!per_seed.empty()) result.aggregate = aggregate_runs(per_seed, system_name);
      write_log();
      throw;
    }
  }
  result.aggregate = aggregate_runs(per_seed, system_name);
  write_log();
  return result;
}

}  // namespace vwp
