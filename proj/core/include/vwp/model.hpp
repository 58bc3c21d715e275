#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vwp/autodiff.hpp"
#include "vwp/corpus.hpp"
#include "vwp/params.hpp"
#include "vwp/tensor.hpp"
#include "vwp/vocab.hpp"

namespace vwp {

enum class GridMode { kNone, kChar, kObj, kEntity };
const char* to_string(GridMode mode);
GridMode parse_grid_mode(const std::string& s);

/// Which feature tokens precede the story. All false is the text-only
/// language-model baseline.
struct FeatureSet {
  bool global = true;
  bool characters = false;
  bool objects = false;

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};
/// "global,char,obj" style list; "none" or "" for text-only.
FeatureSet parse_feature_set(const std::string& s);
std::string to_string(const FeatureSet& f);

enum Segment : std::int64_t { kImageSegment = 0, kCharacterSegment = 1, kGridSegment = 2, kTextSegment = 3 };
inline constexpr std::size_t kSegmentCount = 4;

struct ModelConfig {
  std::size_t d_model = 128;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 512;
  std::size_t vocab_size = special::kCount;
  std::size_t max_text = 256;  // story tokens, [EOS] included
  std::size_t feature_dim = 0;
  std::size_t n_max = 10;
  std::size_t m_max = 5;
  std::size_t obj_max = 20;
  FeatureSet features;
  GridMode grid_mode = GridMode::kNone;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  /// Throws kConfig when the combination is inconsistent.
  void validate() const;
  /// Columns of the fixed grid frame for the configured grid mode.
  std::size_t grid_width() const;
  std::size_t grid_inputs() const { return n_max * grid_width(); }
  /// Longest possible layout, the size of the position table.
  std::size_t max_positions() const;

  /// Sorted key=value lines; parse_canonical inverts it exactly.
  std::string canonical() const;
  static ModelConfig parse_canonical(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Condition tensors for one image sequence, already restricted to the
/// configured feature set.
struct Conditioning {
  Tensor images;      // N x D
  Tensor characters;  // M x D
  Tensor objects;     // K x D
  std::vector<double> grid;  // n_max * grid_width, empty without a grid
};

Conditioning make_conditioning(const ModelConfig& config, const ImageSequenceRecord& seq);

/// Token layout: image tokens, character tokens, object tokens, the grid
/// token, [BOS] and the story. Position t predicts text position t + 1.
struct InputLayout {
  Conditioning cond;
  std::vector<TokenId> text;  // [BOS] + story
  std::vector<std::int64_t> segments;
  std::vector<std::int64_t> positions;
  std::vector<std::int64_t> targets;
  std::vector<bool> loss_mask;
  std::size_t prefix_length = 0;

  std::size_t length() const { return segments.size(); }
  std::size_t loss_positions() const;
};

/// Throws kLength when the story exceeds max_text and kSize when the
/// conditioning exceeds the frame.
InputLayout assemble_input(const ModelConfig& config, Conditioning cond,
                           std::span<const TokenId> story);

class StoryGenModel {
 public:
  StoryGenModel() = default;
  StoryGenModel(ModelConfig config, ParamStore params)
      : config_(std::move(config)), params_(std::move(params)) {}

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

 private:
  ModelConfig config_;
  ParamStore params_;
};

/// Seeded initialisation: normal(0, 0.02) weights and embeddings, zero
/// biases, unit layer-norm gains.
StoryGenModel build_model(const ModelConfig& config);

/// Closed-form parameter count of a configuration.
std::size_t parameter_count(const ModelConfig& config);

struct ForwardOptions {
  bool train = false;     // enables dropout
  Rng* rng = nullptr;     // required when train and dropout > 0
};

/// Records the forward pass on `tape` and returns the (length x vocab) logits.
Var forward_logits(StoryGenModel& model, const InputLayout& layout, Tape& tape,
                   const ForwardOptions& options = {});
/// Evaluation-mode logits without gradient bookkeeping.
Tensor forward_logits(const StoryGenModel& model, const InputLayout& layout);

/// Masked next-token cross entropy over story positions.
double story_loss(const StoryGenModel& model, const InputLayout& layout);
double story_loss(const StoryGenModel& model, const ImageSequenceRecord& seq,
                  std::span<const TokenId> story);

/// Loss with its gradient accumulated into the model's ParamStore (scaled by
/// grad_scale).
double story_loss_backward(StoryGenModel& model, const InputLayout& layout,
                           const ForwardOptions& options = {}, double grad_scale = 1.0);

}  // namespace vwp
