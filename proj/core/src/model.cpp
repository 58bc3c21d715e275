#include "vwp/model.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "vwp/chargrid.hpp"
#include "vwp/errors.hpp"
#include "vwp/kernels.hpp"

namespace vwp {

const char* to_string(GridMode mode) {
  switch (mode) {
    case GridMode::kNone: return "none";
    case GridMode::kChar: return "char";
    case GridMode::kObj: return "obj";
    case GridMode::kEntity: return "entity";
  }
  return "none";
}

GridMode parse_grid_mode(const std::string& s) {
  if (s == "none") return GridMode::kNone;
  if (s == "char") return GridMode::kChar;
  if (s == "obj") return GridMode::kObj;
  if (s == "entity") return GridMode::kEntity;
  fail(ErrorKind::kConfig, "unknown grid mode '" + s + "' (none|char|obj|entity)");
}

FeatureSet parse_feature_set(const std::string& s) {
  FeatureSet f{false, false, false};
  if (s.empty() || s == "none") return f;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "global") {
      f.global = true;
    } else if (item == "char") {
      f.characters = true;
    } else if (item == "obj") {
      f.objects = true;
    } else {
      fail(ErrorKind::kConfig, "unknown feature '" + item + "' (global|char|obj)");
    }
  }
  return f;
}

std::string to_string(const FeatureSet& f) {
  std::string out;
  auto add = [&](const char* s) {
    if (!out.empty()) out += ',';
    out += s;
  };
  if (f.global) add("global");
  if (f.characters) add("char");
  if (f.objects) add("obj");
  return out.empty() ? "none" : out;
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorKind::kConfig, m); };
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    bad("d_model must be a positive multiple of n_heads");
  }
  if (d_ff == 0) bad("d_ff must be positive");
  if (vocab_size < special::kCount) bad("vocab_size smaller than the special-token block");
  if (max_text == 0) bad("max_text must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  const bool any_features = features.global || features.characters || features.objects;
  if (any_features && feature_dim == 0) bad("feature_dim must be positive when features are used");
  if (grid_mode != GridMode::kNone && !features.global) {
    bad("grid modes need global image features");
  }
  if ((grid_mode == GridMode::kChar || grid_mode == GridMode::kEntity) && !features.characters) {
    bad(std::string("grid mode '") + to_string(grid_mode) + "' needs character features");
  }
  if ((grid_mode == GridMode::kObj || grid_mode == GridMode::kEntity) && !features.objects) {
    bad(std::string("grid mode '") + to_string(grid_mode) + "' needs object features");
  }
  if (n_max == 0) bad("n_max must be positive");
}

std::size_t ModelConfig::grid_width() const {
  switch (grid_mode) {
    case GridMode::kNone: return 0;
    case GridMode::kChar: return m_max;
    case GridMode::kObj: return obj_max;
    case GridMode::kEntity: return m_max + obj_max;
  }
  return 0;
}

std::size_t ModelConfig::max_positions() const {
  std::size_t n = 1 + max_text;  // [BOS] + story
  if (features.global) n += n_max;
  if (features.characters) n += m_max;
  if (features.objects) n += obj_max;
  if (grid_mode != GridMode::kNone) n += 1;
  return n;
}

std::string ModelConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["d_ff"] = std::to_string(d_ff);
  kv["d_model"] = std::to_string(d_model);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", dropout);
  kv["dropout"] = buf;
  kv["feature_dim"] = std::to_string(feature_dim);
  kv["features"] = to_string(features);
  kv["grid_mode"] = to_string(grid_mode);
  kv["m_max"] = std::to_string(m_max);
  kv["max_text"] = std::to_string(max_text);
  kv["n_heads"] = std::to_string(n_heads);
  kv["n_layers"] = std::to_string(n_layers);
  kv["n_max"] = std::to_string(n_max);
  kv["obj_max"] = std::to_string(obj_max);
  kv["seed"] = std::to_string(seed);
  kv["vocab_size"] = std::to_string(vocab_size);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

ModelConfig ModelConfig::parse_canonical(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kData, "bad config line '" + line + "'");
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    try {
      if (k == "d_ff") c.d_ff = std::stoull(v);
      else if (k == "d_model") c.d_model = std::stoull(v);
      else if (k == "dropout") c.dropout = std::stod(v);
      else if (k == "feature_dim") c.feature_dim = std::stoull(v);
      else if (k == "features") c.features = parse_feature_set(v);
      else if (k == "grid_mode") c.grid_mode = parse_grid_mode(v);
      else if (k == "m_max") c.m_max = std::stoull(v);
      else if (k == "max_text") c.max_text = std::stoull(v);
      else if (k == "n_heads") c.n_heads = std::stoull(v);
      else if (k == "n_layers") c.n_layers = std::stoull(v);
      else if (k == "n_max") c.n_max = std::stoull(v);
      else if (k == "obj_max") c.obj_max = std::stoull(v);
      else if (k == "seed") c.seed = std::stoull(v);
      else if (k == "vocab_size") c.vocab_size = std::stoull(v);
      else fail(ErrorKind::kData, "unknown config key '" + k + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::kData, "bad config value for '" + k + "'");
    }
  }
  return c;
}

namespace {

Tensor rows_tensor(const std::vector<const std::vector<double>*>& rows, std::size_t d) {
  Tensor t = Tensor::matrix(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) t(i, k) = (*rows[i])[k];
  }
  return t;
}

}  // namespace

Conditioning make_conditioning(const ModelConfig& config, const ImageSequenceRecord& seq) {
  Conditioning c;
  const std::size_t d = config.feature_dim;
  auto check_dim = [&](std::size_t got, const std::string& what) {
    if (got != d) {
      fail(ErrorKind::kData, "sequence '" + seq.id + "': " + what + " has dimension " +
                                 std::to_string(got) + ", model expects " + std::to_string(d));
    }
  };
  std::vector<const std::vector<double>*> rows;
  if (config.features.global) {
    for (const auto& im : seq.images) {
      check_dim(im.global_feat.size(), "image '" + im.image_id + "'");
      rows.push_back(&im.global_feat);
    }
  }
  c.images = rows_tensor(rows, d);
  rows.clear();
  if (config.features.characters) {
    for (const auto& ch : seq.characters) {
      check_dim(ch.representative_feat.size(), "character '" + ch.char_id + "'");
      rows.push_back(&ch.representative_feat);
    }
  }
  c.characters = rows_tensor(rows, d);
  rows.clear();
  if (config.features.objects) {
    for (const auto& o : seq.objects) {
      check_dim(o.feat.size(), "object '" + o.object_id + "'");
      rows.push_back(&o.feat);
    }
  }
  c.objects = rows_tensor(rows, d);
  switch (config.grid_mode) {
    case GridMode::kNone: break;
    case GridMode::kChar: c.grid = flatten_pad(compute_grid(seq), config.n_max, config.grid_width()); break;
    case GridMode::kObj: c.grid = flatten_pad(compute_object_grid(seq), config.n_max, config.grid_width()); break;
    case GridMode::kEntity: {
      // characters fill the first m_max columns, objects the remaining obj_max
      const CharacterGrid chars = compute_grid(seq);
      const CharacterGrid objs = compute_object_grid(seq);
      if (chars.columns() > config.m_max || objs.columns() > config.obj_max) {
        fail(ErrorKind::kSize, "sequence '" + seq.id + "': entity grid exceeds frame");
      }
      const auto left = flatten_pad(chars, config.n_max, config.m_max);
      const auto right = flatten_pad(objs, config.n_max, config.obj_max);
      const std::size_t w = config.grid_width();
      c.grid.assign(config.n_max * w, 0.0);
      for (std::size_t a = 0; a < config.n_max; ++a) {
        for (std::size_t b = 0; b < config.m_max; ++b) c.grid[a * w + b] = left[a * config.m_max + b];
        for (std::size_t b = 0; b < config.obj_max; ++b) {
          c.grid[a * w + config.m_max + b] = right[a * config.obj_max + b];
        }
      }
      break;
    }
  }
  return c;
}

std::size_t InputLayout::loss_positions() const {
  std::size_t n = 0;
  for (bool m : loss_mask) n += m ? 1 : 0;
  return n;
}

InputLayout assemble_input(const ModelConfig& config, Conditioning cond,
                           std::span<const TokenId> story) {
  if (story.size() > config.max_text) {
    fail(ErrorKind::kLength, "story of " + std::to_string(story.size()) +
                                 " tokens exceeds max_text " + std::to_string(config.max_text));
  }
  const std::size_t n = cond.images.rows(), m = cond.characters.rows(), k = cond.objects.rows();
  if (n > config.n_max) fail(ErrorKind::kSize, "more images than n_max");
  if (m > config.m_max) fail(ErrorKind::kSize, "more characters than m_max");
  if (k > config.obj_max) fail(ErrorKind::kSize, "more objects than obj_max");
  const bool grid = config.grid_mode != GridMode::kNone;
  if (grid && cond.grid.size() != config.grid_inputs()) {
    fail(ErrorKind::kSize, "grid input has wrong size");
  }

  InputLayout l;
  auto push = [&](std::int64_t seg) {
    l.positions.push_back(static_cast<std::int64_t>(l.segments.size()));
    l.segments.push_back(seg);
    l.targets.push_back(0);
    l.loss_mask.push_back(false);
  };
  for (std::size_t i = 0; i < n; ++i) push(kImageSegment);
  for (std::size_t i = 0; i < m + k; ++i) push(kCharacterSegment);
  if (grid) push(kGridSegment);
  l.prefix_length = l.segments.size();
  l.text.push_back(special::kBos);
  l.text.insert(l.text.end(), story.begin(), story.end());
  for (std::size_t i = 0; i < l.text.size(); ++i) {
    push(kTextSegment);
    if (i < story.size()) {
      l.targets.back() = story[i];
      l.loss_mask.back() = true;
    }
  }
  l.cond = std::move(cond);
  return l;
}

namespace {

struct ParamInit {
  enum Kind { kNormal, kZero, kOne } kind;
};

void add_param(ParamStore& s, Rng& rng, const std::string& name, std::vector<std::size_t> shape,
               ParamInit::Kind kind) {
  Tensor t(std::move(shape));
  switch (kind) {
    case ParamInit::kNormal:
      for (double& v : t.data()) v = 0.02 * rng.normal();
      break;
    case ParamInit::kZero: break;
    case ParamInit::kOne: t.fill(1.0); break;
  }
  s.add(name, std::move(t));
}

std::string block_name(std::size_t layer, const char* leaf) {
  return "block" + std::to_string(layer) + "." + leaf;
}

}  // namespace

StoryGenModel build_model(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ParamStore s;
  const std::size_t d = config.d_model, v = config.vocab_size, f = config.d_ff;
  add_param(s, rng, "tok_emb", {v, d}, ParamInit::kNormal);
  add_param(s, rng, "pos_emb", {config.max_positions(), d}, ParamInit::kNormal);
  add_param(s, rng, "seg_emb", {kSegmentCount, d}, ParamInit::kNormal);
  auto encoder = [&](const char* name, std::size_t in) {
    add_param(s, rng, std::string("enc.") + name + ".w", {in, d}, ParamInit::kNormal);
    add_param(s, rng, std::string("enc.") + name + ".b", {d}, ParamInit::kZero);
  };
  if (config.features.global) encoder("global", config.feature_dim);
  if (config.features.characters) encoder("char", config.feature_dim);
  if (config.features.objects) encoder("obj", config.feature_dim);
  if (config.grid_mode != GridMode::kNone) encoder("grid", config.grid_inputs());
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    add_param(s, rng, block_name(l, "ln1.g"), {d}, ParamInit::kOne);
    add_param(s, rng, block_name(l, "ln1.b"), {d}, ParamInit::kZero);
    for (const char* p : {"q", "k", "v", "o"}) {
      add_param(s, rng, block_name(l, (std::string("attn.w") + p).c_str()), {d, d}, ParamInit::kNormal);
      add_param(s, rng, block_name(l, (std::string("attn.b") + p).c_str()), {d}, ParamInit::kZero);
    }
    add_param(s, rng, block_name(l, "ln2.g"), {d}, ParamInit::kOne);
    add_param(s, rng, block_name(l, "ln2.b"), {d}, ParamInit::kZero);
    add_param(s, rng, block_name(l, "mlp.w1"), {d, f}, ParamInit::kNormal);
    add_param(s, rng, block_name(l, "mlp.b1"), {f}, ParamInit::kZero);
    add_param(s, rng, block_name(l, "mlp.w2"), {f, d}, ParamInit::kNormal);
    add_param(s, rng, block_name(l, "mlp.b2"), {d}, ParamInit::kZero);
  }
  add_param(s, rng, "ln_f.g", {d}, ParamInit::kOne);
  add_param(s, rng, "ln_f.b", {d}, ParamInit::kZero);
  add_param(s, rng, "head.w", {d, v}, ParamInit::kNormal);
  add_param(s, rng, "head.b", {v}, ParamInit::kZero);
  return StoryGenModel(config, std::move(s));
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model, v = c.vocab_size, f = c.d_ff;
  std::size_t n = v * d + c.max_positions() * d + kSegmentCount * d;
  const std::size_t encoders = (c.features.global ? 1 : 0) + (c.features.characters ? 1 : 0) +
                               (c.features.objects ? 1 : 0);
  n += encoders * (c.feature_dim * d + d);
  if (c.grid_mode != GridMode::kNone) n += c.grid_inputs() * d + d;
  const std::size_t per_layer = 4 * d + 4 * (d * d + d) + (d * f + f) + (f * d + d);
  n += c.n_layers * per_layer;
  n += 2 * d + d * v + v;
  return n;
}

Var forward_logits(StoryGenModel& model, const InputLayout& layout, Tape& tape,
                   const ForwardOptions& options) {
  const ModelConfig& cfg = model.config();
  ParamStore& ps = model.params();
  if (layout.length() > cfg.max_positions()) {
    fail(ErrorKind::kLength, "layout longer than the position table");
  }
  const bool dropping = options.train && cfg.dropout > 0.0;
  if (dropping && options.rng == nullptr) fail(ErrorKind::kState, "training forward needs an rng");
  auto P = [&](const std::string& name) { return tape.param(ps, name); };
  auto maybe_dropout = [&](Var x) {
    return dropping ? ad::dropout(tape, x, cfg.dropout, *options.rng) : x;
  };

  std::vector<Var> parts;
  auto encode = [&](const Tensor& feats, const char* name) {
    if (feats.rows() == 0) return;
    const std::string base = std::string("enc.") + name;
    parts.push_back(ad::linear(tape, tape.constant(feats), P(base + ".w"), P(base + ".b")));
  };
  if (cfg.features.global) encode(layout.cond.images, "global");
  if (cfg.features.characters) encode(layout.cond.characters, "char");
  if (cfg.features.objects) encode(layout.cond.objects, "obj");
  if (cfg.grid_mode != GridMode::kNone) {
    Tensor g({1, layout.cond.grid.size()}, layout.cond.grid);
    parts.push_back(ad::linear(tape, tape.constant(std::move(g)), P("enc.grid.w"), P("enc.grid.b")));
  }
  parts.push_back(ad::embedding(tape, P("tok_emb"), layout.text));

  Var h = ad::concat_rows(tape, parts);
  if (tape.value(h).rows() != layout.length()) {
    fail(ErrorKind::kSize, "layout does not match the model's feature set");
  }
  h = ad::add(tape, h, ad::embedding(tape, P("pos_emb"), layout.positions));
  h = ad::add(tape, h, ad::embedding(tape, P("seg_emb"), layout.segments));
  h = maybe_dropout(h);

  const std::size_t d = cfg.d_model, heads = cfg.n_heads, dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    auto B = [&](const char* leaf) { return P(block_name(l, leaf)); };
    Var a = ad::layer_norm(tape, h, B("ln1.g"), B("ln1.b"));
    Var q = ad::linear(tape, a, B("attn.wq"), B("attn.bq"));
    Var k = ad::linear(tape, a, B("attn.wk"), B("attn.bk"));
    Var v = ad::linear(tape, a, B("attn.wv"), B("attn.bv"));
    std::vector<Var> outs;
    for (std::size_t hd = 0; hd < heads; ++hd) {
      Var qh = heads == 1 ? q : ad::slice_cols(tape, q, hd * dh, dh);
      Var kh = heads == 1 ? k : ad::slice_cols(tape, k, hd * dh, dh);
      Var vh = heads == 1 ? v : ad::slice_cols(tape, v, hd * dh, dh);
      Var scores = ad::scale(tape, ad::matmul_nt(tape, qh, kh), att_scale);
      outs.push_back(ad::matmul(tape, ad::causal_softmax(tape, scores), vh));
    }
    Var att = heads == 1 ? outs.front() : ad::concat_cols(tape, outs);
    att = maybe_dropout(ad::linear(tape, att, B("attn.wo"), B("attn.bo")));
    h = ad::add(tape, h, att);

    Var m = ad::layer_norm(tape, h, B("ln2.g"), B("ln2.b"));
    m = ad::gelu(tape, ad::linear(tape, m, B("mlp.w1"), B("mlp.b1")));
    m = maybe_dropout(ad::linear(tape, m, B("mlp.w2"), B("mlp.b2")));
    h = ad::add(tape, h, m);
  }
  h = ad::layer_norm(tape, h, P("ln_f.g"), P("ln_f.b"));
  Var logits = ad::linear(tape, h, P("head.w"), P("head.b"));
  if (!tape.value(logits).all_finite()) fail(ErrorKind::kNumeric, "non-finite logits");
  return logits;
}

Tensor forward_logits(const StoryGenModel& model, const InputLayout& layout) {
  Tape tape(false);
  // A non-recording tape only reads parameter values.
  auto& m = const_cast<StoryGenModel&>(model);
  Var logits = forward_logits(m, layout, tape);
  return tape.value(logits);
}

double story_loss(const StoryGenModel& model, const InputLayout& layout) {
  if (layout.loss_positions() == 0) fail(ErrorKind::kEmptyLoss, "story has no tokens");
  const Tensor logits = forward_logits(model, layout);
  return kernels::cross_entropy_masked(logits, layout.targets, layout.loss_mask);
}

double story_loss(const StoryGenModel& model, const ImageSequenceRecord& seq,
                  std::span<const TokenId> story) {
  return story_loss(model, assemble_input(model.config(), make_conditioning(model.config(), seq), story));
}

double story_loss_backward(StoryGenModel& model, const InputLayout& layout,
                           const ForwardOptions& options, double grad_scale) {
  if (layout.loss_positions() == 0) fail(ErrorKind::kEmptyLoss, "story has no tokens");
  Tape tape;
  Var logits = forward_logits(model, layout, tape, options);
  Var loss = ad::cross_entropy_masked(tape, logits, layout.targets, layout.loss_mask);
  const double value = tape.value(loss)[0];
  tape.backward(grad_scale != 1.0 ? ad::scale(tape, loss, grad_scale) : loss);
  return value;
}

}  // namespace vwp
