#include <cmath>

#include "doctest.h"
#include "grid_fixtures.hpp"
#include "helpers.hpp"
#include "vwp/chargrid.hpp"
#include "vwp/checkpoint.hpp"
#include "vwp/errors.hpp"
#include "vwp/gradcheck.hpp"
#include "vwp/kernels.hpp"
#include "vwp/model.hpp"

using namespace vwp;

namespace {

using Mat = std::vector<std::vector<double>>;

ModelConfig tiny_config(GridMode grid = GridMode::kChar) {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 16;
  c.vocab_size = 20;
  c.max_text = 12;
  c.feature_dim = 4;
  c.features = {true, true, false};
  c.grid_mode = grid;
  c.dropout = 0.0;
  c.seed = 3;
  return c;
}

std::vector<TokenId> story(std::initializer_list<TokenId> ids) { return ids; }

// Randomise every parameter so biases and gains are exercised too.
void scramble(StoryGenModel& m, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  for (const auto& [name, v] : m.params().values()) {
    Tensor& t = m.params().value(name);
    for (double& x : t.data()) x = scale * rng.normal();
    if (name.find(".g") != std::string::npos) for (double& x : t.data()) x += 1.0;
  }
}

Mat to_mat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

Mat affine(const Mat& x, const Tensor& w, const Tensor& b) {
  Mat out(x.size(), std::vector<double>(w.cols()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < w.rows(); ++k) s += x[i][k] * w(k, j);
      out[i][j] = s;
    }
  return out;
}

Mat norm(const Mat& x, const Tensor& g, const Tensor& b) {
  Mat out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mean = 0.0, var = 0.0;
    for (double v : x[i]) mean += v / n;
    for (double v : x[i]) var += (v - mean) * (v - mean) / n;
    for (std::size_t j = 0; j < x[i].size(); ++j) out[i][j] = (x[i][j] - mean) / std::sqrt(var + 1e-5) * g[j] + b[j];
  }
  return out;
}

// Independent straight-line forward pass over the same parameters.
Mat oracle_forward(const StoryGenModel& model, const InputLayout& l) {
  const auto& c = model.config();
  const auto& p = model.params();
  auto P = [&](const std::string& n) -> const Tensor& { return p.value(n); };
  Mat h;
  auto append = [&](const Mat& rows) { h.insert(h.end(), rows.begin(), rows.end()); };
  if (c.features.global && l.cond.images.rows()) append(affine(to_mat(l.cond.images), P("enc.global.w"), P("enc.global.b")));
  if (c.features.characters && l.cond.characters.rows()) append(affine(to_mat(l.cond.characters), P("enc.char.w"), P("enc.char.b")));
  if (c.features.objects && l.cond.objects.rows()) append(affine(to_mat(l.cond.objects), P("enc.obj.w"), P("enc.obj.b")));
  if (c.grid_mode != GridMode::kNone) append(affine(Mat{l.cond.grid}, P("enc.grid.w"), P("enc.grid.b")));
  for (TokenId t : l.text) {
    std::vector<double> row(c.d_model);
    for (std::size_t j = 0; j < c.d_model; ++j) row[j] = P("tok_emb")(t, j);
    h.push_back(row);
  }
  const std::size_t T = h.size(), d = c.d_model, dh = d / c.n_heads;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < d; ++j) h[i][j] += P("pos_emb")(l.positions[i], j) + P("seg_emb")(l.segments[i], j);

  for (std::size_t layer = 0; layer < c.n_layers; ++layer) {
    const std::string b = "block" + std::to_string(layer) + ".";
    const Mat a = norm(h, P(b + "ln1.g"), P(b + "ln1.b"));
    const Mat q = affine(a, P(b + "attn.wq"), P(b + "attn.bq"));
    const Mat k = affine(a, P(b + "attn.wk"), P(b + "attn.bk"));
    const Mat v = affine(a, P(b + "attn.wv"), P(b + "attn.bv"));
    Mat att(T, std::vector<double>(d, 0.0));
    for (std::size_t head = 0; head < c.n_heads; ++head) {
      const std::size_t off = head * dh;
      for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> s(i + 1);
        double mx = -1e300;
        for (std::size_t j = 0; j <= i; ++j) {
          double dot = 0.0;
          for (std::size_t e = 0; e < dh; ++e) dot += q[i][off + e] * k[j][off + e];
          s[j] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (auto& x : s) z += (x = std::exp(x - mx));
        for (std::size_t j = 0; j <= i; ++j)
          for (std::size_t e = 0; e < dh; ++e) att[i][off + e] += s[j] / z * v[j][off + e];
      }
    }
    const Mat o = affine(att, P(b + "attn.wo"), P(b + "attn.bo"));
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t j = 0; j < d; ++j) h[i][j] += o[i][j];
    Mat m = affine(norm(h, P(b + "ln2.g"), P(b + "ln2.b")), P(b + "mlp.w1"), P(b + "mlp.b1"));
    for (auto& row : m)
      for (auto& x : row) x = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
    const Mat m2 = affine(m, P(b + "mlp.w2"), P(b + "mlp.b2"));
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t j = 0; j < d; ++j) h[i][j] += m2[i][j];
  }
  return affine(norm(h, P("ln_f.g"), P("ln_f.b")), P("head.w"), P("head.b"));
}

ImageSequenceRecord record_for(const ModelConfig& c, std::uint64_t seed, std::size_t n = 5, std::size_t m = 3) {
  Rng rng(seed);
  return testing::random_record(rng, n, m, 0, c.feature_dim);
}

}  // namespace

TEST_CASE("layout arithmetic") {
  ModelConfig c = tiny_config();
  c.n_max = 10;
  c.m_max = 5;
  const auto rec = record_for(c, 1, 5, 3);
  const auto l = assemble_input(c, make_conditioning(c, rec), story({20 - 1, 17, 18, 17, 16, 19, special::kEos}));
  CHECK(l.length() == 17);
  CHECK(l.prefix_length == 9);
  CHECK(l.loss_positions() == 7);
  CHECK(l.segments[0] == kImageSegment);
  CHECK(l.segments[5] == kCharacterSegment);
  CHECK(l.segments[8] == kGridSegment);
  CHECK(l.segments[9] == kTextSegment);
  CHECK(l.text.front() == special::kBos);
  CHECK(l.targets[9] == 19);  // [BOS] predicts the first story token
  CHECK(l.loss_mask[15]);
  CHECK_FALSE(l.loss_mask[16]);
  for (std::size_t i = 0; i < 9; ++i) CHECK_FALSE(l.loss_mask[i]);

  ModelConfig none = c;
  none.grid_mode = GridMode::kNone;
  const auto ln = assemble_input(none, make_conditioning(none, rec), story({17, 18}));
  CHECK(ln.length() == 5 + 3 + 1 + 2);
  for (auto s : ln.segments) CHECK(s != kGridSegment);

  const auto empty = assemble_input(c, make_conditioning(c, rec), {});
  CHECK(empty.length() == 10);
  CHECK(empty.loss_positions() == 0);
  const auto model = build_model(c);
  try {
    story_loss(model, empty);
    FAIL("expected empty-loss error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyLoss);
  }

  std::vector<TokenId> long_story(c.max_text + 1, 17);
  try {
    assemble_input(c, make_conditioning(c, rec), long_story);
    FAIL("expected length error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLength);
  }
}

TEST_CASE("model config validation") {
  ModelConfig c = tiny_config();
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.features.characters = false;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config(GridMode::kObj);
  CHECK_THROWS_AS(c.validate(), Error);
  c.features.objects = true;
  CHECK_NOTHROW(c.validate());
  CHECK(ModelConfig::parse_canonical(c.canonical()) == c);
  CHECK(parse_feature_set("global,char,obj") == FeatureSet{true, true, true});
  CHECK(parse_feature_set("none") == FeatureSet{false, false, false});
  CHECK_THROWS_AS(parse_grid_mode("diagonal"), Error);
}

TEST_CASE("parameter count matches the hand-derived formula") {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_ff = 32;
  c.vocab_size = 16;
  c.max_text = 10;
  c.features = {false, false, false};
  // tok 16*8 + pos 11*8 + seg 4*8 + ln1 16 + attn 4*(64+8) + ln2 16
  // + mlp (8*32+32) + (32*8+8) + ln_f 16 + head 8*16+16
  const std::size_t hand = 128 + 88 + 32 + 16 + 288 + 16 + 288 + 264 + 16 + 144;
  CHECK(parameter_count(c) == hand);
  CHECK(build_model(c).params().count() == hand);

  for (auto grid : {GridMode::kNone, GridMode::kChar}) {
    ModelConfig g = tiny_config(grid);
    CHECK(build_model(g).params().count() == parameter_count(g));
  }
  ModelConfig e = tiny_config(GridMode::kEntity);
  e.features.objects = true;
  CHECK(build_model(e).params().count() == parameter_count(e));
}

TEST_CASE("build_model is deterministic and structural") {
  const auto a = build_model(tiny_config());
  const auto b = build_model(tiny_config());
  CHECK(a.params().same_values(b.params()));
  ModelConfig other = tiny_config();
  other.seed = 4;
  CHECK_FALSE(build_model(other).params().same_values(a.params()));
  CHECK(a.params().contains("enc.grid.w"));
  CHECK_FALSE(build_model(tiny_config(GridMode::kNone)).params().contains("enc.grid.w"));
  CHECK(a.params().value("head.b")[0] == 0.0);
  CHECK(a.params().value("ln_f.g")[0] == 1.0);
}

TEST_CASE("forward matches a straight-line recomputation") {
  for (auto grid : {GridMode::kNone, GridMode::kChar}) {
    auto model = build_model(tiny_config(grid));
    scramble(model, 77);
    const auto rec = record_for(model.config(), 2);
    const auto l = assemble_input(model.config(), make_conditioning(model.config(), rec), story({16, 17, 3, 19, 2}));
    const Tensor got = forward_logits(model, l);
    const Mat want = oracle_forward(model, l);
    REQUIRE(got.rows() == want.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i)
      for (std::size_t j = 0; j < want[i].size(); ++j) worst = std::max(worst, std::abs(got(i, j) - want[i][j]));
    CHECK(worst < 1e-12);
    for (std::size_t i = 0; i < got.rows(); ++i) {
      double s = 0.0;
      const Tensor probs = kernels::softmax(Tensor::vector({got.row(i).begin(), got.row(i).end()}));
      for (double p : probs.data()) s += p;
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("causality: future tokens do not affect earlier logits") {
  auto model = build_model(tiny_config());
  scramble(model, 5);
  const auto rec = record_for(model.config(), 3);
  const auto cond = make_conditioning(model.config(), rec);
  const std::vector<TokenId> base = {16, 17, 18, 19, 16, 2};
  const Tensor ref = forward_logits(model, assemble_input(model.config(), cond, base));
  for (std::size_t t = 0; t < base.size(); ++t) {
    auto changed = base;
    changed[t] = changed[t] == 5 ? 6 : 5;
    const Tensor got = forward_logits(model, assemble_input(model.config(), cond, changed));
    // story token t sits at layout row prefix + 1 + t; rows up to prefix + t see only earlier input
    const std::size_t visible = 9 + t;
    for (std::size_t r = 0; r <= visible; ++r)
      for (std::size_t j = 0; j < got.cols(); ++j) CHECK(got(r, j) == ref(r, j));
    bool later_changed = false;
    for (std::size_t j = 0; j < got.cols(); ++j) later_changed |= got(visible + 1, j) != ref(visible + 1, j);
    CHECK(later_changed);
  }
}

TEST_CASE("story loss compositions") {
  auto model = build_model(tiny_config());
  const auto rec = record_for(model.config(), 4);
  const auto l = assemble_input(model.config(), make_conditioning(model.config(), rec), story({16, 18, 2}));
  CHECK(story_loss(model, l) ==
        kernels::cross_entropy_masked(forward_logits(model, l), l.targets, l.loss_mask));
  CHECK(story_loss(model, rec, story({16, 18, 2})) == story_loss(model, l));

  auto uniform = model;
  uniform.params().value("head.w").fill(0.0);
  uniform.params().value("head.b").fill(0.0);
  CHECK(story_loss(uniform, l) == doctest::Approx(std::log(20.0)).epsilon(1e-14));

  auto renamed = rec;
  for (auto& ch : renamed.characters) ch.char_id = "someone else";
  renamed.id = "other";
  CHECK(story_loss(model, renamed, story({16, 18, 2})) == story_loss(model, l));
}

TEST_CASE("story loss gradient passes grad_check") {
  ModelConfig c = tiny_config();
  c.d_model = 4;
  c.d_ff = 8;
  auto model = build_model(c);
  scramble(model, 12, 0.5);
  const auto rec = record_for(c, 6, 5, 2);
  const auto l = assemble_input(c, make_conditioning(c, rec), story({16, 17, 19, 2}));
  auto f = [&](ParamStore& store, bool with_grad) {
    StoryGenModel m(c, store);
    if (!with_grad) return story_loss(m, l);
    const double v = story_loss_backward(m, l);
    for (const auto& [name, g] : m.params().grads()) store.grad(name) = g;
    return v;
  };
  const auto res = grad_check(f, model.params(), 1e-5);
  CHECK(res.checked == model.params().count());
  CHECK(res.max_relative_error < 1e-4);
}

TEST_CASE("grid variants: zero encoder and zero padding") {
  ModelConfig c = tiny_config();
  auto model = build_model(c);
  scramble(model, 9);
  const auto rec = record_for(c, 7, 5, 3);
  const auto tokens = story({16, 17, 18, 2});

  // With the grid encoder zeroed, the loss no longer depends on grid contents.
  auto zeroed = model;
  zeroed.params().value("enc.grid.w").fill(0.0);
  zeroed.params().value("enc.grid.b").fill(0.0);
  auto other = rec;
  for (auto& im : other.images) im.global_feat[0] += 1.0;
  auto l1 = assemble_input(c, make_conditioning(c, rec), tokens);
  auto l2 = l1;
  l2.cond.grid = make_conditioning(c, other).grid;
  CHECK(l1.cond.grid != l2.cond.grid);
  CHECK(story_loss(zeroed, l1) == story_loss(zeroed, l2));
  CHECK(story_loss(model, l1) != story_loss(model, l2));

  // An undersized grid and the same grid padded by hand give identical input.
  const auto grid = compute_grid(rec);
  std::vector<double> manual(c.n_max * c.m_max, 0.0);
  for (std::size_t a = 0; a < grid.images(); ++a)
    for (std::size_t b = 0; b < grid.columns(); ++b) manual[a * c.m_max + b] = grid.values(a, b);
  CHECK(l1.cond.grid == manual);
  auto l3 = l1;
  l3.cond.grid = manual;
  CHECK(story_loss(model, l3) == story_loss(model, l1));

  // Pad cells reach the loss only through their encoder rows.
  auto masked = model;
  auto& w = masked.params().value("enc.grid.w");
  std::vector<std::size_t> pads;
  for (std::size_t i = 0; i < manual.size(); ++i) {
    const std::size_t a = i / c.m_max, b = i % c.m_max;
    if (a >= grid.images() || b >= grid.columns()) {
      pads.push_back(i);
      for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = 0.0;
    }
  }
  auto toggled = l1;
  for (auto i : pads) toggled.cond.grid[i] = 1.0;
  CHECK(story_loss(masked, toggled) == story_loss(masked, l1));
  CHECK(story_loss(model, toggled) != story_loss(model, l1));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  auto model = build_model(tiny_config());
  scramble(model, 31);
  model.params().value("head.b")[0] = -0.0;
  model.params().value("head.b")[1] = 1e-310;
  const std::string bytes = serialize_checkpoint(model);
  CHECK(bytes.rfind("VWPCKPT1", 0) == 0);
  const auto back = deserialize_checkpoint(bytes);
  CHECK(back.config() == model.config());
  CHECK(back.params().same_values(model.params()));
  CHECK(std::signbit(back.params().value("head.b")[0]));
  CHECK(serialize_checkpoint(back) == bytes);

  const auto dir = testing::temp_dir("ckpt");
  save_checkpoint((dir / "m.ckpt").string(), model);
  CHECK(load_checkpoint((dir / "m.ckpt").string()).params().same_values(model.params()));

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), Error);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), Error);
}
