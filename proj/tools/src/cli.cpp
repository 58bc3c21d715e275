#include "vwp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vwp/analytics.hpp"
#include "vwp/chargrid.hpp"
#include "vwp/checkpoint.hpp"
#include "vwp/corpus.hpp"
#include "vwp/dataset_io.hpp"
#include "vwp/decoding.hpp"
#include "vwp/errors.hpp"
#include "vwp/log.hpp"
#include "vwp/metrics.hpp"
#include "vwp/tokenizer.hpp"
#include "vwp/training.hpp"

namespace vwp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- output

struct Output {
  std::string path;  // empty: stdout
  std::string format = "text";
};

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
  auto key = [&](const std::string& k) { return prefix.empty() ? k : prefix + "." + k; };
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, key(k), rows);
  } else if (j.is_array() && std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); })) {
    std::string joined;
    for (const auto& e : j) {
      if (!joined.empty()) joined += ' ';
      joined += e.is_string() ? e.get<std::string>() : e.dump();
    }
    rows.emplace_back(prefix, joined);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], key(std::to_string(i)), rows);
  } else {
    rows.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string render(const json& j, const std::string& format) {
  if (format == "json") return j.dump(2) + "\n";
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(j, "", rows);
  std::string out;
  if (format == "csv") {
    out = "key,value\n";
    for (const auto& [k, v] : rows) out += csv_field(k) + "," + csv_field(v) + "\n";
    return out;
  }
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  for (const auto& [k, v] : rows) out += k + std::string(width - k.size() + 2, ' ') + v + "\n";
  return out;
}

void emit(const Output& o, const std::string& text, std::ostream& out) {
  if (o.path.empty()) {
    out << text;
    return;
  }
  if (const auto parent = fs::path(o.path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream f(o.path, std::ios::binary);
  if (!f) fail(ErrorKind::kData, "cannot write " + o.path);
  f << text;
}

// ------------------------------------------------------------ data access

IngestLimits permissive_limits() {
  constexpr auto big = std::numeric_limits<std::size_t>::max();
  return {1, big, big, big};
}

struct Prepared {
  DatasetSplits splits;
  Vocabulary vocab;
};

std::string require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) fail(ErrorKind::kData, "missing file " + p.string());
  return p.string();
}

Prepared load_prepared(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::kData, dir + " is not a prepared dataset directory");
  Prepared p;
  const fs::path root(dir);
  p.vocab = Vocabulary::load(require_file(root / "vocab.txt"));
  p.splits.train = read_dataset(require_file(root / "train.jsonl"), permissive_limits());
  p.splits.val = read_dataset(require_file(root / "val.jsonl"), permissive_limits());
  if (fs::exists(root / "test.jsonl")) p.splits.test = read_dataset((root / "test.jsonl").string(), permissive_limits());
  return p;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      fail(ErrorKind::kUsage, "bad seed '" + item + "' in --seeds");
    }
  }
  if (seeds.empty()) fail(ErrorKind::kUsage, "--seeds needs at least one seed");
  return seeds;
}

Tokens split_words(const std::string& s) {
  Tokens out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Tokens reference_tokens(const StoryRecord& story, const Vocabulary& vocab) {
  return story.tokens.empty() ? story_surface_tokens(story) : metric_tokens(story.tokens, vocab);
}

const NamePools& display_names() {
  static const NamePools pools{{"John", "David", "Michael", "Peter", "Paul"},
                               {"Mary", "Emma", "Sarah", "Julia", "Lisa"},
                               {"the park", "the city", "the beach", "the lake", "the market"}};
  return pools;
}

// ---------------------------------------------------------------- prepare

struct PrepareOpts {
  std::string dataset, names, out_dir;
  std::uint64_t seed = 0;
  std::optional<std::size_t> val, test;
  std::size_t min_freq = 1;
  IngestLimits limits;
  Output output;
};

void cmd_prepare(const PrepareOpts& o, std::ostream& out) {
  const auto records = read_dataset(o.dataset, o.limits);
  const GenderTable table = o.names.empty() ? GenderTable{} : read_gender_table(o.names);
  const auto anon = anonymize_dataset(records, table);
  const std::size_t n = anon.size();
  const std::size_t tenth = std::max<std::size_t>(1, n / 10);
  DatasetSplits splits = split_dataset(anon, o.seed, o.val.value_or(tenth), o.test.value_or(tenth));

  std::vector<std::vector<std::string>> texts;
  for (const auto& r : splits.train) {
    for (const auto& s : r.stories) texts.push_back(story_surface_tokens(s));
  }
  const Vocabulary vocab = Vocabulary::build(texts, o.min_freq);
  encode_stories(splits.train, vocab);
  encode_stories(splits.val, vocab);
  encode_stories(splits.test, vocab);

  fs::create_directories(o.out_dir);
  const fs::path root(o.out_dir);
  write_dataset((root / "train.jsonl").string(), splits.train);
  write_dataset((root / "val.jsonl").string(), splits.val);
  write_dataset((root / "test.jsonl").string(), splits.test);
  vocab.save((root / "vocab.txt").string());

  auto story_count = [](const std::vector<ImageSequenceRecord>& rs) {
    std::size_t k = 0;
    for (const auto& r : rs) k += r.stories.size();
    return k;
  };
  json result = {{"directory", o.out_dir},
                 {"seed", o.seed},
                 {"sequences", {{"train", splits.train.size()}, {"val", splits.val.size()}, {"test", splits.test.size()}}},
                 {"stories", {{"train", story_count(splits.train)}, {"val", story_count(splits.val)}, {"test", story_count(splits.test)}}},
                 {"vocab_size", vocab.size()}};
  emit(o.output, render(result, o.output.format), out);
}

// ------------------------------------------------------------------- grid

struct GridOpts {
  std::string dataset, sequence, mode = "char";
  Output output;
};

void cmd_grid(const GridOpts& o, std::ostream& out) {
  const auto records = read_dataset(o.dataset, permissive_limits());
  const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == o.sequence; });
  if (it == records.end()) fail(ErrorKind::kData, "sequence '" + o.sequence + "' not found in " + o.dataset);
  CharacterGrid g;
  switch (parse_grid_mode(o.mode)) {
    case GridMode::kNone: fail(ErrorKind::kUsage, "grid needs --grid-mode char, obj or entity");
    case GridMode::kChar: g = compute_grid(*it); break;
    case GridMode::kObj: g = compute_object_grid(*it); break;
    case GridMode::kEntity: g = compute_entity_grid(*it); break;
  }
  const GridReport report = grid_report(g);
  if (o.output.format == "csv") return emit(o.output, report.csv, out);
  if (o.output.format == "text") return emit(o.output, report.table, out);
  json values = json::array();
  for (std::size_t a = 0; a < g.images(); ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < g.columns(); ++b) row.push_back(g.values(a, b));
    values.push_back(row);
  }
  json result = {{"sequence_id", o.sequence},
                 {"grid_mode", o.mode},
                 {"image_ids", g.image_ids},
                 {"column_ids", g.column_ids},
                 {"values", values}};
  emit(o.output, result.dump(2) + "\n", out);
}

// ------------------------------------------------------------------ train

struct TrainOpts {
  std::string dataset, out_dir, seeds = "1,2,3", grid_mode = "char", features, system;
  std::size_t epochs = 15, batch_size = 8, d_model = 128, layers = 2, heads = 4, d_ff = 512;
  double dropout = 0.1, lr = 1e-3, p = 0.1;
  std::uint64_t val_seed = 1234;
  Output output;
};

std::string default_features(GridMode mode) {
  switch (mode) {
    case GridMode::kNone: return "global";
    case GridMode::kChar: return "global,char";
    case GridMode::kObj: return "global,obj";
    case GridMode::kEntity: return "global,char,obj";
  }
  return "global";
}

ModelConfig model_config_for(const TrainOpts& o, const Prepared& p) {
  ModelConfig mc;
  mc.d_model = o.d_model;
  mc.n_layers = o.layers;
  mc.n_heads = o.heads;
  mc.d_ff = o.d_ff;
  mc.dropout = o.dropout;
  mc.vocab_size = p.vocab.size();
  mc.grid_mode = parse_grid_mode(o.grid_mode);
  mc.features = parse_feature_set(o.features.empty() ? default_features(mc.grid_mode) : o.features);
  mc.n_max = mc.m_max = mc.obj_max = 1;
  mc.max_text = 1;
  for (const auto* split : {&p.splits.train, &p.splits.val, &p.splits.test}) {
    for (const auto& r : *split) {
      if (mc.feature_dim == 0) mc.feature_dim = r.feature_dim();
      mc.n_max = std::max(mc.n_max, r.images.size());
      mc.m_max = std::max(mc.m_max, r.characters.size());
      mc.obj_max = std::max(mc.obj_max, r.objects.size());
      for (const auto& s : r.stories) mc.max_text = std::max(mc.max_text, s.tokens.size());
    }
  }
  return mc;
}

void cmd_train(const TrainOpts& o, std::ostream& out) {
  const Prepared p = load_prepared(o.dataset);
  const ModelConfig mc = model_config_for(o, p);
  mc.validate();
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.adam.lr = o.lr;
  tc.seeds = parse_seed_list(o.seeds);
  tc.validation = {DecodingMode::kNucleus, o.p, mc.max_text, o.val_seed};
  tc.test = {DecodingMode::kGreedy, o.p, mc.max_text, 0};
  tc.checkpoint_dir = o.out_dir;
  const std::string system = o.system.empty() ? o.grid_mode : o.system;
  const FitResult result = fit(tc, p.splits, mc, p.vocab, system);
  p.vocab.save((fs::path(o.out_dir) / "vocab.txt").string());
  const std::string report = report_json(result.aggregate);
  {
    std::ofstream f(fs::path(o.out_dir) / "report.json");
    f << report << "\n";
  }
  if (o.output.format == "json") return emit(o.output, report + "\n", out);
  std::string text = report_table(result.aggregate);
  for (const auto& run : result.runs) {
    text += "seed " + std::to_string(run.seed) + ": best epoch " + std::to_string(run.best_epoch) + ", checkpoint " +
            run.best_checkpoint + "\n";
  }
  emit(o.output, text, out);
}

// --------------------------------------------------------------- generate

struct GenerateOpts {
  std::string checkpoint, dataset, split = "test", vocab, decoding = "greedy";
  double p = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 200;
  Output output;
};

void cmd_generate(const GenerateOpts& o, std::ostream& out) {
  const StoryGenModel model = load_checkpoint(o.checkpoint);
  std::vector<ImageSequenceRecord> records;
  std::string vocab_path = o.vocab;
  if (fs::is_directory(o.dataset)) {
    records = read_dataset(require_file(fs::path(o.dataset) / (o.split + ".jsonl")), permissive_limits());
    if (vocab_path.empty()) vocab_path = (fs::path(o.dataset) / "vocab.txt").string();
  } else {
    records = read_dataset(o.dataset, permissive_limits());
    if (vocab_path.empty()) vocab_path = (fs::path(o.checkpoint).parent_path() / "vocab.txt").string();
  }
  const Vocabulary vocab = Vocabulary::load(require_file(vocab_path));
  if (vocab.size() != model.config().vocab_size) {
    fail(ErrorKind::kData, vocab_path + " has " + std::to_string(vocab.size()) + " tokens, checkpoint expects " +
                               std::to_string(model.config().vocab_size));
  }
  DecodingConfig base;
  base.mode = parse_decoding_mode(o.decoding);
  base.p = o.p;
  base.max_new_tokens = o.max_new_tokens;
  base.validate();

  std::string lines;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    DecodingConfig dc = base;
    dc.seed = Rng::mix(o.seed, i);
    std::vector<TokenId> ids;
    try {
      ids = generate(model, make_conditioning(model.config(), r), dc);
    } catch (const Error& e) {
      throw Error(e.kind(), "sequence '" + r.id + "': " + e.what());
    }
    const Tokens tokens = metric_tokens(ids, vocab);
    Rng names(dc.seed);
    json refs = json::array();
    for (const auto& s : r.stories) refs.push_back(reference_tokens(s, vocab));
    json line = {{"sequence_id", r.id},
                 {"seed", o.seed},
                 {"decoding", o.decoding},
                 {"tokens", tokens},
                 {"text", realize(tokens, display_names(), names)},
                 {"references", refs}};
    lines += line.dump() + "\n";
  }
  emit(o.output, lines, out);
}

// --------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::vector<std::string> inputs;
  std::string reference_system, metrics;
  Output output;
};

Tokens json_tokens(const json& j, const std::string& what) {
  if (j.is_string()) return split_words(j.get<std::string>());
  if (!j.is_array()) fail(ErrorKind::kData, what + " must be a string or a list of tokens");
  Tokens t;
  for (const auto& e : j) {
    if (!e.is_string()) fail(ErrorKind::kData, what + " must hold strings");
    t.push_back(e.get<std::string>());
  }
  return t;
}

std::vector<EvalPair> read_eval_pairs(const std::string& path) {
  std::vector<EvalPair> pairs;
  for_each_line(path, [&](std::string_view text, std::size_t number) {
    const std::string where = path + ":" + std::to_string(number);
    try {
      const json j = json::parse(text);
      if (!j.is_object()) fail(ErrorKind::kData, "expected a JSON object");
      if (!j.contains("id") && !j.contains("sequence_id")) fail(ErrorKind::kData, "missing id");
      EvalPair p;
      p.hypothesis = json_tokens(j.contains("hypothesis") ? j.at("hypothesis") : j.at("tokens"), "hypothesis");
      const json& refs = j.at("references");
      if (!refs.is_array() || refs.empty()) fail(ErrorKind::kData, "references must be a non-empty list");
      for (const auto& r : refs) p.references.push_back(json_tokens(r, "reference"));
      pairs.push_back(std::move(p));
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kData, where + ": " + e.what());
    }
  });
  if (pairs.empty()) fail(ErrorKind::kData, path + " holds no evaluation pairs");
  return pairs;
}

void cmd_evaluate(const EvaluateOpts& o, std::ostream& out) {
  static const std::vector<std::string> kKnown = {"B-1", "B-2", "B-3", "B-4", "M", "R-L", "C"};
  std::vector<std::string> wanted;
  for (const auto& m : split_words([&] {
         std::string s = o.metrics;
         std::replace(s.begin(), s.end(), ',', ' ');
         return s;
       }())) {
    if (std::find(kKnown.begin(), kKnown.end(), m) == kKnown.end()) {
      fail(ErrorKind::kUsage, "unknown metric '" + m + "' (B-1 B-2 B-3 B-4 M R-L C)");
    }
    wanted.push_back(m);
  }

  std::map<std::string, std::vector<std::map<std::string, double>>> runs;
  std::string first_system;
  for (const auto& spec : o.inputs) {
    std::string system = "model", path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos && spec.substr(0, eq).find('/') == std::string::npos) {
      system = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    if (first_system.empty()) first_system = system;
    auto scores = evaluate_all(read_eval_pairs(path));
    if (!wanted.empty()) {
      std::erase_if(scores, [&](const auto& kv) {
        return std::find(wanted.begin(), wanted.end(), kv.first) == wanted.end();
      });
    }
    runs[system].push_back(std::move(scores));
  }
  const std::string reference = o.reference_system.empty() ? first_system : o.reference_system;
  if (!runs.count(reference)) fail(ErrorKind::kUsage, "reference system '" + reference + "' has no inputs");
  const MetricReport report = aggregate_runs(runs, reference);
  if (o.output.format == "json") return emit(o.output, report_json(report) + "\n", out);
  if (o.output.format == "text") return emit(o.output, report_table(report), out);
  std::string csv = "system,metric,mean,std,runs,band\n";
  for (const auto& [system, metrics] : report.systems) {
    for (const auto& [metric, s] : metrics) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%zu,%s\n", system.c_str(), metric.c_str(), s.mean * kReportScale,
                    s.std * kReportScale, s.runs, s.band.c_str());
      csv += buf;
    }
  }
  emit(o.output, csv, out);
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOpts {
  std::string kind, input, train_input, dataset;
  std::size_t history = 2;
  double alpha = 0.1;
  std::size_t top_k = 5;
  Output output;
};

std::vector<SrlStory> analysis_stories(const AnalyzeOpts& o) {
  if (!o.input.empty()) {
    std::vector<SrlStory> out;
    for (auto& a : read_annotated(o.input)) out.push_back(std::move(a.srl));
    return out;
  }
  if (!o.dataset.empty()) return srl_stories(read_dataset(o.dataset, permissive_limits()));
  fail(ErrorKind::kUsage, "analyze " + o.kind + " needs --input or --dataset");
}

std::vector<AnnotatedStory> need_annotated(const AnalyzeOpts& o) {
  if (o.input.empty()) fail(ErrorKind::kUsage, "analyze " + o.kind + " needs --input (annotated JSON Lines)");
  return read_annotated(o.input);
}

json analyze_coherence(const AnalyzeOpts& o) {
  auto grids_of = [](const std::vector<AnnotatedStory>& stories) {
    std::vector<EntityRoleGrid> grids;
    for (const auto& s : stories) {
      if (s.entity_grid) grids.push_back(*s.entity_grid);
    }
    return grids;
  };
  const auto scored = grids_of(need_annotated(o));
  if (scored.empty()) fail(ErrorKind::kData, o.input + " has no entity grids");
  const auto training = o.train_input.empty() ? scored : grids_of(read_annotated(o.train_input));
  if (training.empty()) fail(ErrorKind::kData, o.train_input + " has no entity grids");
  const EntityGridModel model = train_entity_grid(training, o.history, o.alpha);
  double ll = 0.0, avg = 0.0;
  for (const auto& g : scored) {
    const auto s = score_coherence(model, g);
    ll += s.ll;
    avg += s.avg_ll;
  }
  const double n = static_cast<double>(scored.size());
  return {{"alpha", o.alpha}, {"history", o.history}, {"stories", scored.size()}, {"ll", ll / n}, {"avg_ll", avg / n}};
}

json analyze_groundedness(const AnalyzeOpts& o) {
  std::vector<GroundednessAnnotation> anns;
  for (const auto& s : need_annotated(o)) anns.insert(anns.end(), s.groundedness.begin(), s.groundedness.end());
  json result = json::object();
  for (const auto& [kind, row] : groundedness_table(anns)) {
    json counts, percent;
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string label = to_string(static_cast<GroundLabel>(i));
      counts[label] = row.counts[i];
      percent[label] = row.percent[i];
    }
    result[kind] = {{"counts", counts}, {"percent", percent}, {"total", row.total()}};
  }
  return result;
}

void cmd_analyze(const AnalyzeOpts& o, std::ostream& out) {
  json result;
  if (o.kind == "coherence") {
    result = analyze_coherence(o);
  } else if (o.kind == "jaccard") {
    const auto r = jaccard_similarity(analysis_stories(o));
    result = {{"by_role", r.by_role}, {"sequences", r.sequences}, {"skipped", r.skipped}};
  } else if (o.kind == "diversity") {
    const auto stories = analysis_stories(o);
    const auto d = event_diversity(stories, o.top_k);
    const auto ng = predicate_ngram_diversity(stories, 3);
    result = {{"vocab", d.vocab},
              {"unique_verbs", d.unique_verbs},
              {"tokens", d.tokens},
              {"verb_occurrences", d.verb_occurrences},
              {"verb_vocab_pct", d.verb_vocab_pct},
              {"verb_token_pct", d.verb_token_pct},
              {"diverse_verb_pct", d.diverse_verb_pct},
              {"top_verbs", d.top_verbs},
              {"predicate_ngram_ratio", {{"unigram", ng[0]}, {"bigram", ng[1]}, {"trigram", ng[2]}}}};
  } else if (o.kind == "groundedness") {
    result = analyze_groundedness(o);
  } else {
    if (o.dataset.empty()) fail(ErrorKind::kUsage, "analyze stats needs --dataset");
    const auto s = corpus_stats(read_dataset(o.dataset, permissive_limits()));
    result = {{"texts", s.texts},
              {"images_per_text", {s.images_min, s.images_max}},
              {"tokens_per_text", s.tokens_per_text},
              {"events_per_text", s.events_per_text},
              {"characters_per_text", s.characters_per_text}};
  }
  emit(o.output, render(result, o.output.format), out);
}

// ------------------------------------------------------------------- plan

struct PlanOpts {
  std::string workers;
  std::vector<std::size_t> stories;
  Output output;
};

std::vector<WorkerStats> read_workers(const std::string& path) {
  std::vector<WorkerStats> out;
  bool header = true;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    const std::string where = path + ":" + std::to_string(number);
    std::vector<std::string> cells;
    std::stringstream ss{std::string(line)};
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (header) {
      header = false;
      if (cells != std::vector<std::string>{"worker_id", "acceptance_rate", "quality", "accepted", "stories_written"}) {
        fail(ErrorKind::kData, where + ": expected header worker_id,acceptance_rate,quality,accepted,stories_written");
      }
      return;
    }
    if (cells.size() != 5) fail(ErrorKind::kData, where + ": expected 5 fields");
    try {
      WorkerStats w{cells[0], std::stod(cells[1]), std::stod(cells[2]), std::stoul(cells[3]), std::stoul(cells[4])};
      if (w.acceptance_rate < 0.0 || w.acceptance_rate > 1.0 || w.quality < 1.0 || w.quality > 5.0) {
        fail(ErrorKind::kData, where + ": acceptance rate must lie in [0,1] and quality in [1,5]");
      }
      out.push_back(w);
    } catch (const std::logic_error&) {
      fail(ErrorKind::kData, where + ": malformed number");
    }
  });
  return out;
}

void cmd_plan(const PlanOpts& o, std::ostream& out) {
  if (o.workers.empty() && o.stories.empty()) fail(ErrorKind::kUsage, "plan needs --workers or --stories");
  json result = json::object();
  if (!o.workers.empty()) {
    json rows = json::array();
    for (const auto& w : read_workers(o.workers)) {
      const ReviewPlan plan = plan_review_sample(w.stories_written);
      rows.push_back({{"worker_id", w.worker_id},
                      {"qualified", qualify(w)},
                      {"stories_written", w.stories_written},
                      {"review_formula", plan.formula},
                      {"review", plan.count}});
    }
    result["workers"] = rows;
  }
  if (!o.stories.empty()) {
    json rows = json::array();
    for (std::size_t n : o.stories) {
      const ReviewPlan plan = plan_review_sample(n);
      rows.push_back({{"stories_written", n}, {"review_formula", plan.formula}, {"review", plan.count}});
    }
    result["samples"] = rows;
  }
  emit(o.output, render(result, o.output.format), out);
}

// ------------------------------------------------------------ option glue

void add_output(CLI::App* cmd, Output& o, std::vector<std::string> formats) {
  cmd->add_option("--out", o.path, "Output file (default: stdout)");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember(std::move(formats)));
}

std::vector<std::string> with_config(const std::vector<std::string>& args) {
  std::vector<std::string> user, injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) fail(ErrorKind::kUsage, "--config needs a file");
      injected = config_file_args(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      injected = config_file_args(args[i].substr(9));
    } else {
      user.push_back(args[i]);
    }
  }
  if (injected.empty() || user.empty()) return user;
  // config values sit right after the subcommand so command-line flags win
  std::vector<std::string> merged = {user.front()};
  merged.insert(merged.end(), injected.begin(), injected.end());
  merged.insert(merged.end(), user.begin() + 1, user.end());
  return merged;
}

}  // namespace

std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kUsage, "cannot read config file " + path);
  std::vector<std::string> args;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorKind::kUsage, path + ":" + std::to_string(number) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    args.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Character-grid visual story generation: data preparation, training, decoding, evaluation and corpus analytics.",
               "vwp"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);
  app.footer("Every subcommand also accepts --config <file> with key=value lines; flags on the command line win.\n"
             "Exit codes: 0 ok, 1 usage or configuration, 2 data, 3 numeric or training failure.");

  PrepareOpts prep;
  auto* c_prep = app.add_subcommand("prepare", "Ingest, anonymise, split and tokenise a raw dataset");
  c_prep->add_option("--dataset", prep.dataset, "Raw dataset (JSON Lines)")->required();
  c_prep->add_option("--names", prep.names, "Name gender statistics CSV");
  c_prep->add_option("--out", prep.out_dir, "Output directory")->required();
  c_prep->add_option("--seed", prep.seed, "Split seed");
  c_prep->add_option("--val-count", prep.val, "Validation sequences (default 10%)");
  c_prep->add_option("--test-count", prep.test, "Test sequences (default 10%)");
  c_prep->add_option("--min-freq", prep.min_freq, "Minimum training frequency for the vocabulary");
  c_prep->add_option("--min-images", prep.limits.min_images, "Fewest images per sequence");
  c_prep->add_option("--max-images", prep.limits.max_images, "Most images per sequence");
  c_prep->add_option("--format", prep.output.format)->check(CLI::IsMember({"text", "json", "csv"}));

  GridOpts grid;
  auto* c_grid = app.add_subcommand("grid", "Print the character grid of one sequence");
  c_grid->add_option("--dataset", grid.dataset, "Dataset (JSON Lines)")->required();
  c_grid->add_option("--sequence", grid.sequence, "Sequence id")->required();
  c_grid->add_option("--grid-mode", grid.mode, "char, obj or entity")->check(CLI::IsMember({"char", "obj", "entity"}));
  add_output(c_grid, grid.output, {"text", "json", "csv"});

  TrainOpts train;
  auto* c_train = app.add_subcommand("train", "Train one model per seed with validation-METEOR selection");
  c_train->add_option("--dataset", train.dataset, "Prepared dataset directory")->required();
  c_train->add_option("--out", train.out_dir, "Checkpoint and log directory")->required();
  c_train->add_option("--seeds", train.seeds, "Comma-separated seeds");
  c_train->add_option("--epochs", train.epochs, "Epochs per seed");
  c_train->add_option("--grid-mode", train.grid_mode)->check(CLI::IsMember({"none", "char", "obj", "entity"}));
  c_train->add_option("--features", train.features, "Comma list of global, char, obj");
  c_train->add_option("--system", train.system, "System name in reports (default: grid mode)");
  c_train->add_option("--batch-size", train.batch_size);
  c_train->add_option("--d-model", train.d_model);
  c_train->add_option("--layers", train.layers);
  c_train->add_option("--heads", train.heads);
  c_train->add_option("--d-ff", train.d_ff);
  c_train->add_option("--dropout", train.dropout);
  c_train->add_option("--lr", train.lr);
  c_train->add_option("--p", train.p, "Nucleus mass for validation decoding");
  c_train->add_option("--val-seed", train.val_seed, "Seed of validation decoding");
  c_train->add_option("--format", train.output.format)->check(CLI::IsMember({"text", "json"}));

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate", "Decode stories with a trained checkpoint");
  c_gen->add_option("--checkpoint", gen.checkpoint)->required();
  c_gen->add_option("--dataset", gen.dataset, "Prepared directory or dataset file")->required();
  c_gen->add_option("--split", gen.split, "Split of a prepared directory")->check(CLI::IsMember({"train", "val", "test"}));
  c_gen->add_option("--vocab", gen.vocab, "Vocabulary file");
  c_gen->add_option("--decoding", gen.decoding)->check(CLI::IsMember({"greedy", "nucleus"}));
  c_gen->add_option("--p", gen.p, "Nucleus mass");
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--max-new-tokens", gen.max_new_tokens);
  c_gen->add_option("--out", gen.output.path, "Output JSON Lines (default: stdout)");

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score hypotheses against references");
  c_ev->add_option("--input", ev.inputs, "[system=]file.jsonl, one file per seed run")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  c_ev->add_option("--reference-system", ev.reference_system, "System whose spread defines the bands");
  c_ev->add_option("--metrics", ev.metrics, "Comma list of B-1 B-2 B-3 B-4 M R-L C");
  add_output(c_ev, ev.output, {"text", "json", "csv"});

  AnalyzeOpts an;
  auto* c_an = app.add_subcommand("analyze", "Corpus analytics");
  c_an->add_option("kind", an.kind)
      ->required()
      ->check(CLI::IsMember({"coherence", "jaccard", "diversity", "groundedness", "stats"}));
  c_an->add_option("--input", an.input, "Annotated stories (JSON Lines)");
  c_an->add_option("--train-input", an.train_input, "Annotated stories to train the entity grid on");
  c_an->add_option("--dataset", an.dataset, "Dataset (JSON Lines)");
  c_an->add_option("--history", an.history, "Entity grid history length");
  c_an->add_option("--alpha", an.alpha, "Entity grid smoothing");
  c_an->add_option("--top-k", an.top_k, "Frequent verbs excluded from the diverse share");
  add_output(c_an, an.output, {"text", "json", "csv"});

  PlanOpts plan;
  auto* c_plan = app.add_subcommand("plan", "Review sample sizes and worker qualification");
  c_plan->add_option("--workers", plan.workers, "CSV worker_id,acceptance_rate,quality,accepted,stories_written");
  c_plan->add_option("--stories", plan.stories, "Stories written by a worker")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  add_output(c_plan, plan.output, {"text", "json", "csv"});

  try {
    if (raw_args.empty()) {
      err << app.help();
      return 1;
    }
    std::vector<std::string> args = with_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : 1;
    }
    if (c_prep->parsed()) cmd_prepare(prep, out);
    if (c_grid->parsed()) cmd_grid(grid, out);
    if (c_train->parsed()) cmd_train(train, out);
    if (c_gen->parsed()) cmd_generate(gen, out);
    if (c_ev->parsed()) cmd_evaluate(ev, out);
    if (c_an->parsed()) cmd_analyze(an, out);
    if (c_plan->parsed()) cmd_plan(plan, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace vwp
