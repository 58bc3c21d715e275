// Acceptance runner: one PASS/FAIL line per criterion. Each criterion is a
// set of doctest cases plus an optional wall-clock limit.
#define DOCTEST_CONFIG_IMPLEMENT
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "acceptance.hpp"
#include "doctest.h"
#include "vwp/log.hpp"

namespace acceptance {

namespace {
std::vector<std::string> g_notes;
doctest::TestRunStats g_stats;
}  // namespace

void note(const std::string& text) { g_notes.push_back(text); }

struct StatsListener : doctest::IReporter {
  explicit StatsListener(const doctest::ContextOptions&) {}
  void report_query(const doctest::QueryData&) override {}
  void test_run_start() override {}
  void test_run_end(const doctest::TestRunStats& s) override { g_stats = s; }
  void test_case_start(const doctest::TestCaseData&) override {}
  void test_case_reenter(const doctest::TestCaseData&) override {}
  void test_case_end(const doctest::CurrentTestCaseStats&) override {}
  void test_case_exception(const doctest::TestCaseException&) override {}
  void subcase_start(const doctest::SubcaseSignature&) override {}
  void subcase_end() override {}
  void log_assert(const doctest::AssertData&) override {}
  void log_message(const doctest::MessageData&) override {}
  void test_case_skipped(const doctest::TestCaseData&) override {}
};

}  // namespace acceptance

DOCTEST_REGISTER_LISTENER("acceptance-stats", 1, acceptance::StatsListener);

namespace {

struct Criterion {
  const char* name;
  std::vector<const char*> cases;
  double time_limit_s;  // 0: none
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"Gradient suite", {"acceptance: gradient suite"}, 30.0},
      {"Grid oracle",
       {"grid equals brute-force dot products", "grid construction examples", "permuting characters permutes columns",
        "scaling an image scales its row"},
       0.0},
      {"Metric oracles",
       {"porter stemmer reference words", "bleu examples", "bleu matches a brute-force oracle", "meteor hand computations",
        "meteor alignment is optimal against exhaustive search", "meteor corpus pools counts", "rouge-l examples and oracle",
        "cider examples and oracle", "self-evaluation invariants on a 20-pair corpus"},
       0.0},
      {"Nucleus sampling law", {"acceptance: nucleus sampling law"}, 0.0},
      {"Learnability", {"acceptance: learnability"}, 15 * 60.0},
      {"Training determinism",
       {"acceptance: training determinism", "checkpoint round-trips bit-exactly", "same seed gives an identical trajectory"},
       0.0},
      {"Entity-grid oracle",
       {"entity grid h=1 matches hand-tallied smoothed counts", "entity grid probabilities sum to one for every context",
        "self-trained entity grid maximises likelihood among h=1 tables"},
       0.0},
      {"Analytics arithmetic",
       {"acceptance: groundedness table reproduction", "jaccard arithmetic", "jaccard similarity averages pairs within sequences",
        "event diversity counts", "predicate n-gram diversity", "groundedness percentages follow from the raw counts",
        "groundedness table from annotations", "corpus statistics by hand count"},
       0.0},
      {"Planner", {"review sample planner", "worker qualification thresholds"}, 0.0},
      {"End-to-end CLI smoke", {"acceptance: cli smoke"}, 5 * 60.0},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  setenv("VWP_LOG", "error", 0);
  vwp::configure_logging();
  const std::string only = argc > 1 ? argv[1] : "";
  int failed = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::string(c.name).find(only) == std::string::npos) continue;
    std::string filter;
    for (const char* name : c.cases) {
      if (!filter.empty()) filter += ',';
      filter += name;
    }
    acceptance::g_notes.clear();
    acceptance::g_stats = {};
    doctest::Context ctx;
    ctx.setOption("test-case", filter.c_str());
    ctx.setOption("minimal", true);
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = ctx.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto& s = acceptance::g_stats;
    const bool all_cases_ran = s.numTestCasesPassingFilters == c.cases.size();
    const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
    const bool pass = rc == 0 && s.numTestCasesFailed == 0 && all_cases_ran && in_time;
    failed += pass ? 0 : 1;

    std::printf("%s %s: %u/%zu cases, %d assertions, %.1f s", pass ? "PASS" : "FAIL", c.name,
                s.numTestCasesPassingFilters - s.numTestCasesFailed, c.cases.size(), s.numAsserts, secs);
    if (c.time_limit_s > 0.0) std::printf(" (limit %.0f s)", c.time_limit_s);
    std::printf("\n");
    if (!all_cases_ran) std::printf("    only %u of %zu cases matched\n", s.numTestCasesPassingFilters, c.cases.size());
    for (const auto& n : acceptance::g_notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
