// Regenerates the bundled fixture files: make_fixtures <output-dir>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "vwp/analytics.hpp"
#include "vwp/dataset_io.hpp"
#include "vwp/synthetic.hpp"
#include "vwp/tokenizer.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 1;
  }
  namespace fs = std::filesystem;
  const fs::path dir(argv[1]);
  fs::create_directories(dir);

  const auto dataset = vwp::make_fixture_dataset({});
  vwp::write_dataset((dir / "fixtures.jsonl").string(), dataset);
  std::ofstream(dir / "names.csv") << vwp::fixture_gender_csv();

  std::ofstream annotated(dir / "annotated.jsonl");
  for (const auto& line : vwp::make_annotated_fixture(dataset, 5)) annotated << line << "\n";

  // first story as hypothesis, every story as reference: an identity pair per sequence
  vwp::FixtureConfig small;
  small.sequences = 20;
  small.seed = 23;
  std::ofstream eval(dir / "eval_identity.jsonl");
  for (const auto& r : vwp::make_fixture_dataset(small)) {
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& s : r.stories) refs.push_back(vwp::detokenize(vwp::story_surface_tokens(s)));
    eval << nlohmann::json{{"id", r.id}, {"hypothesis", refs[0]}, {"references", refs}}.dump() << "\n";
  }

  std::ofstream(dir / "workers.csv") << "worker_id,acceptance_rate,quality,accepted,stories_written\n"
                                        "w1,0.95,3.5,6,5\n"
                                        "w2,0.90,3.1,5,10\n"
                                        "w3,0.89,5.0,100,1000\n"
                                        "w4,0.97,4.2,12,48\n";
  return 0;
}
