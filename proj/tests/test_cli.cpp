// Spawns the built CLI and checks the exit-code contract and file outputs.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "debiaspi/metrics.hpp"
#include "debiaspi/serialization.hpp"
#include "testing_support.hpp"

using namespace debiaspi;
namespace ts = testing_support;

namespace {

int run_cli(const std::string& args, const std::filesystem::path& stdout_path = {}) {
  std::string command = std::string(DEBIASPI_CLI_PATH) + " " + args;
  command += stdout_path.empty() ? " > /dev/null 2>&1"
                                 : " > " + stdout_path.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

void write_corpus(const std::filesystem::path& path, int lines) {
  std::ofstream out(path);
  for (int i = 0; i < lines; ++i) out << "headline " << i << '\n';
}

std::string gender_config(const std::string& headlines, int total, int seed,
                          const std::string& out_dir,
                          const std::string& generator =
                              R"({"type": "mock", "preset": "gender-biased"})") {
  std::ostringstream json;
  json << R"({
    "schema": {"name": "gender", "kind": "nominal", "labels": ["male", "female"]},
    "target": {"weights": [0.5, 0.5]},
    "total": )"
       << total << R"(,
    "generator": )"
       << generator << R"(,
    "seed": )"
       << seed << R"(,
    "headlines": ")"
       << headlines << R"(",
    "out_dir": ")"
       << out_dir << R"("
  })";
  return json.str();
}

}  // namespace

TEST_CASE("cli run: converged gender run exits 0 with a 50/50 histogram") {
  ts::ScratchDir dir("cli-run");
  write_corpus(dir.file("headlines.txt"), 100);
  ts::write_text(dir.file("exp.json"),
                 gender_config(dir.file("headlines.txt").string(), 100, 21,
                               (dir.path() / "out").string()));

  CHECK(run_cli("run --config " + dir.file("exp.json").string()) == 0);
  const auto rows = load_label_counts(dir.path() / "out" / "final_histogram.csv");
  CHECK(rows[0] == std::pair<std::string, std::int64_t>{"male", 50});
  CHECK(rows[1] == std::pair<std::string, std::int64_t>{"female", 50});
}

TEST_CASE("cli run: config errors exit 2") {
  ts::ScratchDir dir("cli-badconfig");
  CHECK(run_cli("run --config " + dir.file("missing.json").string()) == 2);

  ts::write_text(dir.file("broken.json"), "{ not json");
  CHECK(run_cli("run --config " + dir.file("broken.json").string()) == 2);

  CHECK(run_cli("definitely-not-a-subcommand") == 2);
}

TEST_CASE("cli run: exhausted fixture exits 4 and leaves a partial trace") {
  ts::ScratchDir dir("cli-fixture");
  write_corpus(dir.file("headlines.txt"), 4);
  save_fixture(dir.file("responses.jsonl"), {{"male", "img-1"}});
  ts::write_text(
      dir.file("exp.json"),
      gender_config(dir.file("headlines.txt").string(), 2, 1, (dir.path() / "out").string(),
                    R"({"type": "fixture", "path": "responses.jsonl"})"));

  CHECK(run_cli("run --config " + dir.file("exp.json").string()) == 4);
  const auto trace = load_trace(dir.path() / "out" / "trace.jsonl");
  CHECK(!trace.records.empty());  // the failed attempt is on disk
}

TEST_CASE("cli run: an impossible target exits 3") {
  ts::ScratchDir dir("cli-noconverge");
  write_corpus(dir.file("headlines.txt"), 4);
  // The backend never complies and only ever claims male; target wants female.
  ts::write_text(dir.file("exp.json"), R"({
    "schema": {"name": "gender", "kind": "nominal", "labels": ["male", "female"]},
    "target": {"counts": [0, 4]},
    "total": 4,
    "generator": {"type": "mock", "weights": [1.0, 0.0], "compliance": 0.0},
    "max_retries": 1,
    "seed": 9,
    "headlines": ")" +
                                           dir.file("headlines.txt").string() + R"(",
    "out_dir": ")" +
                                           (dir.path() / "out").string() + R"("
  })");
  CHECK(run_cli("run --config " + dir.file("exp.json").string()) == 3);
}

TEST_CASE("cli run: table-style uniform race run reports the quantized multiset") {
  ts::ScratchDir dir("cli-race");
  write_corpus(dir.file("headlines.txt"), 50);
  std::ostringstream config;
  config << R"({
    "schema_file": ")"
         << DEBIASPI_DATA_DIR << R"(/codebooks/race.json",
    "target": {"weights": [0.111111111, 0.111111111, 0.111111111, 0.111111111, 0.111111111,
                            0.111111111, 0.111111111, 0.111111111, 0.111111112]},
    "total": 50,
    "generator": {"type": "mock", "preset": "race-white-heavy"},
    "seed": 13,
    "headlines": ")"
         << dir.file("headlines.txt").string() << R"(",
    "out_dir": ")"
         << (dir.path() / "out").string() << R"("
  })";
  ts::write_text(dir.file("exp.json"), config.str());

  CHECK(run_cli("run --config " + dir.file("exp.json").string()) == 0);
  const auto rows = load_label_counts(dir.path() / "out" / "final_histogram.csv");
  std::multiset<std::int64_t> counts;
  for (const auto& [label, count] : rows) counts.insert(count);
  CHECK(counts == std::multiset<std::int64_t>{6, 6, 6, 6, 6, 5, 5, 5, 5});
}

TEST_CASE("cli determinism: same config and seed gives byte-identical traces") {
  ts::ScratchDir dir("cli-determinism");
  write_corpus(dir.file("headlines.txt"), 40);
  ts::write_text(dir.file("exp.json"),
                 gender_config(dir.file("headlines.txt").string(), 40, 77, "ignored"));

  const auto out_a = (dir.path() / "a").string();
  const auto out_b = (dir.path() / "b").string();
  CHECK(run_cli("run --config " + dir.file("exp.json").string() + " --out-dir " + out_a) == 0);
  CHECK(run_cli("run --config " + dir.file("exp.json").string() + " --out-dir " + out_b) == 0);
  CHECK(ts::read_text(dir.path() / "a" / "trace.jsonl") ==
        ts::read_text(dir.path() / "b" / "trace.jsonl"));

  // A different seed changes the journal.
  const auto out_c = (dir.path() / "c").string();
  CHECK(run_cli("run --config " + dir.file("exp.json").string() + " --out-dir " + out_c +
                " --seed 78") == 0);
  CHECK(ts::read_text(dir.path() / "a" / "trace.jsonl") !=
        ts::read_text(dir.path() / "c" / "trace.jsonl"));
}

TEST_CASE("cli ablate: biased mock misses the uniform target") {
  ts::ScratchDir dir("cli-ablate");
  write_corpus(dir.file("headlines.txt"), 200);
  ts::write_text(dir.file("exp.json"),
                 gender_config(dir.file("headlines.txt").string(), 200, 31,
                               (dir.path() / "out").string()));

  CHECK(run_cli("ablate --config " + dir.file("exp.json").string()) == 3);
  const auto report = load_report(dir.path() / "out" / "report.json");
  CHECK(!report.converged);
  CHECK(report.final_histogram.counts[0] > 150);  // male-dominated
  CHECK(report.js_div > 0.0);
}

TEST_CASE("cli metrics: identical files score zero, disjoint files score one") {
  ts::ScratchDir dir("cli-metrics");
  ts::write_text(dir.file("a.csv"), "x,10\ny,30\n");
  ts::write_text(dir.file("b.csv"), "x,10\ny,30\n");

  const auto out = dir.file("metrics.json");
  CHECK(run_cli("metrics " + dir.file("a.csv").string() + " " + dir.file("b.csv").string(),
                out) == 0);
  const auto zeros = Json::parse(ts::read_text(out));
  CHECK(zeros["js_div"].get<double>() == 0.0);
  CHECK(zeros["emd"].get<double>() == 0.0);
  CHECK(zeros["tv"].get<double>() == 0.0);

  ts::write_text(dir.file("c.csv"), "x,5\ny,0\n");
  ts::write_text(dir.file("d.csv"), "x,0\ny,5\n");
  CHECK(run_cli("metrics " + dir.file("c.csv").string() + " " + dir.file("d.csv").string(),
                out) == 0);
  const auto ones = Json::parse(ts::read_text(out));
  CHECK(ones["js_div"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ones["tv"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));

  // Disagreeing label sets are a config error.
  ts::write_text(dir.file("e.csv"), "x,5\nz,5\n");
  CHECK(run_cli("metrics " + dir.file("a.csv").string() + " " + dir.file("e.csv").string()) ==
        2);
}

TEST_CASE("cli metrics: a random pair matches direct library calls") {
  ts::ScratchDir dir("cli-metrics-random");
  RandomStream rng(90210);
  const auto schema = ts::numbered_schema("s", 5);
  auto h1 = Histogram::zeros(schema);
  auto h2 = Histogram::zeros(schema);
  for (std::size_t i = 0; i < 5; ++i) {
    h1.add(i, 1 + static_cast<std::int64_t>(rng.below(40)));
    h2.add(i, 1 + static_cast<std::int64_t>(rng.below(40)));
  }
  save_histogram_csv(dir.file("a.csv"), h1);
  save_histogram_csv(dir.file("b.csv"), h2);

  const auto out = dir.file("metrics.json");
  CHECK(run_cli("metrics " + dir.file("a.csv").string() + " " + dir.file("b.csv").string() +
                    " --distance linear",
                out) == 0);
  const auto printed = Json::parse(ts::read_text(out));

  const auto p = ProbDist::from_histogram(h1);
  const auto q = ProbDist::from_histogram(h2);
  CHECK(printed["js_div"].get<double>() ==
        doctest::Approx(js_divergence(p, q)).epsilon(1e-12));
  CHECK(printed["emd"].get<double>() ==
        doctest::Approx(emd(p, q, GroundDistance::linear(5))).epsilon(1e-12));
  CHECK(printed["tv"].get<double>() ==
        doctest::Approx(total_variation(p, q)).epsilon(1e-12));
}

TEST_CASE("cli kappa: identical annotation files score 1") {
  ts::ScratchDir dir("cli-kappa");
  ts::write_text(dir.file("a.csv"),
                 "img-1,alice,gender3,Male\n"
                 "img-2,alice,gender3,Female\n"
                 "img-3,alice,gender3,Male\n");
  ts::write_text(dir.file("b.csv"),
                 "img-1,bob,gender3,Male\n"
                 "img-2,bob,gender3,Female\n"
                 "img-3,bob,gender3,Male\n");

  const auto out = dir.file("kappa.json");
  CHECK(run_cli("kappa " + dir.file("a.csv").string() + " " + dir.file("b.csv").string(),
                out) == 0);
  const auto score = Json::parse(ts::read_text(out));
  CHECK(score["kappa"].get<double>() == doctest::Approx(1.0));
  CHECK(score["percent_agreement"].get<double>() == 1.0);
  CHECK(score["robust"].get<bool>());

  // Mixed coders in one file are rejected.
  ts::write_text(dir.file("mixed.csv"),
                 "img-1,alice,gender3,Male\nimg-2,carol,gender3,Male\n");
  CHECK(run_cli("kappa " + dir.file("mixed.csv").string() + " " +
                dir.file("b.csv").string()) == 2);
}

TEST_CASE("cli trace-export: accepted rows only, depleted labels never reappear") {
  ts::ScratchDir dir("cli-export");
  write_corpus(dir.file("headlines.txt"), 50);
  std::ostringstream config;
  config << R"({
    "schema_file": ")"
         << DEBIASPI_DATA_DIR << R"(/codebooks/race.json",
    "target": {"weights": [0.111111111, 0.111111111, 0.111111111, 0.111111111, 0.111111111,
                            0.111111111, 0.111111111, 0.111111111, 0.111111112]},
    "total": 50,
    "generator": {"type": "mock", "preset": "race-white-heavy"},
    "seed": 41,
    "headlines": ")"
         << dir.file("headlines.txt").string() << R"(",
    "out_dir": ")"
         << (dir.path() / "out").string() << R"("
  })";
  ts::write_text(dir.file("exp.json"), config.str());
  REQUIRE(run_cli("run --config " + dir.file("exp.json").string()) == 0);

  const auto csv_path = dir.file("trace.csv");
  CHECK(run_cli("trace-export " + (dir.path() / "out" / "report.json").string() + " --out " +
                csv_path.string()) == 0);

  std::ifstream csv(csv_path);
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "iteration,label,running_tv");

  // One row per accepted image; a label never appears after its quota filled.
  std::map<std::string, int> seen;
  int rows = 0;
  std::string last_tv;
  while (std::getline(csv, line)) {
    ++rows;
    const auto first = line.find(',');
    const auto last = line.rfind(',');
    const std::string label = line.substr(first + 1, last - first - 1);
    ++seen[label];
    CHECK(seen[label] <= 6);
    last_tv = line.substr(last + 1);
  }
  CHECK(rows == 50);
  CHECK(last_tv == "0.0");

  // A converged gender run ends at zero running deviation too.
  ts::write_text(dir.file("gender.json"),
                 gender_config(dir.file("headlines.txt").string(), 20, 5,
                               (dir.path() / "out2").string()));
  REQUIRE(run_cli("run --config " + dir.file("gender.json").string()) == 0);
  const auto report = load_report(dir.path() / "out2" / "report.json");
  CHECK(report.records.back().running_tv == 0.0);
}

TEST_CASE("cli trace-export: an empty report gives a header-only CSV") {
  ts::ScratchDir dir("cli-export-empty");
  const auto schema = schemas::gender_pair();
  RunReport empty(schema, Histogram::zeros(schema), Histogram{schema, {1, 1}});
  save_report(dir.file("report.json"), empty);

  const auto csv_path = dir.file("trace.csv");
  CHECK(run_cli("trace-export " + dir.file("report.json").string() + " --out " +
                csv_path.string()) == 0);
  CHECK(ts::read_text(csv_path) == "iteration,label,running_tv\n");
}

TEST_CASE("cli simulate: prints the coverage analysis") {
  ts::ScratchDir dir("cli-simulate");
  const auto out = dir.file("sim.txt");
  CHECK(run_cli("simulate -k 9 -b 5 --trials 40 --runs 200 --seed 3", out) == 0);
  const auto text = ts::read_text(out);
  CHECK(text.find("70/126") != std::string::npos);
  CHECK(text.find("22.2222") != std::string::npos);
}
