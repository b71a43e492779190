#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli/app.hpp"
#include "cli/commands.hpp"
#include "collabrep/dictionary_io.hpp"
#include "test_util.hpp"

using namespace collabrep;
using collabrep::cli::run_app;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_app(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

std::string data_file(const char* name) { return (std::filesystem::path(COLLABREP_DATA_DIR) / name).string(); }

}  // namespace

TEST_CASE("synth is deterministic and its output feeds eval") {
  const auto dir = testutil::scratch_dir("cli_synth");
  const std::vector<std::string> base{"synth", "--classes", "3", "--dim", "6", "--per-class", "8", "--separation",
                                      "5", "--synth-seed", "4"};
  auto a = base;
  a.insert(a.end(), {"--data-out", (dir / "a.csv").string()});
  auto b = base;
  b.insert(b.end(), {"--data-out", (dir / "b.csv").string()});
  REQUIRE(run(a).code == 0);
  REQUIRE(run(b).code == 0);
  std::ifstream fa(dir / "a.csv"), fb(dir / "b.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());

  const Run eval = run({"eval", "--data", (dir / "a.csv").string(), "--model", "crc-l2", "--train-per-class", "4",
                        "--splits", "3", "--out", (dir / "eval.json").string()});
  REQUIRE(eval.code == 0);
  const nlohmann::json report = read_json(dir / "eval.json");
  double sum = 0.0;
  for (const auto& s : report["splits"]) sum += s["accuracy"].get<double>();
  CHECK(report["mean_accuracy"].get<double>() == doctest::Approx(sum / 3.0));
  CHECK(report["version"] == COLLABREP_VERSION);
  CHECK(report["config"]["splits"] == 3);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({"synth", "--classes", "1", "--data-out", "/tmp/x.csv"}).code == cli::kUsage);
  CHECK(run({"synth"}).code == cli::kUsage);
  CHECK(run({"eval", "--model", "nearest"}).code == cli::kUsage);
  CHECK(run({"compare", "--models"}).code == cli::kUsage);
  CHECK(run({"fit-dict", "--dict-out", "/tmp/d.bin"}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"eval", "--no-such-flag"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("data errors exit with code 3") {
  CHECK(run({"eval", "--data", "/nonexistent/file.csv"}).code == cli::kDataError);
  CHECK(run({"select", "--from-table", "/nonexistent/table.csv"}).code == cli::kDataError);
}

TEST_CASE("numerical failures exit with code 4") {
  const auto dir = testutil::scratch_dir("cli_numeric");
  std::ofstream(dir / "huge.csv") << "label,f1,f2\na,1e200,1e200\nb,-1e200,1e200\na,1e200,-1e200\nb,2e200,1e200\n";
  const Run r = run({"fit-dict", "--data", (dir / "huge.csv").string(), "--block-sizes", "1", "--dict-out",
                     (dir / "d.bin").string()});
  CHECK(r.code == cli::kNumerical);
}

TEST_CASE("config file values are overridden by flags") {
  const auto dir = testutil::scratch_dir("cli_config");
  std::ofstream(dir / "cfg.json") << R"({"model": "mpd", "synth": {"num_classes": 3, "dim": 5,
      "samples_per_class": 6, "class_separation": 4.0, "seed": 1}, "train_per_class": 3, "splits": 2})";
  REQUIRE(run({"--config", (dir / "cfg.json").string(), "eval", "--splits", "1", "--out",
               (dir / "r.json").string()})
              .code == 0);
  const nlohmann::json report = read_json(dir / "r.json");
  CHECK(report["model"] == "mpd");
  CHECK(report["splits"].size() == 1);

  std::ofstream(dir / "bad.json") << R"({"modle": "mpd"})";
  CHECK(run({"--config", (dir / "bad.json").string(), "eval"}).code == cli::kUsage);
}

TEST_CASE("models compared on a split see the same partition") {
  const auto dir = testutil::scratch_dir("cli_partition");
  const std::vector<std::string> common{"--classes", "3", "--dim", "8", "--per-class", "10", "--separation", "6",
                                        "--train-per-class", "5", "--splits", "2", "--lambda", "0.1"};
  auto l2 = std::vector<std::string>{"eval", "--model", "crc-l2", "--out", (dir / "l2.json").string()};
  l2.insert(l2.end(), common.begin(), common.end());
  auto dl = std::vector<std::string>{"eval", "--model", "dl-nscr", "--block-sizes", "2", "--out",
                                     (dir / "dl.json").string()};
  dl.insert(dl.end(), common.begin(), common.end());
  REQUIRE(run(l2).code == 0);
  REQUIRE(run(dl).code == 0);
  const nlohmann::json a = read_json(dir / "l2.json");
  const nlohmann::json b = read_json(dir / "dl.json");
  for (int s = 0; s < 2; ++s) {
    CHECK(a["splits"][s]["train_hash"] == b["splits"][s]["train_hash"]);
    CHECK(a["splits"][s]["test_hash"] == b["splits"][s]["test_hash"]);
  }
}

TEST_CASE("compare rows match the requested models and carry timings") {
  const auto dir = testutil::scratch_dir("cli_compare");
  const Run r = run({"compare", "--models", "mpd", "crc-l2", "--classes", "3", "--dim", "5", "--per-class", "6",
                     "--separation", "4", "--train-per-class", "3", "--out", (dir / "c.json").string(), "--csv-out",
                     (dir / "c.csv").string()});
  REQUIRE(r.code == 0);
  const nlohmann::json report = read_json(dir / "c.json");
  REQUIRE(report["models"].size() == 2);
  CHECK(report["models"][0]["model"] == "mpd");
  CHECK(report["models"][1]["model"] == "crc-l2");
  CHECK(report["models"][1]["timing"].contains("test_ms_per_query"));
  std::ifstream csv(dir / "c.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "model,mean_accuracy,train_seconds,test_ms_per_query");
}

TEST_CASE("select from the table reproduces the derived columns") {
  const auto dir = testutil::scratch_dir("cli_select");
  REQUIRE(run({"select", "--from-table", data_file("table1_raw.csv"), "--out", (dir / "s.json").string(),
               "--csv-out", (dir / "t.csv").string()})
              .code == 0);
  const nlohmann::json report = read_json(dir / "s.json");
  CHECK(report["rows"].size() == 13);
  CHECK(report["agreement"]["agree"] == 9);
  CHECK(report["agreement"]["rows"] == 9);
  CHECK(report["trend"]["points"] == 9);
  CHECK(std::abs(report["rows"][0]["score"].get<double>() - 10.36) <= 0.02);

  REQUIRE(run({"select", "--from-table", data_file("table1_raw.csv"), "--include-starred", "--out",
               (dir / "all.json").string()})
              .code == 0);
  CHECK(read_json(dir / "all.json")["trend"]["points"] == 13);
}

TEST_CASE("select on data emits a consistent report") {
  const auto dir = testutil::scratch_dir("cli_select_data");
  REQUIRE(run({"select", "--classes", "3", "--dim", "10", "--per-class", "8", "--separation", "5",
               "--train-per-class", "4", "--with-err", "--lambda", "0.01", "--out", (dir / "s.json").string()})
              .code == 0);
  const nlohmann::json r = read_json(dir / "s.json")["report"];
  CHECK(r["fdr"].get<double>() == doctest::Approx(r["mpd_accuracy"].get<double>() * 3));
  CHECK(r["score"].get<double>() == doctest::Approx(r["fdr"].get<double>() * 10 / 12));
}

TEST_CASE("fit-dict persists a dictionary that eval can use") {
  const auto dir = testutil::scratch_dir("cli_fit");
  REQUIRE(run({"synth", "--classes", "3", "--dim", "8", "--per-class", "6", "--separation", "6", "--data-out",
               (dir / "s.csv").string()})
              .code == 0);
  REQUIRE(run({"fit-dict", "--data", (dir / "s.csv").string(), "--block-sizes", "2", "--dict-out",
               (dir / "d.bin").string(), "--out", (dir / "fit.json").string()})
              .code == 0);
  const nlohmann::json fit = read_json(dir / "fit.json");
  CHECK(fit["trace"]["max_relative_increase"].get<double>() <= 1e-10);
  const StoredDictionary stored = load_dictionary(dir / "d.bin");
  CHECK(stored.dictionary.size() == 6);
  CHECK(stored.metadata["class_names"].size() == 3);

  const Run eval = run({"eval", "--model", "dl-nscr", "--dictionary", (dir / "d.bin").string(), "--data",
                        (dir / "s.csv").string(), "--out", (dir / "e.json").string()});
  REQUIRE(eval.code == 0);
  CHECK(read_json(dir / "e.json")["accuracy"].get<double>() >= 0.9);
}

TEST_CASE("set-based evaluation") {
  const auto dir = testutil::scratch_dir("cli_sets");
  for (const char* model : {"mpd", "dl-nscr"}) {
    std::vector<std::string> args{"eval", "--model", model, "--classes", "3", "--dim", "6", "--per-class", "10",
                                  "--separation", "6", "--train-per-class", "4", "--set-size", "3", "--rank-k", "2",
                                  "--out", (dir / (std::string(model) + ".json")).string()};
    if (std::string(model) == "dl-nscr") args.insert(args.end(), {"--block-sizes", "1"});
    const Run r = run(args);
    REQUIRE(r.code == 0);
    const nlohmann::json report = read_json(dir / (std::string(model) + ".json"));
    CHECK(report["splits"][0]["queries"] == 6);  // 2 sets of 3 per class
    CHECK(report.contains("mean_rank_k_accuracy"));
  }
  CHECK(run({"eval", "--model", "crc-l2", "--set-size", "3"}).code == cli::kUsage);
}

TEST_CASE("strip_timing removes timing members at any depth") {
  const nlohmann::json j = {{"a", 1}, {"timing", {{"s", 2}}}, {"rows", {{{"timing", 3}, {"b", 4}}}}};
  CHECK(cli::strip_timing(j) == nlohmann::json{{"a", 1}, {"rows", {{{"b", 4}}}}});
}

TEST_CASE("cli: stdout holds only the JSON report when --out is absent") {
  const auto result = run({"select", "--from-table", (std::filesystem::path(COLLABREP_DATA_DIR) / "table1_raw.csv").string()});
  REQUIRE(result.code == 0);
  const auto report = nlohmann::json::parse(result.out);
  CHECK(report.at("agreement").at("agree") == 9);
  CHECK(result.err.find("9/9") != std::string::npos);
}
