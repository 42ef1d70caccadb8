#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cocogb/cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = COCOGB_TEST_DATA;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cocogb_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cocogb::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::vector<std::string> fixture_args(const fs::path& out) {
  return {"--captions-ann", (kData / "captions.json").string(), "--instances-ann",
          (kData / "instances.json").string(), "--out-dir", out.string()};
}

std::vector<std::string> with(std::vector<std::string> a, std::initializer_list<std::string> more) {
  a.insert(a.end(), more.begin(), more.end());
  return a;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"label", "--no-such-flag"}).code == 2);
  const Result r = run({"label"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--captions-ann") != std::string::npos);
  CHECK(run({"label", "--captions-ann", "/nonexistent.json", "--instances-ann", "/x.json"}).code == 2);
}

TEST_CASE("label fixture matches the rules applied by hand") {
  TempDir tmp;
  const Result r = run(with(fixture_args(tmp.path), {"label"}));
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(tmp.path / "labels.json"));
  CHECK(j["seed"] == 0);
  // 1: "woman" in one caption; 2: "man"; 3: man and woman in different
  // captions; 4: two people; 5: no gender word; 6: crowd annotation.
  CHECK(j["labels"]["1"] == "women");
  CHECK(j["labels"]["2"] == "men");
  CHECK(j["labels"]["3"] == "discard");
  CHECK(j["labels"]["4"] == "discard");
  CHECK(j["labels"]["5"] == "discard");
  CHECK(j["labels"]["6"] == "discard");
  CHECK(j["summary"]["women"] == 1);
  CHECK(j["summary"]["discard"] == 4);
  CHECK(fs::exists(tmp.path / "labels.txt"));

  const std::string first = slurp(tmp.path / "labels.json");
  REQUIRE(run(with(fixture_args(tmp.path), {"label"})).code == 0);
  CHECK(slurp(tmp.path / "labels.json") == first);
}

TEST_CASE("label on an empty annotation file writes nothing") {
  TempDir tmp;
  write(tmp.path / "empty.json", R"({"images": [], "annotations": []})");
  const fs::path out = tmp.path / "out";
  const Result r = run({"label", "--captions-ann", (tmp.path / "empty.json").string(),
                        "--instances-ann", (kData / "instances.json").string(), "--out-dir",
                        out.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("malformed annotation file is an input error") {
  TempDir tmp;
  write(tmp.path / "bad.json", R"({"images": [)");
  const Result r = run({"label", "--captions-ann", (tmp.path / "bad.json").string(),
                        "--instances-ann", (kData / "instances.json").string(), "--out-dir",
                        tmp.path.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("parse") != std::string::npos);
}

TEST_CASE("bias report on the fixture") {
  TempDir tmp;
  REQUIRE(run(with(fixture_args(tmp.path), {"label"})).code == 0);
  const Result r = run({"bias-report", "--labels", (tmp.path / "labels.json").string(),
                        "--instances-ann", (kData / "instances.json").string(), "--min-support",
                        "1", "--out-dir", tmp.path.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(tmp.path / "bias_report.json"));
  const json& all = j["partitions"]["all"];
  // person (1 women, 1 men) 0.5, horse 0.0, surfboard 1.0
  CHECK(all["all"]["average_bias_ratio"].get<double>() == doctest::Approx(0.5));
  CHECK(fs::exists(tmp.path / "bias_report.txt"));
}

TEST_CASE("build-split v1 on the fixture") {
  TempDir tmp;
  REQUIRE(run(with(fixture_args(tmp.path), {"label"})).code == 0);
  auto args = std::vector<std::string>{"build-split", "--variant", "v1", "--per-gender", "1",
                                       "--seed", "7", "--labels",
                                       (tmp.path / "labels.json").string(), "--instances-ann",
                                       (kData / "instances.json").string(), "--out-dir",
                                       tmp.path.string()};
  REQUIRE(run(args).code == 0);
  const std::string first = slurp(tmp.path / "split_v1.json");
  const json j = json::parse(first);
  CHECK(j["seed"] == 7);
  CHECK(j["test"] == json::array({1, 2}));
  REQUIRE(run(args).code == 0);
  CHECK(slurp(tmp.path / "split_v1.json") == first);
  CHECK(slurp(tmp.path / "split_v1_verify.txt").find("PASS") != std::string::npos);

  args[4] = "2";
  const Result r = run(args);
  CHECK(r.code == 1);
  CHECK(r.err.find("capacity") != std::string::npos);
  CHECK(run({"build-split", "--variant", "v3"}).code == 2);
}

TEST_CASE("eval with pre-aggregated rates") {
  TempDir tmp;
  const Result r = run({"eval", "--rates", (kData / "rates_att.json").string(), "--out-dir",
                        tmp.path.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(tmp.path / "eval.json"));
  CHECK(std::abs(j["outcomes"]["divergence"].get<double>() - 0.063) <= 0.003);
}

TEST_CASE("eval on the fixture") {
  TempDir tmp;
  REQUIRE(run(with(fixture_args(tmp.path), {"label"})).code == 0);
  write(tmp.path / "split.json", R"({"name": "x", "test": [1, 2, 3]})");
  const Result r = run({"eval", "--labels", (tmp.path / "labels.json").string(), "--results",
                        (kData / "results.json").string(), "--split",
                        (tmp.path / "split.json").string(), "--instances-ann",
                        (kData / "instances.json").string(), "--attention",
                        (kData / "attention.jsonl").string(), "--no-quality", "--out-dir",
                        tmp.path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("no generated caption") != std::string::npos);
  const json j = json::parse(slurp(tmp.path / "eval.json"));
  CHECK(j["coverage"]["missing_captions"] == json::array({2}));
  CHECK(j["coverage"]["skipped_unlabeled"] == 1);
  // image 1 is a woman captioned as "a man"
  CHECK(j["outcomes"]["women"]["wrong"] == 100.0);
  CHECK(j["outcomes"]["men"]["count"] == 0);
  CHECK_FALSE(j.contains("quality"));
  // Image 1: columns interpolate 0.4 -> 0.1 over 8 pixels, person on the left
  // half: (1.6 - 0.3 * 6 / 7) / 2.0.
  CHECK(j["attention"]["women"]["attention_sum"].get<double>() ==
        doctest::Approx(100 * (1.6 - 0.3 * 6 / 7) / 2.0));
  CHECK(j["attention"]["women"]["pointing_game"] == 100.0);
  CHECK(j["attention"]["men"]["pointing_game"] == 0.0);

  write(tmp.path / "broken.json", "[{\"image_id\": 1");
  CHECK(run({"eval", "--labels", (tmp.path / "labels.json").string(), "--results",
             (tmp.path / "broken.json").string(), "--out-dir", tmp.path.string()})
            .code == 2);
}

TEST_CASE("config file fills flags, command line wins") {
  TempDir tmp;
  const json cfg = {{"captions_ann", (kData / "captions.json").string()},
                    {"instances_ann", (kData / "instances.json").string()},
                    {"out_dir", (tmp.path / "from_config").string()},
                    {"seed", 5}};
  write(tmp.path / "cfg.json", cfg.dump());
  REQUIRE(run({"label", "--config", (tmp.path / "cfg.json").string(), "--seed", "9"}).code == 0);
  const json j = json::parse(slurp(tmp.path / "from_config" / "labels.json"));
  CHECK(j["seed"] == 9);
}

TEST_CASE("check-kernel") {
  TempDir tmp;
  const fs::path suite = fs::path(COCOGB_DATA_DIR) / "kernel_vectors.jsonl";
  const Result ok = run({"check-kernel", "--vectors", suite.string(), "--out-dir", tmp.path.string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  std::vector<std::string> lines;
  {
    std::istringstream in(slurp(suite));
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  REQUIRE(lines.size() > 3);
  json v = json::parse(lines[0]);
  v["expected"][0][0] = v["expected"][0][0].get<double>() + 0.01;
  lines[0] = v.dump();
  lines.push_back(R"({"op": "no_such_op", "inputs": {}, "expected": 0})");
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write(tmp.path / "perturbed.jsonl", text);
  const Result bad = run({"check-kernel", "--vectors", (tmp.path / "perturbed.jsonl").string(),
                          "--out-dir", tmp.path.string()});
  CHECK(bad.code == 1);
  const json report = json::parse(slurp(tmp.path / "kernel_check.json"));
  CHECK(report["total"] == lines.size());
  CHECK(report["passed"] == lines.size() - 2);
  CHECK(report["vectors"][0]["passed"] == false);
  CHECK(report["vectors"][1]["passed"] == true);
  CHECK(report["vectors"][lines.size() - 1]["passed"] == false);
}
