#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <sstream>

#include "degkit/cli.hpp"
#include "degkit/degscore.hpp"
#include "degkit/io.hpp"
#include "degkit/neural.hpp"
#include "fixtures.hpp"
#include "test_support.hpp"

using namespace degkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Writes a loop-driven dataset and its BPP sidecars.
fs::path write_fixture(const degkit::testing::TempDir& dir, int count, std::uint64_t seed, const std::string& name) {
  const Dataset d = fixture::loop_dataset(count, 40, 30, seed);
  const fs::path path = dir / (name + ".jsonl");
  write_dataset(d, path);
  fs::create_directories(dir / (name + "_bpp"));
  for (const Construct& c : d) write_bpp(*c.bpp, dir / (name + "_bpp") / (c.id + ".bpp"));
  return path;
}

// Measured values in the scored window, zeros elsewhere.
PredictionSet perfect(const Dataset& d) {
  PredictionSet p;
  for (const Construct& c : d)
    for (DataType t : kScoredDataTypes) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(c.seq_length);
      v.head(c.seq_scored) = c.profile(t).values;
      p.entries[c.id][t] = v;
    }
  return p;
}

std::vector<std::string> pipeline(const degkit::testing::TempDir& dir, const fs::path& data, const fs::path& out) {
  const std::string bpp = (dir / "train_bpp").string();
  std::vector<std::string> logs;
  auto step = [&](std::vector<std::string> args) {
    const Outcome o = cli(std::move(args));
    REQUIRE_MESSAGE(o.code == 0, o.err);
    logs.push_back(o.out);
  };
  step({"featurize", "--data", data.string(), "--bpp-dir", bpp, "--out", (out / "features").string()});
  step({"train-linear", "--data", data.string(), "--window", "4", "--out", (out / "linear.json").string()});
  step({"predict", "--model", (out / "linear.json").string(), "--data", data.string(), "--out",
        (out / "preds.csv").string()});
  step({"score", "--preds", (out / "preds.csv").string(), "--data", data.string(), "--out",
        (out / "score.json").string()});
  return logs;
}

}  // namespace

TEST_CASE("score with perfect predictions prints zero") {
  degkit::testing::TempDir dir;
  Dataset d = fixture::loop_dataset(4, 20, 15, 201);
  // three decimals survive the 6-digit CSV exactly
  for (Construct& c : d)
    for (auto& [t, p] : c.profiles) p.values = (p.values * 1000.0).array().round() / 1000.0;
  write_dataset(d, dir / "d.jsonl");
  write_predictions(perfect(d), dir / "p.csv");
  const Outcome o = cli({"score", "--preds", (dir / "p.csv").string(), "--data", (dir / "d.jsonl").string()});
  CHECK(o.code == 0);
  const auto j = nlohmann::json::parse(o.out);
  CHECK(j.at("mcrmse").get<double>() == 0.0);
  CHECK(o.err.find("# resolved configuration") != std::string::npos);
}

TEST_CASE("usage errors exit 2, bad input exits 1") {
  CHECK(cli({"bogus"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"score", "--preds", "p.csv"}).code == 2);
  CHECK(cli({"score", "--preds", "p.csv", "--data", "d.jsonl", "--nonsense"}).code == 2);
  const Outcome bogus = cli({"bogus"});
  CHECK(bogus.err.find("Usage") != std::string::npos);

  degkit::testing::TempDir dir;
  dir.write("bad.jsonl", "{\"id\": \"a\", \"sequence\": \"ACGU\", \"structure\": \"(..\"}\n");
  const Outcome bad = cli({"ingest", "--data", (dir / "bad.jsonl").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("structure") != std::string::npos);
  CHECK(cli({"score", "--preds", (dir / "none.csv").string(), "--data", (dir / "bad.jsonl").string()}).code == 1);

  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("featurize -> train-linear -> predict -> score on 20 constructs") {
  degkit::testing::TempDir dir;
  const fs::path data = write_fixture(dir, 20, 202, "train");
  const std::string before = read_file(data);
  const auto start = std::chrono::steady_clock::now();
  const auto logs = pipeline(dir, data, dir / "run1");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 60.0);

  // feature files
  const fs::path feat = dir / "run1" / "features";
  CHECK(read_file(feat / "syn0.loops").size() == 41);
  const std::string csv = read_file(feat / "syn0.feat.csv");
  CHECK(csv.rfind("dist_to_paired,dist_to_unpaired,bpp_rowsum,bpp_zeros\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
  const std::string gdist = read_file(feat / "syn3.gdist");
  CHECK(std::count(gdist.begin(), gdist.end(), '\n') == 40);
  CHECK(gdist.substr(0, gdist.find('\n')).rfind("0 1 ", 0) == 0);

  CHECK(read_file(dir / "run1" / "preds.csv").rfind("id_seqpos,reactivity,deg_Mg_pH10,deg_Mg_50C\n", 0) == 0);
  const auto report = nlohmann::json::parse(logs.back());
  CHECK(report.at("mcrmse").get<double>() < 0.2);
  CHECK(load_linear_models(dir / "run1" / "linear.json").size() == 3);
  CHECK(read_file(data) == before);

  SUBCASE("rerun is byte-identical") {
    pipeline(dir, data, dir / "run2");
    for (const char* f : {"linear.json", "preds.csv", "score.json", "features/syn7.feat.csv", "features/syn7.gdist"})
      CHECK_MESSAGE(read_file(dir / "run1" / f) == read_file(dir / "run2" / f), f);
  }
  SUBCASE("thread count does not change results") {
    const Outcome o = cli({"predict", "--threads", "1", "--model", (dir / "run1" / "linear.json").string(), "--data",
                           data.string(), "--out", (dir / "serial.csv").string()});
    REQUIRE(o.code == 0);
    CHECK(read_file(dir / "serial.csv") == read_file(dir / "run1" / "preds.csv"));
  }
}

TEST_CASE("config file supplies defaults, flags override") {
  degkit::testing::TempDir dir;
  const fs::path data = write_fixture(dir, 5, 203, "train");
  dir.write("linear.cfg", "# ridge settings\nwindow = 2\n--lambda = 0.5\ntargets = deg_Mg_pH10  # one column\n");
  const Outcome o = cli({"train-linear", "--data", data.string(), "--config", (dir / "linear.cfg").string(),
                         "--window", "3", "--out", (dir / "m.json").string()});
  REQUIRE_MESSAGE(o.code == 0, o.err);
  const auto models = load_linear_models(dir / "m.json");
  REQUIRE(models.size() == 1);
  CHECK(models[0].w == 3);
  CHECK(models[0].target == DataType::kDegMgPH10);
  CHECK(o.err.find("window=3") != std::string::npos);
  CHECK(o.err.find("lambda=0.5") != std::string::npos);

  dir.write("broken.cfg", "window 2\n");
  CHECK(cli({"train-linear", "--data", data.string(), "--config", (dir / "broken.cfg").string(), "--out",
             (dir / "x.json").string()}).code == 1);
  dir.write("unknown.cfg", "no_such_key = 1\n");
  CHECK(cli({"train-linear", "--data", data.string(), "--config", (dir / "unknown.cfg").string(), "--out",
             (dir / "x.json").string()}).code == 2);
}

TEST_CASE("train-neural and predict with a neural checkpoint") {
  degkit::testing::TempDir dir;
  const fs::path data = write_fixture(dir, 6, 204, "train");
  const std::string bpp = (dir / "train_bpp").string();
  std::vector<std::string> args{"train-neural", "--data", data.string(), "--bpp-dir", bpp, "--hidden", "8",
                                "--epochs", "2", "--batch", "3", "--seed", "5", "--history",
                                (dir / "hist.csv").string()};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", (dir / "a.nn").string()});
  b.insert(b.end(), {"--out", (dir / "b.nn").string()});
  REQUIRE(cli(a).code == 0);
  REQUIRE(cli(b).code == 0);
  CHECK(read_file(dir / "a.nn") == read_file(dir / "b.nn"));
  CHECK(load_neural_model(dir / "a.nn").hyper.hidden == 8);
  CHECK(read_file(dir / "hist.csv").rfind("phase,epoch,train_loss,validation_loss\n", 0) == 0);

  const Outcome p = cli({"predict", "--model", (dir / "a.nn").string(), "--data", data.string(), "--bpp-dir", bpp,
                         "--out", (dir / "p.csv").string()});
  REQUIRE_MESSAGE(p.code == 0, p.err);
  CHECK(read_predictions(dir / "p.csv").entries.size() == 6);

  // no BPP directory: structure fallback with a warning
  const Outcome q = cli({"predict", "--model", (dir / "a.nn").string(), "--data", data.string(), "--out",
                         (dir / "q.csv").string()});
  CHECK(q.code == 0);
  CHECK(q.err.find("warning") != std::string::npos);
}

TEST_CASE("DEGKIT_SEED sets the default seed") {
  degkit::testing::TempDir dir;
  const Dataset d = fixture::loop_dataset(30, 12, 12, 205);
  write_dataset(d, dir / "d.jsonl");
  auto split = [&](const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"split", "--data", (dir / "d.jsonl").string(), "--threshold", "0.8",
                                  "--sizes", "6,4,20", "--out", (dir / out).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  };
  REQUIRE(split("explicit.csv", {"--seed", "1"}).code == 0);
  ::setenv("DEGKIT_SEED", "1", 1);
  const Outcome o = split("env.csv");
  ::unsetenv("DEGKIT_SEED");
  REQUIRE(o.code == 0);
  CHECK(read_file(dir / "explicit.csv") == read_file(dir / "env.csv"));
  CHECK(read_file(dir / "env.csv").rfind("id,cluster_id,split\n", 0) == 0);
  CHECK(nlohmann::json::parse(o.out).at("private_test").get<int>() == 20);
}

TEST_CASE("filter, ensemble, aggregate and report") {
  degkit::testing::TempDir dir;
  Dataset d = fixture::loop_dataset(6, 20, 15, 206);
  d[2].profiles[DataType::kReactivity].values[0] = 50.0;  // above max_value
  write_dataset(d, dir / "d.jsonl");

  const Outcome f = cli({"filter", "--data", (dir / "d.jsonl").string(), "--min-value", "-0.5", "--out",
                         (dir / "kept.jsonl").string(), "--rejected", (dir / "rej.jsonl").string()});
  REQUIRE_MESSAGE(f.code == 0, f.err);
  CHECK(parse_dataset(dir / "kept.jsonl").size() == 5);
  CHECK(parse_dataset(dir / "rej.jsonl").at(0).id == "syn2");

  fs::create_directories(dir / "cands");
  PredictionSet good = perfect(d), off = perfect(d);
  for (auto& [id, by_type] : off.entries)
    for (auto& [t, v] : by_type) v.array() += 0.3;
  write_predictions(good, dir / "cands" / "good.csv");
  write_predictions(off, dir / "cands" / "off.csv");
  const Outcome e = cli({"ensemble", "--candidates", (dir / "cands").string(), "--truth", (dir / "d.jsonl").string(),
                         "--generations", "5", "--out", (dir / "spec.json").string(), "--blend-out",
                         (dir / "blend.csv").string()});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  const auto spec = nlohmann::json::parse(read_file(dir / "spec.json"));
  CHECK(spec.dump().find("good") != std::string::npos);
  CHECK(read_file(dir / "blend.csv") == read_file(dir / "cands" / "good.csv"));

  // aggregate from precomputed predictions
  std::string mrnas = "id,sequence,structure_file,bpp_file,window_start,window_end,measured_rate,rate_stderr\n";
  PredictionSet rates;
  for (int i = 0; i < 5; ++i) {
    const std::string id = "m" + std::to_string(i);
    dir.write(id + ".dbn", ">" + id + "\nGGGAAACCC\n(((...)))\n");
    mrnas += id + ",GGGAAACCC," + id + ".dbn,,1,8," + std::to_string(0.1 * (i + 1)) + ",0.01\n";
    rates.entries[id][DataType::kDegMgPH10] = Eigen::VectorXd::Constant(9, 0.01 * (i + 1));
  }
  dir.write("mrnas.csv", mrnas);
  write_predictions(rates, dir / "rates.csv", {DataType::kDegMgPH10});
  const Outcome ag = cli({"aggregate", "--preds", (dir / "rates.csv").string(), "--mrnas",
                          (dir / "mrnas.csv").string(), "--resamples", "50", "--out", (dir / "ranks.csv").string()});
  REQUIRE_MESSAGE(ag.code == 0, ag.err);
  CHECK(nlohmann::json::parse(ag.out).at("spearman").get<double>() == doctest::Approx(1.0));

  // aggregate from a linear model reads the structure files
  write_dataset(d, dir / "d.jsonl");
  REQUIRE(cli({"train-linear", "--data", (dir / "d.jsonl").string(), "--window", "2", "--out",
               (dir / "lin.json").string()}).code == 0);
  const Outcome agm = cli({"aggregate", "--model", (dir / "lin.json").string(), "--mrnas",
                           (dir / "mrnas.csv").string(), "--resamples", "10", "--out", (dir / "r2.csv").string()});
  CHECK_MESSAGE(agm.code == 1, agm.err);  // every mRNA is identical, so the ranks are all tied
  CHECK(cli({"aggregate", "--mrnas", (dir / "mrnas.csv").string(), "--out", (dir / "r3.csv").string()}).code == 1);

  const Outcome rp = cli({"report", "--data", (dir / "d.jsonl").string(), "--preds",
                          (dir / "cands" / "off.csv").string(), "--ranks", (dir / "ranks.csv").string(), "--out",
                          (dir / "report").string()});
  REQUIRE_MESSAGE(rp.code == 0, rp.err);
  for (const char* name : {"motifs.csv", "motifs.svg", "scores.csv", "scores.svg", "ranks.svg"})
    CHECK_MESSAGE(fs::exists(dir / "report" / name), name);
  CHECK(read_file(dir / "report" / "motifs.svg").rfind("<svg", 0) == 0);
  CHECK(read_file(dir / "report" / "scores.csv").find("off,0.3") != std::string::npos);
}
