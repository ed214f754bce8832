#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sidforge/cli.hpp"

namespace sidforge {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = oracle::scratch_dir(std::string("cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

TEST_F(Cli, AnalyzeReportsCollisionRate) {
  spit(path("a.sid"), "#sid v=4 l=1 n=3\n0\t1\n1\t1\n2\t2\n");
  const auto r = run({"analyze", "--index", path("a.sid"), "--json", path("a.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = read_json(path("a.json"));
  EXPECT_EQ(doc["command"], "analyze");
  EXPECT_EQ(doc["tool_version"], kToolVersion);
  EXPECT_EQ(doc["result"]["coll_percent"].get<double>(), 66.67);
  EXPECT_EQ(doc["result"]["g_max"], 2);
}

TEST_F(Cli, EvaluateWorkedExampleFromFiles) {
  spit(path("f.sid"), "#sid v=4 l=2 n=7\n0\t0,0\n1\t0,1\n2\t0,2\n3\t1,0\n4\t1,0\n5\t1,0\n6\t2,0\n");
  spit(path("f.jsonl"), "{\"user\":0,\"target_item\":4,\"beams\":[[0,0],[0,1],[0,2],[1,0],[2,0]]}\n");
  const auto r = run({"evaluate", "--index", path("f.sid"), "--beams", path("f.jsonl"), "--k", "5,10",
                      "--json", path("e.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("shorter than max K"), std::string::npos);
  const auto doc = read_json(path("e.json"));
  const auto& k5 = doc["result"]["metrics"][0];
  EXPECT_EQ(k5["k"], 5);
  EXPECT_NEAR(k5["item_hit"].get<double>(), 0.6667, 5e-5);
  EXPECT_NEAR(k5["inflation_percent"].get<double>(), 50.0, 1e-9);
}

TEST_F(Cli, ReassignThenAnalyzeIsCollisionFree) {
  std::mt19937_64 rng(3);
  auto inst = fixture::random_zcr_instance(rng, 40, 3, 8, 4, 8);
  save_sid_index(path("n.sid"), inst.index);
  save_model(path("m.bin"), inst.model);
  auto r = run({"reassign", "--index", path("n.sid"), "--model", path("m.bin"), "--method", "zcr",
                "--out-index", path("z.sid"), "--report", path("z.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_json(path("z.json"))["result"]["collision_free"], true);
  r = run({"analyze", "--index", path("z.sid"), "--json", path("a.json")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_json(path("a.json"))["result"]["coll_percent"].get<double>(), 0.0);
}

TEST_F(Cli, StrictReassignFailsOnOversizeGroups) {
  spit(path("o.sid"), "#sid v=2 l=2 n=3\n0\t0,0\n1\t0,0\n2\t0,1\n");
  save_model(path("o.bin"), QuantizationModel{2, 2, 1, 3, {0, 1, 0, 1}, {0, 0, 1}});
  auto r = run({"reassign", "--index", path("o.sid"), "--model", path("o.bin"), "--out-index", path("x.sid")});
  EXPECT_EQ(r.code, 0);
  r = run({"reassign", "--index", path("o.sid"), "--model", path("o.bin"), "--out-index", path("x.sid"),
           "--strict"});
  EXPECT_EQ(r.code, 1);
  r = run({"capacity-check", "--index", path("o.sid")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("violated"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"analyze", "--index", path("missing.sid")}).code, 2);
  EXPECT_EQ(run({"analyze", "--bogus"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  spit(path("bad.sid"), "#sid v=4 l=1 n=1\n0\t9\n");
  EXPECT_EQ(run({"analyze", "--index", path("bad.sid")}).code, 1);
  spit(path("ok.sid"), "#sid v=4 l=2 n=1\n0\t1,1\n");
  EXPECT_EQ(run({"reassign", "--index", path("ok.sid"), "--model", path("ok.sid"), "--method", "lsh",
                 "--out-index", path("x.sid")})
                .code,
            1);
}

TEST_F(Cli, TokenizeIsDeterministic) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g;
  EmbeddingMatrix emb(200, 6);
  for (auto& x : emb.data) x = g(rng);
  save_embeddings(path("e.emb"), emb);
  std::string first;
  for (int round = 0; round < 2; ++round) {
    const auto r = run({"tokenize", "--embeddings", path("e.emb"), "--levels", "3", "--codebook", "8",
                        "--out-index", path("t.sid"), "--out-model", path("t.bin"), "--json", path("t.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string bytes = slurp(path("t.json")) + slurp(path("t.sid")) + slurp(path("t.bin"));
    if (round == 0) first = bytes;
    else EXPECT_EQ(bytes, first);
  }
  EXPECT_EQ(load_model(path("t.bin")).levels, 3u);
}

TEST_F(Cli, PreprocessWritesSplitsAndIsIdempotent) {
  std::ostringstream raw;
  for (int u = 0; u < 7; ++u)
    for (int i = 0; i < 6; ++i) raw << "user" << u << "\titem" << (i + u) % 6 << '\t' << 1000 + 10 * i << '\n';
  raw << "loner\titem0\t5\n";
  spit(path("raw.tsv"), raw.str());
  auto r = run({"preprocess", "--interactions", path("raw.tsv"), "--out-dir", path("out"), "--json", path("p.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = read_json(path("p.json"));
  EXPECT_EQ(doc["result"]["users"], 7);
  EXPECT_EQ(doc["result"]["items"], 6);
  const std::string test_split = slurp(dir / "out" / "test.tsv");
  EXPECT_EQ(std::count(test_split.begin(), test_split.end(), '\n'), 7);
  const std::string train_split = slurp(dir / "out" / "train.tsv");
  EXPECT_EQ(std::count(train_split.begin(), train_split.end(), '\n'), 28);

  r = run({"preprocess", "--interactions", (dir / "out" / "filtered.tsv").string(), "--out-dir", path("again")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"filtered.tsv", "interactions.tsv", "items.tsv", "users.tsv", "test.tsv"}) {
    EXPECT_EQ(slurp(dir / "again" / f), slurp(dir / "out" / f)) << f;
  }
}

TEST_F(Cli, EmbedCfAndFuse) {
  std::ostringstream tsv;
  std::mt19937_64 rng(8);
  for (int u = 0; u < 40; ++u)
    for (int t = 0; t < 8; ++t) tsv << u << '\t' << rng() % 30 << '\t' << t << '\n';
  spit(path("i.tsv"), tsv.str());
  auto r = run({"embed-cf", "--interactions", path("i.tsv"), "--dim", "8", "--out", path("cf.emb")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cf = load_embeddings(path("cf.emb"));
  EXPECT_EQ(cf.n, 30u);
  EXPECT_EQ(cf.d, 8u);

  EmbeddingMatrix text(30, 5);
  std::normal_distribution<float> g;
  for (auto& x : text.data) x = g(rng);
  save_embeddings(path("text.emb"), text);
  r = run({"fuse", "--text", path("text.emb"), "--cf", path("cf.emb"), "--out", path("fused.emb")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_embeddings(path("fused.emb")).d, 5u);

  EmbeddingMatrix short_text(10, 5);
  save_embeddings(path("short.emb"), short_text);
  EXPECT_EQ(run({"fuse", "--text", path("short.emb"), "--cf", path("cf.emb"), "--out", path("x.emb")}).code, 1);
}

TEST_F(Cli, SynthBeamsRoundTrip) {
  spit(path("s.sid"), "#sid v=4 l=2 n=4\n0\t0,0\n1\t0,1\n2\t1,0\n3\t1,1\n");
  auto r = run({"synth-beams", "--index", path("s.sid"), "--out", path("b.jsonl"), "--beam-width", "3",
                "--hit-prob", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"evaluate", "--index", path("s.sid"), "--beams", path("b.jsonl"), "--k", "1", "--json", path("e.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(path("e.json"))["result"]["metrics"][0];
  EXPECT_EQ(m["item_hit"].get<double>(), 1.0);
  EXPECT_EQ(m["sid_hit"].get<double>(), 1.0);
}

}  // namespace
}  // namespace sidforge
