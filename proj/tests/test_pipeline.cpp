#include <doctest.h>

#include <nlohmann/json.hpp>

#include "heurist/error.hpp"
#include "heurist/hash.hpp"
#include "heurist/manifest.hpp"
#include "heurist/pipeline.hpp"
#include "test_util.hpp"

using namespace heurist;
namespace pl = heurist::pipeline;

namespace {

struct Fixture {
  testing::TempDir dir;
  std::filesystem::path data = testing::data_dir();

  pl::ApplyArgs apply_args(const std::string &out) const {
    pl::ApplyArgs a;
    a.data.commits = data / "fixtures" / "train_commits.jsonl";
    a.data.issues = data / "fixtures" / "issues.jsonl";
    a.task.heuristics_dir = data / "heuristics";
    a.task.task = "bugginess";
    a.out = dir / out;
    return a;
  }
};

} // namespace

TEST_CASE("manifest round trip and path") {
  RunManifest m;
  m.command = "train";
  m.inputs["a"] = "1";
  m.outputs["b"] = "2";
  m.seed = 7;
  auto back = manifest_from_json(to_json(m));
  CHECK(back.command == "train");
  CHECK(back.inputs == m.inputs);
  CHECK(back.outputs == m.outputs);
  CHECK(back.seed == 7);
  CHECK(manifest_path("out/m.csv").filename() == "m.csv.manifest.json");
}

TEST_CASE("check_fresh detects edited outputs") {
  testing::TempDir dir;
  auto out = dir.write("m.csv", "artifact_id,h\na,1\n");
  RunManifest m;
  m.outputs[manifest_key(out)] = file_sha256(out);
  write_manifest(out, m);
  CHECK_NOTHROW(check_fresh(out));
  write_file(out, "artifact_id,h\na,-1\n");
  CHECK_THROWS_AS(check_fresh(out), StaleInputError);
  auto plain = dir.write("plain.csv", "x");
  CHECK_NOTHROW(check_fresh(plain));
}

TEST_CASE("apply, train and label are byte reproducible") {
  Fixture f;
  pl::Context ctx;
  ctx.seed = 1;
  auto outcome = pl::run_apply(f.apply_args("m1.csv"), ctx);
  pl::run_apply(f.apply_args("m2.csv"), ctx);
  CHECK(outcome.rows == 2000);
  CHECK(outcome.cols == 22);
  CHECK(read_file(f.dir / "m1.csv") == read_file(f.dir / "m2.csv"));
  CHECK(std::filesystem::exists(f.dir / "m1.csv.meta.json"));
  CHECK(std::filesystem::exists(f.dir / "m1.csv.manifest.json"));

  pl::TrainArgs ta;
  ta.matrix = f.dir / "m1.csv";
  ta.task = pl::TaskInput{f.data / "heuristics", "bugginess"};
  ta.out = f.dir / "model1.json";
  auto fit1 = pl::run_train(ta, ctx);
  ta.out = f.dir / "model2.json";
  pl::run_train(ta, ctx);
  CHECK(fit1.params.class_balance == 0.4);
  CHECK(read_file(f.dir / "model1.json") == read_file(f.dir / "model2.json"));

  pl::LabelArgs la{f.dir / "m1.csv", f.dir / "model1.json", f.dir / "l1.jsonl"};
  auto labels = pl::run_label(la, ctx);
  la.out = f.dir / "l2.jsonl";
  pl::run_label(la, ctx);
  CHECK(labels.size() == 2000);
  CHECK(read_file(f.dir / "l1.jsonl") == read_file(f.dir / "l2.jsonl"));

  // Editing the matrix after training makes it stale for labeling.
  write_file(f.dir / "m1.csv", read_file(f.dir / "m1.csv") + "\n");
  CHECK_THROWS_AS(pl::run_label(la, ctx), StaleInputError);
}

TEST_CASE("train refuses an all-abstain matrix") {
  testing::TempDir dir;
  write_matrix(dir / "m.csv", LabelMatrix({"a", "b"}, {"h"}, {Vote::abstain, Vote::abstain}));
  pl::TrainArgs ta;
  ta.matrix = dir / "m.csv";
  ta.out = dir / "model.json";
  try {
    pl::run_train(ta, pl::Context{});
    FAIL("expected unfit model");
  } catch (const Error &e) {
    CHECK(e.exit_code() == 3);
  }
}

TEST_CASE("label rejects a model trained on other columns") {
  testing::TempDir dir;
  write_matrix(dir / "a.csv", LabelMatrix({"r"}, {"h1"}, {Vote::positive}));
  write_matrix(dir / "b.csv", LabelMatrix({"r"}, {"h2"}, {Vote::positive}));
  pl::TrainArgs ta;
  ta.matrix = dir / "a.csv";
  ta.out = dir / "model.json";
  pl::run_train(ta, pl::Context{});
  CHECK_THROWS_AS(pl::run_label({dir / "b.csv", dir / "model.json", dir / "l.jsonl"},
                                pl::Context{}),
                  ValidationError);
}

TEST_CASE("parse_test_set") {
  auto t = pl::parse_test_set("levin=a.jsonl,b.jsonl,c.jsonl");
  CHECK(t.name == "levin");
  CHECK(t.commits == "a.jsonl");
  CHECK(t.gold == "b.jsonl");
  CHECK(*t.issues == "c.jsonl");
  CHECK_THROWS_AS(pl::parse_test_set("nogold=a.jsonl"), ParseError);
}

TEST_CASE("error categories map to exit codes") {
  CHECK(ParseError("x").exit_code() == 2);
  CHECK(ValidationError("x").exit_code() == 3);
  CHECK(StaleInputError("x").exit_code() == 3);
  CHECK(DuplicateIdError("x").exit_code() == 3);
}
