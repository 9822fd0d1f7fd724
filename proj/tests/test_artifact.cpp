#include <doctest.h>

#include <random>

#include "heurist/artifact.hpp"
#include "heurist/error.hpp"
#include "test_util.hpp"

using namespace heurist;

namespace {

Dataset random_dataset(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> small(0, 4);
  Dataset ds;
  ds.name = "rand";
  const int n_issues = small(rng);
  for (int k = 0; k < n_issues; ++k) {
    IssueArtifact is;
    is.id = "I-" + std::to_string(k);
    is.title = "title " + std::to_string(rng() % 100);
    is.body = (rng() % 2) ? "" : "body \"quoted\"\nline";
    for (int l = small(rng); l > 0; --l) {
      is.labels.push_back(l % 2 ? "bug" : "enhancement");
    }
    ds.issues.emplace(is.id, is);
  }
  const int n_commits = small(rng) * 3;
  for (int i = 0; i < n_commits; ++i) {
    CommitArtifact c;
    c.id = "c" + std::to_string(i);
    c.message = (rng() % 5 == 0) ? "" : "fix ünïcode, \"quotes\" #" + std::to_string(i);
    c.author = "dev" + std::to_string(rng() % 3);
    c.timestamp = static_cast<std::int64_t>(rng() % 2'000'000'000);
    for (int f = small(rng); f > 0; --f) {
      c.files.push_back({"src/f" + std::to_string(f) + ".c",
                         static_cast<std::int64_t>(rng() % 50),
                         static_cast<std::int64_t>(rng() % 50)});
    }
    for (int l = small(rng) % 3; l > 0; --l) {
      c.issue_ids.push_back("I-" + std::to_string(rng() % 6)); // some dangle
    }
    if (rng() % 4 == 0) {
      c.extra["sha_short"] = c.id.substr(0, 1);
    }
    ds.commits.push_back(std::move(c));
  }
  return ds;
}

} // namespace

TEST_CASE("load_commits reads a single record") {
  testing::TempDir dir;
  auto p = dir.write("c.jsonl", R"({"id":"a1","message":"fix bug #1234","files":[]})" "\n");
  auto ds = load_commits(p);
  REQUIRE(ds.commits.size() == 1);
  CHECK(ds.commits[0].id == "a1");
  CHECK(ds.commits[0].message == "fix bug #1234");
  CHECK(ds.commits[0].files.empty());
  CHECK(ds.commits[0].issue_ids.empty());
  CHECK(ds.name == "c");
}

TEST_CASE("load_commits rejects duplicate ids by name") {
  const std::string text = R"({"id":"a1","message":"x"})" "\n" R"({"id":"a1","message":"y"})";
  try {
    parse_commits(text, "dup.jsonl");
    FAIL("expected a duplicate-id error");
  } catch (const DuplicateIdError &e) {
    CHECK(std::string(e.what()).find("'a1'") != std::string::npos);
    CHECK(std::string(e.what()).find("dup.jsonl:2") != std::string::npos);
  }
}

TEST_CASE("empty commit file is an empty dataset") {
  CHECK(parse_commits("", "empty.jsonl").commits.empty());
  CHECK(parse_commits("\n\n  \n", "blank.jsonl").commits.empty());
}

TEST_CASE("commit parse errors carry the line number") {
  const std::string text = R"({"id":"a1","message":"ok"})" "\n{not json\n";
  try {
    parse_commits(text, "bad.jsonl");
    FAIL("expected parse error");
  } catch (const ParseError &e) {
    CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_commits(R"({"id":"a1"})", "m.jsonl"), ParseError);
  CHECK_THROWS_AS(parse_commits(R"({"id":"","message":""})", "m.jsonl"), ParseError);
  CHECK_THROWS_AS(
      parse_commits(R"({"id":"a","message":"","files":[{"path":"x","additions":-1}]})", "m"),
      ParseError);
  CHECK_THROWS_AS(parse_commits(R"({"id":"a","message":"","files":[{"path":""}]})", "m"),
                  ParseError);
  CHECK_THROWS_AS(parse_commits(R"({"id":"a","message":"","timestamp":"now"})", "m"),
                  ParseError);
}

TEST_CASE("unknown commit fields are kept") {
  auto ds = parse_commits(R"({"id":"a","message":"m","lang":"it"})", "u.jsonl");
  CHECK(ds.provenance.at("commits.unknown_fields") == "lang");
  CHECK(ds.commits[0].extra.at("lang") == "it");
  CHECK(serialize_commits(ds).find("\"lang\":\"it\"") != std::string::npos);
}

TEST_CASE("load_issues keys by id") {
  auto issues = parse_issues(
      R"({"id":"I-1","title":"NPE on save","body":"...","labels":["bug"]})", "i.jsonl");
  REQUIRE(issues.size() == 1);
  CHECK(issues.at("I-1").labels == std::vector<std::string>{"bug"});

  CHECK_THROWS_AS(parse_issues(R"({"id":"I-1","title":"a"})" "\n" R"({"id":"I-1","title":"b"})",
                               "i.jsonl"),
                  DuplicateIdError);
  auto no_labels = parse_issues(R"({"id":"I-2","title":"t","body":"b","labels":[]})", "i");
  CHECK(no_labels.at("I-2").labels.empty());
}

TEST_CASE("link resolves, drops and rejects dangling references") {
  Dataset ds;
  ds.commits.push_back({"c1", "m", "", 0, {}, {"I-1"}, {}});
  ds.issues.emplace("I-1", IssueArtifact{"I-1", "t", "b", {"bug"}, {}});

  auto linked = link(ds, LinkPolicy::strict);
  CHECK(link_stats(linked).link_fraction == 1.0);
  CHECK(linked.provenance.at("link.fraction") == "1");

  Dataset dangling;
  dangling.commits.push_back({"c2", "m", "", 0, {}, {"I-9"}, {}});
  auto dropped = link(dangling, LinkPolicy::drop);
  CHECK(dropped.commits[0].issue_ids.empty());
  CHECK(dropped.provenance.at("link.dangling") == "1");

  auto kept = link(dangling, LinkPolicy::keep);
  CHECK(kept.commits[0].issue_ids == std::vector<std::string>{"I-9"});
  CHECK(kept.provenance.at("link.dangling") == "1");

  try {
    link(dangling, LinkPolicy::strict);
    FAIL("expected strict linking to fail");
  } catch (const ValidationError &e) {
    std::string msg = e.what();
    CHECK(msg.find("c2") != std::string::npos);
    CHECK(msg.find("I-9") != std::string::npos);
  }
}

TEST_CASE("link fraction over a 200-commit fixture") {
  Dataset ds;
  ds.issues.emplace("I-1", IssueArtifact{"I-1", "", "", {}, {}});
  for (int i = 0; i < 200; ++i) {
    CommitArtifact c;
    c.id = "c" + std::to_string(i);
    if (i < 68) {
      c.issue_ids = {"I-1"};
    } else if (i < 90) {
      c.issue_ids = {"I-missing"};
    }
    ds.commits.push_back(c);
  }
  // Direct count: 68 commits carry a resolvable link.
  CHECK(link_stats(link(ds, LinkPolicy::keep)).link_fraction == doctest::Approx(0.34));
  CHECK(link(ds, LinkPolicy::drop).provenance.at("link.commits_with_links") == "68");
}

TEST_CASE("validate counts data-quality problems without mutating") {
  Dataset ds;
  for (int i = 0; i < 10; ++i) {
    ds.commits.push_back({"c" + std::to_string(i), i < 3 ? "" : "change things", "", 0,
                          {{"a.c", 1, 1}}, {}, {}});
  }
  const auto before = dataset_hash(ds);
  auto r = validate(ds);
  CHECK(dataset_hash(ds) == before);
  CHECK(r.empty_messages == 3);
  CHECK(r.empty_message_fraction() == doctest::Approx(0.3));
  CHECK(r.zero_file_commits == 0);

  Dataset one;
  one.commits.push_back({"c", "", "", 0, {}, {}, {}});
  CHECK(validate(one).empty_messages == 1);
  CHECK(validate(one).zero_file_commits == 1);

  Dataset clean;
  clean.commits.push_back({"c", "Add feature", "", 0, {{"a", 0, 0}}, {}, {}});
  auto rc = validate(clean);
  CHECK(rc.empty_messages == 0);
  CHECK(rc.non_ascii_dominant == 0);
  CHECK(rc.zero_file_commits == 0);
  CHECK(rc.dangling_issue_refs == 0);
}

TEST_CASE("non-ASCII dominance") {
  CHECK(is_non_ascii_dominant("修复空指针"));
  CHECK_FALSE(is_non_ascii_dominant("Corrige la conexión"));
  CHECK_FALSE(is_non_ascii_dominant(""));
}

TEST_CASE("property: serialize then load round-trips; keep+drop equals drop") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto ds = random_dataset(rng);
    auto again = parse_commits(serialize_commits(ds), "rand.jsonl");
    again.issues = parse_issues(serialize_issues(ds.issues), "rand-issues.jsonl");
    REQUIRE(again.commits == ds.commits);
    REQUIRE(again.issues == ds.issues);

    auto direct = link(ds, LinkPolicy::drop);
    auto staged = link(link(ds, LinkPolicy::keep), LinkPolicy::drop);
    REQUIRE(staged == direct);

    const auto h = dataset_hash(ds);
    validate(ds);
    REQUIRE(dataset_hash(ds) == h);
  }
}
