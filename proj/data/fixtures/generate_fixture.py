#!/usr/bin/env python3
"""Regenerates the bundled commit-classification fixture.

Writes train_commits.jsonl (unlabeled), test_commits.jsonl + test_gold.jsonl
(hand-assigned class per template) and issues.jsonl (shared by both). Output
is fully determined by SEED.
"""
import json
import random
from pathlib import Path

SEED = 20210301
OUT = Path(__file__).resolve().parent

COMPONENTS = ["parser", "scheduler", "cache", "HttpClient", "session manager",
              "config loader", "exporter", "CLI", "index writer", "auth module",
              "thread pool", "date formatter", "serializer", "plugin loader",
              "report view", "query planner"]
ATTRS = ["timeout", "locale", "encoding", "buffer size", "user id", "offset",
         "retry count", "path", "header", "charset"]
SITUATIONS = ["the input is empty", "the file is missing", "saving a project",
              "the network drops", "two clients connect", "the cache is cold",
              "running on Windows", "the config has comments", "shutting down"]
FEATURES = ["dark mode", "CSV export", "YAML configuration", "retry policy",
            "plugin hooks", "bulk import", "metrics endpoint", "search filters"]
DEPS = ["guava", "error-prone", "jackson", "junit", "slf4j", "netty"]
BRANCHES = ["develop", "feature/search", "release-2.x", "hotfix-login"]

BUG_KW = [
    "Fix {c} when {s}",
    "Fix crash when {s}",
    "Fixed NPE in {c}",
    "fix: {c} fails when {s}",
    "Fix wrong {a} in {c}",
    "Resolve deadlock in {c}",
    "Fix memory leak in {c}",
    "Fix bug #{n}: {c} throws exception when {s}",
    "Handle error when {s}",
    "Repair broken {a} handling in {c}",
    "Fix regression in {c} introduced by #{n}",
    "Avoid race in {c} when {s}",
    "Fix off-by-one error in {c}",
    "Prevent overflow in {c} {a}",
    "Solve problem with {c} when {s}",
    "{c}: incorrect {a} after {s}",
]
BUG_NOKW = [
    "Handle missing {a} in {c}",
    "Guard against null {a} in {c}",
    "Check bounds before reading {a}",
    "Make {c} respect the {a} setting",
    "Use correct {a} when {s}",
    "Close stream in {c}",
    "Restore {a} after {s}",
    "Do not reset {a} when {s}",
    "Return early if {a} is empty",
]
BUG_FOREIGN = ["Corrige el cierre de la conexión en {c}",
               "Behebt Absturz beim Speichern",
               "修复 {c} 空指针"]
TEST_FIX = ["Fix flaky {c} test", "Fix assertion in {c} test"]
FEATURE = ["Add {f} to {c}", "Implement {f}", "Support {f} in {c}",
           "Introduce {f} option", "Add {a} option to {c}"]
REFACTOR = ["Refactor {c}", "Clean up {c} (cleanup)", "Rename {a} in {c}",
            "Extract {c} helper", "Simplify {c} logic"]
DOCS = ["Update README", "Improve javadoc for {c}", "Document {f}",
        "Add changelog entry for {v}"]
STYLE_FIX = ["Fix typo in {c} docs", "fix formatting in {c}", "Fix whitespace",
             "Fix lint warnings in {c}", "fix spelling of {a} in comments",
             "Fix checkstyle issue in {c}"]
BUILD = ["Bump version to {v}", "Update dependency {d} to {v}", "Upgrade {d} to {v}",
         "Release {v}", "Merge branch '{b}'", "Merge pull request #{n} from dev/{b}"]
TESTS = ["Add tests for {c}", "Improve test coverage of {c}",
         "Add regression test for issue #{n}"]
MISC = ["WIP", "Initial commit", "", "Misc changes", "Tweak {c}",
        "Changes from review", "Apply suggestions", "Aggiorna traduzione italiana",
        "更新文档", "Polish {c}", "Move {c} into its own package", "Reformat"]

# (category, gold label, weight, templates)
CATEGORIES = [
    ("bug_kw", "positive", 26, BUG_KW),
    ("bug_nokw", "positive", 11, BUG_NOKW),
    ("bug_foreign", "positive", 2, BUG_FOREIGN),
    ("test_fix", "positive", 3, TEST_FIX),
    ("feature", "negative", 14, FEATURE),
    ("refactor", "negative", 8, REFACTOR),
    ("docs", "negative", 5, DOCS),
    ("style_fix", "negative", 7, STYLE_FIX),
    ("build", "negative", 7, BUILD),
    ("tests", "negative", 5, TESTS),
    ("misc", "negative", 12, MISC),
]

BUG_TITLES = ["{c} crashes when {s}", "NPE in {c}", "Wrong {a} in {c}",
              "{c} fails when {s}", "Exception when {s}", "{c} hangs"]
FEATURE_TITLES = ["Support {f}", "Add {f} to {c}", "Proposal: {f}",
                  "Document {f}", "Make {a} configurable"]


def fill(rng, template):
    return template.format(c=rng.choice(COMPONENTS), a=rng.choice(ATTRS),
                           s=rng.choice(SITUATIONS), f=rng.choice(FEATURES),
                           d=rng.choice(DEPS), b=rng.choice(BRANCHES),
                           n=rng.randint(10, 4000),
                           v=f"{rng.randint(1, 4)}.{rng.randint(0, 12)}.{rng.randint(0, 9)}")


def files_for(rng, category):
    if category == "test_fix":
        k = rng.randint(1, 2)
        return [f"src/test/java/org/example/{rng.choice(['Parser', 'Cache', 'Client'])}Test{i}.java"
                for i in range(k)]
    if category in ("bug_kw", "bug_nokw", "bug_foreign"):
        k = rng.choice([1, 1, 2, 2, 3, 4, 5, 8])
    elif category in ("feature", "refactor"):
        k = rng.choice([2, 3, 5, 7, 8, 10, 14])
    elif category == "build":
        k = rng.choice([1, 1, 2, 9])
    elif category == "misc":
        k = rng.choice([0, 1, 3, 12, 25])
    else:
        k = rng.choice([1, 1, 2, 3])
    return [f"src/main/java/org/example/{rng.choice(COMPONENTS).replace(' ', '_')}/F{i}.java"
            for i in range(k)]


class IssueTracker:
    def __init__(self, rng):
        self.rng = rng
        self.issues = []

    def new(self, bug_like):
        rng = self.rng
        iid = f"ISSUE-{len(self.issues) + 1}"
        if bug_like:
            title = fill(rng, rng.choice(BUG_TITLES))
            labels = rng.choice([["bug"], ["bug"], ["bug", "P2"], ["defect"], ["crash"], []])
            body = rng.choice(["Steps to reproduce attached.",
                               "Stack trace:\n  at org.example.Main.run(Main.java:42)",
                               "Exception in thread \"main\" java.lang.IllegalStateException",
                               "Happens every time."])
        else:
            title = fill(rng, rng.choice(FEATURE_TITLES))
            labels = rng.choice([["enhancement"], ["feature"], ["documentation"],
                                 ["improvement"], [], ["question"]])
            body = "It would be useful to have this."
        self.issues.append({"id": iid, "title": title, "body": body, "labels": labels})
        return iid


def make_corpus(rng, tracker, n, prefix, start_ts):
    weights = [c[2] for c in CATEGORIES]
    commits, gold = [], []
    for i in range(n):
        cat, label, _, templates = rng.choices(CATEGORIES, weights=weights)[0]
        message = fill(rng, rng.choice(templates))
        issue_ids = []
        link_p = {"bug_kw": 0.45, "bug_nokw": 0.6, "bug_foreign": 0.4}.get(cat, 0.25)
        if rng.random() < link_p:
            bug_like = label == "positive"
            if rng.random() < 0.1:
                bug_like = not bug_like  # mislabeled or misfiled reports
            issue_ids.append(tracker.new(bug_like))
            if rng.random() < 0.05:
                issue_ids.append(f"ISSUE-GONE-{rng.randint(1, 99)}")  # dangling
        files = [{"path": p, "additions": rng.randint(0, 120), "deletions": rng.randint(0, 60)}
                 for p in files_for(rng, cat)]
        cid = f"{prefix}{rng.getrandbits(64):016x}"
        commits.append({"id": cid, "message": message,
                        "author": rng.choice(["alice", "bob", "carol", "dmitri", "eun"]),
                        "timestamp": start_ts + 3600 * i, "files": files,
                        "issue_ids": issue_ids})
        gold.append({"artifact_id": cid, "label": label})
    return commits, gold


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def main():
    rng = random.Random(SEED)
    tracker = IssueTracker(rng)
    train, _ = make_corpus(rng, tracker, 2000, "t", 1_500_000_000)
    test, gold = make_corpus(rng, tracker, 240, "g", 1_600_000_000)
    write_jsonl(OUT / "train_commits.jsonl", train)
    write_jsonl(OUT / "test_commits.jsonl", test)
    write_jsonl(OUT / "test_gold.jsonl", gold)
    write_jsonl(OUT / "issues.jsonl", tracker.issues)


if __name__ == "__main__":
    main()
