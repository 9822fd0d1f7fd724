#include <doctest.h>

#include <cmath>
#include <random>

#include "heurist/error.hpp"
#include "heurist/label_model.hpp"
#include "test_util.hpp"

using namespace heurist;

namespace {

// Bayes rule written as a product of likelihoods rather than log-odds.
double oracle_posterior(const std::vector<double> &alpha, double p,
                        const std::vector<int> &row) {
  double pos = p, neg = 1.0 - p;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] == 1) {
      pos *= alpha[j];
      neg *= 1.0 - alpha[j];
    } else if (row[j] == -1) {
      pos *= 1.0 - alpha[j];
      neg *= alpha[j];
    }
  }
  return pos / (pos + neg);
}

std::vector<Vote> votes(std::initializer_list<int> xs) {
  std::vector<Vote> out;
  for (int x : xs) out.push_back(static_cast<Vote>(x));
  return out;
}

LabelModelParams params(std::vector<double> alpha, double p) {
  LabelModelParams out;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    out.heuristics.push_back("h" + std::to_string(j));
  }
  out.propensities.assign(alpha.size(), 0.5);
  out.accuracies = std::move(alpha);
  out.class_balance = p;
  return out;
}

LabelMatrix make_matrix(std::size_t n, std::size_t m, std::vector<Vote> cells) {
  std::vector<std::string> rows, cols;
  for (std::size_t i = 0; i < n; ++i) rows.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < m; ++j) cols.push_back("h" + std::to_string(j));
  return LabelMatrix(rows, cols, std::move(cells));
}

} // namespace

TEST_CASE("majority vote") {
  CHECK(majority_vote(votes({1, 1, -1})) == Vote::positive);
  CHECK(majority_vote(votes({1, -1, 0})) == Vote::abstain);
  CHECK(majority_vote(votes({0, 0, 0})) == Vote::abstain);
  CHECK(majority_vote(votes({-1, 0, 0})) == Vote::negative);
}

TEST_CASE("posterior closed-form examples") {
  CHECK(posterior(params({0.9}, 0.5), votes({1})) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(posterior(params({0.8, 0.8}, 0.5), votes({1, -1})) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(posterior(params({0.9, 0.6}, 0.5), votes({1, -1})) ==
        doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(posterior(params({0.9, 0.6}, 0.4), votes({0, 0})) == 0.4);
  CHECK_THROWS_AS(posterior(params({0.9}, 0.5), votes({1, 1})), DimensionError);
}

TEST_CASE("property: posterior agrees with the product-form oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(0.02, 0.98);
  for (int t = 0; t < 2000; ++t) {
    std::size_t m = 1 + rng() % 8;
    std::vector<double> alpha(m);
    std::vector<int> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      alpha[j] = a(rng);
      row[j] = static_cast<int>(rng() % 3) - 1;
    }
    double p = a(rng);
    std::vector<Vote> vr;
    for (int x : row) vr.push_back(static_cast<Vote>(x));
    REQUIRE(posterior(params(alpha, p), vr) ==
            doctest::Approx(oracle_posterior(alpha, p, row)).epsilon(1e-10));
  }
}

TEST_CASE("property: monotonicity, majority consistency, label-flip symmetry") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> good(0.51, 0.99);
  std::uniform_real_distribution<double> any(0.01, 0.99);
  for (int t = 0; t < 2000; ++t) {
    std::size_t m = 1 + rng() % 7;
    std::vector<double> alpha(m);
    std::vector<Vote> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      alpha[j] = any(rng);
      row[j] = static_cast<Vote>(static_cast<int>(rng() % 3) - 1);
    }
    double p = any(rng);

    // Monotonicity: turn one abstain into a positive vote from an α > 0.5 column.
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] == Vote::abstain) {
        auto boosted = row;
        boosted[j] = Vote::positive;
        auto prm = params(alpha, p);
        prm.accuracies[j] = good(rng);
        REQUIRE(posterior(prm, boosted) >= posterior(prm, row));
        break;
      }
    }

    // Label flip.
    std::vector<Vote> neg(row.size());
    for (std::size_t j = 0; j < m; ++j) neg[j] = negate(row[j]);
    const double orig = posterior(params(alpha, p), row);
    const double flip = posterior(params(alpha, 1.0 - p), neg);
    REQUIRE(flip == doctest::Approx(1.0 - orig).epsilon(1e-12));

    // Majority consistency with equal accuracies and p = 0.5.
    const double same = good(rng);
    auto mv = majority_vote(row);
    if (mv != Vote::abstain) {
      const double post = posterior(params(std::vector<double>(m, same), 0.5), row);
      REQUIRE(((post > 0.5) ? Vote::positive : Vote::negative) == mv);
    }
  }
}

TEST_CASE("fit: single all-positive column reaches the clamped fixed point") {
  // Hand iteration: α0 = 0.99 (agreement 1.0, clamped), p0 = 0.5.
  // Step 1: q = σ(logit 0.99) = 0.99 so α stays 0.99 and p moves to 0.99.
  // Step 2: q ≈ 0.9999, α and p both clamp to 0.99: no change.
  auto m = make_matrix(20, 1, std::vector<Vote>(20, Vote::positive));
  auto r = fit(m);
  CHECK(r.params.accuracies[0] == doctest::Approx(0.99));
  CHECK(r.params.class_balance == doctest::Approx(0.99));
  CHECK(r.params.propensities[0] == 1.0);
  CHECK(r.converged);
  CHECK(r.iterations == 2);
  CHECK_FALSE(r.flipped);
}

TEST_CASE("fit: identical columns get equal accuracy") {
  std::vector<Vote> cells;
  for (int i = 0; i < 30; ++i) {
    Vote v = (i % 3 == 0) ? Vote::negative : (i % 5 == 0 ? Vote::abstain : Vote::positive);
    cells.push_back(v);
    cells.push_back(v);
  }
  auto r = fit(make_matrix(30, 2, cells));
  CHECK(r.params.accuracies[0] == r.params.accuracies[1]);
  CHECK(r.params.propensities[0] == r.params.propensities[1]);
}

TEST_CASE("fit: zero-coverage column and all-abstain matrix") {
  auto m = make_matrix(4, 2,
                       votes({1, 0, 1, 0, -1, 0, 1, 0}));
  auto r = fit(m);
  CHECK(r.params.accuracies[1] == 0.5);
  CHECK(r.params.propensities[1] == 0.0);
  CHECK_FALSE(r.fitted[1]);
  CHECK(r.fitted[0]);

  CHECK_THROWS_AS(fit(make_matrix(3, 2, std::vector<Vote>(6, Vote::abstain))),
                  UnfitModelError);
}

TEST_CASE("fit: frozen class balance is respected") {
  auto planted = params({0.8, 0.7, 0.65, 0.9}, 0.5);
  planted.propensities = {0.4, 0.3, 0.5, 0.2};
  auto s = sample_synthetic(planted, 2000, 9);
  FitConfig cfg;
  cfg.class_balance = 0.35;
  CHECK(fit(s.matrix, cfg).params.class_balance == 0.35);
}

TEST_CASE("fit is deterministic and serial equals parallel") {
  auto planted = params({0.85, 0.6, 0.7, 0.75, 0.9}, 0.45);
  planted.propensities = {0.3, 0.5, 0.2, 0.4, 0.1};
  auto s = sample_synthetic(planted, 3000, 42);
  FitConfig par, ser;
  ser.parallel = false;
  auto a = fit(s.matrix, par);
  auto b = fit(s.matrix, par);
  auto c = fit(s.matrix, ser);
  CHECK(a.params == b.params);
  CHECK(a.params == c.params);
  CHECK(a.iterations == c.iterations);
  CHECK(a.log_likelihood == c.log_likelihood);
}

TEST_CASE("predict and abstain rate") {
  auto m = make_matrix(10, 2,
                       votes({1, 0, 0, 0, -1, 1, 1, 1, 0, 0, 0, -1, 1, -1, -1, -1, 0, 1, 1, 0}));
  auto prm = params({0.8, 0.7}, 0.4);
  auto labels = predict(prm, m);
  REQUIRE(labels.size() == 10);
  CHECK(labels[1].abstained);
  CHECK(labels[1].p_positive == 0.4);
  CHECK_FALSE(labels[0].abstained);
  CHECK(abstain_rate(labels) == doctest::Approx(0.2));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(labels[i].abstained == m.row_abstains(i));
  }
  CHECK(predict(prm, m, false) == labels);
  CHECK_THROWS_AS(predict(params({0.8}, 0.5), m), DimensionError);
}

TEST_CASE("sample_synthetic") {
  auto zero = params({0.8, 0.7}, 0.5);
  zero.propensities = {0.0, 0.0};
  auto s0 = sample_synthetic(zero, 500, 1);
  for (auto v : s0.matrix.cells()) REQUIRE(v == Vote::abstain);

  auto perfect = params({1.0, 1.0, 1.0}, 0.3);
  perfect.propensities = {1.0, 1.0, 1.0};
  auto s1 = sample_synthetic(perfect, 500, 2);
  for (std::size_t j = 0; j < 3; ++j) {
    REQUIRE(s1.matrix.column(j) == s1.labels);
  }

  auto cov = params({0.7, 0.8, 0.6}, 0.5);
  cov.propensities = {0.1, 0.25, 0.5};
  auto s2 = sample_synthetic(cov, 100000, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    auto col = s2.matrix.column(j);
    double hits = 0;
    for (auto v : col) hits += v != Vote::abstain;

    CHECK(std::abs(hits / 100000.0 - cov.propensities[j]) <= 0.01);
  }
  CHECK(sample_synthetic(cov, 100, 7).matrix == sample_synthetic(cov, 100, 7).matrix);
  CHECK_THROWS(sample_synthetic(cov, 0, 7));
  CHECK(unit_uniform(0) == 0.0);
  CHECK(unit_uniform(~0ULL) < 1.0);
}

TEST_CASE("model and label serialization") {
  testing::TempDir dir;
  auto m = make_matrix(4, 2, votes({1, 0, 1, 1, -1, 0, 0, -1}));
  auto r = fit(m);
  FitConfig cfg;
  write_model(dir / "model.json", r, cfg, matrix_hash(m));
  CHECK(read_model(dir / "model.json") == r.params);

  std::vector<ProbLabel> labels = {{"a", 0.25, false}, {"b,\"x\"", 0.4, true}};
  CHECK(labels_from_jsonl(labels_to_jsonl(labels), "l") == labels);
}
