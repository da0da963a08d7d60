#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <flipforge/combinations.hpp>
#include <flipforge/dictionary.hpp>
#include <flipforge/error.hpp>
#include <flipforge/rng.hpp>

#include "oracles.hpp"

using namespace flipforge;

TEST_CASE("build_dictionary scales by label and beta") {
  std::vector<Comparison> data = {
      {(Vector(2) << 1.0, 2.0).finished(), 1},
      {(Vector(2) << -0.5, 0.25).finished(), -1},
  };
  const FlipDictionary V = build_dictionary(data, 0.5);
  CHECK(V.dim() == 2);
  CHECK(V.size() == 2);
  CHECK(V.matrix()(0, 0) == 0.5);
  CHECK(V.matrix()(1, 0) == 1.0);
  CHECK(V.matrix()(0, 1) == 0.25);
  CHECK(V.matrix()(1, 1) == -0.125);
  CHECK(V.beta() == 0.5);
  CHECK(V.max_norm() == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("build_dictionary rejects bad input with the offending index") {
  std::vector<Comparison> data = {
      {(Vector(2) << 1.0, 0.0).finished(), 1},
      {Vector::Zero(2), 1},
  };
  try {
    build_dictionary(data, 1.0);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("degenerate comparison") != std::string::npos);
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 1);
  }

  data[1] = {(Vector(3) << 1.0, 0.0, 0.0).finished(), 1};
  try {
    build_dictionary(data, 1.0);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(*e.index() == 1);
  }

  data[1] = {(Vector(2) << 1.0, 1.0).finished(), 0};
  CHECK_THROWS_AS(build_dictionary(data, 1.0), InvalidInput);
  data[1].label = -1;
  CHECK_THROWS_AS(build_dictionary(data, 0.0), InvalidInput);
}

TEST_CASE("unnormalized comparisons are reported, not rejected") {
  std::vector<Comparison> data = {
      {(Vector(2) << 1.0, 0.0).finished(), 1},
      {(Vector(2) << 3.0, 0.0).finished(), 1},
      {(Vector(2) << 2.0, 0.0).finished(), -1},
  };
  CHECK(unnormalized_comparisons(data) == std::vector<std::size_t>{1});
  CHECK_NOTHROW(build_dictionary(data, 1.0));
}

TEST_CASE("coherence of a hand-checked matrix") {
  Matrix V(2, 3);
  V << 1, 0, 1,
       0, 1, 1;
  CHECK(mutual_coherence(V) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(mutual_coherence(FlipDictionary(V, 1.0)) == doctest::Approx(0.7071067811865476));
  CHECK_THROWS_AS(mutual_coherence(Matrix(Matrix::Ones(3, 1))), InvalidInput);
}

TEST_CASE("coherence matches the pairwise oracle and is permutation and scale invariant") {
  Rng rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform_index(10));
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(15));
    const Matrix V = oracle::random_matrix(rng, d, n);
    const double mu = mutual_coherence(V);
    CHECK(mu == doctest::Approx(oracle::pairwise_coherence(V)).epsilon(1e-12));

    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    Matrix P(d, n), S(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      P.col(j) = V.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
      S.col(j) = V.col(j) * std::exp(2.0 * rng.normal());
    }
    CHECK(mutual_coherence(P) == doctest::Approx(mu).epsilon(1e-12));
    CHECK(mutual_coherence(S) == doctest::Approx(mu).epsilon(1e-12));
  }
}

TEST_CASE("guaranteed sparsity table") {
  CHECK(max_guaranteed_sparsity(0.1971, 1.0, 1.0, 1000) == 3);
  CHECK(max_guaranteed_sparsity(0.807, 1.0, 1.0, 1000) == 1);
  CHECK(max_guaranteed_sparsity(0.263, 1.0, 1.0, 1000) == 2);
  // Strict inequality at the boundary: mu = 1/5 allows K = 2, not 3.
  CHECK(max_guaranteed_sparsity(0.2, 1.0, 1.0, 1000) == 2);
  CHECK(max_guaranteed_sparsity(1.0 / 3.0, 1.0, 1.0, 1000) == 1);
  CHECK(max_guaranteed_sparsity(0.9, 1.0, 2.0, 1000) == 0);
  CHECK(max_guaranteed_sparsity(0.0, 1.0, 1.0, 7) == 7);
  CHECK(max_guaranteed_sparsity(0.01, 1.0, 1.0, 4) == 4);
}

TEST_CASE("guaranteed sparsity is monotone in mu and in B/b") {
  Rng rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const double mu1 = std::abs(rng.normal()) * 0.2;
    const double mu2 = mu1 + std::abs(rng.normal()) * 0.1;
    const double b = 0.5 + std::abs(rng.normal());
    const double B1 = b * (1.0 + std::abs(rng.normal()));
    const double B2 = B1 * (1.0 + std::abs(rng.normal()));
    CHECK(max_guaranteed_sparsity(mu2, b, B1, 1000) <= max_guaranteed_sparsity(mu1, b, B1, 1000));
    CHECK(max_guaranteed_sparsity(mu1, b, B2, 1000) <= max_guaranteed_sparsity(mu1, b, B1, 1000));
  }
}

TEST_CASE("dictionary-level K_coh for tiny dictionaries") {
  const FlipDictionary one(Matrix::Ones(3, 1), 1.0);
  CHECK(max_guaranteed_sparsity(one) == 1);
  Matrix I = Matrix::Identity(4, 4);
  CHECK(max_guaranteed_sparsity(FlipDictionary(I, 1.0)) == 4);
}

TEST_CASE("gaussian dictionary shape and determinism") {
  const FlipDictionary V = gaussian_dictionary(64, 20, 42);
  CHECK(V.dim() == 64);
  CHECK(V.size() == 20);
  for (Eigen::Index j = 0; j < 20; ++j) CHECK(V.norms()[j] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(V.matrix() == gaussian_dictionary(64, 20, 42).matrix());
  CHECK(V.matrix() != gaussian_dictionary(64, 20, 43).matrix());
  const FlipDictionary raw = gaussian_dictionary(8, 3, 42, false);
  CHECK(raw.max_norm() != doctest::Approx(1.0));
}

TEST_CASE("low-coherence construction reaches its target and reports the exact value") {
  std::vector<double> achieved;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const LowCoherenceResult r = low_coherence_dictionary(200, 200, seed, 0.20, 1'000'000);
    REQUIRE(r.achieved_mu.has_value());
    CHECK(r.reached_target);
    CHECK(*r.achieved_mu <= 0.20);
    CHECK(*r.achieved_mu == doctest::Approx(oracle::pairwise_coherence(r.dictionary.matrix()))
                                .epsilon(1e-12));
    CHECK(r.dictionary.cached_coherence() == r.achieved_mu);
    CHECK(max_guaranteed_sparsity(r.dictionary) == 3);
    achieved.push_back(*r.achieved_mu);
  }
  for (double mu : achieved) CHECK(std::abs(mu - 0.197) <= 0.02);
}

TEST_CASE("low-coherence construction reports an unreachable target") {
  const LowCoherenceResult r = low_coherence_dictionary(4, 30, 9, 0.05, 200);
  CHECK_FALSE(r.reached_target);
  CHECK(r.resamples == 200);
  CHECK(*r.achieved_mu > 0.05);
  CHECK_THROWS_AS(low_coherence_dictionary(4, 4, 9, 1.5, 10), InvalidInput);
}

TEST_CASE("low-coherence subset beats a random subset on a correlated pool") {
  // Columns share a common direction, so a random subset is highly coherent.
  Rng rng(77);
  const Eigen::Index d = 16, n = 60;
  Matrix V(d, n);
  const Vector common = oracle::random_vector(rng, d);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = j % 3 == 0 ? 0.05 : 1.5;
    V.col(j) = oracle::random_vector(rng, d) + w * common;
  }
  const FlipDictionary dict(V, 1.0);
  const std::size_t size = 8;
  const SubsetSelection sel = low_coherence_subset(dict, 0.6, size, 3);
  REQUIRE(sel.complete);
  REQUIRE(sel.indices.size() == size);
  const double mu_selected = mutual_coherence(dict.select(sel.indices));
  CHECK(mu_selected < 0.6);

  std::vector<std::size_t> first(size);
  for (std::size_t i = 0; i < size; ++i) first[i] = i;
  const double mu_prefix = mutual_coherence(dict.select(first));
  CHECK(mu_selected < mu_prefix);

  const SubsetSelection all = low_coherence_subset(dict, 1.0, static_cast<std::size_t>(n), 3);
  CHECK(all.complete);
  CHECK(all.indices.size() == static_cast<std::size_t>(n));

  const SubsetSelection tight = low_coherence_subset(dict, 1e-6, 5, 3);
  CHECK_FALSE(tight.complete);
  CHECK(tight.indices.size() == 1);
}

TEST_CASE("combine_columns and attack_residual") {
  Matrix V(2, 3);
  V << 1, 0, 2,
       0, 1, 2;
  const FlipDictionary dict(V, 1.0);
  const Vector sum = combine_columns(dict, {1, 0, 1});
  CHECK(sum[0] == 3.0);
  CHECK(sum[1] == 2.0);
  const Vector g = (Vector(2) << -3.0, -2.0).finished();
  CHECK(attack_residual(dict, {1, 0, 1}, g) == 0.0);
  CHECK(attack_residual(dict, {0, 0, 0}, g) == doctest::Approx(std::sqrt(13.0)));
  CHECK_THROWS_AS(attack_residual(dict, {1, 0}, g), InvalidInput);
  CHECK_THROWS_AS(attack_residual(dict, {1, 2, 0}, g), InvalidInput);
  CHECK_THROWS_AS(attack_residual(dict, {1, 0, 0}, Vector::Zero(3)), InvalidInput);
}

TEST_CASE("select keeps column order and rejects out-of-range indices") {
  Matrix V(1, 3);
  V << 1, 2, 3;
  const FlipDictionary dict(V, 2.0);
  const std::vector<std::size_t> idx = {2, 0};
  const FlipDictionary s = dict.select(idx);
  CHECK(s.matrix()(0, 0) == 3.0);
  CHECK(s.matrix()(0, 1) == 1.0);
  CHECK(s.beta() == 2.0);
  const std::vector<std::size_t> bad = {3};
  CHECK_THROWS_AS(dict.select(bad), InvalidInput);
}

TEST_CASE("combination enumeration order and counts") {
  std::vector<std::vector<std::size_t>> seen;
  for_each_combination(4, 2, [&](std::span<const std::size_t> c) {
    seen.emplace_back(c.begin(), c.end());
    return true;
  });
  const std::vector<std::vector<std::size_t>> expected = {{0, 1}, {0, 2}, {0, 3},
                                                          {1, 2}, {1, 3}, {2, 3}};
  CHECK(seen == expected);
  CHECK(binomial(20, 10) == 184756);
  CHECK(binomial(3, 5) == 0);
  CHECK(binomial(200, 100) == std::numeric_limits<std::uint64_t>::max());
  std::size_t count = 0;
  for_each_combination(5, 0, [&](std::span<const std::size_t> c) {
    CHECK(c.empty());
    ++count;
    return true;
  });
  CHECK(count == 1);
}
