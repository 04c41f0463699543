#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "pdml/errors.hpp"
#include "pdml/losses.hpp"
#include "pdml/matrix.hpp"
#include "pdml/rng.hpp"

using namespace pdml;

namespace {

Matrix rows_of(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.set_row(i, rows[i]);
  return m;
}

/** Eq.-style NCA value via naive exponentials, no max-shift. */
double naive_nca_value(std::span<const double> anchor, std::span<const double> positive,
                       const Matrix& negatives) {
  double denom = 0.0;
  for (std::size_t i = 0; i < negatives.rows; ++i) {
    denom += std::exp(-squared_distance(anchor, negatives.row(i)));
  }
  return squared_distance(anchor, positive) + std::log(denom);
}

/** The semihard selection and hinge, re-derived triplet by triplet. */
double brute_force_semihard(const Matrix& embeddings, const std::vector<int>& labels,
                            double margin) {
  const std::size_t n = embeddings.rows;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || labels[i] != labels[j]) continue;
      const double d_pos = squared_distance(embeddings.row(i), embeddings.row(j));
      bool found = false;
      double best = 0.0;
      double farthest = -1.0;
      std::size_t chosen = n;
      std::size_t fallback = n;
      for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == labels[i]) continue;
        const double d = squared_distance(embeddings.row(i), embeddings.row(k));
        if (d > d_pos && (!found || d < best)) {
          found = true;
          best = d;
          chosen = k;
        }
        if (d > farthest) {
          farthest = d;
          fallback = k;
        }
      }
      if (fallback == n) continue;
      const double d_neg = found ? best : farthest;
      (void)chosen;
      total += std::max(0.0, d_pos + margin - d_neg);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("ranking loss is the Heaviside of the distance gap") {
  CHECK(ranking_loss(1.0, 2.0) == 0.0);
  CHECK(ranking_loss(2.0, 1.0) == 1.0);
  CHECK(ranking_loss(1.5, 1.5) == 0.0);
  CHECK_THROWS_AS(ranking_loss(std::nan(""), 1.0), UsageError);
}

TEST_CASE("ranking loss survives strictly monotone transforms") {
  Rng rng(5);
  std::uniform_real_distribution<double> dist(0.01, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = dist(rng);
    const double b = dist(rng);
    const double base = ranking_loss(a, b);
    CHECK(ranking_loss(std::exp(a), std::exp(b)) == base);
    CHECK(ranking_loss(2.0 * a + 1.0, 2.0 * b + 1.0) == base);
    CHECK(ranking_loss(a * a * a, b * b * b) == base);
    CHECK(ranking_loss(std::sqrt(a), std::sqrt(b)) == base);
  }
}

TEST_CASE("nca value when the single negative ties the positive") {
  const std::vector<double> anchor = {0.0, 0.0};
  const std::vector<double> positive = {1.0, 0.0};
  const Matrix negatives = rows_of({{0.0, 1.0}});
  const auto out = nca_loss(anchor, positive, negatives);
  CHECK(out.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nca value with two negatives at the positive distance is log 2") {
  const std::vector<double> anchor = {0.0, 0.0};
  const std::vector<double> positive = {1.0, 0.0};
  const Matrix negatives = rows_of({{0.0, 1.0}, {-1.0, 0.0}});
  const auto out = nca_loss(anchor, positive, negatives);
  CHECK(out.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("nca value can be negative because the positive is excluded") {
  const std::vector<double> anchor = {0.0};
  const std::vector<double> positive = {0.0};
  const Matrix negatives = rows_of({{std::sqrt(10.0)}});
  const auto out = nca_loss(anchor, positive, negatives);
  CHECK(out.value == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("nca rejects degenerate inputs") {
  const std::vector<double> anchor = {0.0, 0.0};
  const std::vector<double> positive = {1.0, 0.0};
  CHECK_THROWS_AS(nca_loss(anchor, positive, Matrix(0, 2)), UsageError);
  CHECK_THROWS_AS(nca_loss(anchor, positive, Matrix(1, 3)), UsageError);
}

TEST_CASE("nca gradients match finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 15; ++trial) {
    auto anchor = test::random_vector(4, rng, -1.5, 1.5);
    auto positive = test::random_vector(4, rng, -1.5, 1.5);
    Matrix negatives(3, 4);
    test::fill_uniform(negatives, rng, -1.5, 1.5);

    const auto out = nca_loss(anchor, positive, negatives);
    const auto loss = [&] { return nca_loss(anchor, positive, negatives).value; };

    for (std::size_t i = 0; i < anchor.size(); ++i) {
      CHECK(test::grad_rel_err(out.grad_anchor[i],
                               test::central_diff(loss, anchor[i])) < 1e-5);
      CHECK(test::grad_rel_err(out.grad_positive[i],
                               test::central_diff(loss, positive[i])) < 1e-5);
    }
    for (std::size_t k = 0; k < negatives.data.size(); ++k) {
      const std::size_t r = k / negatives.cols;
      const std::size_t c = k % negatives.cols;
      CHECK(test::grad_rel_err(out.grad_negatives[r][c],
                               test::central_diff(loss, negatives.data[k])) < 1e-5);
    }
  }
}

TEST_CASE("log-sum-exp evaluation agrees with naive exponentials") {
  Rng rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    auto anchor = test::random_vector(3, rng, -1.0, 1.0);
    auto positive = test::random_vector(3, rng, -1.0, 1.0);
    Matrix negatives(4, 3);
    test::fill_uniform(negatives, rng, -1.0, 1.0);
    // Distances here stay far below 30, the no-overflow regime.
    const double naive = naive_nca_value(anchor, positive, negatives);
    const double stable = nca_loss(anchor, positive, negatives).value;
    CHECK(std::abs(stable - naive) <= 1e-9 * std::max(1.0, std::abs(naive)));
  }
}

TEST_CASE("proxy nca is the same arithmetic as nca") {
  Rng rng(41);
  auto anchor = test::random_vector(5, rng, -2.0, 2.0);
  auto positive = test::random_vector(5, rng, -2.0, 2.0);
  Matrix negatives(3, 5);
  test::fill_uniform(negatives, rng, -2.0, 2.0);

  const auto a = nca_loss(anchor, positive, negatives);
  const auto b = proxy_nca_loss(anchor, positive, negatives);
  CHECK(a.value == b.value);
  CHECK(a.grad_anchor == b.grad_anchor);
  CHECK(a.grad_positive == b.grad_positive);
  CHECK(a.grad_negatives == b.grad_negatives);
}

TEST_CASE("triplet hinge value cases") {
  // Squared distances: d(x,y)=1, d(x,z)=2, margin 0.5 -> inactive.
  const std::vector<double> anchor = {0.0};
  const std::vector<double> pos1 = {1.0};
  const std::vector<double> neg1 = {std::sqrt(2.0)};
  const auto inactive = triplet_hinge_loss(anchor, pos1, neg1, 0.5);
  CHECK(inactive.value == 0.0);
  for (double g : inactive.grad_anchor) CHECK(g == 0.0);
  for (double g : inactive.grad_positive) CHECK(g == 0.0);
  for (double g : inactive.grad_negatives[0]) CHECK(g == 0.0);

  // d(x,y)=2, d(x,z)=1, margin 1 -> 2 + 1 - 1 = 2.
  const std::vector<double> pos2 = {std::sqrt(2.0)};
  const std::vector<double> neg2 = {1.0};
  const auto active = triplet_hinge_loss(anchor, pos2, neg2, 1.0);
  CHECK(active.value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("active triplet gradients match finite differences") {
  Rng rng(53);
  int accepted = 0;
  while (accepted < 15) {
    auto anchor = test::random_vector(3, rng, -1.0, 1.0);
    auto positive = test::random_vector(3, rng, -1.0, 1.0);
    auto negative = test::random_vector(3, rng, -1.0, 1.0);
    const double margin = 1.0;
    const auto out = triplet_hinge_loss(anchor, positive, negative, margin);
    if (out.value < 0.1) continue;  // stay away from the kink
    ++accepted;

    const auto loss = [&] {
      return triplet_hinge_loss(anchor, positive, negative, margin).value;
    };
    for (std::size_t i = 0; i < anchor.size(); ++i) {
      CHECK(test::grad_rel_err(out.grad_anchor[i],
                               test::central_diff(loss, anchor[i])) < 1e-5);
      CHECK(test::grad_rel_err(out.grad_positive[i],
                               test::central_diff(loss, positive[i])) < 1e-5);
      CHECK(test::grad_rel_err(out.grad_negatives[0][i],
                               test::central_diff(loss, negative[i])) < 1e-5);
    }
  }
}

TEST_CASE("proxy triplet mirrors the triplet hinge") {
  Rng rng(67);
  auto anchor = test::random_vector(4, rng, -1.0, 1.0);
  auto positive = test::random_vector(4, rng, -1.0, 1.0);
  auto negative = test::random_vector(4, rng, -1.0, 1.0);
  const auto a = triplet_hinge_loss(anchor, positive, negative, 0.7);
  const auto b = proxy_triplet_loss(anchor, positive, negative, 0.7);
  CHECK(a.value == b.value);
  CHECK(a.grad_anchor == b.grad_anchor);
  CHECK(a.grad_positive == b.grad_positive);
  CHECK(a.grad_negatives == b.grad_negatives);
}

TEST_CASE("semihard batch is zero when every hinge is inactive") {
  const Matrix embeddings = rows_of({{0.0}, {0.1}, {10.0}, {10.1}});
  const std::vector<int> labels = {0, 0, 1, 1};
  const auto out = semihard_triplet_batch_loss(embeddings, labels, 1.0);
  CHECK(out.value == 0.0);
  CHECK(out.triplet_count == 4);
  CHECK_FALSE(out.single_class);
  for (double g : out.grad.data) CHECK(g == 0.0);
}

TEST_CASE("semihard 2x2 hand case equals exhaustive enumeration") {
  const Matrix embeddings = rows_of({{0.0}, {1.0}, {1.5}, {3.0}});
  const std::vector<int> labels = {0, 0, 1, 1};
  const double margin = 2.0;
  const auto out = semihard_triplet_batch_loss(embeddings, labels, margin);
  const double want = brute_force_semihard(embeddings, labels, margin);
  CHECK(out.value == doctest::Approx(want).epsilon(1e-12));
  CHECK(out.value > 0.0);
}

TEST_CASE("semihard matches the brute-force rule on random batches") {
  Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 8;
    Matrix embeddings(n, 2);
    test::fill_uniform(embeddings, rng, -2.0, 2.0);
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> pick(0, 2);
    for (auto& l : labels) l = pick(rng);

    const auto out = semihard_triplet_batch_loss(embeddings, labels, 1.0);
    const double want = brute_force_semihard(embeddings, labels, 1.0);
    CHECK(out.value == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("semihard value is invariant under batch permutation") {
  Rng rng(83);
  Matrix embeddings(6, 3);
  test::fill_uniform(embeddings, rng, -1.0, 1.0);
  std::vector<int> labels = {0, 0, 1, 1, 2, 2};
  const auto base = semihard_triplet_batch_loss(embeddings, labels, 1.0);

  const std::vector<std::size_t> perm = {4, 2, 0, 5, 1, 3};
  Matrix shuffled(6, 3);
  std::vector<int> shuffled_labels(6);
  for (std::size_t i = 0; i < 6; ++i) {
    shuffled.set_row(i, embeddings.row_copy(perm[i]));
    shuffled_labels[i] = labels[perm[i]];
  }
  const auto permuted = semihard_triplet_batch_loss(shuffled, shuffled_labels, 1.0);
  CHECK(permuted.value == doctest::Approx(base.value).epsilon(1e-12));
}

TEST_CASE("single-class batch returns the warning flag") {
  const Matrix embeddings = rows_of({{0.0}, {1.0}, {2.0}});
  const std::vector<int> labels = {4, 4, 4};
  const auto out = semihard_triplet_batch_loss(embeddings, labels, 1.0);
  CHECK(out.single_class);
  CHECK(out.value == 0.0);
  CHECK(out.triplet_count == 0);
}

TEST_CASE("semihard gradients match finite differences on a stable batch") {
  const Matrix base = rows_of({{0.0, 0.0}, {1.0, 0.3}, {1.5, -0.9}, {3.0, 1.2}});
  const std::vector<int> labels = {0, 0, 1, 1};
  const double margin = 2.0;

  Matrix embeddings = base;
  const auto out = semihard_triplet_batch_loss(embeddings, labels, margin);
  REQUIRE(out.value > 0.0);

  const auto loss = [&] {
    return semihard_triplet_batch_loss(embeddings, labels, margin).value;
  };
  for (std::size_t k = 0; k < embeddings.data.size(); ++k) {
    const double fd = test::central_diff(loss, embeddings.data[k]);
    CHECK(test::grad_rel_err(out.grad.data[k], fd) < 1e-5);
  }
}

}  // TEST_SUITE
