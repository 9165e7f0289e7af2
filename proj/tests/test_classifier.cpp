#include <cmath>

#include "doctest.h"
#include "rplids/classifier.hpp"
#include "rplids/rng.hpp"

using namespace rplids;

namespace {

Dataset separable_1d(int n) {
  Dataset ds(1);
  for (int i = 0; i < n; ++i) {
    const double x = (i % 2 ? 1.0 : -1.0) * (1 + i);
    ds.add({x}, x > 0 ? Label::malicious : Label::benign);
  }
  return ds;
}

Dataset noise(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds(dim);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(dim);
    for (auto& v : row) v = rng.uniform();
    ds.add(row, i % 2 ? Label::malicious : Label::benign);
  }
  return ds;
}

}  // namespace

TEST_CASE("metrics from a hand-built confusion") {
  const auto m = Metrics::from({3, 1, 4, 2});
  CHECK(m.accuracy == doctest::Approx(0.7));
  CHECK(m.tpr == doctest::Approx(0.6));
  CHECK(m.fpr == doctest::Approx(0.2));
  CHECK(m.accuracy_defined);
}

TEST_CASE("metric identities over random confusion matrices") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    Confusion c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    const auto m = Metrics::from(c);
    if (c.total() == 0) {
      CHECK(!m.accuracy_defined);
      continue;
    }
    CHECK(m.accuracy == doctest::Approx(double(c.tp + c.tn) / double(c.total())));
    if (c.tp + c.fn) CHECK(m.tpr == doctest::Approx(double(c.tp) / double(c.tp + c.fn)));
    else CHECK((!m.tpr_defined && std::isnan(m.tpr)));
    if (c.fp + c.tn) CHECK(m.fpr == doctest::Approx(double(c.fp) / double(c.fp + c.tn)));
    else CHECK((!m.fpr_defined && std::isnan(m.fpr)));
  }
}

TEST_CASE("score counts the confusion") {
  using L = Label;
  const std::vector<L> truth{L::malicious, L::malicious, L::benign, L::benign};
  const std::vector<L> pred{L::malicious, L::benign, L::malicious, L::benign};
  const auto m = score(truth, pred);
  CHECK(m.confusion == Confusion{1, 1, 1, 1});
  // Constant prediction on balanced data sits at the base rate.
  CHECK(score(truth, std::vector<L>(4, L::benign)).accuracy == 0.5);
  CHECK_THROWS_AS(score(truth, {L::benign}), std::invalid_argument);
}

TEST_CASE("separable data is learned perfectly") {
  const auto ds = separable_1d(100);
  const auto f = Forest::train(ds, {}, 1);
  CHECK(f.tree_count() == 100);
  std::size_t right = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) right += f.predict(ds.x[i]) == ds.y[i];
  CHECK(right == 100);
  const auto cv = kfold_cv(ds, 10, 1);
  CHECK(cv.accuracy == 1.0);
  CHECK(cv.fpr == 0.0);
}

TEST_CASE("shuffled labels stay near chance") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ds = noise(200, 35, seed);
    const auto m = kfold_cv(ds, 10, seed, {30, 0, 1, 0});
    CHECK(m.accuracy >= 0.35);
    CHECK(m.accuracy <= 0.65);
  }
}

TEST_CASE("training is deterministic per seed") {
  const auto ds = noise(80, 6, 9);
  const auto a = Forest::train(ds, {20, 0, 1, 0}, 5);
  const auto b = Forest::train(ds, {20, 0, 1, 0}, 5);
  const auto c = Forest::train(ds, {20, 0, 1, 0}, 6);
  Rng rng(11);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform();
    CHECK(a.malicious_votes(x) == b.malicious_votes(x));
    differs |= a.malicious_votes(x) != c.malicious_votes(x);
  }
  CHECK(differs);
  CHECK(a.summary() == b.summary());
  CHECK(cross_val_predict(ds, 5, 3, {10, 0, 1, 0}) == cross_val_predict(ds, 5, 3, {10, 0, 1, 0}));
}

TEST_CASE("vote rules: unanimity, tie, single tree") {
  const auto ds = separable_1d(40);
  Dataset flipped(1);
  for (std::size_t i = 0; i < ds.size(); ++i)
    flipped.add(ds.x[i], ds.y[i] == Label::benign ? Label::malicious : Label::benign);
  const auto up = Forest::train(ds, {1, 0, 1, 0}, 1).trees().front();
  const auto down = Forest::train(flipped, {1, 0, 1, 0}, 1).trees().front();
  REQUIRE(up.predict({50.0}) == Label::malicious);
  REQUIRE(down.predict({50.0}) == Label::benign);

  CHECK(Forest::from_trees({up, up, up}, 1).predict({50.0}) == Label::malicious);
  CHECK(Forest::from_trees({up, down}, 1).predict({50.0}) == Label::benign);
  CHECK(Forest::from_trees({up, down}, 1).malicious_votes({50.0}) == 1);
  CHECK(Forest::from_trees({down}, 1).predict({-50.0}) == down.predict({-50.0}));
  CHECK_THROWS_AS(Forest::from_trees({up}, 1).predict({1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("bad datasets are rejected") {
  Dataset one_class(2);
  for (int i = 0; i < 20; ++i) one_class.add({double(i), 0.0}, Label::benign);
  CHECK_THROWS_AS(Forest::train(one_class, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(kfold_cv(one_class, 10, 1), std::invalid_argument);

  auto small = separable_1d(12);
  CHECK_THROWS_AS(assign_folds(small, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(assign_folds(small, 1, 1), std::invalid_argument);

  Dataset nan_ds(1);
  nan_ds.add({std::nan("")}, Label::benign);
  CHECK_THROWS_AS(nan_ds.validate(), std::invalid_argument);
  Dataset ragged(2);
  ragged.add({1.0}, Label::benign);
  CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
}

TEST_CASE("stratified folds track the class ratio") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Dataset ds(1);
    Rng rng(seed);
    const int pos = 30 + static_cast<int>(rng.below(40)), neg = 30 + static_cast<int>(rng.below(70));
    for (int i = 0; i < pos; ++i) ds.add({1.0}, Label::malicious);
    for (int i = 0; i < neg; ++i) ds.add({0.0}, Label::benign);
    const int k = 10;
    const auto folds = assign_folds(ds, k, seed);
    CHECK(folds == assign_folds(ds, k, seed));
    std::vector<int> p(k), n(k);
    for (std::size_t r = 0; r < ds.size(); ++r) ++(ds.y[r] == Label::malicious ? p : n)[folds[r]];
    for (int f = 0; f < k; ++f) {
      CHECK(std::abs(p[f] - double(pos) / k) <= 1.0);
      CHECK(std::abs(n[f] - double(neg) / k) <= 1.0);
    }
  }
}

TEST_CASE("grouped folds keep groups together") {
  Dataset ds(1);
  for (int w = 0; w < 50; ++w) {
    ds.add({double(w)}, Label::benign, w);
    ds.add({double(w) + 0.5}, Label::malicious, w);
  }
  const auto folds = assign_folds(ds, 10, 4);
  for (std::size_t r = 0; r + 1 < ds.size(); r += 2) CHECK(folds[r] == folds[r + 1]);
  std::vector<int> size(10);
  for (int f : folds) ++size[f];
  for (int s : size) CHECK(s == 10);
}

TEST_CASE("mtry and depth caps are honoured") {
  const auto ds = noise(100, 9, 3);
  const auto shallow = Forest::train(ds, {10, 3, 1, 2}, 1);
  for (const auto& t : shallow.trees()) CHECK(t.depth() <= 2);
  const auto leafy = Forest::train(ds, {10, 0, 20, 0}, 1);
  const auto deep = Forest::train(ds, {10, 0, 1, 0}, 1);
  std::size_t a = 0, b = 0;
  for (const auto& t : leafy.trees()) a += t.node_count();
  for (const auto& t : deep.trees()) b += t.node_count();
  CHECK(a < b);
  CHECK(deep.summary().rfind("trees=10 ", 0) == 0);
}
