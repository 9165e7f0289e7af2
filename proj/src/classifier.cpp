#include "rplids/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rplids/rng.hpp"

namespace rplids {

void Dataset::add(std::vector<double> row, Label label) {
  if (dim == 0 && x.empty()) dim = row.size();
  x.push_back(std::move(row));
  y.push_back(label);
}

void Dataset::add(std::vector<double> row, Label label, std::int64_t grp) {
  if (group.size() != y.size()) throw std::invalid_argument("dataset mixes grouped and ungrouped rows");
  add(std::move(row), label);
  group.push_back(grp);
}

std::map<Label, std::size_t> Dataset::class_counts() const {
  std::map<Label, std::size_t> out;
  for (Label l : y) ++out[l];
  return out;
}

void Dataset::validate() const {
  if (x.size() != y.size()) throw std::invalid_argument("dataset: feature and label counts differ");
  if (!group.empty() && group.size() != y.size()) throw std::invalid_argument("dataset: partial group column");
  for (const auto& row : x) {
    if (row.size() != dim) throw std::invalid_argument("dataset: ragged row");
    for (double v : row)
      if (std::isnan(v)) throw std::invalid_argument("dataset: NaN feature");
  }
}

// ---------------------------------------------------------------- trees

Label DecisionTree::predict(const std::vector<double>& x) const {
  int i = 0;
  while (nodes_[i].feature >= 0) i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  return nodes_[i].label;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const ForestParams& p, int mtry, Rng& rng)
      : ds_(ds), p_(p), mtry_(mtry), rng_(rng), order_(ds.dim) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    tree_ = DecisionTree{};
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  static double gini_sum(double pos, double n) {
    // n * gini, so weighted child impurities add directly.
    if (n <= 0) return 0;
    const double q = pos / n;
    return n * 2.0 * q * (1.0 - q);
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes_.size());
    tree_.nodes_.emplace_back();
    tree_.depth_ = std::max(tree_.depth_, depth);

    double pos = 0;
    for (auto r : rows) pos += ds_.y[r] == Label::malicious;
    const double n = static_cast<double>(rows.size());
    tree_.nodes_[id].label = pos > n - pos ? Label::malicious : Label::benign;

    const bool pure = pos == 0 || pos == n;
    const bool depth_capped = p_.max_depth > 0 && depth >= p_.max_depth;
    if (pure || depth_capped || rows.size() < 2 * static_cast<std::size_t>(p_.min_leaf)) return id;

    const Split s = best_split(rows);
    if (s.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (ds_.x[r][s.feature] <= s.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes_[id].feature = s.feature;
    tree_.nodes_[id].threshold = s.threshold;
    const int l = grow(std::move(left), depth + 1);
    tree_.nodes_[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes_[id].right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    const std::size_t d = ds_.dim;
    std::iota(order_.begin(), order_.end(), 0);
    Split best;
    int informative = 0;
    std::vector<std::pair<double, bool>> vals(rows.size());
    double total_pos = 0;
    for (auto r : rows) total_pos += ds_.y[r] == Label::malicious;
    const double n = static_cast<double>(rows.size());

    // Features are drawn without replacement; constant ones do not count
    // towards mtry, so the search keeps drawing until it has seen mtry
    // features that can actually split.
    for (std::size_t k = 0; k < d && informative < mtry_; ++k) {
      const std::size_t j = k + rng_.below(d - k);
      std::swap(order_[k], order_[j]);
      const std::size_t f = order_[k];

      for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {ds_.x[rows[i]][f], ds_.y[rows[i]] == Label::malicious};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;
      ++informative;

      double left_pos = 0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left_pos += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < p_.min_leaf || nr < p_.min_leaf) continue;
        const double imp = gini_sum(left_pos, nl) + gini_sum(total_pos - left_pos, nr);
        if (imp < best.impurity) {
          double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
          if (!(thr < vals[i + 1].first)) thr = vals[i].first;
          best = {static_cast<int>(f), thr, imp};
        }
      }
    }
    return best;
  }

  const Dataset& ds_;
  const ForestParams& p_;
  int mtry_;
  Rng& rng_;
  std::vector<std::size_t> order_;
  DecisionTree tree_;
};

// ---------------------------------------------------------------- forest

Forest Forest::train(const Dataset& ds, const ForestParams& params, std::uint64_t seed) {
  ds.validate();
  const auto counts = ds.class_counts();
  if (counts.size() < 2)
    throw std::invalid_argument("cannot train on a single-class dataset (" + std::to_string(ds.size()) + " rows, all " +
                                std::string(ds.size() ? to_string(ds.y.front()) : "none") + ")");
  if (params.n_trees <= 0 || params.min_leaf <= 0 || params.mtry < 0 || params.max_depth < 0)
    throw std::invalid_argument("invalid forest parameters");

  const int mtry = params.mtry > 0 ? std::min<int>(params.mtry, static_cast<int>(ds.dim))
                                   : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(ds.dim)))));
  Forest f;
  f.dim_ = ds.dim;
  f.trees_.reserve(params.n_trees);
  const std::size_t n = ds.size();
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = rng.below(n);
    TreeBuilder b(ds, params, mtry, rng);
    f.trees_.push_back(b.build(std::move(sample)));
  }
  return f;
}

Forest Forest::from_trees(std::vector<DecisionTree> trees, std::size_t dim) {
  Forest f;
  f.trees_ = std::move(trees);
  f.dim_ = dim;
  return f;
}

int Forest::malicious_votes(const std::vector<double>& x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) + " values, forest expects " +
                                std::to_string(dim_));
  int votes = 0;
  for (const auto& t : trees_) votes += t.predict(x) == Label::malicious;
  return votes;
}

Label Forest::predict(const std::vector<double>& x) const {
  const int votes = malicious_votes(x);
  return 2 * votes > static_cast<int>(trees_.size()) ? Label::malicious : Label::benign;
}

std::string Forest::summary() const {
  int dmin = std::numeric_limits<int>::max(), dmax = 0;
  double dsum = 0, nsum = 0;
  for (const auto& t : trees_) {
    dmin = std::min(dmin, t.depth());
    dmax = std::max(dmax, t.depth());
    dsum += t.depth();
    nsum += static_cast<double>(t.node_count());
  }
  const double n = trees_.empty() ? 1.0 : static_cast<double>(trees_.size());
  if (trees_.empty()) dmin = 0;
  std::ostringstream os;
  os << "trees=" << trees_.size() << " depth_min=" << dmin << " depth_mean=" << dsum / n << " depth_max=" << dmax
     << " nodes_mean=" << nsum / n;
  return os.str();
}

// ---------------------------------------------------------------- metrics

Metrics Metrics::from(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto total = c.total();
  m.accuracy_defined = total > 0;
  m.accuracy = total ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : nan;
  m.tpr_defined = c.tp + c.fn > 0;
  m.tpr = m.tpr_defined ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : nan;
  m.fpr_defined = c.fp + c.tn > 0;
  m.fpr = m.fpr_defined ? static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn) : nan;
  return m;
}

Metrics score(const std::vector<Label>& truth, const std::vector<Label>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("score: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::malicious;
    const bool p = predicted[i] == Label::malicious;
    if (t && p) ++c.tp;
    else if (!t && p) ++c.fp;
    else if (!t && !p) ++c.tn;
    else ++c.fn;
  }
  return Metrics::from(c);
}

// ---------------------------------------------------------------- cross-validation

std::vector<int> assign_folds(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
  const auto counts = ds.class_counts();
  for (Label l : {Label::benign, Label::malicious}) {
    auto it = counts.find(l);
    const std::size_t c = it == counts.end() ? 0 : it->second;
    if (c < static_cast<std::size_t>(k))
      throw std::invalid_argument("k-fold: class " + std::string(to_string(l)) + " has " + std::to_string(c) +
                                  " rows, fewer than k=" + std::to_string(k));
  }

  Rng rng(derive_seed(seed, 0x666f6c64ULL));
  auto shuffle = [&](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };

  std::vector<int> fold(ds.size(), -1);
  if (!ds.group.empty()) {
    std::vector<std::int64_t> groups(ds.group.begin(), ds.group.end());
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    if (groups.size() < static_cast<std::size_t>(k))
      throw std::invalid_argument("k-fold: fewer groups than folds");
    shuffle(groups);
    std::map<std::int64_t, int> of;
    for (std::size_t i = 0; i < groups.size(); ++i) of[groups[i]] = static_cast<int>(i % k);
    for (std::size_t r = 0; r < ds.size(); ++r) fold[r] = of[ds.group[r]];
    return fold;
  }

  // Deal each class round-robin, continuing where the previous class
  // stopped so fold sizes differ by at most one.
  std::size_t next = 0;
  for (Label l : {Label::benign, Label::malicious}) {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < ds.size(); ++r)
      if (ds.y[r] == l) idx.push_back(r);
    shuffle(idx);
    for (auto r : idx) fold[r] = static_cast<int>(next++ % k);
  }
  return fold;
}

std::vector<Label> cross_val_predict(const Dataset& ds, int k, std::uint64_t seed, const ForestParams& params) {
  return cross_val_predict(ds, assign_folds(ds, k, seed), k, seed, params);
}

std::vector<Label> cross_val_predict(const Dataset& ds, const std::vector<int>& folds, int k,
                                     std::uint64_t forest_seed, const ForestParams& params) {
  ds.validate();
  if (folds.size() != ds.size()) throw std::invalid_argument("fold assignment does not match the dataset");
  std::vector<Label> pred(ds.size(), Label::benign);
  for (int f = 0; f < k; ++f) {
    Dataset train(ds.dim);
    for (std::size_t r = 0; r < ds.size(); ++r)
      if (folds[r] != f) train.add(ds.x[r], ds.y[r]);
    if (train.size() == ds.size()) continue;
    const Forest forest = Forest::train(train, params, derive_seed(forest_seed, static_cast<std::uint64_t>(f), 0x7472ULL));
    for (std::size_t r = 0; r < ds.size(); ++r)
      if (folds[r] == f) pred[r] = forest.predict(ds.x[r]);
  }
  return pred;
}

Metrics kfold_cv(const Dataset& ds, int k, std::uint64_t seed, const ForestParams& params) {
  return score(ds.y, cross_val_predict(ds, k, seed, params));
}

}  // namespace rplids
