// Random forest, k-fold cross-validation and detection metrics.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rplids/types.hpp"

namespace rplids {

struct Dataset {
  std::size_t dim = 0;
  std::vector<std::vector<double>> x;
  std::vector<Label> y;
  /// Optional row groups (empty, or one entry per row). Rows sharing a group
  /// always land in the same fold.
  std::vector<std::int64_t> group;

  explicit Dataset(std::size_t d = 0) : dim(d) {}

  std::size_t size() const { return y.size(); }
  void add(std::vector<double> row, Label label);
  void add(std::vector<double> row, Label label, std::int64_t grp);
  std::map<Label, std::size_t> class_counts() const;
  /// Throws std::invalid_argument on ragged rows, NaN values or a partial group column.
  void validate() const;
};

struct ForestParams {
  int n_trees = 100;
  /// Features tried per split; 0 means floor(sqrt(dim)).
  int mtry = 0;
  int min_leaf = 1;
  /// 0 grows trees without a depth cap.
  int max_depth = 0;
};

class DecisionTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    Label label = Label::benign;
  };

  Label predict(const std::vector<double>& x) const;
  int depth() const { return depth_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
  int depth_ = 0;
};

class Forest {
 public:
  /// Deterministic for a given (dataset, params, seed). Throws
  /// std::invalid_argument when the dataset lacks one of the two classes.
  static Forest train(const Dataset& ds, const ForestParams& params, std::uint64_t seed);

  /// Majority vote; a tied vote is benign. Throws std::invalid_argument on a
  /// dimension mismatch.
  Label predict(const std::vector<double>& x) const;
  /// Number of trees voting malicious.
  int malicious_votes(const std::vector<double>& x) const;

  std::size_t tree_count() const { return trees_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  /// `trees=.. depth_min=.. depth_mean=.. depth_max=.. nodes_mean=..`
  std::string summary() const;

  /// Builds a forest from ready trees (tests).
  static Forest from_trees(std::vector<DecisionTree> trees, std::size_t dim);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t dim_ = 0;
};

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

/// Rates are NaN when their denominator is zero; the *_defined flags say so.
struct Metrics {
  Confusion confusion;
  double accuracy = 0;
  double tpr = 0;
  double fpr = 0;
  bool accuracy_defined = false;
  bool tpr_defined = false;
  bool fpr_defined = false;

  static Metrics from(const Confusion& c);
};

/// Positive class is malicious. Throws on length mismatch.
Metrics score(const std::vector<Label>& truth, const std::vector<Label>& predicted);

/// Fold index per row. Without groups the folds are stratified by class;
/// with groups, whole groups are dealt to folds after a seeded shuffle.
/// Throws std::invalid_argument if k < 2 or a class has fewer than k rows.
std::vector<int> assign_folds(const Dataset& ds, int k, std::uint64_t seed);

/// Held-out prediction for every row (each from the forest trained on the
/// other k-1 folds).
std::vector<Label> cross_val_predict(const Dataset& ds, int k, std::uint64_t seed, const ForestParams& params = {});

/// Same, with a fixed fold assignment and a separate seed for the forests.
/// Several datasets over the same windows can then share one split.
std::vector<Label> cross_val_predict(const Dataset& ds, const std::vector<int>& folds, int k,
                                     std::uint64_t forest_seed, const ForestParams& params = {});

/// Pooled metrics over all held-out predictions.
Metrics kfold_cv(const Dataset& ds, int k, std::uint64_t seed, const ForestParams& params = {});

}  // namespace rplids
