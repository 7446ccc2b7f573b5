#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvp/traversal.hpp"

namespace mvp {

// One class per place: scores = weights * descriptor + bias.
struct PlaceClassifier {
  Eigen::MatrixXd weights;  // N x D
  Eigen::VectorXd bias;     // N
};

struct ClassifierTraining {
  double l2 = 1e-4;            // penalty on weights (bias is unpenalized)
  int max_iterations = 5000;
  double tolerance = 1e-6;     // on the full gradient norm
  double init_scale = 0.01;    // N(0, init_scale^2) initial weights
  std::uint64_t seed = 0;
};

struct FitReport {
  PlaceClassifier classifier;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<std::pair<int, int>> collisions;  // places sharing a descriptor
};

// Multinomial logistic regression on one example per place, by full-batch
// gradient descent on mean cross-entropy + (l2 / 2) |W|^2 with step size
// 1 / L, L being a curvature bound from the descriptor Gram matrix.
// Non-convergence and descriptor collisions are reported, not thrown.
FitReport fit_linear_classifier(const Traversal& reference, const ClassifierTraining& config);

// Softmax class probabilities for one descriptor.
Eigen::VectorXd classify_scores(const PlaceClassifier& classifier,
                                const Eigen::Ref<const Eigen::VectorXd>& descriptor);

struct ScoredQuery {
  double confidence = 0.0;  // max class probability
  int predicted = 0;
  int truth = 0;
};

std::vector<ScoredQuery> score_traversal(const PlaceClassifier& classifier, const Traversal& query);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  double auc = 0.0;
};

// Sweeps the threshold over the distinct confidences, highest first. At a
// threshold every query with confidence >= it is retrieved; a retrieved
// prediction is correct iff |predicted - truth| <= tolerance. Precision is
// correct / retrieved, recall is correct / all queries. The curve starts at
// (0, precision of the first threshold) and the AUC is the trapezoid area.
PrCurve precision_recall_curve(std::span<const ScoredQuery> queries, int tolerance = 0);

double auc_trapezoid(std::span<const PrPoint> points);

struct VprRow {
  std::string reference_id;
  std::string query_id;
  int repetition = 0;
  double auc = 0.0;
  bool converged = true;
};

struct VprSummary {
  std::string reference_id;
  std::string query_id;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // sample standard deviation over repetitions
  int repetitions = 0;
};

struct VprReport {
  std::vector<VprRow> rows;
  std::vector<VprSummary> summaries;  // one per query traversal, dataset order
};

// Fits on the reference traversal once per repetition (seeded by
// repetition) and scores every traversal, the reference included.
VprReport vpr_experiment(const Dataset& dataset, const std::string& reference_id,
                         int repetitions = 10, const ClassifierTraining& config = {},
                         int tolerance = 0);

// `reference_id,query_id,repetition,auc`
void write_vpr_rows(const VprReport& report, std::ostream& out);
// `reference_id,query_id,mean_auc,std_auc,repetitions`
void write_vpr_summary(const VprReport& report, std::ostream& out);

}  // namespace mvp
