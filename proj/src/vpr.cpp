#include "mvp/vpr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mvp/rng.hpp"

namespace mvp {
namespace {

// Row-wise softmax of an N x C score matrix.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd p = (scores.colwise() - scores.rowwise().maxCoeff()).array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

FitReport fit_linear_classifier(const Traversal& reference, const ClassifierTraining& config) {
  const Eigen::MatrixXd& x = reference.descriptors;  // N x D
  const Eigen::Index n = x.rows(), d = x.cols();
  require(n >= 2, "fit_linear_classifier: need at least 2 places");
  require(config.l2 >= 0.0 && config.max_iterations >= 0 && config.tolerance > 0.0,
          "fit_linear_classifier: invalid training configuration");

  FitReport report;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((x.row(i) - x.row(j)).squaredNorm() < 1e-24) {
        report.collisions.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }

  // Hessian of the mean cross-entropy is bounded by (1 / 2N) X^T X (x) I.
  const Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lipschitz =
      std::max(0.5 * eig.eigenvalues().maxCoeff(), 0.5) / static_cast<double>(n) + config.l2;
  const double step = 1.0 / lipschitz;

  Rng rng = make_rng(config.seed, "vpr.init");
  PlaceClassifier& c = report.classifier;
  c.weights.resize(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) c.weights(i, j) = config.init_scale * standard_normal(rng);
  }
  c.bias = Eigen::VectorXd::Zero(n);

  // Example i has label i, so the one-hot target matrix is the identity.
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd residual, grad_w;
  Eigen::VectorXd grad_b;
  for (int it = 0; it <= config.max_iterations; ++it) {
    Eigen::MatrixXd scores = x * c.weights.transpose();  // examples x classes
    scores.rowwise() += c.bias.transpose();
    residual = softmax_rows(scores);
    residual.diagonal().array() -= 1.0;
    grad_w.noalias() = inv_n * residual.transpose() * x;
    grad_w += config.l2 * c.weights;
    grad_b = inv_n * residual.colwise().sum().transpose();
    report.gradient_norm = std::sqrt(grad_w.squaredNorm() + grad_b.squaredNorm());
    report.iterations = it;
    if (report.gradient_norm < config.tolerance) {
      report.converged = true;
      break;
    }
    if (it == config.max_iterations) break;
    c.weights -= step * grad_w;
    c.bias -= step * grad_b;
  }
  return report;
}

Eigen::VectorXd classify_scores(const PlaceClassifier& classifier,
                                const Eigen::Ref<const Eigen::VectorXd>& descriptor) {
  require(descriptor.size() == classifier.weights.cols(),
          "classify_scores: descriptor has dimension " + std::to_string(descriptor.size()) +
              ", classifier expects " + std::to_string(classifier.weights.cols()));
  Eigen::VectorXd s = classifier.weights * descriptor + classifier.bias;
  s = (s.array() - s.maxCoeff()).exp().matrix();
  return s / s.sum();
}

std::vector<ScoredQuery> score_traversal(const PlaceClassifier& classifier, const Traversal& query) {
  std::vector<ScoredQuery> out;
  out.reserve(static_cast<std::size_t>(query.size()));
  for (int i = 0; i < query.size(); ++i) {
    const Eigen::VectorXd p = classify_scores(classifier, query.descriptors.row(i).transpose());
    Eigen::Index best = 0;
    const double conf = p.maxCoeff(&best);
    out.push_back({conf, static_cast<int>(best), query.places[static_cast<std::size_t>(i)].index});
  }
  return out;
}

PrCurve precision_recall_curve(std::span<const ScoredQuery> queries, int tolerance) {
  require(!queries.empty(), "precision_recall_curve: empty query set");
  require(tolerance >= 0, "precision_recall_curve: tolerance must be >= 0");
  std::vector<ScoredQuery> sorted(queries.begin(), queries.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredQuery& a, const ScoredQuery& b) { return a.confidence > b.confidence; });

  const double total = static_cast<double>(sorted.size());
  std::vector<PrPoint> sweep;
  int retrieved = 0, correct = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    // Every query tied at this confidence is retrieved together.
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].confidence == sorted[i].confidence) {
      ++retrieved;
      if (std::abs(sorted[j].predicted - sorted[j].truth) <= tolerance) ++correct;
      ++j;
    }
    const PrPoint p{correct / total, static_cast<double>(correct) / retrieved};
    if (sweep.empty() || sweep.back().recall != p.recall || sweep.back().precision != p.precision) {
      sweep.push_back(p);
    }
    i = j;
  }

  PrCurve curve;
  curve.points.push_back({0.0, sweep.front().precision});
  curve.points.insert(curve.points.end(), sweep.begin(), sweep.end());
  curve.auc = auc_trapezoid(curve.points);
  return curve;
}

double auc_trapezoid(std::span<const PrPoint> points) {
  require(points.size() >= 2, "auc_trapezoid: need at least 2 points");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dr = points[i].recall - points[i - 1].recall;
    area += 0.5 * dr * (points[i].precision + points[i - 1].precision);
  }
  return std::clamp(area, 0.0, 1.0);
}

VprReport vpr_experiment(const Dataset& dataset, const std::string& reference_id, int repetitions,
                         const ClassifierTraining& config, int tolerance) {
  validate(dataset);
  require(repetitions >= 1, "vpr_experiment: repetitions must be >= 1");
  const Traversal& reference = dataset.traversal(reference_id);

  VprReport report;
  std::vector<std::vector<double>> aucs(dataset.traversals.size());
  for (int r = 0; r < repetitions; ++r) {
    ClassifierTraining cfg = config;
    cfg.seed = derive_seed(config.seed, "vpr.repetition", static_cast<std::uint64_t>(r));
    const FitReport fit = fit_linear_classifier(reference, cfg);
    for (std::size_t q = 0; q < dataset.traversals.size(); ++q) {
      const Traversal& query = dataset.traversals[q];
      const PrCurve curve = precision_recall_curve(score_traversal(fit.classifier, query), tolerance);
      report.rows.push_back({reference_id, query.condition_id, r, curve.auc, fit.converged});
      aucs[q].push_back(curve.auc);
    }
  }
  for (std::size_t q = 0; q < dataset.traversals.size(); ++q) {
    VprSummary s;
    s.reference_id = reference_id;
    s.query_id = dataset.traversals[q].condition_id;
    s.repetitions = repetitions;
    for (double a : aucs[q]) s.mean_auc += a;
    s.mean_auc /= repetitions;
    s.std_auc = sample_std(aucs[q]);
    report.summaries.push_back(s);
  }
  return report;
}

void write_vpr_rows(const VprReport& report, std::ostream& out) {
  out << "reference_id,query_id,repetition,auc\n";
  char num[32];
  for (const VprRow& r : report.rows) {
    std::snprintf(num, sizeof(num), "%.6f", r.auc);
    out << r.reference_id << ',' << r.query_id << ',' << r.repetition << ',' << num << '\n';
  }
}

void write_vpr_summary(const VprReport& report, std::ostream& out) {
  out << "reference_id,query_id,mean_auc,std_auc,repetitions\n";
  char line[64];
  for (const VprSummary& s : report.summaries) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%d", s.mean_auc, s.std_auc, s.repetitions);
    out << s.reference_id << ',' << s.query_id << ',' << line << '\n';
  }
}

}  // namespace mvp
