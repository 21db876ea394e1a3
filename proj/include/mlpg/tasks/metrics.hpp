#pragma once

#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlpg/autodiff/tape.hpp"
#include "mlpg/tasks/model.hpp"

namespace mlpg::tasks {

class EmptyEval : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CurvePoint {
  double x = 0.0;  // recall (PR) or false-positive rate (ROC)
  double y = 0.0;  // precision (PR) or true-positive rate (ROC)
};

/// Threshold sweep over distinct confidences, highest first; tied confidences
/// enter together. The PR curve starts at (0, precision of the first point).
std::vector<CurvePoint> pr_curve(const std::vector<double>& confidence, const std::vector<bool>& positive);
std::vector<CurvePoint> roc_curve(const std::vector<double>& confidence, const std::vector<bool>& positive);
double trapezoid(const std::vector<CurvePoint>& curve);

/// Micro-averaged multiset overlap of predicted and gold subtokens.
struct F1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
F1 subtoken_f1(const std::vector<std::vector<std::string>>& predicted,
               const std::vector<std::vector<std::string>>& gold);

/// Candidate-count buckets: "2", "3", "4", "5", "6-7", "8+".
std::string bucket_of(int k);

struct Report {
  graph::TaskKind task = graph::TaskKind::VarMisuse;
  std::size_t count = 0;
  double accuracy = 0.0;
  double chance = 0.0;  // misuse: mean(1/k)
  double pr_auc = 0.0;
  F1 f1;
  std::map<std::string, std::pair<std::size_t, double>> per_bucket;  // bucket → (count, accuracy)
  std::vector<CurvePoint> pr;
  std::vector<CurvePoint> roc;

  nlohmann::json to_json() const;
};

Report evaluate_predictions(const std::vector<Prediction>& preds);

/// One row per prediction.
void write_predictions_csv(std::ostream& os, const std::vector<Prediction>& preds);

struct Neighbor {
  int id = -1;
  double similarity = 0.0;
};

double cosine(const ad::Array2& a, ad::Index i, ad::Index j);
/// Top-k rows by cosine similarity to row `query`, excluding the query row;
/// ties keep the lower row first.
std::vector<Neighbor> nearest_neighbors(const ad::Array2& reps, int query, int k);

}  // namespace mlpg::tasks
