#include "mlpg/tasks/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace mlpg::tasks {

namespace {

struct Sweep {
  std::size_t tp = 0, fp = 0;
};

// Cumulative (tp, fp) after admitting each distinct confidence, highest first.
std::vector<Sweep> sweep(const std::vector<double>& conf, const std::vector<bool>& pos) {
  if (conf.size() != pos.size()) throw std::invalid_argument("curve: confidence and label counts differ");
  std::vector<std::size_t> order(conf.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return conf[a] > conf[b]; });
  std::vector<Sweep> out;
  Sweep s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (pos[order[i]]) ++s.tp;
    else ++s.fp;
    if (i + 1 == order.size() || conf[order[i + 1]] != conf[order[i]]) out.push_back(s);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + v[i];
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::vector<CurvePoint> pr_curve(const std::vector<double>& confidence, const std::vector<bool>& positive) {
  const auto total_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  std::vector<CurvePoint> out;
  for (const auto& s : sweep(confidence, positive)) {
    double recall = total_pos ? static_cast<double>(s.tp) / static_cast<double>(total_pos) : 0.0;
    double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    out.push_back({recall, precision});
  }
  if (!out.empty()) out.insert(out.begin(), CurvePoint{0.0, out.front().y});
  return out;
}

std::vector<CurvePoint> roc_curve(const std::vector<double>& confidence, const std::vector<bool>& positive) {
  const auto p = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const auto n = positive.size() - p;
  std::vector<CurvePoint> out{{0.0, 0.0}};
  for (const auto& s : sweep(confidence, positive))
    out.push_back({n ? static_cast<double>(s.fp) / static_cast<double>(n) : 0.0,
                   p ? static_cast<double>(s.tp) / static_cast<double>(p) : 0.0});
  return out;
}

double trapezoid(const std::vector<CurvePoint>& curve) {
  double a = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    a += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
  return a;
}

F1 subtoken_f1(const std::vector<std::vector<std::string>>& predicted,
               const std::vector<std::vector<std::string>>& gold) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("subtoken_f1: size mismatch");
  std::size_t overlap = 0, npred = 0, ngold = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::map<std::string, int> g;
    for (const auto& t : gold[i]) ++g[t];
    for (const auto& t : predicted[i]) {
      auto it = g.find(t);
      if (it != g.end() && it->second > 0) {
        --it->second;
        ++overlap;
      }
    }
    npred += predicted[i].size();
    ngold += gold[i].size();
  }
  F1 f;
  f.precision = npred ? static_cast<double>(overlap) / static_cast<double>(npred) : 0.0;
  f.recall = ngold ? static_cast<double>(overlap) / static_cast<double>(ngold) : 0.0;
  f.f1 = f.precision + f.recall > 0 ? 2 * f.precision * f.recall / (f.precision + f.recall) : 0.0;
  return f;
}

std::string bucket_of(int k) {
  if (k >= 8) return "8+";
  if (k >= 6) return "6-7";
  return std::to_string(k);
}

Report evaluate_predictions(const std::vector<Prediction>& preds) {
  if (preds.empty()) throw EmptyEval("evaluation set is empty");
  Report r;
  r.task = preds.front().kind;
  r.count = preds.size();
  std::vector<double> conf;
  std::vector<bool> pos;
  std::size_t correct = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> buckets;
  std::vector<std::vector<std::string>> decoded, gold;
  for (const auto& p : preds) {
    bool ok = p.correct();
    correct += ok;
    conf.push_back(p.confidence());
    pos.push_back(ok);
    if (p.kind == graph::TaskKind::VarMisuse) {
      auto k = static_cast<int>(p.candidates.empty() ? p.probs.size() : p.candidates.size());
      r.chance += 1.0 / k;
      auto& b = buckets[bucket_of(k)];
      ++b.first;
      b.second += ok;
    } else {
      decoded.push_back(p.decoded);
      gold.push_back(p.gold_name);
    }
  }
  const auto n = static_cast<double>(preds.size());
  r.accuracy = static_cast<double>(correct) / n;
  if (r.task == graph::TaskKind::VarMisuse) r.chance /= n;
  else r.f1 = subtoken_f1(decoded, gold);
  for (auto& [b, c] : buckets) r.per_bucket[b] = {c.first, static_cast<double>(c.second) / static_cast<double>(c.first)};
  r.pr = pr_curve(conf, pos);
  r.roc = roc_curve(conf, pos);
  r.pr_auc = correct ? trapezoid(r.pr) : 0.0;
  return r;
}

nlohmann::json Report::to_json() const {
  auto curve = [](const std::vector<CurvePoint>& c) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : c) a.push_back({p.x, p.y});
    return a;
  };
  nlohmann::json j;
  j["task"] = task == graph::TaskKind::VarMisuse ? "misuse" : "naming";
  j["count"] = count;
  j["accuracy"] = accuracy;
  j["pr_auc"] = pr_auc;
  if (task == graph::TaskKind::VarMisuse) {
    j["chance"] = chance;
    nlohmann::json b = nlohmann::json::object();
    for (const auto& [name, v] : per_bucket) b[name] = {{"count", v.first}, {"accuracy", v.second}};
    j["per_bucket"] = b;
  } else {
    j["f1"] = {{"f1", f1.f1}, {"precision", f1.precision}, {"recall", f1.recall}, {"averaging", "micro"}};
  }
  j["pr_curve"] = curve(pr);
  j["roc_curve"] = curve(roc);
  return j;
}

void write_predictions_csv(std::ostream& os, const std::vector<Prediction>& preds) {
  os << "id,task,correct,confidence,gold,predicted,candidates,probs\n";
  os << std::setprecision(6);
  for (const auto& p : preds) {
    os << csv_field(p.id) << ',' << (p.kind == graph::TaskKind::VarMisuse ? "misuse" : "naming") << ','
       << (p.correct() ? 1 : 0) << ',' << p.confidence() << ',';
    if (p.kind == graph::TaskKind::VarMisuse) {
      std::vector<std::string> probs;
      for (double x : p.probs) {
        std::ostringstream s;
        s << std::setprecision(6) << x;
        probs.push_back(s.str());
      }
      auto name = [&](int i) { return i >= 0 && i < static_cast<int>(p.candidates.size()) ? p.candidates[static_cast<std::size_t>(i)] : ""; };
      os << csv_field(name(p.gold)) << ',' << csv_field(name(p.predicted)) << ',' << csv_field(join(p.candidates, '|'))
         << ',' << csv_field(join(probs, '|'));
    } else {
      os << csv_field(join(p.gold_name, ' ')) << ',' << csv_field(join(p.decoded, ' ')) << ",,";
    }
    os << '\n';
  }
}

double cosine(const ad::Array2& a, ad::Index i, ad::Index j) {
  double na = a.row(i).norm(), nb = a.row(j).norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.row(i).dot(a.row(j)) / (na * nb);
}

std::vector<Neighbor> nearest_neighbors(const ad::Array2& reps, int query, int k) {
  if (reps.rows() == 0) throw EmptyEval("no representations to search");
  if (query < 0 || query >= reps.rows()) throw std::out_of_range("nearest_neighbors: query out of range");
  std::vector<Neighbor> all;
  for (ad::Index i = 0; i < reps.rows(); ++i)
    if (i != query) all.push_back({static_cast<int>(i), cosine(reps, query, i)});
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(std::max(k, 0)));
  return all;
}

}  // namespace mlpg::tasks
