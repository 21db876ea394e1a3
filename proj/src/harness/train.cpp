#include "mlpg/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <set>

#include "mlpg/baselines/baselines.hpp"
#include "mlpg/ggnn/ggnn.hpp"
#include "mlpg/tasks/ggnn_model.hpp"

namespace mlpg::harness {

nlohmann::json RunConfig::to_json() const {
  return {{"task", task},
          {"model", model},
          {"edges", edges},
          {"labels", labels},
          {"hidden", hidden},
          {"embed", embed},
          {"type_dim", type_dim},
          {"steps", steps},
          {"margin", margin},
          {"radius", radius},
          {"max_name_len", max_name_len},
          {"type_sampling", type_sampling},
          {"prune", prune},
          {"min_count", min_count},
          {"lr", lr},
          {"beta1", beta1},
          {"beta2", beta2},
          {"clip", clip},
          {"epochs", epochs},
          {"patience", patience},
          {"batch_size", batch_size},
          {"batch_cap", batch_cap},
          {"stop_at_train_accuracy", stop_at_train_accuracy},
          {"train_eval_samples", train_eval_samples},
          {"seed", seed}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  auto known = c.to_json();
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw std::invalid_argument("unknown run config key '" + k + "'");
  known.update(j);
  c.task = known["task"];
  c.model = known["model"];
  c.edges = known["edges"];
  c.labels = known["labels"];
  c.hidden = known["hidden"];
  c.embed = known["embed"];
  c.type_dim = known["type_dim"];
  c.steps = known["steps"];
  c.margin = known["margin"];
  c.radius = known["radius"];
  c.max_name_len = known["max_name_len"];
  c.type_sampling = known["type_sampling"];
  c.prune = known["prune"];
  c.min_count = known["min_count"];
  c.lr = known["lr"];
  c.beta1 = known["beta1"];
  c.beta2 = known["beta2"];
  c.clip = known["clip"];
  c.epochs = known["epochs"];
  c.patience = known["patience"];
  c.batch_size = known["batch_size"];
  c.batch_cap = known["batch_cap"];
  c.stop_at_train_accuracy = known["stop_at_train_accuracy"];
  c.train_eval_samples = known["train_eval_samples"];
  c.seed = known["seed"];
  parse_task(c.task);
  encoder::parse_label_mode(c.labels);
  ggnn::parse_edge_mask(c.edges);
  return c;
}

void RunConfig::apply_env() {
  if (const char* s = std::getenv("MLPG_SEED"); s && *s) seed = std::stoull(s);
}

DatasetOptions RunConfig::dataset_options() const {
  DatasetOptions o;
  o.task = task_kind();
  o.labels = encoder::parse_label_mode(labels);
  o.min_count = min_count;
  o.example.mask = ggnn::parse_edge_mask(edges);
  // baselines read only the token sequence and candidate features
  o.example.hops = model != "ggnn" ? 0 : prune ? steps : -1;
  return o;
}

std::unique_ptr<tasks::Model> make_model(const RunConfig& cfg, ad::ParamStore& store, const encoder::Vocabulary& vocab) {
  std::mt19937_64 rng(cfg.seed);
  const auto kind = cfg.task_kind();
  tasks::DecoderConfig dec{cfg.embed, cfg.hidden, cfg.max_name_len};
  if (cfg.model == "ggnn") {
    tasks::GgnnModelConfig g;
    g.encoder = {cfg.embed, cfg.type_dim, cfg.hidden};
    g.ggnn.hidden = cfg.hidden;
    g.ggnn.steps = cfg.steps;
    g.ggnn.mask = ggnn::parse_edge_mask(cfg.edges);
    g.margin = cfg.margin;
    g.decoder = dec;
    if (kind == graph::TaskKind::VarMisuse) return std::make_unique<tasks::GgnnMisuse>(store, vocab, g, rng);
    return std::make_unique<tasks::GgnnNaming>(store, vocab, g, rng);
  }
  baselines::BaselineConfig b;
  b.embed = cfg.embed;
  b.hidden = cfg.hidden;
  b.type_dim = cfg.type_dim;
  b.radius = cfg.radius;
  b.margin = cfg.margin;
  b.decoder = dec;
  if (kind == graph::TaskKind::VarMisuse) {
    if (cfg.model == "loc") return std::make_unique<baselines::LocMisuse>(store, vocab, b, rng);
    if (cfg.model == "avgbirnn") return std::make_unique<baselines::AvgBiRnnMisuse>(store, vocab, b, rng);
  } else {
    if (cfg.model == "avgbirnn") return std::make_unique<baselines::AvgBiRnnNaming>(store, vocab, b, rng);
    if (cfg.model == "avglbl") return std::make_unique<baselines::AvgLblNaming>(store, vocab, b, rng);
  }
  throw std::invalid_argument("no model '" + cfg.model + "' for task " + cfg.task);
}

std::vector<tasks::Batch> make_batches(const std::vector<const tasks::Example*>& order, const RunConfig& cfg) {
  std::vector<std::size_t> sizes;
  sizes.reserve(order.size());
  for (const auto* e : order) sizes.push_back(cfg.model == "ggnn" ? e->graph.size() : 1);
  auto cap = cfg.model == "ggnn" ? static_cast<std::size_t>(cfg.batch_cap) : order.size() + 1;
  std::vector<tasks::Batch> out;
  for (const auto& group : ggnn::plan_batches(sizes, cap, static_cast<std::size_t>(cfg.batch_size))) {
    tasks::Batch b;
    for (auto i : group) b.push_back(order[i]);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<tasks::Prediction> predict_all(const tasks::Model& model, const std::vector<tasks::Example>& set,
                                           const RunConfig& cfg) {
  std::vector<const tasks::Example*> order;
  for (const auto& e : set) order.push_back(&e);
  std::vector<tasks::Prediction> out;
  out.reserve(set.size());
  for (const auto& b : make_batches(order, cfg))
    for (auto& p : model.predict(b)) out.push_back(std::move(p));
  return out;
}

double accuracy(const tasks::Model& model, const std::vector<tasks::Example>& set, const RunConfig& cfg) {
  if (set.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& p : predict_all(model, set, cfg)) ok += p.correct();
  return static_cast<double>(ok) / static_cast<double>(set.size());
}

namespace {

using Snapshot = std::vector<ad::Array2>;

Snapshot snapshot(const ad::ParamStore& store) {
  Snapshot s;
  for (const auto* p : store.all()) s.push_back(p->value);
  return s;
}

void restore(ad::ParamStore& store, const Snapshot& s) {
  auto params = store.all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = s[i];
}

}  // namespace

TrainResult train(const RunConfig& cfg, const tasks::Model& model, ad::ParamStore& store,
                  const std::vector<tasks::Example>& train_set, const std::vector<tasks::Example>& valid_set,
                  std::ostream* csv, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::mt19937_64 type_rng(cfg.seed + 17);
  encoder::TypeSampling sampling{cfg.type_sampling, &type_rng, false};
  ad::Adam adam({cfg.lr, cfg.beta1, cfg.beta2, 1e-8});

  // fixed subsample for the training-accuracy column
  std::vector<tasks::Example> train_probe;
  {
    std::vector<std::size_t> idx(train_set.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 probe_rng(cfg.seed + 29);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(probe_rng() % i)]);
    idx.resize(std::min(idx.size(), static_cast<std::size_t>(std::max(1, cfg.train_eval_samples))));
    for (auto i : idx) train_probe.push_back(train_set[i]);
  }
  const auto& valid = valid_set.empty() ? train_probe : valid_set;

  if (csv) *csv << "epoch,train_loss,train_accuracy,valid_accuracy,seconds\n";
  TrainResult res;
  Snapshot best = snapshot(store);
  int since_best = 0;
  std::vector<const tasks::Example*> order;
  for (const auto& e : train_set) order.push_back(&e);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    auto batches = make_batches(order, cfg);
    double loss_sum = 0;
    std::size_t seen = 0;
    ggnn::Prefetcher<std::any> prefetch(batches.size(), [&](std::size_t i) { return model.prepare(batches[i]); });
    for (const auto& b : batches) {
      auto prepared = prefetch.next();
      ad::Tape tape;
      auto loss = model.loss(tape, b, *prepared, sampling);
      double l = loss.scalar();
      if (!std::isfinite(l))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(res.steps + 1));
      store.zero_grad();
      tape.backward(loss);
      ad::clip_grad_norm(store, cfg.clip);
      adam.step(store);
      ++res.steps;
      res.step_losses.push_back(l);
      loss_sum += l * static_cast<double>(b.size());
      seen += b.size();
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(seen);
    log.train_accuracy = accuracy(model, train_probe, cfg);
    log.valid_accuracy = valid_set.empty() ? log.train_accuracy : accuracy(model, valid, cfg);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.log.push_back(log);
    if (csv) *csv << log.epoch << "," << log.train_loss << "," << log.train_accuracy << "," << log.valid_accuracy << ","
                  << log.seconds << "\n" << std::flush;
    if (on_epoch) on_epoch(log);

    if (log.valid_accuracy > res.best_valid) {
      res.best_valid = log.valid_accuracy;
      res.best_epoch = epoch;
      best = snapshot(store);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (log.train_accuracy >= cfg.stop_at_train_accuracy) break;
  }
  restore(store, best);
  return res;
}

}  // namespace mlpg::harness
