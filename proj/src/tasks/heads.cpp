#include "mlpg/tasks/heads.hpp"

#include <cmath>
#include <limits>

namespace mlpg::tasks {

using ad::Array2;
using ad::Index;
using ad::Var;

namespace {

int argmax_in(const Array2& col, int begin, int end, int skip) {
  int best = -1;
  for (int i = begin; i < end; ++i) {
    if (i == skip) continue;
    if (best < 0 || col(i, 0) > col(best, 0)) best = i;
  }
  return best;
}

}  // namespace

Var grouped_hinge(Var scores, const std::vector<int>& offsets, const std::vector<int>& golds, double margin) {
  const Array2& s = scores.value();
  if (s.cols() != 1 || offsets.empty() || offsets.back() != s.rows() || golds.size() + 1 != offsets.size())
    throw ad::ShapeError("grouped_hinge: score column " + ad::shape_str(s) + " does not match " +
                         std::to_string(golds.size()) + " groups");
  double total = 0.0;
  std::vector<std::pair<int, int>> active;  // (gold row, hardest negative row)
  for (std::size_t g = 0; g < golds.size(); ++g) {
    int gold = offsets[g] + golds[g];
    if (golds[g] < 0 || gold >= offsets[g + 1]) throw std::out_of_range("grouped_hinge: gold index out of range");
    int neg = argmax_in(s, offsets[g], offsets[g + 1], gold);
    if (neg < 0) continue;
    double l = margin - s(gold, 0) + s(neg, 0);
    if (l > 0) {
      total += l;
      active.emplace_back(gold, neg);
    }
  }
  Array2 out(1, 1);
  out(0, 0) = total;
  return scores.tape->record(std::move(out), {scores}, [scores, active](ad::Tape& t, int self) {
    if (!t.needs_grad(scores.id)) return;
    double g = t.grad(self)(0, 0);
    Array2 d = Array2::Zero(t.value(scores.id).rows(), 1);
    for (auto [gold, neg] : active) {
      d(gold, 0) -= g;
      d(neg, 0) += g;
    }
    t.accumulate(scores.id, d);
  });
}

std::vector<std::vector<double>> grouped_softmax(const Array2& scores, const std::vector<int>& offsets) {
  std::vector<std::vector<double>> out;
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = offsets[g]; i < offsets[g + 1]; ++i) mx = std::max(mx, scores(i, 0));
    std::vector<double> p;
    double z = 0.0;
    for (int i = offsets[g]; i < offsets[g + 1]; ++i) {
      p.push_back(std::exp(scores(i, 0) - mx));
      z += p.back();
    }
    for (auto& x : p) x /= z;
    out.push_back(std::move(p));
  }
  return out;
}

MisuseHead::MisuseHead(ad::ParamStore& store, const std::string& prefix, int dim, std::mt19937_64& rng) {
  w_ = &store.add(prefix + ".w", 2 * dim, 1, rng);
  b_ = &store.add(prefix + ".b", 1, 1, rng, 0.0);
}

Var MisuseHead::scores(ad::Tape& tape, Var c, Var u) const {
  return ad::add_row(ad::matmul(ad::concat_cols({c, u}), tape.param(*w_)), tape.param(*b_));
}

NamingDecoder::NamingDecoder(ad::ParamStore& store, const std::string& prefix, int vocab_size, DecoderConfig cfg,
                             std::mt19937_64& rng)
    : cfg_(cfg), vocab_(vocab_size) {
  emb_ = &store.add(prefix + ".emb", vocab_size, cfg.embed, rng);
  gru_ = ad::GruParams::create(store, prefix + ".gru", cfg.embed, cfg.hidden, rng);
  out_w_ = &store.add(prefix + ".out_w", cfg.hidden, vocab_size, rng);
  out_b_ = &store.add(prefix + ".out_b", 1, vocab_size, rng, 0.0);
}

Var NamingDecoder::logits(ad::Tape& tape, Var h) const {
  return ad::add_row(ad::matmul(h, tape.param(*out_w_)), tape.param(*out_b_));
}

Var NamingDecoder::loss(ad::Tape& tape, Var init, const std::vector<std::vector<int>>& targets) const {
  const int end = encoder::Vocabulary::kEnd;
  if (init.rows() != static_cast<Index>(targets.size()) || init.cols() != cfg_.hidden)
    throw ad::ShapeError("NamingDecoder::loss: initial state " + ad::shape_str(init.value()) + " for " +
                         std::to_string(targets.size()) + " targets");
  std::size_t steps = 0;
  for (const auto& t : targets) steps = std::max(steps, t.size() + 1);
  Var h = init;
  Var total = tape.constant(Array2::Zero(1, 1));
  Var emb = tape.param(*emb_);
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<int> in, gold;
    for (const auto& t : targets) {
      in.push_back(s == 0 || s > t.size() ? end : t[s - 1]);
      gold.push_back(s < t.size() ? t[s] : s == t.size() ? end : -1);
    }
    h = ad::gru_cell(ad::gather_rows(emb, in), h, gru_);
    total = ad::add(total, ad::softmax_cross_entropy(logits(tape, h), gold));
  }
  return total;
}

std::vector<NamingDecoder::Decoded> NamingDecoder::greedy(const Array2& init) const {
  const int end = encoder::Vocabulary::kEnd;
  const auto n = static_cast<std::size_t>(init.rows());
  std::vector<Decoded> out(n);
  std::vector<char> done(n, 0);
  ad::Tape tape;
  Var h = tape.constant(init);
  std::vector<int> in(n, end);
  for (int s = 0; s <= cfg_.max_len; ++s) {
    h = ad::gru_cell(ad::gather_rows(tape.param(*emb_), in), h, gru_);
    Array2 p = ad::softmax(logits(tape, h).value());
    bool all_done = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      Index best;
      p.row(static_cast<Index>(i)).maxCoeff(&best);
      out[i].probs.push_back(p(static_cast<Index>(i), best));
      if (best == end) {
        done[i] = 1;
        continue;
      }
      out[i].ids.push_back(static_cast<int>(best));
      in[i] = static_cast<int>(best);
      if (static_cast<int>(out[i].ids.size()) >= cfg_.max_len) done[i] = 1;
      all_done = all_done && done[i];
    }
    if (all_done) break;
  }
  return out;
}

std::vector<int> candidate_offsets(const Batch& batch) {
  std::vector<int> off{0};
  for (const auto* e : batch) off.push_back(off.back() + e->k());
  return off;
}

Var MisuseModel::loss(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                      const encoder::TypeSampling& sampling) const {
  auto out = forward(tape, batch, prepared, sampling);
  std::vector<int> golds;
  for (const auto* e : batch) golds.push_back(e->gold);
  return ad::scale(grouped_hinge(out.scores, out.offsets, golds, margin_), 1.0 / static_cast<double>(batch.size()));
}

std::vector<Prediction> MisuseModel::predict(const Batch& batch) const {
  ad::Tape tape;
  auto out = forward(tape, batch, prepare(batch), {});
  auto probs = grouped_softmax(out.scores.value(), out.offsets);
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prediction p;
    p.id = batch[i]->id;
    p.kind = graph::TaskKind::VarMisuse;
    p.candidates = batch[i]->candidate_names;
    for (int r = out.offsets[i]; r < out.offsets[i + 1]; ++r) p.scores.push_back(out.scores.value()(r, 0));
    p.probs = std::move(probs[i]);
    p.predicted = static_cast<int>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
    p.gold = batch[i]->gold;
    preds.push_back(std::move(p));
  }
  return preds;
}

Array2 MisuseModel::representations(const Batch& batch) const {
  ad::Tape tape;
  return forward(tape, batch, prepare(batch), {}).usage.value();
}

Var NamingModel::loss(ad::Tape& tape, const Batch& batch, const std::any& prepared,
                      const encoder::TypeSampling& sampling) const {
  Var init = represent(tape, batch, prepared, sampling);
  std::vector<std::vector<int>> targets;
  for (const auto* e : batch) targets.push_back(e->target);
  return ad::scale(decoder_.loss(tape, init, targets), 1.0 / static_cast<double>(batch.size()));
}

std::vector<Prediction> NamingModel::predict(const Batch& batch) const {
  auto decoded = decoder_.greedy(representations(batch));
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prediction p;
    p.id = batch[i]->id;
    p.kind = graph::TaskKind::VarNaming;
    for (int id : decoded[i].ids) p.decoded.push_back(vocab_.unit_name(id));
    p.step_probs = decoded[i].probs;
    p.gold_name = batch[i]->gold_name;
    preds.push_back(std::move(p));
  }
  return preds;
}

Array2 NamingModel::representations(const Batch& batch) const {
  ad::Tape tape;
  return represent(tape, batch, prepare(batch), {}).value();
}

bool Prediction::correct() const {
  if (kind == graph::TaskKind::VarMisuse) return predicted >= 0 && predicted == gold;
  return decoded == gold_name;
}

double Prediction::confidence() const {
  if (kind == graph::TaskKind::VarMisuse) return probs.empty() ? 0.0 : *std::max_element(probs.begin(), probs.end());
  double c = 1.0;
  for (double p : step_probs) c *= p;
  return c;
}

}  // namespace mlpg::tasks
