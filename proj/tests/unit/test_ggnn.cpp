#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mlpg/ggnn/ggnn.hpp"
#include "mlpg/graph/builder.hpp"

using namespace mlpg;
using namespace mlpg::ggnn;
using ad::Array2;
using graph::EdgeType;

namespace {

constexpr int kChild = 0;
constexpr int kNext = 1;

Array2 random_states(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Array2 a(n, d);
  for (ad::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a;
}

void randomize(ad::ParamStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.4);
  for (auto* p : store.all())
    for (ad::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = g(rng);
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-loop GGNN step: messages summed per destination, then a GRU.
Array2 oracle_step(const Array2& h, const EdgeSet& e, const ad::ParamStore& store, const std::string& prefix) {
  const auto n = h.rows(), d = h.cols();
  Array2 m = Array2::Zero(n, d);
  for (int k = 0; k < graph::kNumEdgeTypes; ++k) {
    std::string name(graph::name(graph::edge_type(k)));
    const auto& w = store.get(prefix + ".msg." + name + ".w").value;
    const auto& b = store.get(prefix + ".msg." + name + ".b").value;
    for (std::size_t j = 0; j < e.src[static_cast<std::size_t>(k)].size(); ++j) {
      int u = e.src[static_cast<std::size_t>(k)][j], v = e.dst[static_cast<std::size_t>(k)][j];
      for (ad::Index c = 0; c < d; ++c) {
        double s = b(0, c);
        for (ad::Index i = 0; i < d; ++i) s += h(u, i) * w(i, c);
        m(v, c) += s;
      }
    }
  }
  const auto& W = store.get(prefix + ".gru.w").value;
  const auto& U = store.get(prefix + ".gru.u_zr").value;
  const auto& Uh = store.get(prefix + ".gru.u_h").value;
  const auto& B = store.get(prefix + ".gru.b").value;
  Array2 out(n, d);
  for (ad::Index r = 0; r < n; ++r) {
    std::vector<double> z(static_cast<std::size_t>(d)), rr(static_cast<std::size_t>(d));
    for (ad::Index c = 0; c < d; ++c) {
      double zs = B(0, c), rs = B(0, d + c);
      for (ad::Index i = 0; i < d; ++i) {
        zs += m(r, i) * W(i, c) + h(r, i) * U(i, c);
        rs += m(r, i) * W(i, d + c) + h(r, i) * U(i, d + c);
      }
      z[static_cast<std::size_t>(c)] = sig(zs);
      rr[static_cast<std::size_t>(c)] = sig(rs);
    }
    for (ad::Index c = 0; c < d; ++c) {
      double hs = B(0, 2 * d + c);
      for (ad::Index i = 0; i < d; ++i) hs += m(r, i) * W(i, 2 * d + c) + rr[static_cast<std::size_t>(i)] * h(r, i) * Uh(i, c);
      double zc = z[static_cast<std::size_t>(c)];
      out(r, c) = (1 - zc) * h(r, c) + zc * std::tanh(hs);
    }
  }
  return out;
}

struct Fixture {
  ad::ParamStore store;
  Ggnn net;
  explicit Fixture(int d = 4, int steps = 2, EdgeMask mask = all_edges()) {
    std::mt19937_64 rng(11);
    net = Ggnn(store, "g", {d, steps, true, mask}, rng);
    randomize(store, 5);
  }
  Array2 run(const Array2& h0, const EdgeSet& e, int steps = -1) {
    ad::Tape t;
    return net.propagate(t, t.constant(h0), e, steps).value();
  }
};

EdgeSet path3() {
  EdgeSet e;
  e.src[kChild] = {0, 1};
  e.dst[kChild] = {1, 2};
  e.src[graph::index(EdgeType::ChildBack)] = {1, 2};
  e.dst[graph::index(EdgeType::ChildBack)] = {0, 1};
  return e;
}

}  // namespace

TEST(EdgeMasks, Parsing) {
  EXPECT_EQ(parse_edge_mask("all"), all_edges());
  auto s = parse_edge_mask("syntax");
  EXPECT_TRUE(s[kChild] && s[kNext] && s[graph::index(EdgeType::NextTokenBack)]);
  EXPECT_FALSE(s[graph::index(EdgeType::LastUse)]);
  auto m = parse_edge_mask("-GuardedBy,GuardedByNegation");
  EXPECT_FALSE(m[graph::index(EdgeType::GuardedBy)] || m[graph::index(EdgeType::GuardedByNegationBack)]);
  EXPECT_TRUE(m[graph::index(EdgeType::LastWrite)]);
  EXPECT_EQ(parse_edge_mask("Child,NextToken"), syntax_edges());
  EXPECT_EQ(describe(s), "syntax");
  EXPECT_EQ(describe(parse_edge_mask("LastRead")), "LastUse");
  EXPECT_THROW(parse_edge_mask("Bogus"), UnknownEdgeType);
}

TEST(Ggnn, ZeroStepsIsIdentity) {
  Fixture f;
  Array2 h = random_states(3, 4, 1);
  EXPECT_EQ(f.run(h, path3(), 0), h);
}

TEST(Ggnn, IsolatedNodeGetsGruOfZeroMessage) {
  Fixture f;
  Array2 h = random_states(1, 4, 2);
  EXPECT_TRUE(f.run(h, EdgeSet{}, 1).isApprox(oracle_step(h, EdgeSet{}, f.store, "g"), 1e-12));
}

TEST(Ggnn, PathMatchesHandUnrolledSteps) {
  Fixture f;
  Array2 h = random_states(3, 4, 3);
  auto e = path3();
  e.src[kNext] = {2};
  e.dst[kNext] = {2};
  Array2 want = oracle_step(oracle_step(h, e, f.store, "g"), e, f.store, "g");
  EXPECT_TRUE(f.run(h, e).isApprox(want, 1e-12));
}

TEST(Ggnn, GradientCheck) {
  Fixture f(3, 3);
  Array2 h = random_states(3, 3, 4);
  auto e = path3();
  e.src[kNext] = {0, 2};
  e.dst[kNext] = {2, 0};
  auto res = ad::gradient_check(
      f.store,
      [&](ad::Tape& t) { return ad::sum(ad::mul(f.net.propagate(t, t.constant(h), e), t.constant(h))); }, 200, 9);
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(Ggnn, PermutationEquivariance) {
  Fixture f(4, 3);
  const int n = 5;
  Array2 h = random_states(n, 4, 6);
  EdgeSet e;
  e.src[kChild] = {0, 0, 1, 3};
  e.dst[kChild] = {1, 2, 3, 4};
  e.src[kNext] = {4, 2};
  e.dst[kNext] = {0, 1};
  std::vector<int> perm{3, 0, 4, 1, 2};  // old id → new id
  Array2 hp(n, 4);
  for (int i = 0; i < n; ++i) hp.row(perm[static_cast<std::size_t>(i)]) = h.row(i);
  EdgeSet ep;
  for (std::size_t k = 0; k < e.src.size(); ++k)
    for (std::size_t j = 0; j < e.src[k].size(); ++j) {
      ep.src[k].push_back(perm[static_cast<std::size_t>(e.src[k][j])]);
      ep.dst[k].push_back(perm[static_cast<std::size_t>(e.dst[k][j])]);
    }
  Array2 out = f.run(h, e), outp = f.run(hp, ep);
  for (int i = 0; i < n; ++i) EXPECT_TRUE(outp.row(perm[static_cast<std::size_t>(i)]).isApprox(out.row(i), 1e-12));
}

TEST(Ggnn, MaskedEdgeTypesHaveNoEffect) {
  auto mask = syntax_edges();
  Fixture f(4, 2, mask);
  Array2 h = random_states(3, 4, 7);
  auto e = path3();
  Array2 base = f.run(h, e);
  const int lu = graph::index(EdgeType::LastUse);
  f.store.get(std::string("g.msg.LastUse.w")).value.setConstant(1e6);
  auto e2 = e;
  e2.src[static_cast<std::size_t>(lu)] = {0, 2};
  e2.dst[static_cast<std::size_t>(lu)] = {2, 1};
  EXPECT_EQ(f.run(h, e2), base);
}

TEST(Ggnn, RejectsBadShapes) {
  Fixture f;
  EdgeSet e;
  e.src[kChild] = {0};
  e.dst[kChild] = {5};
  EXPECT_THROW(f.run(random_states(2, 4, 1), e), ad::ShapeError);
  EXPECT_THROW(f.run(random_states(2, 3, 1), EdgeSet{}), ad::ShapeError);
}

namespace {

std::vector<graph::TaskSample> corpus_samples() {
  std::vector<graph::TaskSample> out;
  for (const char* src : {
           "fn f(a: int, b: int) -> int { var c: int = a + b; while (c > a) { c = c - b; } return c; }",
           "fn g(x: int, y: int, ok: bool) -> int { if (ok) { x = y; } else { y = x + 1; } return x + y; }",
       }) {
    auto p = lang::compile(src);
    auto g = graph::build_graph(p);
    for (int slot : graph::misuse_slots(p)) out.push_back(graph::make_varmisuse_sample(g, p, slot));
    for (auto v : graph::naming_targets(p)) out.push_back(graph::make_varnaming_sample(g, p, v));
  }
  return out;
}

struct Readout {
  std::vector<Array2> rows;
};

Readout readout(const Array2& h, const EncodedSample& s, int offset) {
  Readout r;
  std::vector<int> ids = s.candidates;
  if (s.slot >= 0) ids.push_back(s.slot);
  ids.insert(ids.end(), s.slot_tokens.begin(), s.slot_tokens.end());
  for (int i : ids) r.rows.push_back(h.row(i + offset));
  return r;
}

}  // namespace

TEST(Ggnn, BatchingAndPruningPreserveReadouts) {
  auto samples = corpus_samples();
  ASSERT_GT(samples.size(), 6u);
  std::vector<const graph::TaskSample*> ptrs;
  for (auto& s : samples) ptrs.push_back(&s);
  auto vocab = encoder::Vocabulary::build(ptrs, encoder::LabelMode::Subtoken);
  std::mt19937_64 rng(2);
  ad::ParamStore store;
  encoder::NodeEncoder enc(store, "enc", vocab, {6, 6, 5}, rng);
  Ggnn net(store, "g", {5, 3, true, all_edges()}, rng);

  auto states = [&](const encoder::NodeFeatures& f, const EdgeSet& e) {
    ad::Tape t;
    return net.propagate(t, enc.initial_states(t, f, {}), e).value();
  };

  std::vector<EncodedSample> full, pruned;
  for (auto& s : samples) {
    full.push_back(encode_sample(s, vocab));
    pruned.push_back(encode_sample(s, vocab, 3));
  }
  std::vector<const EncodedSample*> fp;
  for (auto& s : full) fp.push_back(&s);
  auto b = batch(fp);
  ASSERT_EQ(b.samples(), samples.size());
  Array2 hb = states(b.features, b.edges);

  bool any_smaller = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto single = readout(states(full[i].features, full[i].edges), full[i], 0);
    auto batched = readout(hb, full[i], b.ranges[i].first);
    auto cut = readout(states(pruned[i].features, pruned[i].edges), pruned[i], 0);
    any_smaller |= pruned[i].size() < full[i].size();
    ASSERT_EQ(single.rows.size(), cut.rows.size());
    for (std::size_t r = 0; r < single.rows.size(); ++r) {
      EXPECT_LT((single.rows[r] - batched.rows[r]).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((single.rows[r] - cut.rows[r]).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
  EXPECT_TRUE(any_smaller);
}

TEST(Batching, CapAndPlanning) {
  auto samples = corpus_samples();
  auto vocab = encoder::Vocabulary::build({&samples[0]}, encoder::LabelMode::Subtoken);
  auto e = encode_sample(samples[0], vocab);
  EXPECT_THROW(batch({&e, &e}, e.size() * 2 - 1), BatchTooLarge);
  EXPECT_EQ(batch({&e, &e}, e.size() * 2).size(), e.size() * 2);
  EXPECT_THROW(batch({}), std::invalid_argument);

  auto plan = plan_batches({5, 5, 5, 9, 1}, 10, 100);
  EXPECT_EQ(plan, (std::vector<std::vector<std::size_t>>{{0, 1}, {2}, {3, 4}}));
  EXPECT_EQ(plan_batches({1, 1, 1}, 10, 2).size(), 2u);
  EXPECT_THROW(plan_batches({11}, 10, 2), BatchTooLarge);
}

TEST(Prefetch, DeliversInOrderAndPropagatesErrors) {
  Prefetcher<int> p(5, [](std::size_t i) { return static_cast<int>(i * i); });
  std::vector<int> got;
  while (auto v = p.next()) got.push_back(*v);
  EXPECT_EQ(got, (std::vector<int>{0, 1, 4, 9, 16}));

  Prefetcher<int> bad(3, [](std::size_t i) -> int {
    if (i == 1) throw std::runtime_error("boom");
    return 1;
  });
  EXPECT_EQ(*bad.next(), 1);
  EXPECT_THROW(bad.next(), std::runtime_error);

  { Prefetcher<int> abandoned(100, [](std::size_t i) { return static_cast<int>(i); }); }
}
