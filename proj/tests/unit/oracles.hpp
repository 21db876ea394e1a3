#pragma once

// Plain-loop reference implementations shared by model tests.

#include <cmath>
#include <string>
#include <vector>

#include "mlpg/autodiff/tape.hpp"

namespace testing_support {

using Vec = std::vector<double>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec gru(const Vec& x, const Vec& h, const mlpg::ad::ParamStore& store, const std::string& prefix) {
  const auto& w = store.get(prefix + ".w").value;
  const auto& u = store.get(prefix + ".u_zr").value;
  const auto& uh = store.get(prefix + ".u_h").value;
  const auto& b = store.get(prefix + ".b").value;
  const auto d = static_cast<long>(h.size());
  Vec z(h.size()), r(h.size()), out(h.size());
  for (long c = 0; c < d; ++c) {
    double zs = b(0, c), rs = b(0, d + c);
    for (std::size_t i = 0; i < x.size(); ++i) {
      zs += x[i] * w(static_cast<long>(i), c);
      rs += x[i] * w(static_cast<long>(i), d + c);
    }
    for (long i = 0; i < d; ++i) {
      zs += h[static_cast<std::size_t>(i)] * u(i, c);
      rs += h[static_cast<std::size_t>(i)] * u(i, d + c);
    }
    z[static_cast<std::size_t>(c)] = sigmoid(zs);
    r[static_cast<std::size_t>(c)] = sigmoid(rs);
  }
  for (long c = 0; c < d; ++c) {
    double s = b(0, 2 * d + c);
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w(static_cast<long>(i), 2 * d + c);
    for (long i = 0; i < d; ++i) s += r[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)] * uh(i, c);
    double zc = z[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(c)] = (1 - zc) * h[static_cast<std::size_t>(c)] + zc * std::tanh(s);
  }
  return out;
}

/// Two-layer bidirectional GRU over `xs`; returns concat(forward, backward) of the top layer at every position.
inline std::vector<Vec> bigru(const std::vector<Vec>& xs, const mlpg::ad::ParamStore& store, const std::string& prefix,
                              std::size_t d) {
  std::vector<Vec> in = xs;
  for (int layer = 0; layer < 2; ++layer) {
    std::string p = prefix + ".l" + std::to_string(layer);
    std::vector<Vec> f(in.size()), b(in.size());
    Vec h(d, 0.0);
    for (std::size_t t = 0; t < in.size(); ++t) f[t] = h = gru(in[t], h, store, p + ".fwd");
    h.assign(d, 0.0);
    for (std::size_t t = in.size(); t-- > 0;) b[t] = h = gru(in[t], h, store, p + ".bwd");
    for (std::size_t t = 0; t < in.size(); ++t) {
      in[t] = f[t];
      in[t].insert(in[t].end(), b[t].begin(), b[t].end());
    }
  }
  return in;
}

inline Vec row(const mlpg::ad::Array2& a, long r) { return Vec(a.row(r).data(), a.row(r).data() + a.cols()); }

}  // namespace testing_support
