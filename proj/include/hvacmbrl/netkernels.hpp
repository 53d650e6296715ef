#pragma once
// Batched neural-network kernels: a single-layer LSTM over a W-step window
// with additive attention pooling and a linear head, plus a flattened-window
// feedforward alternative. Hand-derived backpropagation; parameters live in
// one flat vector so finite-difference checks and SGD address coordinates
// uniformly. Scalar-templated; runtime uses double.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "hvacmbrl/rng.hpp"

namespace hvacmbrl {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowX = Eigen::Matrix<S, 1, Eigen::Dynamic>;

enum class Arch { recurrent, feedforward };

struct NetSpec {
  int window = 20;
  int input_dim = 9;
  int hidden = 64;
  int out_dim = 5;
  Arch arch = Arch::recurrent;
  bool attention = true;  // recurrent only; false pools with the last hidden state
};

struct TensorSpan {
  ptrdiff_t offset = 0;
  int rows = 0, cols = 0;
  int fan_in = 0;
  ptrdiff_t size() const { return ptrdiff_t(rows) * cols; }
};

// Flat-parameter layout. Recurrent order: Wx, Wh, b, [Wa, ba, v,] Wy, by.
// Feedforward order: W1, b1, W2, b2, Wy, by. Gate columns of Wx/Wh/b are
// [input, forget, cell, output] blocks of width `hidden`.
struct NetLayout {
  std::vector<TensorSpan> spans;
  ptrdiff_t total = 0;

  static NetLayout make(const NetSpec& spec) {
    NetLayout l;
    auto add = [&l](int rows, int cols, int fan_in) {
      l.spans.push_back({l.total, rows, cols, fan_in});
      l.total += ptrdiff_t(rows) * cols;
    };
    int H = spec.hidden, I = spec.input_dim, O = spec.out_dim, W = spec.window;
    if (spec.arch == Arch::recurrent) {
      add(I, 4 * H, I);      // Wx
      add(H, 4 * H, H);      // Wh
      add(1, 4 * H, 0);      // b
      if (spec.attention) {
        add(H, H, H);        // Wa
        add(1, H, 0);        // ba
        add(H, 1, H);        // v
      }
      add(H, O, H);          // Wy
      add(1, O, 0);          // by
    } else {
      add(W * I, H, W * I);  // W1
      add(1, H, 0);          // b1
      add(H, H, H);          // W2
      add(1, H, 0);          // b2
      add(H, O, H);          // Wy
      add(1, O, 0);          // by
    }
    return l;
  }
};

template <typename S>
struct NetParams {
  NetSpec spec;
  NetLayout layout;
  VecX<S> theta;

  static NetParams make(const NetSpec& spec) {
    NetParams p;
    p.spec = spec;
    p.layout = NetLayout::make(spec);
    p.theta = VecX<S>::Zero(p.layout.total);
    return p;
  }

  Eigen::Map<const MatX<S>> view(int i) const {
    const TensorSpan& t = layout.spans[size_t(i)];
    return {theta.data() + t.offset, t.rows, t.cols};
  }
  Eigen::Map<MatX<S>> view(int i) {
    TensorSpan& t = layout.spans[size_t(i)];
    return {theta.data() + t.offset, t.rows, t.cols};
  }
};

// Uniform +-1/sqrt(fan_in) for weight tensors, zero for biases (fan_in 0).
// Draw order follows the layout so initialization is seed-stable.
template <typename S>
void init_params(NetParams<S>& p, Rng& rng) {
  for (size_t i = 0; i < p.layout.spans.size(); ++i) {
    const TensorSpan& t = p.layout.spans[i];
    if (t.fan_in == 0) {
      p.theta.segment(t.offset, t.size()).setZero();
      continue;
    }
    double bound = 1.0 / std::sqrt(double(t.fan_in));
    for (ptrdiff_t k = 0; k < t.size(); ++k)
      p.theta[t.offset + k] = S(rng.uniform(-bound, bound));
  }
}

namespace detail {
template <typename S>
MatX<S> sigmoid(const MatX<S>& x) {
  return ((-x.array()).exp() + S(1)).inverse().matrix();
}
}  // namespace detail

// ---------- recurrent forward/backward ----------

template <typename S>
struct RecurrentCache {
  std::vector<MatX<S>> x;                    // per slot, B x I
  std::vector<MatX<S>> gi, gf, gg, go;       // gate activations, B x H
  std::vector<MatX<S>> c, tanh_c, h;         // states, B x H
  std::vector<MatX<S>> u;                    // attention tanh features, B x H
  MatX<S> alpha;                             // B x W attention weights
  MatX<S> ctx;                               // B x H pooled feature
};

// One LSTM cell advance (no cache): h, c are B x H and updated in place.
template <typename S>
void lstm_cell(const NetParams<S>& p, const Eigen::Ref<const MatX<S>>& x,
               MatX<S>& h, MatX<S>& c) {
  int H = p.spec.hidden;
  MatX<S> pre = x * p.view(0);
  pre.noalias() += h * p.view(1);
  pre.rowwise() += RowX<S>(p.view(2));
  MatX<S> i = detail::sigmoid<S>(pre.leftCols(H));
  MatX<S> f = detail::sigmoid<S>(pre.middleCols(H, H));
  MatX<S> g = pre.middleCols(2 * H, H).array().tanh().matrix();
  MatX<S> o = detail::sigmoid<S>(pre.rightCols(H));
  c = (f.array() * c.array() + i.array() * g.array()).matrix();
  h = (o.array() * c.array().tanh()).matrix();
}

// Attention score for one slot's hidden state: e = tanh(h Wa + ba) . v.
template <typename S>
void attn_score(const NetParams<S>& p, const MatX<S>& h, MatX<S>& u, VecX<S>& e) {
  int wa = 3, ba = 4, vv = 5;  // span indices when attention is enabled
  u = ((h * p.view(wa)).rowwise() + RowX<S>(p.view(ba))).array().tanh().matrix();
  e.noalias() = u * VecX<S>(p.view(vv));
}

template <typename S>
MatX<S> forward_recurrent(const NetParams<S>& p, const std::vector<MatX<S>>& xs,
                          RecurrentCache<S>* cache) {
  if (int(xs.size()) != p.spec.window)
    throw std::runtime_error("forward: window length mismatch");
  int W = p.spec.window, H = p.spec.hidden;
  auto B = xs[0].rows();
  MatX<S> h = MatX<S>::Zero(B, H), c = MatX<S>::Zero(B, H);
  std::vector<MatX<S>> hs(static_cast<size_t>(W));
  if (cache) {
    cache->x.resize(size_t(W));
    cache->gi.resize(size_t(W));
    cache->gf.resize(size_t(W));
    cache->gg.resize(size_t(W));
    cache->go.resize(size_t(W));
    cache->c.resize(size_t(W));
    cache->tanh_c.resize(size_t(W));
    cache->h.resize(size_t(W));
  }
  for (int t = 0; t < W; ++t) {
    MatX<S> pre = xs[size_t(t)] * p.view(0);
    pre.noalias() += h * p.view(1);
    pre.rowwise() += RowX<S>(p.view(2));
    MatX<S> gi = detail::sigmoid<S>(pre.leftCols(H));
    MatX<S> gf = detail::sigmoid<S>(pre.middleCols(H, H));
    MatX<S> gg = pre.middleCols(2 * H, H).array().tanh().matrix();
    MatX<S> go = detail::sigmoid<S>(pre.rightCols(H));
    c = (gf.array() * c.array() + gi.array() * gg.array()).matrix();
    MatX<S> tc = c.array().tanh().matrix();
    h = (go.array() * tc.array()).matrix();
    hs[size_t(t)] = h;
    if (cache) {
      cache->x[size_t(t)] = xs[size_t(t)];
      cache->gi[size_t(t)] = std::move(gi);
      cache->gf[size_t(t)] = std::move(gf);
      cache->gg[size_t(t)] = std::move(gg);
      cache->go[size_t(t)] = std::move(go);
      cache->c[size_t(t)] = c;
      cache->tanh_c[size_t(t)] = std::move(tc);
      cache->h[size_t(t)] = h;
    }
  }

  MatX<S> ctx;
  if (p.spec.attention) {
    MatX<S> scores(B, W);
    std::vector<MatX<S>> us(static_cast<size_t>(W));
    for (int t = 0; t < W; ++t) {
      MatX<S> u;
      VecX<S> e;
      attn_score(p, hs[size_t(t)], u, e);
      scores.col(t) = e;
      us[size_t(t)] = std::move(u);
    }
    // Rowwise softmax with max shift.
    VecX<S> m = scores.rowwise().maxCoeff();
    MatX<S> ex = (scores.colwise() - m).array().exp().matrix();
    VecX<S> z = ex.rowwise().sum();
    MatX<S> alpha = (ex.array().colwise() * z.array().inverse()).matrix();
    ctx = MatX<S>::Zero(B, H);
    for (int t = 0; t < W; ++t)
      ctx.array() += hs[size_t(t)].array().colwise() * alpha.col(t).array();
    if (cache) {
      cache->alpha = std::move(alpha);
      cache->u = std::move(us);
    }
  } else {
    ctx = hs[size_t(W - 1)];
  }
  if (cache) cache->ctx = ctx;

  int wy = p.spec.attention ? 6 : 3, by = wy + 1;
  MatX<S> y = ctx * p.view(wy);
  y.rowwise() += RowX<S>(p.view(by));
  return y;
}

// Gradient of sum over batch of <dy, y> with respect to theta (callers bake
// any loss scaling into dy). Requires the cache from forward_recurrent.
template <typename S>
VecX<S> backward_recurrent(const NetParams<S>& p, const RecurrentCache<S>& cc,
                           const MatX<S>& dy) {
  int W = p.spec.window, H = p.spec.hidden;
  auto B = dy.rows();
  NetParams<S> g = NetParams<S>::make(p.spec);  // zeroed gradient accumulator

  int wy = p.spec.attention ? 6 : 3, by = wy + 1;
  g.view(wy).noalias() += cc.ctx.transpose() * dy;
  g.view(by).noalias() += dy.colwise().sum();
  MatX<S> dctx = dy * p.view(wy).transpose();  // B x H

  std::vector<MatX<S>> dh(size_t(W), MatX<S>::Zero(B, H));
  if (p.spec.attention) {
    // ctx = sum_t alpha_t h_t with alpha = softmax(e); e_t = u_t . v,
    // u_t = tanh(h_t Wa + ba).
    MatX<S> dalpha(B, W);
    for (int t = 0; t < W; ++t) {
      dalpha.col(t) = (dctx.array() * cc.h[size_t(t)].array()).rowwise().sum();
      dh[size_t(t)].array() += dctx.array().colwise() * cc.alpha.col(t).array();
    }
    VecX<S> s = (cc.alpha.array() * dalpha.array()).rowwise().sum();
    MatX<S> de = (cc.alpha.array() * (dalpha.colwise() - s).array()).matrix();
    const VecX<S> v = VecX<S>(p.view(5));
    for (int t = 0; t < W; ++t) {
      g.view(5).noalias() += cc.u[size_t(t)].transpose() * de.col(t);
      MatX<S> du = de.col(t) * v.transpose();  // B x H
      MatX<S> dpre_u =
          (du.array() * (S(1) - cc.u[size_t(t)].array().square())).matrix();
      g.view(3).noalias() += cc.h[size_t(t)].transpose() * dpre_u;
      g.view(4).noalias() += dpre_u.colwise().sum();
      dh[size_t(t)].noalias() += dpre_u * p.view(3).transpose();
    }
  } else {
    dh[size_t(W - 1)] += dctx;
  }

  MatX<S> dchain = MatX<S>::Zero(B, H);
  MatX<S> dc = MatX<S>::Zero(B, H);
  for (int t = W - 1; t >= 0; --t) {
    MatX<S> dht = dh[size_t(t)] + dchain;
    const MatX<S>& tc = cc.tanh_c[size_t(t)];
    MatX<S> dgo = (dht.array() * tc.array()).matrix();
    dc.array() += dht.array() * cc.go[size_t(t)].array() * (S(1) - tc.array().square());
    MatX<S> dgi = (dc.array() * cc.gg[size_t(t)].array()).matrix();
    MatX<S> c_prev = t > 0 ? cc.c[size_t(t - 1)] : MatX<S>::Zero(B, H);
    MatX<S> dgf = (dc.array() * c_prev.array()).matrix();
    MatX<S> dgg = (dc.array() * cc.gi[size_t(t)].array()).matrix();

    MatX<S> dpre(B, 4 * H);
    dpre.leftCols(H) =
        (dgi.array() * cc.gi[size_t(t)].array() * (S(1) - cc.gi[size_t(t)].array())).matrix();
    dpre.middleCols(H, H) =
        (dgf.array() * cc.gf[size_t(t)].array() * (S(1) - cc.gf[size_t(t)].array())).matrix();
    dpre.middleCols(2 * H, H) =
        (dgg.array() * (S(1) - cc.gg[size_t(t)].array().square())).matrix();
    dpre.rightCols(H) =
        (dgo.array() * cc.go[size_t(t)].array() * (S(1) - cc.go[size_t(t)].array())).matrix();

    g.view(0).noalias() += cc.x[size_t(t)].transpose() * dpre;
    if (t > 0) g.view(1).noalias() += cc.h[size_t(t - 1)].transpose() * dpre;
    g.view(2).noalias() += dpre.colwise().sum();
    dchain.noalias() = dpre * p.view(1).transpose();
    dc.array() *= cc.gf[size_t(t)].array();
  }
  return g.theta;
}

// ---------- feedforward forward/backward ----------

template <typename S>
struct FeedforwardCache {
  MatX<S> x;       // B x (W*I)
  MatX<S> z1, z2;  // B x H tanh activations
};

template <typename S>
MatX<S> forward_feedforward(const NetParams<S>& p, const MatX<S>& xflat,
                            FeedforwardCache<S>* cache) {
  if (xflat.cols() != ptrdiff_t(p.spec.window) * p.spec.input_dim)
    throw std::runtime_error("forward: flattened window width mismatch");
  MatX<S> z1 = ((xflat * p.view(0)).rowwise() + RowX<S>(p.view(1))).array().tanh().matrix();
  MatX<S> z2 = ((z1 * p.view(2)).rowwise() + RowX<S>(p.view(3))).array().tanh().matrix();
  MatX<S> y = z2 * p.view(4);
  y.rowwise() += RowX<S>(p.view(5));
  if (cache) {
    cache->x = xflat;
    cache->z1 = std::move(z1);
    cache->z2 = std::move(z2);
  }
  return y;
}

template <typename S>
VecX<S> backward_feedforward(const NetParams<S>& p, const FeedforwardCache<S>& cc,
                             const MatX<S>& dy) {
  NetParams<S> g = NetParams<S>::make(p.spec);
  g.view(4).noalias() += cc.z2.transpose() * dy;
  g.view(5).noalias() += dy.colwise().sum();
  MatX<S> dz2 = ((dy * p.view(4).transpose()).array() * (S(1) - cc.z2.array().square())).matrix();
  g.view(2).noalias() += cc.z1.transpose() * dz2;
  g.view(3).noalias() += dz2.colwise().sum();
  MatX<S> dz1 = ((dz2 * p.view(2).transpose()).array() * (S(1) - cc.z1.array().square())).matrix();
  g.view(0).noalias() += cc.x.transpose() * dz1;
  g.view(1).noalias() += dz1.colwise().sum();
  return g.theta;
}

// ---------- window-input convenience ----------

// Unified forward over per-slot inputs xs (W matrices of B x I). Feedforward
// nets receive the slots flattened in time order.
template <typename S>
MatX<S> forward_window(const NetParams<S>& p, const std::vector<MatX<S>>& xs,
                       RecurrentCache<S>* rcache, FeedforwardCache<S>* fcache) {
  if (p.spec.arch == Arch::recurrent) return forward_recurrent(p, xs, rcache);
  int W = p.spec.window, I = p.spec.input_dim;
  auto B = xs.at(0).rows();
  MatX<S> flat(B, ptrdiff_t(W) * I);
  for (int t = 0; t < W; ++t) flat.middleCols(ptrdiff_t(t) * I, I) = xs[size_t(t)];
  return forward_feedforward(p, flat, fcache);
}

}  // namespace hvacmbrl
