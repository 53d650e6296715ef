#include <doctest.h>

#include <cmath>
#include <vector>

#include "hvacmbrl/netkernels.hpp"
#include "hvacmbrl/rng.hpp"

using namespace hvacmbrl;

namespace {

std::vector<Eigen::MatrixXd> random_slots(const NetSpec& s, int batch, Rng& rng) {
  std::vector<Eigen::MatrixXd> xs(size_t(s.window));
  for (auto& x : xs) {
    x.resize(batch, s.input_dim);
    for (ptrdiff_t r = 0; r < x.rows(); ++r)
      for (ptrdiff_t c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(-1.5, 1.5);
  }
  return xs;
}

Eigen::MatrixXd random_mat(ptrdiff_t rows, ptrdiff_t cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (ptrdiff_t r = 0; r < rows; ++r)
    for (ptrdiff_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

// Scalar probe L(theta) = <dy, forward(theta, xs)>; its gradient is what the
// backward pass claims to return.
double probe(const NetParams<double>& p, const std::vector<Eigen::MatrixXd>& xs,
             const Eigen::MatrixXd& dy) {
  Eigen::MatrixXd y = forward_window<double>(p, xs, nullptr, nullptr);
  return (dy.array() * y.array()).sum();
}

Eigen::VectorXd analytic_grad(const NetParams<double>& p,
                              const std::vector<Eigen::MatrixXd>& xs,
                              const Eigen::MatrixXd& dy) {
  RecurrentCache<double> rc;
  FeedforwardCache<double> fc;
  bool rec = p.spec.arch == Arch::recurrent;
  forward_window(p, xs, rec ? &rc : nullptr, rec ? nullptr : &fc);
  return rec ? backward_recurrent(p, rc, dy) : backward_feedforward(p, fc, dy);
}

// Central finite difference of the probe for every parameter.
double max_grad_mismatch(NetParams<double>& p, const std::vector<Eigen::MatrixXd>& xs,
                         const Eigen::MatrixXd& dy) {
  const double h = 1e-5;
  Eigen::VectorXd ga = analytic_grad(p, xs, dy);
  REQUIRE(ga.size() == p.layout.total);
  double worst = 0.0;
  for (ptrdiff_t k = 0; k < p.theta.size(); ++k) {
    double keep = p.theta[k];
    p.theta[k] = keep + h;
    double up = probe(p, xs, dy);
    p.theta[k] = keep - h;
    double dn = probe(p, xs, dy);
    p.theta[k] = keep;
    double gf = (up - dn) / (2.0 * h);
    double rel = std::abs(ga[k] - gf) / std::max({1.0, std::abs(ga[k]), std::abs(gf)});
    worst = std::max(worst, rel);
  }
  return worst;
}

NetSpec spec_of(int w, int i, int h, int o, Arch arch, bool attn) {
  NetSpec s;
  s.window = w;
  s.input_dim = i;
  s.hidden = h;
  s.out_dim = o;
  s.arch = arch;
  s.attention = attn;
  return s;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("analytic gradients match central finite differences") {
  struct Cfg {
    NetSpec spec;
    int batch;
  };
  const Cfg cfgs[] = {
      {spec_of(3, 4, 5, 3, Arch::recurrent, true), 2},
      {spec_of(1, 2, 3, 2, Arch::recurrent, true), 1},
      {spec_of(4, 2, 3, 2, Arch::recurrent, true), 3},
      {spec_of(3, 3, 4, 2, Arch::recurrent, false), 3},
      {spec_of(2, 2, 2, 1, Arch::recurrent, false), 2},
      {spec_of(3, 4, 6, 3, Arch::feedforward, false), 2},
      {spec_of(1, 1, 2, 1, Arch::feedforward, false), 1},
  };
  uint64_t seed = 100;
  for (const Cfg& c : cfgs) {
    CAPTURE(c.spec.window);
    CAPTURE(int(c.spec.arch));
    CAPTURE(c.spec.attention);
    Rng rng(seed++);
    NetParams<double> p = NetParams<double>::make(c.spec);
    init_params(p, rng);
    // Perturb biases too so no parameter sits at an exact zero of the probe.
    for (ptrdiff_t k = 0; k < p.theta.size(); ++k) p.theta[k] += rng.uniform(-0.05, 0.05);
    auto xs = random_slots(c.spec, c.batch, rng);
    Eigen::MatrixXd dy = random_mat(c.batch, c.spec.out_dim, rng);
    CHECK(max_grad_mismatch(p, xs, dy) < 1e-6);
  }
}

TEST_CASE("attention weights are a proper distribution over slots") {
  NetSpec s = spec_of(5, 3, 4, 2, Arch::recurrent, true);
  Rng rng(7);
  NetParams<double> p = NetParams<double>::make(s);
  init_params(p, rng);
  auto xs = random_slots(s, 4, rng);
  RecurrentCache<double> cache;
  forward_recurrent(p, xs, &cache);
  REQUIRE(cache.alpha.rows() == 4);
  REQUIRE(cache.alpha.cols() == 5);
  for (ptrdiff_t b = 0; b < 4; ++b) {
    CHECK(cache.alpha.row(b).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (ptrdiff_t t = 0; t < 5; ++t) {
      CHECK(cache.alpha(b, t) >= 0.0);
      CHECK(cache.alpha(b, t) <= 1.0);
    }
  }
}

TEST_CASE("all-zero parameters produce an exactly zero output") {
  for (bool attn : {true, false}) {
    NetSpec s = spec_of(4, 3, 5, 2, Arch::recurrent, attn);
    NetParams<double> p = NetParams<double>::make(s);
    Rng rng(9);
    auto xs = random_slots(s, 3, rng);
    Eigen::MatrixXd y = forward_recurrent<double>(p, xs, nullptr);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  }
  NetSpec f = spec_of(4, 3, 5, 2, Arch::feedforward, false);
  NetParams<double> p = NetParams<double>::make(f);
  Rng rng(9);
  auto xs = random_slots(f, 3, rng);
  CHECK(forward_window<double>(p, xs, nullptr, nullptr).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward is pure and deterministic") {
  NetSpec s = spec_of(3, 4, 5, 3, Arch::recurrent, true);
  Rng rng(21);
  NetParams<double> p = NetParams<double>::make(s);
  init_params(p, rng);
  auto xs = random_slots(s, 2, rng);
  Eigen::MatrixXd y1 = forward_recurrent<double>(p, xs, nullptr);
  RecurrentCache<double> cache;
  Eigen::MatrixXd y2 = forward_recurrent(p, xs, &cache);
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initialization zeroes biases and bounds weights by fan-in") {
  NetSpec s = spec_of(3, 4, 5, 3, Arch::recurrent, true);
  Rng a(3), b(3), c(4);
  NetParams<double> p1 = NetParams<double>::make(s);
  NetParams<double> p2 = NetParams<double>::make(s);
  NetParams<double> p3 = NetParams<double>::make(s);
  init_params(p1, a);
  init_params(p2, b);
  init_params(p3, c);
  CHECK(p1.theta.cwiseEqual(p2.theta).all());
  CHECK_FALSE(p1.theta.cwiseEqual(p3.theta).all());
  for (size_t i = 0; i < p1.layout.spans.size(); ++i) {
    const TensorSpan& t = p1.layout.spans[i];
    Eigen::VectorXd seg = p1.theta.segment(t.offset, t.size());
    if (t.fan_in == 0) {
      CHECK(seg.cwiseAbs().maxCoeff() == 0.0);
    } else {
      double bound = 1.0 / std::sqrt(double(t.fan_in));
      CHECK(seg.cwiseAbs().maxCoeff() <= bound);
      CHECK(seg.cwiseAbs().maxCoeff() > 0.0);
    }
  }
}

TEST_CASE("parameter count follows the documented layout") {
  NetSpec s = spec_of(3, 9, 64, 5, Arch::recurrent, true);
  NetLayout l = NetLayout::make(s);
  int I = 9, H = 64, O = 5;
  ptrdiff_t expect = ptrdiff_t(I) * 4 * H + ptrdiff_t(H) * 4 * H + 4 * H  // lstm
                     + ptrdiff_t(H) * H + H + H                           // attention
                     + ptrdiff_t(H) * O + O;                              // head
  CHECK(l.total == expect);

  NetSpec f = spec_of(4, 9, 32, 5, Arch::feedforward, false);
  NetLayout lf = NetLayout::make(f);
  ptrdiff_t expect_f = ptrdiff_t(4 * 9) * 32 + 32 + ptrdiff_t(32) * 32 + 32 +
                       ptrdiff_t(32) * 5 + 5;
  CHECK(lf.total == expect_f);
}

TEST_CASE("a one-slot recurrent net matches a hand-driven lstm cell") {
  NetSpec s = spec_of(1, 3, 4, 2, Arch::recurrent, false);
  Rng rng(11);
  NetParams<double> p = NetParams<double>::make(s);
  init_params(p, rng);
  auto xs = random_slots(s, 2, rng);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 4);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 4);
  lstm_cell<double>(p, xs[0], h, c);
  Eigen::MatrixXd manual = h * p.view(3);
  manual.rowwise() += Eigen::RowVectorXd(p.view(4));
  Eigen::MatrixXd y = forward_recurrent<double>(p, xs, nullptr);
  CHECK((y - manual).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feedforward nets see the slots flattened in time order") {
  NetSpec s = spec_of(3, 2, 4, 2, Arch::feedforward, false);
  Rng rng(13);
  NetParams<double> p = NetParams<double>::make(s);
  init_params(p, rng);
  auto xs = random_slots(s, 2, rng);
  Eigen::MatrixXd flat(2, 6);
  flat << xs[0], xs[1], xs[2];
  Eigen::MatrixXd via_window = forward_window<double>(p, xs, nullptr, nullptr);
  Eigen::MatrixXd direct = forward_feedforward<double>(p, flat, nullptr);
  CHECK((via_window - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shape mismatches are rejected with a clear message") {
  NetSpec s = spec_of(3, 2, 4, 2, Arch::recurrent, true);
  NetParams<double> p = NetParams<double>::make(s);
  Rng rng(5);
  auto xs = random_slots(s, 2, rng);
  xs.pop_back();
  CHECK_THROWS_WITH_AS(forward_recurrent<double>(p, xs, nullptr),
                       doctest::Contains("window length"), std::runtime_error);
  NetSpec f = spec_of(3, 2, 4, 2, Arch::feedforward, false);
  NetParams<double> pf = NetParams<double>::make(f);
  CHECK_THROWS_WITH_AS(forward_feedforward<double>(pf, Eigen::MatrixXd::Zero(2, 5), nullptr),
                       doctest::Contains("width"), std::runtime_error);
}

TEST_CASE("the backward pass is linear in the output seed") {
  NetSpec s = spec_of(3, 3, 4, 2, Arch::recurrent, true);
  Rng rng(17);
  NetParams<double> p = NetParams<double>::make(s);
  init_params(p, rng);
  auto xs = random_slots(s, 2, rng);
  Eigen::MatrixXd dy = random_mat(2, 2, rng);
  RecurrentCache<double> cache;
  forward_recurrent(p, xs, &cache);
  Eigen::VectorXd g1 = backward_recurrent(p, cache, dy);
  Eigen::VectorXd g2 = backward_recurrent(p, cache, Eigen::MatrixXd(2.0 * dy));
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-12);
}

}  // TEST_SUITE
