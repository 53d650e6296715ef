#include "hvacmbrl/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

void ModelConfig::validate() const {
  if (window < 1) throw std::runtime_error("model config: window must be >= 1");
  if (obs_dim < 1 || act_dim < 1)
    throw std::runtime_error("model config: obs_dim and act_dim must be >= 1");
  if (hidden_size < 1) throw std::runtime_error("model config: hidden_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::runtime_error("model config: learning_rate must be positive");
  if (batch_size < 1) throw std::runtime_error("model config: batch_size must be >= 1");
  if (epochs < 0) throw std::runtime_error("model config: epochs must be >= 0");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw std::runtime_error("model config: train_ratio must be in (0, 1)");
}

NetSpec ModelConfig::net_spec() const {
  NetSpec s;
  s.window = window;
  s.input_dim = obs_dim + act_dim;
  s.hidden = hidden_size;
  s.out_dim = obs_dim;
  s.arch = arch;
  s.attention = attention;
  return s;
}

DynamicsModel DynamicsModel::make(const ModelConfig& config, Rng& init_rng) {
  config.validate();
  DynamicsModel m;
  m.config = config;
  m.net = NetParams<double>::make(config.net_spec());
  init_params(m.net, init_rng);
  m.stats.obs_mean = Eigen::VectorXd::Zero(config.obs_dim);
  m.stats.obs_std = Eigen::VectorXd::Ones(config.obs_dim);
  m.stats.act_mean = Eigen::VectorXd::Zero(config.act_dim);
  m.stats.act_std = Eigen::VectorXd::Ones(config.act_dim);
  return m;
}

std::vector<Eigen::MatrixXd> build_slot_inputs(const DynamicsModel& model,
                                               const std::vector<WindowSample>& samples,
                                               const std::vector<size_t>& index) {
  int W = model.config.window, od = model.config.obs_dim, ad = model.config.act_dim;
  auto B = ptrdiff_t(index.size());
  std::vector<Eigen::MatrixXd> xs(static_cast<size_t>(W));
  Eigen::RowVectorXd om = model.stats.obs_mean.transpose();
  Eigen::RowVectorXd os = model.stats.obs_std.transpose();
  Eigen::RowVectorXd am = model.stats.act_mean.transpose();
  Eigen::RowVectorXd as = model.stats.act_std.transpose();
  for (int t = 0; t < W; ++t) {
    Eigen::MatrixXd& x = xs[size_t(t)];
    x.resize(B, od + ad);
    for (ptrdiff_t b = 0; b < B; ++b) {
      const WindowSample& s = samples[index[size_t(b)]];
      x.row(b).head(od) = (s.obs_window.row(t) - om).array() / os.array();
      x.row(b).tail(ad) = (s.act_window.row(t) - am).array() / as.array();
    }
  }
  return xs;
}

Eigen::MatrixXd build_targets(const DynamicsModel& model,
                              const std::vector<WindowSample>& samples,
                              const std::vector<size_t>& index) {
  int od = model.config.obs_dim;
  auto B = ptrdiff_t(index.size());
  Eigen::MatrixXd t(B, od);
  Eigen::RowVectorXd os = model.stats.obs_std.transpose();
  for (ptrdiff_t b = 0; b < B; ++b)
    t.row(b) = samples[index[size_t(b)]].target.transpose().array() / os.array();
  return t;
}

namespace {

Eigen::MatrixXd forward_normalized(const DynamicsModel& model,
                                   const std::vector<Eigen::MatrixXd>& xs,
                                   RecurrentCache<double>* rc,
                                   FeedforwardCache<double>* fc) {
  for (const auto& x : xs)
    if (!x.allFinite())
      throw std::runtime_error("numeric error in input layer: non-finite activation");
  Eigen::MatrixXd y = forward_window(model.net, xs, rc, fc);
  if (!y.allFinite())
    throw std::runtime_error("numeric error in output layer: non-finite activation");
  return y;
}

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// Loss and its parameter gradient in one forward/backward pass.
Eigen::VectorXd loss_and_grad(const DynamicsModel& model,
                              const std::vector<WindowSample>& samples,
                              const std::vector<size_t>& index, double* loss_out) {
  std::vector<Eigen::MatrixXd> xs = build_slot_inputs(model, samples, index);
  Eigen::MatrixXd targets = build_targets(model, samples, index);
  RecurrentCache<double> rc;
  FeedforwardCache<double> fc;
  bool rec = model.config.arch == Arch::recurrent;
  Eigen::MatrixXd y =
      forward_normalized(model, xs, rec ? &rc : nullptr, rec ? nullptr : &fc);
  Eigen::MatrixXd resid = y - targets;
  auto B = double(index.size());
  if (loss_out) *loss_out = 0.5 * resid.squaredNorm() / B;
  Eigen::MatrixXd dy = resid / B;
  return rec ? backward_recurrent(model.net, rc, dy)
             : backward_feedforward(model.net, fc, dy);
}

}  // namespace

Eigen::VectorXd predict_next(const DynamicsModel& model,
                             const Eigen::MatrixXd& obs_window,
                             const Eigen::MatrixXd& act_window) {
  int W = model.config.window, od = model.config.obs_dim, ad = model.config.act_dim;
  if (obs_window.rows() != W || obs_window.cols() != od)
    throw std::runtime_error("predict: observation window shape mismatch");
  if (act_window.rows() != W || act_window.cols() != ad)
    throw std::runtime_error("predict: action window shape mismatch");
  std::vector<Eigen::MatrixXd> xs(static_cast<size_t>(W));
  for (int t = 0; t < W; ++t) {
    Eigen::MatrixXd x(1, od + ad);
    x.row(0).head(od) = (obs_window.row(t) - model.stats.obs_mean.transpose()).array() /
                        model.stats.obs_std.transpose().array();
    x.row(0).tail(ad) = (act_window.row(t) - model.stats.act_mean.transpose()).array() /
                        model.stats.act_std.transpose().array();
    xs[size_t(t)] = std::move(x);
  }
  Eigen::MatrixXd y = forward_normalized(model, xs, nullptr, nullptr);
  return obs_window.row(W - 1).transpose() +
         (model.stats.obs_std.array() * y.row(0).transpose().array()).matrix();
}

double window_loss(const DynamicsModel& model, const std::vector<WindowSample>& samples,
                   const std::vector<size_t>& index) {
  if (index.empty()) throw std::runtime_error("loss requires a non-empty batch");
  std::vector<Eigen::MatrixXd> xs = build_slot_inputs(model, samples, index);
  Eigen::MatrixXd targets = build_targets(model, samples, index);
  Eigen::MatrixXd y = forward_normalized(model, xs, nullptr, nullptr);
  return 0.5 * (y - targets).squaredNorm() / double(index.size());
}

double window_loss(const DynamicsModel& model, const std::vector<WindowSample>& samples) {
  return window_loss(model, samples, all_indices(samples.size()));
}

Eigen::VectorXd window_loss_grad(const DynamicsModel& model,
                                 const std::vector<WindowSample>& samples,
                                 const std::vector<size_t>& index) {
  if (index.empty()) throw std::runtime_error("loss requires a non-empty batch");
  return loss_and_grad(model, samples, index, nullptr);
}

Eigen::VectorXd window_loss_grad(const DynamicsModel& model,
                                 const std::vector<WindowSample>& samples) {
  return window_loss_grad(model, samples, all_indices(samples.size()));
}

TrainReport train_dynamics(DynamicsModel& model, const ExperienceBuffer& buffer,
                           Rng& rng) {
  model.config.validate();
  model.stats = compute_norm_stats(buffer);
  std::vector<WindowSample> windows = make_windows(buffer, model.config.window);
  if (windows.empty())
    throw std::runtime_error("training requires at least one complete window");
  auto [train, val] = split_windows(std::move(windows), model.config.train_ratio);

  TrainReport report;
  report.n_train = train.size();
  report.n_val = val.size();
  std::vector<size_t> order = all_indices(train.size());
  size_t bs = size_t(model.config.batch_size);
  for (int e = 0; e < model.config.epochs; ++e) {
    rng.shuffle(order);
    double acc = 0.0;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += bs) {
      size_t stop = std::min(start + bs, order.size());
      std::vector<size_t> idx(order.begin() + ptrdiff_t(start),
                              order.begin() + ptrdiff_t(stop));
      double loss = 0.0;
      Eigen::VectorXd grad = loss_and_grad(model, train, idx, &loss);
      model.net.theta -= model.config.learning_rate * grad;
      acc += loss;
      ++n_batches;
    }
    report.epoch_train_loss.push_back(acc / double(n_batches));
  }
  if (!val.empty()) report.val_loss = window_loss(model, val);
  return report;
}

Eigen::MatrixXd open_loop_rollout(const DynamicsModel& model,
                                  const Eigen::MatrixXd& obs_hist,
                                  const Eigen::MatrixXd& act_hist,
                                  const Eigen::MatrixXd& future_actions) {
  int W = model.config.window, od = model.config.obs_dim, ad = model.config.act_dim;
  if (obs_hist.rows() != W || obs_hist.cols() != od)
    throw std::runtime_error("rollout: observation history must be W x obs_dim");
  if (act_hist.rows() != W - 1 || act_hist.cols() != ad)
    throw std::runtime_error("rollout: action history must be (W-1) x act_dim");
  auto H = future_actions.rows();
  if (H < 1 || future_actions.cols() != ad)
    throw std::runtime_error("rollout: need at least one future action row");

  Eigen::MatrixXd obs_win = obs_hist;
  Eigen::MatrixXd act_win(W, ad);
  if (W > 1) act_win.topRows(W - 1) = act_hist;
  act_win.row(W - 1) = future_actions.row(0);

  Eigen::MatrixXd out(H, od);
  for (ptrdiff_t h = 0; h < H; ++h) {
    Eigen::VectorXd pred = predict_next(model, obs_win, act_win);
    out.row(h) = pred.transpose();
    if (h + 1 == H) break;
    Eigen::MatrixXd shifted_obs = obs_win.bottomRows(W - 1);
    obs_win.topRows(W - 1) = shifted_obs;
    obs_win.row(W - 1) = pred.transpose();
    Eigen::MatrixXd shifted_act = act_win.bottomRows(W - 1);
    act_win.topRows(W - 1) = shifted_act;
    act_win.row(W - 1) = future_actions.row(h + 1);
  }
  return out;
}

double deviation(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& ground_truth) {
  if (predicted.rows() != ground_truth.rows() || predicted.cols() != ground_truth.cols())
    throw std::runtime_error("deviation: sequence shape mismatch");
  if (predicted.rows() < 1) throw std::runtime_error("deviation: empty sequence");
  double acc = 0.0;
  for (ptrdiff_t h = 0; h < predicted.rows(); ++h) {
    for (ptrdiff_t j = 0; j < predicted.cols(); ++j)
      if (std::abs(ground_truth(h, j)) < 1e-9)
        throw std::runtime_error(
            "deviation undefined: ground-truth component " + std::to_string(j) +
            " at step " + std::to_string(h) + " has magnitude below 1e-9");
    acc += ((ground_truth.row(h) - predicted.row(h)).array() /
            ground_truth.row(h).array())
               .matrix()
               .norm();
  }
  return acc / double(predicted.rows());
}

namespace {

void put_vec(std::string& out, const Eigen::VectorXd& v) {
  put_u64(out, uint64_t(v.size()));
  for (ptrdiff_t i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

Eigen::VectorXd read_vec(BinReader& r) {
  uint64_t n = r.u64();
  Eigen::VectorXd v(static_cast<ptrdiff_t>(n));
  for (uint64_t i = 0; i < n; ++i) v[ptrdiff_t(i)] = r.f64();
  return v;
}

constexpr char kMagic[] = "HVDM";

}  // namespace

std::string serialize_dynamics(const DynamicsModel& model) {
  std::string out;
  out.append(kMagic, 4);
  put_u64(out, 1);  // format version
  const ModelConfig& c = model.config;
  put_i64(out, c.window);
  put_i64(out, c.obs_dim);
  put_i64(out, c.act_dim);
  put_u64(out, c.arch == Arch::recurrent ? 0 : 1);
  put_u64(out, c.attention ? 1 : 0);
  put_i64(out, c.hidden_size);
  put_f64(out, c.learning_rate);
  put_i64(out, c.batch_size);
  put_i64(out, c.epochs);
  put_f64(out, c.train_ratio);
  put_vec(out, model.stats.obs_mean);
  put_vec(out, model.stats.obs_std);
  put_vec(out, model.stats.act_mean);
  put_vec(out, model.stats.act_std);
  put_f64(out, model.stats.epsilon);
  put_vec(out, model.net.theta);
  return out;
}

DynamicsModel deserialize_dynamics(const std::string& bytes) {
  BinReader r(bytes);
  if (r.bytes(4) != std::string(kMagic, 4))
    throw std::runtime_error("model checkpoint: bad magic");
  if (r.u64() != 1) throw std::runtime_error("model checkpoint: unsupported version");
  ModelConfig c;
  c.window = int(r.i64());
  c.obs_dim = int(r.i64());
  c.act_dim = int(r.i64());
  c.arch = r.u64() == 0 ? Arch::recurrent : Arch::feedforward;
  c.attention = r.u64() != 0;
  c.hidden_size = int(r.i64());
  c.learning_rate = r.f64();
  c.batch_size = int(r.i64());
  c.epochs = int(r.i64());
  c.train_ratio = r.f64();
  c.validate();
  DynamicsModel m;
  m.config = c;
  m.net = NetParams<double>::make(c.net_spec());
  m.stats.obs_mean = read_vec(r);
  m.stats.obs_std = read_vec(r);
  m.stats.act_mean = read_vec(r);
  m.stats.act_std = read_vec(r);
  m.stats.epsilon = r.f64();
  Eigen::VectorXd theta = read_vec(r);
  if (theta.size() != m.net.layout.total)
    throw std::runtime_error("model checkpoint: parameter count mismatch");
  m.net.theta = theta;
  if (!r.done()) throw std::runtime_error("checkpoint blob has trailing bytes");
  return m;
}

}  // namespace hvacmbrl
