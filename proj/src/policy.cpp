#include "hvacmbrl/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

void PolicyConfig::validate() const {
  if (window < 1) throw std::runtime_error("policy config: window must be >= 1");
  if (obs_dim < 1 || act_dim < 1)
    throw std::runtime_error("policy config: obs_dim and act_dim must be >= 1");
  if (hidden_size < 1) throw std::runtime_error("policy config: hidden_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::runtime_error("policy config: learning_rate must be positive");
  if (batch_size < 1) throw std::runtime_error("policy config: batch_size must be >= 1");
  if (epochs < 0) throw std::runtime_error("policy config: epochs must be >= 0");
}

NetSpec PolicyConfig::net_spec() const {
  NetSpec s;
  s.window = window;
  s.input_dim = obs_dim;  // observation-only encoder
  s.hidden = hidden_size;
  s.out_dim = act_dim;
  s.arch = arch;
  s.attention = attention;
  return s;
}

PolicyModel PolicyModel::make(const PolicyConfig& config, Rng& init_rng) {
  config.validate();
  PolicyModel m;
  m.config = config;
  m.net = NetParams<double>::make(config.net_spec());
  init_params(m.net, init_rng);
  m.stats.obs_mean = Eigen::VectorXd::Zero(config.obs_dim);
  m.stats.obs_std = Eigen::VectorXd::Ones(config.obs_dim);
  m.stats.act_mean = Eigen::VectorXd::Zero(config.act_dim);
  m.stats.act_std = Eigen::VectorXd::Ones(config.act_dim);
  return m;
}

ImitationBuffer::ImitationBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::runtime_error("imitation buffer capacity must be positive");
}

void ImitationBuffer::append(LabeledWindow item) {
  items_.push_back(std::move(item));
  while (items_.size() > capacity_) items_.pop_front();
}

namespace {

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

std::vector<Eigen::MatrixXd> policy_slot_inputs(const PolicyModel& model,
                                                const std::vector<LabeledWindow>& items,
                                                const std::vector<size_t>& index) {
  int W = model.config.window, od = model.config.obs_dim;
  auto B = ptrdiff_t(index.size());
  Eigen::RowVectorXd om = model.stats.obs_mean.transpose();
  Eigen::RowVectorXd os = model.stats.obs_std.transpose();
  std::vector<Eigen::MatrixXd> xs(static_cast<size_t>(W));
  for (int t = 0; t < W; ++t) {
    Eigen::MatrixXd& x = xs[size_t(t)];
    x.resize(B, od);
    for (ptrdiff_t b = 0; b < B; ++b) {
      const LabeledWindow& it = items[index[size_t(b)]];
      if (it.obs_window.rows() != W || it.obs_window.cols() != od)
        throw std::runtime_error("policy: observation window shape mismatch");
      x.row(b) = (it.obs_window.row(t) - om).array() / os.array();
    }
  }
  return xs;
}

// Squashed outputs plus the pre-squash cache needed for the backward pass.
Eigen::MatrixXd policy_forward_batch(const PolicyModel& model,
                                     const std::vector<Eigen::MatrixXd>& xs,
                                     RecurrentCache<double>* rc,
                                     FeedforwardCache<double>* fc) {
  Eigen::MatrixXd y = forward_window(model.net, xs, rc, fc);
  if (!y.allFinite())
    throw std::runtime_error("numeric error in output layer: non-finite activation");
  return y.array().tanh().matrix();
}

}  // namespace

Eigen::Vector4d policy_forward(const PolicyModel& model,
                               const Eigen::MatrixXd& obs_window) {
  if (model.config.act_dim != 4)
    throw std::runtime_error("policy: normalized action head must have 4 components");
  std::vector<LabeledWindow> one(1);
  one[0].obs_window = obs_window;
  one[0].label.setZero();
  std::vector<Eigen::MatrixXd> xs = policy_slot_inputs(model, one, {0});
  Eigen::MatrixXd z = policy_forward_batch(model, xs, nullptr, nullptr);
  return Eigen::Vector4d(z.row(0).transpose());
}

double imitation_loss(const PolicyModel& model, const std::vector<LabeledWindow>& items,
                      const std::vector<size_t>& index) {
  if (index.empty()) throw std::runtime_error("imitation loss requires a non-empty batch");
  std::vector<Eigen::MatrixXd> xs = policy_slot_inputs(model, items, index);
  Eigen::MatrixXd z = policy_forward_batch(model, xs, nullptr, nullptr);
  double acc = 0.0;
  for (ptrdiff_t b = 0; b < z.rows(); ++b)
    acc += 0.5 * (z.row(b).transpose() - items[index[size_t(b)]].label.cast<double>())
                     .squaredNorm();
  return acc / double(index.size());
}

double imitation_loss(const PolicyModel& model, const std::vector<LabeledWindow>& items) {
  return imitation_loss(model, items, all_indices(items.size()));
}

Eigen::VectorXd imitation_loss_grad(const PolicyModel& model,
                                    const std::vector<LabeledWindow>& items,
                                    const std::vector<size_t>& index) {
  if (index.empty()) throw std::runtime_error("imitation loss requires a non-empty batch");
  std::vector<Eigen::MatrixXd> xs = policy_slot_inputs(model, items, index);
  RecurrentCache<double> rc;
  FeedforwardCache<double> fc;
  bool rec = model.config.arch == Arch::recurrent;
  Eigen::MatrixXd z =
      policy_forward_batch(model, xs, rec ? &rc : nullptr, rec ? nullptr : &fc);
  auto B = double(index.size());
  Eigen::MatrixXd dy(z.rows(), z.cols());
  for (ptrdiff_t b = 0; b < z.rows(); ++b) {
    Eigen::RowVectorXd resid =
        z.row(b) - items[index[size_t(b)]].label.transpose();
    // d tanh(y) = 1 - tanh(y)^2, and the loss is averaged over the batch.
    dy.row(b) = (resid.array() * (1.0 - z.row(b).array().square())).matrix() / B;
  }
  return rec ? backward_recurrent(model.net, rc, dy)
             : backward_feedforward(model.net, fc, dy);
}

Eigen::VectorXd imitation_loss_grad(const PolicyModel& model,
                                    const std::vector<LabeledWindow>& items) {
  return imitation_loss_grad(model, items, all_indices(items.size()));
}

PolicyTrainReport train_policy(PolicyModel& model, const ImitationBuffer& buffer,
                               Rng& rng) {
  model.config.validate();
  if (buffer.size() == 0)
    throw std::runtime_error("policy training requires a non-empty buffer");

  // Population stats over every stored window row, matching the experience
  // buffer's normalization convention.
  int od = model.config.obs_dim;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(od);
  double n = 0.0;
  for (const LabeledWindow& it : buffer.items()) {
    for (ptrdiff_t r = 0; r < it.obs_window.rows(); ++r) {
      mean += it.obs_window.row(r).transpose();
      n += 1.0;
    }
  }
  mean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(od);
  for (const LabeledWindow& it : buffer.items())
    for (ptrdiff_t r = 0; r < it.obs_window.rows(); ++r)
      var += (it.obs_window.row(r).transpose() - mean).array().square().matrix();
  var /= n;
  model.stats.obs_mean = mean;
  model.stats.obs_std = var.cwiseSqrt().cwiseMax(model.stats.epsilon);

  std::vector<LabeledWindow> items(buffer.items().begin(), buffer.items().end());
  PolicyTrainReport report;
  report.n_items = items.size();
  std::vector<size_t> order = all_indices(items.size());
  size_t bs = size_t(model.config.batch_size);
  for (int e = 0; e < model.config.epochs; ++e) {
    rng.shuffle(order);
    double acc = 0.0;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += bs) {
      size_t stop = std::min(start + bs, order.size());
      std::vector<size_t> idx(order.begin() + ptrdiff_t(start),
                              order.begin() + ptrdiff_t(stop));
      acc += imitation_loss(model, items, idx);
      Eigen::VectorXd grad = imitation_loss_grad(model, items, idx);
      model.net.theta -= model.config.learning_rate * grad;
      ++n_batches;
    }
    report.epoch_train_loss.push_back(acc / double(n_batches));
  }
  return report;
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

}  // namespace

std::string serialize_policy(const PolicyModel& model) {
  std::string out;
  out.append("HVPM", 4);
  put_u64(out, 1);  // format version
  const PolicyConfig& c = model.config;
  put_i64(out, c.window);
  put_i64(out, c.obs_dim);
  put_i64(out, c.act_dim);
  put_u64(out, c.arch == Arch::recurrent ? 0 : 1);
  put_u64(out, c.attention ? 1 : 0);
  put_i64(out, c.hidden_size);
  put_f64(out, c.learning_rate);
  put_i64(out, c.batch_size);
  put_i64(out, c.epochs);
  put_vec(out, model.stats.obs_mean);
  put_vec(out, model.stats.obs_std);
  put_vec(out, model.stats.act_mean);
  put_vec(out, model.stats.act_std);
  put_f64(out, model.stats.epsilon);
  put_vec(out, model.net.theta);
  return out;
}

PolicyModel deserialize_policy(const std::string& bytes) {
  BinReader r(bytes);
  if (r.bytes(4) != "HVPM") throw std::runtime_error("policy checkpoint: bad magic");
  if (r.u64() != 1) throw std::runtime_error("policy checkpoint: unsupported version");
  PolicyConfig c;
  c.window = int(r.i64());
  c.obs_dim = int(r.i64());
  c.act_dim = int(r.i64());
  c.arch = r.u64() == 0 ? Arch::recurrent : Arch::feedforward;
  c.attention = r.u64() != 0;
  c.hidden_size = int(r.i64());
  c.learning_rate = r.f64();
  c.batch_size = int(r.i64());
  c.epochs = int(r.i64());
  c.validate();
  PolicyModel m;
  m.config = c;
  m.net = NetParams<double>::make(c.net_spec());
  m.stats.obs_mean = read_vec(r);
  m.stats.obs_std = read_vec(r);
  m.stats.act_mean = read_vec(r);
  m.stats.act_std = read_vec(r);
  m.stats.epsilon = r.f64();
  Eigen::VectorXd theta = read_vec(r);
  if (theta.size() != m.net.layout.total)
    throw std::runtime_error("policy checkpoint: parameter count mismatch");
  m.net.theta = theta;
  if (!r.done()) throw std::runtime_error("checkpoint blob has trailing bytes");
  return m;
}

std::string ImitationBuffer::serialize() const {
  std::string out;
  out.append("HVPB", 4);
  put_u64(out, 1);  // format version
  put_u64(out, capacity_);
  put_u64(out, items_.size());
  for (const LabeledWindow& it : items_) {
    put_u64(out, uint64_t(it.obs_window.rows()));
    put_u64(out, uint64_t(it.obs_window.cols()));
    for (ptrdiff_t r = 0; r < it.obs_window.rows(); ++r)
      for (ptrdiff_t c = 0; c < it.obs_window.cols(); ++c)
        put_f64(out, it.obs_window(r, c));
    for (int i = 0; i < 4; ++i) put_f64(out, it.label[i]);
  }
  return out;
}

ImitationBuffer ImitationBuffer::deserialize(const std::string& bytes) {
  BinReader r(bytes);
  if (r.bytes(4) != "HVPB") throw std::runtime_error("imitation buffer: bad magic");
  if (r.u64() != 1) throw std::runtime_error("imitation buffer: unsupported version");
  ImitationBuffer buf(r.u64());
  uint64_t count = r.u64();
  for (uint64_t i = 0; i < count; ++i) {
    LabeledWindow it;
    uint64_t rows = r.u64(), cols = r.u64();
    it.obs_window.resize(ptrdiff_t(rows), ptrdiff_t(cols));
    for (uint64_t rr = 0; rr < rows; ++rr)
      for (uint64_t cc = 0; cc < cols; ++cc)
        it.obs_window(ptrdiff_t(rr), ptrdiff_t(cc)) = r.f64();
    for (int c = 0; c < 4; ++c) it.label[c] = r.f64();
    buf.append(std::move(it));
  }
  if (!r.done()) throw std::runtime_error("checkpoint blob has trailing bytes");
  return buf;
}

}  // namespace hvacmbrl
