#include "hvacmbrl/experience.hpp"

#include <cmath>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

void ExperienceBuffer::append(TrajectoryStep step) {
  steps_.push_back(std::move(step));
  while (steps_.size() > capacity_) steps_.pop_front();
}

std::string ExperienceBuffer::serialize() const {
  std::string out = "HVXB";
  put_u64(out, 1);  // version
  put_u64(out, capacity_);
  put_u64(out, steps_.size());
  put_u64(out, steps_.empty() ? 0 : static_cast<uint64_t>(steps_.front().obs.size()));
  put_u64(out, steps_.empty() ? 0 : static_cast<uint64_t>(steps_.front().act.size()));
  for (const auto& s : steps_) {
    put_i64(out, s.episode_id);
    put_i64(out, s.step_index);
    for (Eigen::Index i = 0; i < s.obs.size(); ++i) put_f64(out, s.obs[i]);
    for (Eigen::Index i = 0; i < s.act.size(); ++i) put_f64(out, s.act[i]);
  }
  return out;
}

ExperienceBuffer ExperienceBuffer::deserialize(const std::string& blob) {
  BinReader r(blob);
  if (r.bytes(4) != "HVXB") throw std::runtime_error("buffer checkpoint: bad magic");
  if (r.u64() != 1) throw std::runtime_error("buffer checkpoint: unsupported version");
  ExperienceBuffer buf(r.u64());
  uint64_t count = r.u64();
  auto obs_dim = static_cast<Eigen::Index>(r.u64());
  auto act_dim = static_cast<Eigen::Index>(r.u64());
  for (uint64_t k = 0; k < count; ++k) {
    TrajectoryStep s;
    s.episode_id = r.i64();
    s.step_index = r.i64();
    s.obs.resize(obs_dim);
    for (Eigen::Index i = 0; i < obs_dim; ++i) s.obs[i] = r.f64();
    s.act.resize(act_dim);
    for (Eigen::Index i = 0; i < act_dim; ++i) s.act[i] = r.f64();
    buf.append(std::move(s));
  }
  if (!r.done()) throw std::runtime_error("buffer checkpoint: trailing bytes");
  return buf;
}

namespace {

void mean_std(const std::deque<TrajectoryStep>& steps, bool use_obs, double epsilon,
              Eigen::VectorXd& mean, Eigen::VectorXd& stdev) {
  const Eigen::VectorXd& first = use_obs ? steps.front().obs : steps.front().act;
  Eigen::Index dim = first.size();
  mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : steps) mean += use_obs ? s.obs : s.act;
  mean /= static_cast<double>(steps.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& s : steps) {
    Eigen::VectorXd d = (use_obs ? s.obs : s.act) - mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(steps.size());  // population variance
  stdev = var.cwiseSqrt().cwiseMax(epsilon);
}

}  // namespace

NormStats compute_norm_stats(const ExperienceBuffer& buffer, double epsilon) {
  if (buffer.size() == 0) throw std::runtime_error("compute_norm_stats: empty buffer");
  NormStats st;
  st.epsilon = epsilon;
  mean_std(buffer.steps(), true, epsilon, st.obs_mean, st.obs_std);
  mean_std(buffer.steps(), false, epsilon, st.act_mean, st.act_std);

  // Spread of one-step observation changes across consecutive pairs (same
  // continuity rule as make_windows). Deltas are treated as mean-free; with
  // no consecutive pair the scale stays neutral.
  Eigen::Index od = buffer.steps().front().obs.size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(od);
  size_t pairs = 0;
  const auto& steps = buffer.steps();
  for (size_t i = 1; i < steps.size(); ++i) {
    if (steps[i].episode_id != steps[i - 1].episode_id ||
        steps[i].step_index != steps[i - 1].step_index + 1)
      continue;
    Eigen::VectorXd d = steps[i].obs - steps[i - 1].obs;
    acc += d.cwiseProduct(d);
    ++pairs;
  }
  st.delta_std = pairs == 0 ? Eigen::VectorXd::Ones(od)
                            : Eigen::VectorXd((acc / static_cast<double>(pairs))
                                                  .cwiseSqrt()
                                                  .cwiseMax(epsilon));
  return st;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& std) {
  if (x.size() != mean.size() || x.size() != std.size())
    throw std::runtime_error("normalize: dimension mismatch");
  return (x - mean).cwiseQuotient(std);
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& xn, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std) {
  if (xn.size() != mean.size() || xn.size() != std.size())
    throw std::runtime_error("denormalize: dimension mismatch");
  return mean + xn.cwiseProduct(std);
}

std::vector<WindowSample> make_windows(const ExperienceBuffer& buffer, int W) {
  if (W < 1) throw std::runtime_error("make_windows: W must be >= 1");
  std::vector<WindowSample> out;
  const auto& steps = buffer.steps();
  size_t n = steps.size();
  if (n == 0) return out;
  Eigen::Index obs_dim = steps.front().obs.size();
  Eigen::Index act_dim = steps.front().act.size();
  size_t run_start = 0;
  auto emit_run = [&](size_t begin, size_t end) {
    // Run [begin, end) is consecutive within one episode: L steps yield
    // max(0, L - W) samples, each W inputs plus the next step as target.
    size_t L = end - begin;
    if (L < static_cast<size_t>(W) + 1) return;
    for (size_t t = begin; t + W < end; ++t) {
      WindowSample ws;
      ws.obs_window.resize(W, obs_dim);
      ws.act_window.resize(W, act_dim);
      for (int r = 0; r < W; ++r) {
        ws.obs_window.row(r) = steps[t + r].obs.transpose();
        ws.act_window.row(r) = steps[t + r].act.transpose();
      }
      ws.target = steps[t + W].obs - steps[t + W - 1].obs;
      out.push_back(std::move(ws));
    }
  };
  for (size_t i = 1; i <= n; ++i) {
    bool boundary = i == n || steps[i].episode_id != steps[i - 1].episode_id ||
                    steps[i].step_index != steps[i - 1].step_index + 1;
    if (boundary) {
      emit_run(run_start, i);
      run_start = i;
    }
  }
  return out;
}

std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_windows(
    std::vector<WindowSample> samples, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::runtime_error("split: ratio must be in (0,1)");
  size_t n_train = static_cast<size_t>(
      std::ceil(ratio * static_cast<double>(samples.size()) - 1e-12));
  if (n_train > samples.size()) n_train = samples.size();
  std::vector<WindowSample> val(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                                std::make_move_iterator(samples.end()));
  samples.resize(n_train);
  return {std::move(samples), std::move(val)};
}

}  // namespace hvacmbrl
