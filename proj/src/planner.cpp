#include "hvacmbrl/planner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hvacmbrl {

void PlanConfig::validate() const {
  if (horizon < 1) throw std::runtime_error("plan config: horizon must be >= 1");
  if (samples < 1)
    throw std::runtime_error("plan config: need at least one candidate sequence");
}

bool score_better(const SequenceScore& a, const SequenceScore& b) {
  if (a.violations != b.violations) return a.violations < b.violations;
  return a.total_reward > b.total_reward;
}

int select_candidate(const std::vector<SequenceScore>& scores) {
  if (scores.empty()) throw std::runtime_error("selection requires at least one candidate");
  int best = 0;
  for (int i = 1; i < int(scores.size()); ++i)
    if (score_better(scores[size_t(i)], scores[size_t(best)])) best = i;
  return best;
}

namespace {

void check_planner_dims(const DynamicsModel& model, const HistoryWindow& hist) {
  if (model.config.obs_dim != kObsDim || model.config.act_dim != kActDim)
    throw std::runtime_error("planner requires the 5-observation / 4-action model shape");
  int W = model.config.window;
  if (hist.obs.rows() != W || hist.obs.cols() != model.config.obs_dim)
    throw std::runtime_error("planner: history observations must be W x obs_dim");
  if (hist.acts.rows() != W - 1 || hist.acts.cols() != model.config.act_dim)
    throw std::runtime_error("planner: history actions must be (W-1) x act_dim");
}

// Decode a z-sequence into the chained raw-action matrix (H x 4).
Eigen::MatrixXd decode_chain(const Eigen::MatrixXd& z_seq, const RawAction& a_prev,
                             const SafeActionSpace& space) {
  Eigen::MatrixXd acts(z_seq.rows(), kActDim);
  RawAction cur = a_prev;
  for (ptrdiff_t h = 0; h < z_seq.rows(); ++h) {
    cur = decode_action(NormalizedAction{Eigen::Vector4d(z_seq.row(h).transpose())}, cur,
                        space);
    acts.row(h) = cur.vec().transpose();
  }
  return acts;
}

SequenceScore score_predictions(const Eigen::MatrixXd& preds, const RewardParams& rp) {
  SequenceScore s;
  double disc = 1.0;
  for (ptrdiff_t h = 0; h < preds.rows(); ++h) {
    RewardResult rr = reward(Observation::from_vec(preds.row(h).transpose()), rp);
    s.total_reward += disc * rr.r;
    s.violations += int(rr.violation_west) + int(rr.violation_east);
    disc *= rp.gamma;
  }
  return s;
}

// Batched scorer for the recurrent architecture. At rollout step h the
// window's first max(0, W-1-h) slots are identical across candidates, so
// that prefix is advanced once at batch 1 and its LSTM state (and attention
// partial sums, combined with the usual max-shift merge) is broadcast to all
// K candidates, which then advance only their candidate-specific suffix.
std::vector<SequenceScore> score_batched(const DynamicsModel& model,
                                         const HistoryWindow& hist,
                                         const RawAction& a_prev,
                                         const std::vector<Eigen::MatrixXd>& cands,
                                         const RewardParams& rp,
                                         const SafeActionSpace& space) {
  const NetParams<double>& net = model.net;
  int W = model.config.window, od = model.config.obs_dim, ad = model.config.act_dim;
  int hidden = model.config.hidden_size;
  int K = int(cands.size());
  int H = int(cands[0].rows());
  bool attn = model.config.attention;
  int wy = attn ? 6 : 3, by = wy + 1;

  Eigen::RowVectorXd om = model.stats.obs_mean.transpose();
  Eigen::RowVectorXd os = model.stats.obs_std.transpose();
  Eigen::RowVectorXd am = model.stats.act_mean.transpose();
  Eigen::RowVectorXd as = model.stats.act_std.transpose();

  // Normalized decoded actions per step: act_norm[j] is K x ad.
  std::vector<Eigen::MatrixXd> act_norm(size_t(H), Eigen::MatrixXd(K, ad));
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd chain = decode_chain(cands[size_t(k)], a_prev, space);
    for (int j = 0; j < H; ++j)
      act_norm[size_t(j)].row(k) = (chain.row(j) - am).array() / as.array();
  }

  // Normalized history slot inputs, oldest to newest (the o(t) slot is
  // candidate-specific because its action is the candidate's first).
  Eigen::MatrixXd histx(W - 1, od + ad);
  for (int i = 0; i < W - 1; ++i) {
    histx.row(i).head(od) = (hist.obs.row(i) - om).array() / os.array();
    histx.row(i).tail(ad) = (hist.acts.row(i) - am).array() / as.array();
  }
  Eigen::RowVectorXd o_t_norm = (hist.obs.row(W - 1) - om).array() / os.array();

  std::vector<Eigen::MatrixXd> preds(static_cast<size_t>(H));  // raw predicted obs, K x od
  std::vector<SequenceScore> scores(static_cast<size_t>(K));
  double disc = 1.0;

  Eigen::MatrixXd u_tmp;
  Eigen::VectorXd e_tmp;
  for (int h = 0; h < H; ++h) {
    int n_shared = std::max(0, W - 1 - h);
    int cand_begin = std::max(0, h + 1 - W);

    Eigen::MatrixXd h1 = Eigen::MatrixXd::Zero(1, hidden);
    Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(1, hidden);
    std::vector<Eigen::RowVectorXd> sh_h(static_cast<size_t>(n_shared));
    std::vector<double> sh_e(static_cast<size_t>(n_shared));
    for (int i = 0; i < n_shared; ++i) {
      lstm_cell<double>(net, histx.row(h + i), h1, c1);
      sh_h[size_t(i)] = h1.row(0);
      if (attn) {
        attn_score(net, h1, u_tmp, e_tmp);
        sh_e[size_t(i)] = e_tmp(0);
      }
    }

    Eigen::MatrixXd Hb = h1.replicate(K, 1);
    Eigen::MatrixXd Cb = c1.replicate(K, 1);
    std::vector<Eigen::MatrixXd> suf_h;
    std::vector<Eigen::VectorXd> suf_e;
    Eigen::MatrixXd x(K, od + ad);
    for (int j = cand_begin; j <= h; ++j) {
      if (j == 0) {
        x.leftCols(od) = o_t_norm.replicate(K, 1);
      } else {
        Eigen::MatrixXd centered = preds[size_t(j - 1)].rowwise() - om;
        x.leftCols(od) = centered * os.cwiseInverse().asDiagonal();
      }
      x.rightCols(ad) = act_norm[size_t(j)];
      lstm_cell<double>(net, x, Hb, Cb);
      if (attn) {
        attn_score(net, Hb, u_tmp, e_tmp);
        suf_h.push_back(Hb);
        suf_e.push_back(e_tmp);
      }
    }

    Eigen::MatrixXd ctx;
    if (!attn) {
      ctx = Hb;
    } else {
      double m_shared = -std::numeric_limits<double>::infinity();
      for (double e : sh_e) m_shared = std::max(m_shared, e);
      Eigen::VectorXd m_tot = suf_e[0];
      for (size_t j = 1; j < suf_e.size(); ++j) m_tot = m_tot.cwiseMax(suf_e[j]);
      if (n_shared > 0) m_tot = m_tot.cwiseMax(m_shared);
      Eigen::VectorXd denom = Eigen::VectorXd::Zero(K);
      Eigen::MatrixXd num = Eigen::MatrixXd::Zero(K, hidden);
      if (n_shared > 0) {
        Eigen::RowVectorXd s_sum = Eigen::RowVectorXd::Zero(hidden);
        double z_sum = 0.0;
        for (int i = 0; i < n_shared; ++i) {
          double w = std::exp(sh_e[size_t(i)] - m_shared);
          s_sum += w * sh_h[size_t(i)];
          z_sum += w;
        }
        Eigen::VectorXd scale = (Eigen::ArrayXd::Constant(K, m_shared) - m_tot.array())
                                    .exp()
                                    .matrix();
        denom += scale * z_sum;
        num += scale * s_sum;
      }
      for (size_t j = 0; j < suf_e.size(); ++j) {
        Eigen::VectorXd w = (suf_e[j].array() - m_tot.array()).exp().matrix();
        denom += w;
        num.array() += suf_h[j].array().colwise() * w.array();
      }
      ctx = denom.cwiseInverse().asDiagonal() * num;
    }

    Eigen::MatrixXd y = ctx * net.view(wy);
    y.rowwise() += RowX<double>(net.view(by));
    Eigen::MatrixXd prev =
        (h == 0) ? Eigen::MatrixXd(hist.obs.row(W - 1).replicate(K, 1))
                 : preds[size_t(h - 1)];
    Eigen::MatrixXd p_new = prev + (y.array().rowwise() * os.array()).matrix();
    if (!p_new.allFinite())
      throw std::runtime_error("numeric error in output layer: non-finite activation");
    preds[size_t(h)] = p_new;

    for (int k = 0; k < K; ++k) {
      RewardResult rr = reward(Observation::from_vec(p_new.row(k).transpose()), rp);
      scores[size_t(k)].total_reward += disc * rr.r;
      scores[size_t(k)].violations += int(rr.violation_west) + int(rr.violation_east);
    }
    disc *= rp.gamma;
  }
  return scores;
}

PlanResult finish_plan(const std::vector<Eigen::MatrixXd>& cands,
                       const std::vector<SequenceScore>& scores, const RawAction& a_prev,
                       const SafeActionSpace& space) {
  int win = select_candidate(scores);
  PlanResult out;
  out.diag.best_reward = -std::numeric_limits<double>::infinity();
  out.diag.worst_reward = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const SequenceScore& s : scores) {
    out.diag.best_reward = std::max(out.diag.best_reward, s.total_reward);
    out.diag.worst_reward = std::min(out.diag.worst_reward, s.total_reward);
    sum += s.total_reward;
    if (s.violations == 0) ++out.diag.feasible_count;
  }
  out.diag.mean_reward = sum / double(scores.size());
  out.diag.selected_index = win;
  out.diag.selected_violations = scores[size_t(win)].violations;
  out.diag.selected_z = cands[size_t(win)].row(0).transpose();
  out.action =
      decode_action(NormalizedAction{out.diag.selected_z}, a_prev, space);
  return out;
}

}  // namespace

SequenceScore evaluate_sequence(const DynamicsModel& model, const HistoryWindow& hist,
                                const Eigen::MatrixXd& z_seq, const RawAction& a_prev,
                                const RewardParams& rp, const SafeActionSpace& space) {
  check_planner_dims(model, hist);
  if (z_seq.rows() < 1 || z_seq.cols() != kActDim)
    throw std::runtime_error("planner: z sequence must be H x 4 with H >= 1");
  Eigen::MatrixXd acts = decode_chain(z_seq, a_prev, space);
  Eigen::MatrixXd preds = open_loop_rollout(model, hist.obs, hist.acts, acts);
  return score_predictions(preds, rp);
}

std::vector<Eigen::MatrixXd> draw_candidates(Rng& rng, int samples, int horizon,
                                             int act_dim) {
  std::vector<Eigen::MatrixXd> out(static_cast<size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    Eigen::MatrixXd z(horizon, act_dim);
    for (int h = 0; h < horizon; ++h)
      for (int c = 0; c < act_dim; ++c) z(h, c) = rng.uniform(-1.0, 1.0);
    out[size_t(k)] = std::move(z);
  }
  return out;
}

PlanResult plan_with_candidates(const DynamicsModel& model, const HistoryWindow& hist,
                                const RawAction& a_prev,
                                const std::vector<Eigen::MatrixXd>& candidates,
                                const RewardParams& rp, const SafeActionSpace& space) {
  auto t0 = std::chrono::steady_clock::now();
  if (candidates.empty())
    throw std::runtime_error("plan config: need at least one candidate sequence");
  std::vector<SequenceScore> scores(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k)
    scores[k] = evaluate_sequence(model, hist, candidates[k], a_prev, rp, space);
  PlanResult out = finish_plan(candidates, scores, a_prev, space);
  out.diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

PlanResult plan(const DynamicsModel& model, const HistoryWindow& hist,
                const RawAction& a_prev, const PlanConfig& cfg, const RewardParams& rp,
                const SafeActionSpace& space, Rng& rng) {
  auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  check_planner_dims(model, hist);
  std::vector<Eigen::MatrixXd> cands =
      draw_candidates(rng, cfg.samples, cfg.horizon, model.config.act_dim);
  std::vector<SequenceScore> scores;
  if (cfg.batched_rollout && model.config.arch == Arch::recurrent) {
    scores = score_batched(model, hist, a_prev, cands, rp, space);
  } else {
    scores.resize(cands.size());
    for (size_t k = 0; k < cands.size(); ++k)
      scores[k] = evaluate_sequence(model, hist, cands[k], a_prev, rp, space);
  }
  PlanResult out = finish_plan(cands, scores, a_prev, space);
  out.diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace hvacmbrl
