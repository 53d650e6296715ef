#include <doctest.h>

#include <cmath>
#include <vector>

#include "hvacmbrl/experience.hpp"

using namespace hvacmbrl;

namespace {

TrajectoryStep make_step(int64_t episode, int64_t index, double obs0, double act0 = 0.0) {
  TrajectoryStep s;
  s.obs = Eigen::VectorXd::Constant(2, obs0);
  s.obs[1] = obs0 * 10.0;
  s.act = Eigen::VectorXd::Constant(1, act0);
  s.episode_id = episode;
  s.step_index = index;
  return s;
}

ExperienceBuffer consecutive(int64_t n, int64_t episode = 0, int64_t first_index = 0) {
  ExperienceBuffer buf(1 << 20);
  for (int64_t i = 0; i < n; ++i)
    buf.append(make_step(episode, first_index + i, double(i + 1), double(i) * 0.5));
  return buf;
}

}  // namespace

TEST_SUITE("experience") {

TEST_CASE("append and FIFO eviction keep the newest steps") {
  ExperienceBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.append(make_step(0, i, double(i)));
  CHECK(buf.capacity() == 3);
  REQUIRE(buf.size() == 3);
  CHECK(buf.at(0).step_index == 2);
  CHECK(buf.at(1).step_index == 3);
  CHECK(buf.at(2).step_index == 4);
}

TEST_CASE("normalization stats match the two-point hand example") {
  ExperienceBuffer buf(8);
  TrajectoryStep a, b;
  a.obs = Eigen::VectorXd::Constant(1, 1.0);
  a.act = Eigen::VectorXd::Constant(1, 3.0);
  b.obs = Eigen::VectorXd::Constant(1, 3.0);
  b.act = Eigen::VectorXd::Constant(1, 1.0);
  a.episode_id = b.episode_id = 0;
  a.step_index = 0;
  b.step_index = 1;
  buf.append(a);
  buf.append(b);
  NormStats st = compute_norm_stats(buf);
  // mean 2, population std sqrt(((1-2)^2 + (3-2)^2)/2) = 1
  CHECK(st.obs_mean[0] == 2.0);
  CHECK(st.obs_std[0] == 1.0);
  CHECK(st.act_mean[0] == 2.0);
  CHECK(st.act_std[0] == 1.0);
}

TEST_CASE("normalization stats use population variance") {
  ExperienceBuffer buf(8);
  for (int i = 0; i < 3; ++i) buf.append(make_step(0, i, double(i + 1)));  // obs0: 1,2,3
  NormStats st = compute_norm_stats(buf);
  CHECK(st.obs_mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(st.obs_std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
  Eigen::VectorXd z = normalize(buf.at(0).obs, st.obs_mean, st.obs_std);
  CHECK(z[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-14));
}

TEST_CASE("a constant channel gets the epsilon floor instead of zero std") {
  ExperienceBuffer buf(8);
  for (int i = 0; i < 3; ++i) buf.append(make_step(0, i, 5.0));
  NormStats st = compute_norm_stats(buf);
  CHECK(st.obs_std[0] == st.epsilon);
  Eigen::VectorXd z = normalize(buf.at(1).obs, st.obs_mean, st.obs_std);
  CHECK(z[0] == 0.0);
}

TEST_CASE("normalize and denormalize are inverse") {
  ExperienceBuffer buf = consecutive(10);
  NormStats st = compute_norm_stats(buf);
  Eigen::VectorXd x = buf.at(7).obs;
  Eigen::VectorXd back = denormalize(normalize(x, st.obs_mean, st.obs_std),
                                     st.obs_mean, st.obs_std);
  CHECK(back[0] == doctest::Approx(x[0]).epsilon(1e-14));
  CHECK(back[1] == doctest::Approx(x[1]).epsilon(1e-14));
  CHECK_THROWS_AS(normalize(Eigen::VectorXd::Zero(3), st.obs_mean, st.obs_std),
                  std::runtime_error);
}

TEST_CASE("window counts follow length minus window per consecutive run") {
  ExperienceBuffer a = consecutive(25);
  CHECK(make_windows(a, 20).size() == 5);
  ExperienceBuffer b = consecutive(30);
  CHECK(make_windows(b, 20).size() == 10);
  ExperienceBuffer c = consecutive(20);
  CHECK(make_windows(c, 20).empty());  // W steps leave no target
  CHECK(make_windows(c, 19).size() == 1);
}

TEST_CASE("windows never span an episode boundary or an index gap") {
  ExperienceBuffer buf(1 << 10);
  for (int i = 0; i < 10; ++i) buf.append(make_step(0, i, double(i)));
  for (int i = 0; i < 10; ++i) buf.append(make_step(1, i, double(100 + i)));
  CHECK(make_windows(buf, 5).size() == 10);  // 5 per run, none crossing

  ExperienceBuffer gap(1 << 10);
  for (int i = 0; i < 10; ++i) gap.append(make_step(0, i, double(i)));
  for (int i = 20; i < 30; ++i) gap.append(make_step(0, i, double(i)));
  auto ws = make_windows(gap, 5);
  CHECK(ws.size() == 10);
  for (const auto& w : ws) {
    // Window rows must be consecutive: obs0 was set to the step number + 1-ish
    for (int r = 1; r < 5; ++r)
      CHECK(w.obs_window(r, 0) - w.obs_window(r - 1, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("window samples carry the raw next-step observation delta") {
  ExperienceBuffer buf = consecutive(8);
  auto ws = make_windows(buf, 3);
  REQUIRE(ws.size() == 5);
  const WindowSample& w0 = ws[0];
  CHECK(w0.obs_window.rows() == 3);
  CHECK(w0.obs_window(0, 0) == 1.0);
  CHECK(w0.obs_window(2, 0) == 3.0);
  CHECK(w0.act_window(2, 0) == 1.0);
  // target = obs(t+W) - obs(t+W-1) = 4 - 3
  CHECK(w0.target[0] == 1.0);
  CHECK(w0.target[1] == 10.0);
}

TEST_CASE("chronological split rounds the training share up") {
  auto mk = [](size_t n) {
    std::vector<WindowSample> v(n);
    for (size_t i = 0; i < n; ++i) {
      v[i].obs_window = Eigen::MatrixXd::Constant(1, 1, double(i));
      v[i].act_window = Eigen::MatrixXd::Zero(1, 1);
      v[i].target = Eigen::VectorXd::Zero(1);
    }
    return v;
  };
  auto [t1, v1] = split_windows(mk(10), 0.8);
  CHECK(t1.size() == 8);
  CHECK(v1.size() == 2);
  CHECK(t1.back().obs_window(0, 0) == 7.0);  // order preserved, no shuffling
  CHECK(v1.front().obs_window(0, 0) == 8.0);

  auto [t2, v2] = split_windows(mk(1), 0.8);
  CHECK(t2.size() == 1);
  CHECK(v2.empty());

  auto [t3, v3] = split_windows(mk(5), 0.5);
  CHECK(t3.size() == 3);  // ceil(2.5)
  CHECK(v3.size() == 2);

  CHECK_THROWS_AS(split_windows(mk(4), 0.0), std::runtime_error);
  CHECK_THROWS_AS(split_windows(mk(4), 1.0), std::runtime_error);
}

TEST_CASE("serialize and deserialize round trip every field") {
  ExperienceBuffer buf(7);
  for (int i = 0; i < 9; ++i) buf.append(make_step(i / 4, i, 1.5 * i + 0.125, -0.25 * i));
  std::string blob = buf.serialize();
  ExperienceBuffer back = ExperienceBuffer::deserialize(blob);
  CHECK(back.capacity() == 7);
  REQUIRE(back.size() == buf.size());
  for (size_t i = 0; i < buf.size(); ++i) {
    CHECK(back.at(i).episode_id == buf.at(i).episode_id);
    CHECK(back.at(i).step_index == buf.at(i).step_index);
    CHECK(back.at(i).obs.cwiseEqual(buf.at(i).obs).all());
    CHECK(back.at(i).act.cwiseEqual(buf.at(i).act).all());
  }
  CHECK(back.serialize() == blob);
}

TEST_CASE("deserialize rejects corruption") {
  ExperienceBuffer buf = consecutive(4);
  std::string blob = buf.serialize();
  std::string bad = blob;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(ExperienceBuffer::deserialize(bad), doctest::Contains("magic"),
                       std::runtime_error);
  CHECK_THROWS_AS(ExperienceBuffer::deserialize(blob.substr(0, blob.size() - 1)),
                  std::runtime_error);
  CHECK_THROWS_WITH_AS(ExperienceBuffer::deserialize(blob + "z"),
                       doctest::Contains("trailing"), std::runtime_error);
}

TEST_CASE("stats on an empty buffer are an error") {
  ExperienceBuffer buf(4);
  CHECK_THROWS_AS(compute_norm_stats(buf), std::runtime_error);
  CHECK(make_windows(buf, 3).empty());
  CHECK_THROWS_AS(make_windows(buf, 0), std::runtime_error);
}

}  // TEST_SUITE
