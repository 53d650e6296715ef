#include "hvacmbrl/evaldyn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "hvacmbrl/agent.hpp"
#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

namespace {

// Stream tags disjoint from the run orchestrator's named streams (1..8).
constexpr uint64_t kWeatherTag = 100;
constexpr uint64_t kLoadTag = 200;
constexpr uint64_t kWalkTag = 300;
constexpr uint64_t kInitTag = 1000;
constexpr uint64_t kTrainTag = 2000;

int64_t eval_total_steps(const ExperimentConfig& cfg) {
  return int64_t(
      std::llround(double(cfg.eval.eval_days) * 1440.0 / cfg.env.control_dt_minutes));
}

bool is_guard_error(const std::exception& e) {
  return std::strncmp(e.what(), "deviation undefined", 19) == 0;
}

}  // namespace

std::vector<EvalDataset> collect_eval_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const int64_t total = eval_total_steps(cfg);
  int w_max = 1;
  for (int w : cfg.eval.windows) w_max = std::max(w_max, w);
  const int64_t tail = int64_t(cfg.eval.starts) + cfg.eval.horizon;
  const int64_t train_steps = total - tail;
  if (train_steps < int64_t(w_max) + 1)
    throw std::runtime_error(
        "insufficient data: window W=" + std::to_string(w_max) + " needs at least " +
        std::to_string(int64_t(w_max) + 1 + tail) + " steps (" + std::to_string(tail) +
        " held out for evaluation), but " + std::to_string(cfg.eval.eval_days) +
        " evaluation days cover only " + std::to_string(total));

  std::vector<EvalDataset> out;
  for (int v = 0; v < cfg.eval.traces; ++v) {
    WeatherGenParams wp = cfg.weather;
    wp.days = double(cfg.eval.eval_days) + 1.0;
    Trace weather = gen_weather(wp, Rng::stream(cfg.seed, kWeatherTag + uint64_t(v)));
    IteGenParams ip = cfg.ite;
    ip.day_count = int64_t(cfg.eval.eval_days) + 1;
    Trace load = gen_ite_load(ip, Rng::stream(cfg.seed, kLoadTag + uint64_t(v)));
    TwoZoneEnv env(cfg.plant, cfg.reward, cfg.env, weather, load);

    EvalDataset d;
    d.label = "weather-" + std::to_string(v + 1);
    d.steps = ExperienceBuffer(size_t(total));
    d.train_steps = train_steps;
    Rng walk = Rng::stream(cfg.seed, kWalkTag + uint64_t(v));
    collect_initial(env, int(total), cfg.space, cfg.loop.explore_half_range, walk,
                    d.steps, nullptr);
    out.push_back(std::move(d));
  }
  return out;
}

DeviationTable deviation_table(const std::vector<EvalDataset>& data,
                               const EvalDynOptions& opt, const RolloutFn& rollout) {
  if (data.empty()) throw std::runtime_error("deviation table: no datasets");
  if (opt.windows.empty()) throw std::runtime_error("deviation table: no window lengths");
  DeviationTable table;
  table.windows = opt.windows;
  const int H = opt.horizon;
  for (const EvalDataset& d : data) {
    table.labels.push_back(d.label);
    const int64_t n = int64_t(d.steps.size());
    const int od = n > 0 ? int(d.steps.at(0).obs.size()) : 0;
    std::vector<DeviationCell> row;
    for (int W : opt.windows) {
      if (d.train_steps < int64_t(W) + 1)
        throw std::runtime_error("insufficient data: window W=" + std::to_string(W) +
                                 " needs " + std::to_string(W + 1) +
                                 " fitting steps, dataset '" + d.label + "' provides " +
                                 std::to_string(d.train_steps));
      DeviationCell cell;
      double sum = 0.0;
      for (int s = 0; s < opt.starts; ++s) {
        const int64_t anchor = d.train_steps - 1 + s;
        if (anchor + H > n - 1)
          throw std::runtime_error(
              "insufficient data: start point " + std::to_string(s) + " needs " +
              std::to_string(H) + " ground-truth steps past step " +
              std::to_string(anchor) + ", dataset '" + d.label + "' holds " +
              std::to_string(n));
        Eigen::MatrixXd truth(H, od);
        for (int h = 0; h < H; ++h)
          truth.row(h) = d.steps.at(size_t(anchor + 1 + h)).obs.transpose();
        Eigen::MatrixXd pred = rollout(d, anchor, W, H);
        if (pred.rows() != H || pred.cols() != od)
          throw std::runtime_error(
              "rollout returned " + std::to_string(pred.rows()) + "x" +
              std::to_string(pred.cols()) + ", expected " + std::to_string(H) + "x" +
              std::to_string(od));
        try {
          sum += deviation(pred, truth);
          ++cell.evaluated;
        } catch (const std::exception& e) {
          if (!is_guard_error(e)) throw;
          ++cell.excluded;
        }
      }
      cell.mean_deviation = cell.evaluated > 0
                                ? sum / double(cell.evaluated)
                                : std::numeric_limits<double>::quiet_NaN();
      row.push_back(cell);
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

DeviationTable evaluate_dynamics(const ExperimentConfig& cfg) {
  std::vector<EvalDataset> data = collect_eval_data(cfg);
  std::map<std::pair<std::string, int>, DynamicsModel> models;
  for (size_t v = 0; v < data.size(); ++v) {
    ExperienceBuffer head(size_t(data[v].train_steps));
    for (int64_t i = 0; i < data[v].train_steps; ++i)
      head.append(data[v].steps.at(size_t(i)));
    for (size_t j = 0; j < cfg.eval.windows.size(); ++j) {
      ModelConfig mc = cfg.model;
      mc.window = cfg.eval.windows[j];
      Rng init = Rng::stream(cfg.seed, kInitTag + 64 * uint64_t(v) + uint64_t(j));
      DynamicsModel model = DynamicsModel::make(mc, init);
      Rng train = Rng::stream(cfg.seed, kTrainTag + 64 * uint64_t(v) + uint64_t(j));
      train_dynamics(model, head, train);
      models.emplace(std::make_pair(data[v].label, cfg.eval.windows[j]),
                     std::move(model));
    }
  }
  RolloutFn rollout = [&models](const EvalDataset& d, int64_t anchor, int window,
                                int horizon) {
    const DynamicsModel& m = models.at({d.label, window});
    const int od = int(d.steps.at(0).obs.size());
    const int ad = int(d.steps.at(0).act.size());
    Eigen::MatrixXd obs_hist(window, od), act_hist(window - 1, ad),
        future(horizon, ad);
    const int64_t first = anchor - window + 1;
    for (int i = 0; i < window; ++i)
      obs_hist.row(i) = d.steps.at(size_t(first + i)).obs.transpose();
    for (int i = 0; i + 1 < window; ++i)
      act_hist.row(i) = d.steps.at(size_t(first + i)).act.transpose();
    for (int h = 0; h < horizon; ++h)
      future.row(h) = d.steps.at(size_t(anchor + h)).act.transpose();
    return open_loop_rollout(m, obs_hist, act_hist, future);
  };
  return deviation_table(data, cfg.eval, rollout);
}

std::string DeviationTable::to_csv() const {
  std::string out;
  auto header = [&](const char* tag) {
    out += tag;
    out += ",trace";
    for (int w : windows) {
      out += ",W";
      out += std::to_string(w);
    }
    out += '\n';
  };
  header("deviation");
  for (size_t i = 0; i < labels.size(); ++i) {
    out += "deviation,";
    out += labels[i];
    for (const DeviationCell& c : cells[i]) {
      out += ',';
      out += format_double(c.mean_deviation);
    }
    out += '\n';
  }
  header("evaluated");
  for (size_t i = 0; i < labels.size(); ++i) {
    out += "evaluated,";
    out += labels[i];
    for (const DeviationCell& c : cells[i]) {
      out += ',';
      out += std::to_string(c.evaluated);
    }
    out += '\n';
  }
  header("excluded");
  for (size_t i = 0; i < labels.size(); ++i) {
    out += "excluded,";
    out += labels[i];
    for (const DeviationCell& c : cells[i]) {
      out += ',';
      out += std::to_string(c.excluded);
    }
    out += '\n';
  }
  return out;
}

DeviationTable parse_deviation_table(const std::string& text) {
  std::vector<std::string_view> lines = split_lines(text);
  size_t pos = 0;
  DeviationTable t;

  auto read_header = [&](const char* tag) {
    if (pos >= lines.size())
      throw std::runtime_error(std::string("deviation table: missing '") + tag +
                               "' section");
    std::vector<std::string_view> f = split_csv(lines[pos]);
    if (f.size() < 3 || f[0] != tag || f[1] != "trace")
      throw std::runtime_error(std::string("deviation table: expected '") + tag +
                               ",trace,...' header at line " + std::to_string(pos + 1));
    std::vector<int> ws;
    for (size_t i = 2; i < f.size(); ++i) {
      if (f[i].size() < 2 || f[i][0] != 'W')
        throw std::runtime_error("deviation table: bad window column '" +
                                 std::string(f[i]) + "'");
      ws.push_back(int(parse_int(f[i].substr(1))));
    }
    ++pos;
    return ws;
  };
  auto rows_of = [&](const char* tag) {
    std::vector<std::vector<std::string_view>> rows;
    while (pos < lines.size()) {
      std::vector<std::string_view> f = split_csv(lines[pos]);
      if (f.empty() || f[0] != tag) break;
      if (f.size() != t.windows.size() + 2)
        throw std::runtime_error("deviation table: line " + std::to_string(pos + 1) +
                                 " has " + std::to_string(f.size()) + " fields, expected " +
                                 std::to_string(t.windows.size() + 2));
      rows.push_back(std::move(f));
      ++pos;
    }
    return rows;
  };

  t.windows = read_header("deviation");
  std::vector<std::vector<std::string_view>> dev_rows = rows_of("deviation");
  if (dev_rows.empty()) throw std::runtime_error("deviation table: no data rows");
  for (const auto& f : dev_rows) {
    t.labels.emplace_back(f[1]);
    std::vector<DeviationCell> row(t.windows.size());
    for (size_t j = 0; j < t.windows.size(); ++j)
      row[j].mean_deviation = parse_double(f[j + 2]);
    t.cells.push_back(std::move(row));
  }

  for (const char* tag : {"evaluated", "excluded"}) {
    std::vector<int> ws = read_header(tag);
    if (ws != t.windows)
      throw std::runtime_error(std::string("deviation table: '") + tag +
                               "' window columns disagree with 'deviation'");
    std::vector<std::vector<std::string_view>> rows = rows_of(tag);
    if (rows.size() != t.labels.size())
      throw std::runtime_error(std::string("deviation table: '") + tag + "' has " +
                               std::to_string(rows.size()) + " rows, expected " +
                               std::to_string(t.labels.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      if (std::string_view(t.labels[i]) != rows[i][1])
        throw std::runtime_error(std::string("deviation table: '") + tag +
                                 "' row label '" + std::string(rows[i][1]) +
                                 "' disagrees with 'deviation'");
      for (size_t j = 0; j < t.windows.size(); ++j) {
        int64_t v = parse_int(rows[i][j + 2]);
        if (std::strcmp(tag, "evaluated") == 0)
          t.cells[i][j].evaluated = v;
        else
          t.cells[i][j].excluded = v;
      }
    }
  }
  if (pos != lines.size())
    throw std::runtime_error("deviation table: trailing content at line " +
                             std::to_string(pos + 1));
  return t;
}

}  // namespace hvacmbrl
