#include "dronetour/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dronetour/error.hpp"

namespace dronetour {

namespace {

constexpr int kModelVersion = 1;

Eigen::MatrixXd to_matrix(const std::vector<Features>& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 6; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::MatrixXd standardize(const Mlp& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x;
  for (int j = 0; j < 6; ++j) z.col(j) = (x.col(j).array() - m.x_mean(j)) / m.x_std(j);
  return z;
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a) {
  return a == Activation::kRelu ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
}

// Output for standardized inputs, in standardized label units.
Eigen::VectorXd forward_std(const Mlp& m, const Eigen::MatrixXd& z, Eigen::MatrixXd* hidden = nullptr,
                            Eigen::MatrixXd* pre = nullptr) {
  Eigen::MatrixXd a = (z * m.w1.transpose()).rowwise() + m.b1.transpose();
  Eigen::MatrixXd h = activate(a, m.activation);
  Eigen::VectorXd out = (h * m.w2).array() + m.b2;
  if (hidden != nullptr) *hidden = std::move(h);
  if (pre != nullptr) *pre = std::move(a);
  return out;
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw keeps the order library-independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct AdamState {
  Gradients m1;
  Gradients m2;
  long t = 0;
};

Gradients zeros_like(const Mlp& m) {
  Gradients g;
  g.w1 = Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(m.b1.size());
  g.w2 = Eigen::VectorXd::Zero(m.w2.size());
  return g;
}

void adam_step(Mlp& m, AdamState& st, const Gradients& g, double lr) {
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  ++st.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  const double step = lr * std::sqrt(c2) / c1;
  st.m1.w1 = b1 * st.m1.w1 + (1 - b1) * g.w1;
  st.m2.w1 = b2 * st.m2.w1 + (1 - b2) * g.w1.cwiseProduct(g.w1);
  m.w1.array() -= step * st.m1.w1.array() / (st.m2.w1.array().sqrt() + eps);
  st.m1.b1 = b1 * st.m1.b1 + (1 - b1) * g.b1;
  st.m2.b1 = b2 * st.m2.b1 + (1 - b2) * g.b1.cwiseProduct(g.b1);
  m.b1.array() -= step * st.m1.b1.array() / (st.m2.b1.array().sqrt() + eps);
  st.m1.w2 = b1 * st.m1.w2 + (1 - b1) * g.w2;
  st.m2.w2 = b2 * st.m2.w2 + (1 - b2) * g.w2.cwiseProduct(g.w2);
  m.w2.array() -= step * st.m1.w2.array() / (st.m2.w2.array().sqrt() + eps);
  st.m1.b2 = b1 * st.m1.b2 + (1 - b1) * g.b2;
  st.m2.b2 = b2 * st.m2.b2 + (1 - b2) * g.b2 * g.b2;
  m.b2 -= step * st.m1.b2 / (std::sqrt(st.m2.b2) + eps);
}

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.provenance = provenance;
  for (std::size_t r : rows) out.add(features[r], labels[r]);
  return out;
}

FlightSpec drone_only_spec(const Features& f, const DronePhysicsParams& params, const std::vector<Ras>& ras) {
  FlightSpec spec;
  spec.start = {f[0], f[1], params.truck_bed_alt};
  spec.delivery = {f[2], f[3], 0.0};
  spec.end = Point3{f[4], f[5], params.truck_bed_alt};
  spec.ras = ras;
  return spec;
}

Dataset generate_training_data(const Bounds2& region, std::size_t count, const DronePhysicsParams& params,
                               const std::vector<Ras>& ras, std::uint64_t seed, int max_retries) {
  if (count < 1) throw InvalidArgument("count must be at least 1");
  params.validate();
  Dataset ds;
  ds.provenance = "seed=" + std::to_string(seed);
  std::mt19937_64 rng(seed);
  const AvoidanceMap map(ras, params.ras_clearance(), params.cruise_alt);
  auto draw = [&]() {
    return Point2{region.xmin + (region.xmax - region.xmin) * uniform01(rng),
                  region.ymin + (region.ymax - region.ymin) * uniform01(rng)};
  };
  std::set<Features> seen;
  int rejected = 0;
  while (ds.size() < count) {
    if (rejected > max_retries) {
      throw SamplingError("no feasible operation after " + std::to_string(max_retries) + " consecutive draws");
    }
    Features f{};
    bool ok = true;
    for (int p = 0; p < 3; ++p) {
      const Point2 q = draw();
      f[static_cast<std::size_t>(2 * p)] = q.x;
      f[static_cast<std::size_t>(2 * p + 1)] = q.y;
      ok = ok && !map.enclosed(q);
    }
    if (!ok || seen.count(f) != 0) {
      ++rejected;
      continue;
    }
    try {
      const auto traj = plan_drone_only_flight(drone_only_spec(f, params, ras), params);
      seen.insert(f);
      ds.add(f, traj.duration);
      rejected = 0;
    } catch (const NoPath&) {
      ++rejected;
    } catch (const InfeasibleEnergy&) {
      ++rejected;
    }
  }
  return ds;
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream out;
  out << "xs,ys,xd,yd,xe,ye,label_s\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features[i]) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", ds.labels[i]);
    out << buf;
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Dataset ds;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "xs,ys,xd,yd,xe,ye,label_s") throw ParseError("dataset line 1: unexpected header");
      continue;
    }
    std::array<double, 7> v{};
    std::size_t pos = 0;
    for (int i = 0; i < 7; ++i) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        std::size_t used = 0;
        v[static_cast<std::size_t>(i)] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("dataset line " + std::to_string(lineno) + ", column " + std::to_string(i + 1) + ": bad number");
      }
      if ((i < 6) != (comma != std::string::npos)) {
        throw ParseError("dataset line " + std::to_string(lineno) + ": expected 7 columns");
      }
      pos = comma + 1;
    }
    ds.add({v[0], v[1], v[2], v[3], v[4], v[5]}, v[6]);
  }
  return ds;
}

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "identity"; }

std::string to_string(LrSchedule s) {
  switch (s) {
    case LrSchedule::kConstant: return "constant";
    case LrSchedule::kInverseScaling: return "invscaling";
    case LrSchedule::kAdaptive: return "adaptive";
  }
  return "constant";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw InvalidArgument("unknown activation " + s);
}

LrSchedule schedule_from_string(const std::string& s) {
  if (s == "constant") return LrSchedule::kConstant;
  if (s == "invscaling" || s == "inverse_scaling") return LrSchedule::kInverseScaling;
  if (s == "adaptive") return LrSchedule::kAdaptive;
  throw InvalidArgument("unknown learning-rate schedule " + s);
}

void TrainConfig::validate() const {
  if (hidden_size < 1) throw InvalidArgument("hidden_size must be at least 1");
  if (!(base_lr > 0.0)) throw InvalidArgument("base_lr must be positive");
  if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (alpha < 0.0) throw InvalidArgument("alpha must be nonnegative");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) throw InvalidArgument("validation_fraction must be in [0, 1)");
}

double Mlp::raw(const Features& f) const {
  Eigen::Matrix<double, 1, 6> x;
  for (int j = 0; j < 6; ++j) x(j) = (f[static_cast<std::size_t>(j)] - x_mean(j)) / x_std(j);
  Eigen::VectorXd a = w1 * x.transpose() + b1;
  if (activation == Activation::kRelu) a = a.cwiseMax(0.0);
  return (a.dot(w2) + b2) * y_std + y_mean;
}

Eigen::VectorXd Mlp::raw_batch(const Eigen::MatrixXd& x) const {
  return (forward_std(*this, standardize(*this, x)).array() * y_std + y_mean).matrix();
}

double predict(const Mlp& m, const Features& f) { return std::max(0.0, m.raw(f)); }

double loss_and_gradient(const Mlp& m, const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y_std, double alpha,
                         Gradients* grad) {
  const double n = static_cast<double>(x_std.rows());
  Eigen::MatrixXd h;
  Eigen::MatrixXd pre;
  const Eigen::VectorXd out = forward_std(m, x_std, &h, &pre);
  const Eigen::VectorXd err = out - y_std;
  const double penalty = m.w1.squaredNorm() + m.w2.squaredNorm();
  const double loss = 0.5 * err.squaredNorm() / n + 0.5 * alpha * penalty / n;
  if (grad != nullptr) {
    const Eigen::VectorXd delta = err / n;
    grad->w2 = h.transpose() * delta + (alpha / n) * m.w2;
    grad->b2 = delta.sum();
    Eigen::MatrixXd back = delta * m.w2.transpose();
    if (m.activation == Activation::kRelu) back = back.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    grad->w1 = back.transpose() * x_std + (alpha / n) * m.w1;
    grad->b1 = back.colwise().sum().transpose();
  }
  return loss;
}

Mlp train(const Dataset& ds, const TrainConfig& cfg, TrainReport* report) {
  cfg.validate();
  if (ds.size() < 10) throw InvalidArgument("training needs at least 10 rows");
  Mlp m;
  m.config = cfg;
  m.activation = cfg.activation;

  // Internal holdout for stopping and the adaptive schedule.
  Dataset fit = ds;
  Dataset val;
  const bool use_val = cfg.validation_fraction > 0.0 && ds.size() >= 20;
  if (use_val) std::tie(fit, val) = split_dataset(ds, cfg.validation_fraction, split_seed(cfg.seed, 1));

  const Eigen::MatrixXd x_raw = to_matrix(fit.features);
  const Eigen::VectorXd y_raw = Eigen::Map<const Eigen::VectorXd>(fit.labels.data(), static_cast<Eigen::Index>(fit.size()));
  const double n = static_cast<double>(fit.size());
  for (int j = 0; j < 6; ++j) {
    m.x_mean(j) = x_raw.col(j).mean();
    const double var = (x_raw.col(j).array() - m.x_mean(j)).square().sum() / n;
    m.x_std(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  m.y_mean = y_raw.mean();
  const double y_var = (y_raw.array() - m.y_mean).square().sum() / n;
  m.y_std = y_var > 0.0 ? std::sqrt(y_var) : 1.0;
  const Eigen::MatrixXd x = standardize(m, x_raw);
  const Eigen::VectorXd y = ((y_raw.array() - m.y_mean) / m.y_std).matrix();
  Eigen::MatrixXd xv;
  Eigen::VectorXd yv;
  if (use_val) {
    xv = standardize(m, to_matrix(val.features));
    yv = ((Eigen::Map<const Eigen::VectorXd>(val.labels.data(), static_cast<Eigen::Index>(val.size())).array() -
           m.y_mean) / m.y_std).matrix();
  }

  // Glorot-uniform initialization of weights and biases.
  std::mt19937_64 rng(split_seed(cfg.seed, 2));
  const int h = cfg.hidden_size;
  auto fill = [&](auto& mat, double bound) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
  };
  m.w1.resize(h, 6);
  m.b1.resize(h);
  m.w2.resize(h);
  const double bound1 = std::sqrt(6.0 / (6.0 + h));
  const double bound2 = std::sqrt(6.0 / (h + 1.0));
  fill(m.w1, bound1);
  fill(m.b1, bound1);
  fill(m.w2, bound2);
  m.b2 = bound2 * (2.0 * uniform01(rng) - 1.0);

  TrainReport rep;
  rep.initial_loss = loss_and_gradient(m, x, y, cfg.alpha, nullptr);
  AdamState st{zeros_like(m), zeros_like(m), 0};
  const std::size_t rows = fit.size();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), rows);
  double lr = cfg.base_lr;
  double best_val = std::numeric_limits<double>::infinity();
  Mlp best = m;
  int stale = 0;
  int adaptive_stale = 0;
  Gradients g;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (cfg.schedule == LrSchedule::kInverseScaling) lr = cfg.base_lr / std::sqrt(static_cast<double>(epoch + 1));
    const auto order = permutation(rows, split_seed(cfg.seed, 100 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t s = 0; s < rows; s += batch) {
      const std::size_t e = std::min(rows, s + batch);
      const auto cnt = static_cast<Eigen::Index>(e - s);
      Eigen::MatrixXd xb(cnt, 6);
      Eigen::VectorXd yb(cnt);
      for (std::size_t i = s; i < e; ++i) {
        xb.row(static_cast<Eigen::Index>(i - s)) = x.row(static_cast<Eigen::Index>(order[i]));
        yb(static_cast<Eigen::Index>(i - s)) = y(static_cast<Eigen::Index>(order[i]));
      }
      const double l = loss_and_gradient(m, xb, yb, cfg.alpha, &g);
      if (!std::isfinite(l)) throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch));
      adam_step(m, st, g, lr);
    }
    const double loss = loss_and_gradient(m, x, y, cfg.alpha, nullptr);
    if (!std::isfinite(loss)) throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch));
    rep.epoch_loss.push_back(loss);
    rep.learning_rates.push_back(lr);
    rep.epochs = epoch + 1;
    const double check = use_val ? 0.5 * (forward_std(m, xv) - yv).squaredNorm() / static_cast<double>(yv.size()) : loss;
    if (!std::isfinite(best_val) || check < best_val - cfg.tol * std::max(1.0, std::abs(best_val))) {
      best_val = check;
      best = m;
      stale = 0;
      adaptive_stale = 0;
    } else {
      ++stale;
      ++adaptive_stale;
      if (cfg.schedule == LrSchedule::kAdaptive && adaptive_stale >= 2) {
        lr *= 0.5;
        adaptive_stale = 0;
      }
      if (stale >= cfg.patience) break;
    }
  }
  m.w1 = best.w1;
  m.b1 = best.b1;
  m.w2 = best.w2;
  m.b2 = best.b2;
  rep.final_loss = loss_and_gradient(m, x, y, cfg.alpha, nullptr);
  if (report != nullptr) *report = std::move(rep);
  return m;
}

double mean_squared_error(const Mlp& m, const Dataset& ds) {
  if (ds.size() == 0) throw EmptyDataset("mean squared error of an empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double e = predict(m, ds.features[i]) - ds.labels[i];
    s += e * e;
  }
  return s / static_cast<double>(ds.size());
}

double mean_abs_percentage_error(const Mlp& m, const Dataset& ds) {
  if (ds.size() == 0) throw EmptyDataset("percentage error of an empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) s += std::abs(predict(m, ds.features[i]) - ds.labels[i]) / ds.labels[i];
  return s / static_cast<double>(ds.size());
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction, std::uint64_t seed) {
  const auto order = permutation(ds.size(), seed);
  const auto n_first = static_cast<std::size_t>(std::llround((1.0 - fraction) * static_cast<double>(ds.size())));
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(n_first), order.end());
  return {ds.subset(a), ds.subset(b)};
}

std::vector<TrainConfig> make_grid(const std::vector<int>& hidden, const std::vector<Activation>& acts,
                                   const std::vector<double>& alphas, const std::vector<LrSchedule>& schedules,
                                   const TrainConfig& base) {
  std::vector<TrainConfig> out;
  for (int h : hidden) {
    for (auto a : acts) {
      for (double al : alphas) {
        for (auto s : schedules) {
          TrainConfig c = base;
          c.hidden_size = h;
          c.activation = a;
          c.alpha = al;
          c.schedule = s;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::vector<TrainConfig> default_grid(const TrainConfig& base) {
  return make_grid({1000, 2500, 4000}, {Activation::kIdentity, Activation::kRelu}, {0.0001, 0.05, 0.5, 0.8},
                   {LrSchedule::kConstant, LrSchedule::kInverseScaling, LrSchedule::kAdaptive}, base);
}

GridResult grid_search(const Dataset& ds, const std::vector<TrainConfig>& grid, double holdout_fraction,
                       std::uint64_t seed) {
  if (grid.empty()) throw InvalidArgument("grid must not be empty");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw InvalidArgument("holdout fraction must be in (0, 1)");
  const auto [fit, hold] = split_dataset(ds, holdout_fraction, seed);
  GridResult res;
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Mlp m = train(fit, grid[i]);
    res.report.push_back({grid[i], mean_squared_error(m, hold)});
    const auto& a = res.report[i];
    const auto& b = res.report[best];
    const bool better = a.holdout_mse < b.holdout_mse ||
                        (a.holdout_mse == b.holdout_mse &&
                         (a.config.hidden_size < b.config.hidden_size ||
                          (a.config.hidden_size == b.config.hidden_size && a.config.alpha < b.config.alpha)));
    if (i == 0 || better) best = i;
  }
  res.best = res.report[best].config;
  return res;
}

namespace {

nlohmann::json config_json(const TrainConfig& c) {
  return {{"hidden_size", c.hidden_size}, {"activation", to_string(c.activation)}, {"alpha", c.alpha},
          {"lr_schedule", to_string(c.schedule)}, {"base_lr", c.base_lr}, {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs}, {"seed", c.seed}, {"patience", c.patience},
          {"validation_fraction", c.validation_fraction}, {"tol", c.tol}};
}

TrainConfig config_from(const nlohmann::json& j) {
  TrainConfig c;
  c.hidden_size = j.at("hidden_size").get<int>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.schedule = schedule_from_string(j.at("lr_schedule").get<std::string>());
  c.base_lr = j.at("base_lr").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.patience = j.at("patience").get<int>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.tol = j.at("tol").get<double>();
  return c;
}

}  // namespace

std::string model_to_json(const Mlp& m) {
  nlohmann::json j;
  j["format"] = "dronetour-mlp";
  j["version"] = kModelVersion;
  j["config"] = config_json(m.config);
  j["activation"] = to_string(m.activation);
  j["x_mean"] = std::vector<double>(m.x_mean.data(), m.x_mean.data() + 6);
  j["x_std"] = std::vector<double>(m.x_std.data(), m.x_std.data() + 6);
  j["y_mean"] = m.y_mean;
  j["y_std"] = m.y_std;
  nlohmann::json w1 = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.w1.rows(); ++i) {
    std::vector<double> row(6);
    for (int k = 0; k < 6; ++k) row[static_cast<std::size_t>(k)] = m.w1(i, k);
    w1.push_back(row);
  }
  j["w1"] = w1;
  j["b1"] = std::vector<double>(m.b1.data(), m.b1.data() + m.b1.size());
  j["w2"] = std::vector<double>(m.w2.data(), m.w2.data() + m.w2.size());
  j["b2"] = m.b2;
  return j.dump();
}

Mlp model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "dronetour-mlp") throw ParseError("model file: not a dronetour model");
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw IncompatibleVersion("model file version " + std::to_string(version) + ", this build reads version " +
                                std::to_string(kModelVersion));
    }
    Mlp m;
    m.config = config_from(j.at("config"));
    m.activation = activation_from_string(j.at("activation").get<std::string>());
    const auto xm = j.at("x_mean").get<std::vector<double>>();
    const auto xs = j.at("x_std").get<std::vector<double>>();
    if (xm.size() != 6 || xs.size() != 6) throw ParseError("model file: standardization needs 6 entries");
    for (int k = 0; k < 6; ++k) {
      m.x_mean(k) = xm[static_cast<std::size_t>(k)];
      m.x_std(k) = xs[static_cast<std::size_t>(k)];
      if (!(m.x_std(k) > 0.0)) throw ParseError("model file: standardization std must be positive");
    }
    m.y_mean = j.at("y_mean").get<double>();
    m.y_std = j.at("y_std").get<double>();
    const auto w1 = j.at("w1").get<std::vector<std::vector<double>>>();
    const auto b1 = j.at("b1").get<std::vector<double>>();
    const auto w2 = j.at("w2").get<std::vector<double>>();
    const auto h = static_cast<Eigen::Index>(b1.size());
    if (h < 1 || w1.size() != b1.size() || w2.size() != b1.size()) throw ParseError("model file: inconsistent layer sizes");
    m.w1.resize(h, 6);
    for (Eigen::Index i = 0; i < h; ++i) {
      if (w1[static_cast<std::size_t>(i)].size() != 6) throw ParseError("model file: w1 rows need 6 entries");
      for (int k = 0; k < 6; ++k) m.w1(i, k) = w1[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    m.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(), h);
    m.w2 = Eigen::Map<const Eigen::VectorXd>(w2.data(), h);
    m.b2 = j.at("b2").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

void save_model(const Mlp& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << model_to_json(m) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

Mlp load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace dronetour
