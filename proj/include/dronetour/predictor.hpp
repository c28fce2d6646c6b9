#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dronetour/geometry.hpp"
#include "dronetour/physics.hpp"

namespace dronetour {

using Features = std::array<double, 6>;  // xs, ys, xd, yd, xe, ye

struct Dataset {
  std::vector<Features> features;
  std::vector<double> labels;  // seconds
  std::string provenance;

  std::size_t size() const { return labels.size(); }
  void add(const Features& f, double label) {
    features.push_back(f);
    labels.push_back(label);
  }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct Bounds2 {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;
};

// Uniform start/delivery/end triples labeled with drone-only flight time.
// Points inside a clearance-inflated airspace footprint are resampled, as are
// triples whose flight is infeasible; SamplingError after `max_retries`
// consecutive rejections.
Dataset generate_training_data(const Bounds2& region, std::size_t count, const DronePhysicsParams& params,
                               const std::vector<Ras>& ras, std::uint64_t seed, int max_retries = 1000);

// Drone-only flight for one feature row: start and end on the truck bed,
// delivery at ground level.
FlightSpec drone_only_spec(const Features& f, const DronePhysicsParams& params, const std::vector<Ras>& ras = {});

// CSV header: xs,ys,xd,yd,xe,ye,label_s
std::string dataset_to_csv(const Dataset& ds);
Dataset dataset_from_csv(const std::string& text);

enum class Activation { kIdentity, kRelu };
enum class LrSchedule { kConstant, kInverseScaling, kAdaptive };

std::string to_string(Activation a);
std::string to_string(LrSchedule s);
Activation activation_from_string(const std::string& s);
LrSchedule schedule_from_string(const std::string& s);

struct TrainConfig {
  int hidden_size = 256;
  Activation activation = Activation::kRelu;
  double alpha = 0.0001;  // L2 strength
  LrSchedule schedule = LrSchedule::kConstant;
  double base_lr = 1e-3;
  int batch_size = 200;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int patience = 10;                 // epochs without holdout improvement
  double validation_fraction = 0.1;  // internal holdout for stopping and the adaptive schedule
  double tol = 1e-6;

  void validate() const;
};

struct Mlp {
  Eigen::MatrixXd w1;  // hidden x 6
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;  // output weights, one per hidden unit
  double b2 = 0.0;
  Activation activation = Activation::kRelu;
  Eigen::Matrix<double, 6, 1> x_mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> x_std = Eigen::Matrix<double, 6, 1>::Ones();
  double y_mean = 0.0;
  double y_std = 1.0;
  TrainConfig config;

  int hidden() const { return static_cast<int>(b1.size()); }
  // Output in label units before clamping.
  double raw(const Features& f) const;
  Eigen::VectorXd raw_batch(const Eigen::MatrixXd& x) const;  // rows in label-space inputs
};

struct Gradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

// Loss over standardized rows: mean squared error / 2 plus alpha/(2 n) times
// the squared weight norm (biases excluded). Fills `grad` when non-null.
double loss_and_gradient(const Mlp& m, const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y_std, double alpha,
                         Gradients* grad);

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> learning_rates;
  int epochs = 0;
};

Mlp train(const Dataset& ds, const TrainConfig& cfg, TrainReport* report = nullptr);

// Clamped below at 0.
double predict(const Mlp& m, const Features& f);

double mean_squared_error(const Mlp& m, const Dataset& ds);
double mean_abs_percentage_error(const Mlp& m, const Dataset& ds);

struct GridRow {
  TrainConfig config;
  double holdout_mse = 0.0;
};
struct GridResult {
  TrainConfig best;
  std::vector<GridRow> report;
};

// Lattice of hidden sizes x activations x alphas x schedules over a base config.
std::vector<TrainConfig> make_grid(const std::vector<int>& hidden, const std::vector<Activation>& acts,
                                   const std::vector<double>& alphas, const std::vector<LrSchedule>& schedules,
                                   const TrainConfig& base = {});
std::vector<TrainConfig> default_grid(const TrainConfig& base = {});

GridResult grid_search(const Dataset& ds, const std::vector<TrainConfig>& grid, double holdout_fraction,
                       std::uint64_t seed = 0);

// Deterministic shuffled split; the first part has round((1 - fraction) * n) rows.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction, std::uint64_t seed);

std::string model_to_json(const Mlp& m);
Mlp model_from_json(const std::string& text);
void save_model(const Mlp& m, const std::string& path);
Mlp load_model(const std::string& path);

}  // namespace dronetour
