#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dronetour/geometry.hpp"
#include "dronetour/predictor.hpp"

namespace dronetour {

// 70 km/h, the straight-line benchmark's drone speed.
inline constexpr double kDefaultDroneSpeed = 70.0 / 3.6;

// Drone operation time (s) from start, delivery and end points. Copies share
// the underlying model; estimate() is safe to call concurrently.
class DroneTimeEstimator {
 public:
  enum class Kind { kStraightLine, kCalibrated, kLearned, kCustom };
  using Fn = std::function<double(const Point2&, const Point2&, const Point2&)>;

  // Straight-line distance start-delivery-end over drone_speed.
  static DroneTimeEstimator straight_line(double drone_speed = kDefaultDroneSpeed);
  // Straight-line time scaled by a calibrated correction factor.
  static DroneTimeEstimator calibrated(double drone_speed, double correction);
  static DroneTimeEstimator learned(std::shared_ptr<const Mlp> model);
  static DroneTimeEstimator custom(std::string name, Fn fn);

  double estimate(const Point2& start, const Point2& delivery, const Point2& end) const;

  // Batched form for many triples; learned estimators run one matrix pass.
  std::vector<double> estimate_many(const std::vector<Features>& rows) const;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double drone_speed() const { return speed_; }
  double correction() const { return correction_; }
  const Mlp* model() const { return model_.get(); }

 private:
  Kind kind_ = Kind::kStraightLine;
  std::string name_ = "K";
  double speed_ = kDefaultDroneSpeed;
  double correction_ = 1.0;
  std::shared_ptr<const Mlp> model_;
  Fn fn_;
};

// Mean over rows of label / straight-line estimate. Rows whose start,
// delivery and end coincide are skipped; EmptyDataset if none remain.
double calibrate_mk(const Dataset& ds, double drone_speed = kDefaultDroneSpeed);

// Mean absolute percentage error of an estimator against dataset labels.
double estimator_mape(const DroneTimeEstimator& e, const Dataset& ds);

}  // namespace dronetour
