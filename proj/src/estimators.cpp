#include "dronetour/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "dronetour/error.hpp"

namespace dronetour {

namespace {

double straight_line_time(const Point2& s, const Point2& d, const Point2& e, double speed) {
  return (distance(s, d) + distance(d, e)) / speed;
}

}  // namespace

DroneTimeEstimator DroneTimeEstimator::straight_line(double drone_speed) {
  if (!(drone_speed > 0.0) || !std::isfinite(drone_speed)) throw InvalidArgument("drone speed must be positive");
  DroneTimeEstimator e;
  e.kind_ = Kind::kStraightLine;
  e.name_ = "K";
  e.speed_ = drone_speed;
  return e;
}

DroneTimeEstimator DroneTimeEstimator::calibrated(double drone_speed, double correction) {
  if (!(correction > 0.0) || !std::isfinite(correction)) throw InvalidArgument("correction must be positive");
  DroneTimeEstimator e = straight_line(drone_speed);
  e.kind_ = Kind::kCalibrated;
  e.name_ = "MK";
  e.correction_ = correction;
  return e;
}

DroneTimeEstimator DroneTimeEstimator::learned(std::shared_ptr<const Mlp> model) {
  if (!model) throw InvalidArgument("learned estimator needs a model");
  DroneTimeEstimator e;
  e.kind_ = Kind::kLearned;
  e.name_ = "P";
  e.model_ = std::move(model);
  return e;
}

DroneTimeEstimator DroneTimeEstimator::custom(std::string name, Fn fn) {
  if (!fn) throw InvalidArgument("custom estimator needs a callable");
  DroneTimeEstimator e;
  e.kind_ = Kind::kCustom;
  e.name_ = std::move(name);
  e.fn_ = std::move(fn);
  return e;
}

double DroneTimeEstimator::estimate(const Point2& start, const Point2& delivery, const Point2& end) const {
  switch (kind_) {
    case Kind::kStraightLine: return straight_line_time(start, delivery, end, speed_);
    case Kind::kCalibrated: return straight_line_time(start, delivery, end, speed_) * correction_;
    case Kind::kLearned: return predict(*model_, {start.x, start.y, delivery.x, delivery.y, end.x, end.y});
    case Kind::kCustom: return std::max(0.0, fn_(start, delivery, end));
  }
  return 0.0;
}

std::vector<double> DroneTimeEstimator::estimate_many(const std::vector<Features>& rows) const {
  std::vector<double> out(rows.size());
  if (kind_ == Kind::kLearned) {
    // Chunked so the hidden activations stay small.
    constexpr std::size_t kChunk = 4096;
    for (std::size_t s = 0; s < rows.size(); s += kChunk) {
      const std::size_t e = std::min(rows.size(), s + kChunk);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(e - s), 6);
      for (std::size_t i = s; i < e; ++i) {
        for (int j = 0; j < 6; ++j) x(static_cast<Eigen::Index>(i - s), j) = rows[i][static_cast<std::size_t>(j)];
      }
      const Eigen::VectorXd y = model_->raw_batch(x);
      for (std::size_t i = s; i < e; ++i) out[i] = std::max(0.0, y(static_cast<Eigen::Index>(i - s)));
    }
    return out;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out[i] = estimate({r[0], r[1]}, {r[2], r[3]}, {r[4], r[5]});
  }
  return out;
}

double calibrate_mk(const Dataset& ds, double drone_speed) {
  if (!(drone_speed > 0.0)) throw InvalidArgument("drone speed must be positive");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& f = ds.features[i];
    const double k = straight_line_time({f[0], f[1]}, {f[2], f[3]}, {f[4], f[5]}, drone_speed);
    if (!(k > 0.0)) continue;
    sum += ds.labels[i] / k;
    ++used;
  }
  if (used == 0) throw EmptyDataset("no usable rows for correction-factor calibration");
  return sum / static_cast<double>(used);
}

double estimator_mape(const DroneTimeEstimator& e, const Dataset& ds) {
  if (ds.size() == 0) throw EmptyDataset("percentage error of an empty dataset");
  const auto est = e.estimate_many(ds.features);
  double s = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) s += std::abs(est[i] - ds.labels[i]) / ds.labels[i];
  return s / static_cast<double>(ds.size());
}

}  // namespace dronetour
