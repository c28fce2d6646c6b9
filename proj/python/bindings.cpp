#include <pybind11/pybind11.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include "dronetour/error.hpp"
#include "dronetour/estimators.hpp"
#include "dronetour/geometry.hpp"
#include "dronetour/harness.hpp"
#include "dronetour/io.hpp"
#include "dronetour/planner.hpp"
#include "dronetour/predictor.hpp"

namespace py = pybind11;
using namespace dronetour;

namespace {

// Planning calls can run for a while; let other Python threads proceed.
using release = py::call_guard<py::gil_scoped_release>;

std::string dump(const nlohmann::json& j) { return j.dump(2); }

void bind_geometry(py::module_& m) {
  py::class_<Point2>(m, "Point2")
      .def(py::init<>())
      .def(py::init([](double x, double y) { return Point2{x, y}; }), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Point2::x)
      .def_readwrite("y", &Point2::y)
      .def("norm", &Point2::norm)
      .def(py::self == py::self)
      .def("__repr__", [](const Point2& p) { return "Point2(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; });
  py::class_<Point3>(m, "Point3")
      .def(py::init<>())
      .def(py::init([](double x, double y, double z) { return Point3{x, y, z}; }), py::arg("x"), py::arg("y"),
           py::arg("z"))
      .def_readwrite("x", &Point3::x)
      .def_readwrite("y", &Point3::y)
      .def_readwrite("z", &Point3::z)
      .def("xy", &Point3::xy)
      .def(py::self == py::self);

  py::class_<NormConstants>(m, "NormConstants")
      .def(py::init<>())
      .def_readwrite("lambda2", &NormConstants::lambda2)
      .def_readwrite("lambda3", &NormConstants::lambda3);
  m.def("l2_approx_2d", py::overload_cast<double, double, const NormConstants&>(&l2_approx_2d), py::arg("x"),
        py::arg("y"), py::arg("constants") = NormConstants{});
  m.def("l2_approx_3d", py::overload_cast<double, double, double, const NormConstants&>(&l2_approx_3d), py::arg("x"),
        py::arg("y"), py::arg("z"), py::arg("constants") = NormConstants{});

  py::class_<Ras>(m, "Ras")
      .def_static("box", &Ras::box, py::arg("id"), py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"),
                  py::arg("top") = std::nullopt)
      .def_property_readonly("id", &Ras::id)
      .def("to_json", [](const Ras& r) { return dump(ras_to_json(r)); })
      .def_static("from_json", [](const std::string& s) { return ras_from_json(parse_json(s, "airspace")); });
  m.def("point_in_ras", &point_in_ras, py::arg("point"), py::arg("ras"), py::arg("margin") = 0.0);
}

void bind_physics(py::module_& m) {
  py::class_<DronePhysicsParams>(m, "DronePhysicsParams")
      .def(py::init<>())
      .def_readwrite("v_max", &DronePhysicsParams::v_max)
      .def_readwrite("a_max", &DronePhysicsParams::a_max)
      .def_readwrite("climb_max", &DronePhysicsParams::climb_max)
      .def_readwrite("descent_max", &DronePhysicsParams::descent_max)
      .def_readwrite("cruise_alt", &DronePhysicsParams::cruise_alt)
      .def_readwrite("dt_minor", &DronePhysicsParams::dt_minor)
      .def_readwrite("n_f", &DronePhysicsParams::n_f)
      .def_readwrite("t_major", &DronePhysicsParams::t_major)
      .def_readwrite("battery_capacity", &DronePhysicsParams::battery_capacity)
      .def("validate", &DronePhysicsParams::validate)
      .def("to_json", [](const DronePhysicsParams& p) { return dump(params_to_json(p)); })
      .def_static("from_json", [](const std::string& s) { return params_from_json(parse_json(s, "parameters")); });

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("duration", &Trajectory::duration)
      .def_readonly("total_energy", &Trajectory::total_energy)
      .def_readonly("delivery_step", &Trajectory::delivery_step)
      .def_property_readonly("positions", [](const Trajectory& t) {
        std::vector<Point3> out;
        out.reserve(t.states.size());
        for (const auto& s : t.states) out.push_back(s.r);
        return out;
      });
}

void bind_predictor(py::module_& m) {
  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def("add", &Dataset::add)
      .def("__len__", &Dataset::size)
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def("to_csv", &dataset_to_csv)
      .def_static("from_csv", &dataset_from_csv);
  py::class_<Bounds2>(m, "Bounds2")
      .def(py::init([](double x0, double y0, double x1, double y1) { return Bounds2{x0, y0, x1, y1}; }));
  m.def(
      "generate_training_data",
      [](const Bounds2& region, std::size_t count, const DronePhysicsParams& params, std::uint64_t seed) {
        return generate_training_data(region, count, params, {}, seed);
      },
      py::arg("region"), py::arg("count"), py::arg("params") = DronePhysicsParams{}, py::arg("seed") = 0, release());

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("hidden_size", &TrainConfig::hidden_size)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("base_lr", &TrainConfig::base_lr)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed);
  py::class_<Mlp, std::shared_ptr<Mlp>>(m, "Model")
      .def_property_readonly("hidden", &Mlp::hidden)
      .def("predict", [](const Mlp& net, const Features& f) { return predict(net, f); })
      .def("to_json", &model_to_json)
      .def_static("from_json", [](const std::string& s) { return std::make_shared<Mlp>(model_from_json(s)); });
  m.def(
      "train", [](const Dataset& ds, const TrainConfig& cfg) { return std::make_shared<Mlp>(train(ds, cfg)); },
      py::arg("data"), py::arg("config") = TrainConfig{}, release());
  m.def("mean_abs_percentage_error", &mean_abs_percentage_error);
}

void bind_estimators(py::module_& m) {
  py::class_<DroneTimeEstimator>(m, "DroneTimeEstimator")
      .def_static("straight_line", &DroneTimeEstimator::straight_line, py::arg("drone_speed") = kDefaultDroneSpeed)
      .def_static("calibrated", &DroneTimeEstimator::calibrated, py::arg("drone_speed"), py::arg("correction"))
      .def_static("learned", [](std::shared_ptr<Mlp> net) { return DroneTimeEstimator::learned(std::move(net)); })
      .def_static("custom", &DroneTimeEstimator::custom)
      .def("estimate", &DroneTimeEstimator::estimate, py::arg("start"), py::arg("delivery"), py::arg("end"))
      .def_property_readonly("name", &DroneTimeEstimator::name);
  m.def("calibrate_mk", &calibrate_mk, py::arg("data"), py::arg("drone_speed") = kDefaultDroneSpeed);
  m.def("estimator_mape", &estimator_mape);
}

void bind_planner(py::module_& m) {
  py::class_<Instance>(m, "Instance")
      .def_readonly("name", &Instance::name)
      .def_readonly("depot", &Instance::depot)
      .def_readonly("deliveries", &Instance::deliveries)
      .def_readonly("ras", &Instance::ras)
      .def_property_readonly("n", &Instance::n)
      .def("to_json", [](const Instance& i) { return dump(instance_to_json(i)); })
      .def_static("from_json", [](const std::string& s) { return instance_from_json(parse_json(s, "instance")); })
      .def_static("load", &load_instance);

  py::class_<Operation>(m, "Operation")
      .def_readonly("start", &Operation::start)
      .def_readonly("truck_seq", &Operation::truck_seq)
      .def_readonly("drone_node", &Operation::drone_node)
      .def_readonly("end", &Operation::end)
      .def_readonly("t_truck", &Operation::t_truck)
      .def_readonly("t_drone_est", &Operation::t_drone_est)
      .def_readonly("t_o", &Operation::t_o)
      .def_readonly("energy", &Operation::energy)
      .def_readonly("trajectory", &Operation::trajectory);
  py::class_<Plan>(m, "Plan")
      .def_readonly("operations", &Plan::operations)
      .def_readonly("total_duration", &Plan::total_duration)
      .def_readonly("total_dec", &Plan::total_dec)
      .def_readonly("verified", &Plan::verified)
      .def("drone_count", &Plan::drone_count)
      .def("tour", &Plan::tour);
  py::class_<ImproveResult>(m, "ImproveResult")
      .def_readonly("tour", &ImproveResult::tour)
      .def_readonly("plan", &ImproveResult::plan)
      .def_readonly("iterations", &ImproveResult::iterations)
      .def_readonly("history", &ImproveResult::history);

  m.def("initial_tour", py::overload_cast<const Instance&, std::uint64_t>(&initial_tour_two_opt), py::arg("instance"),
        py::arg("seed") = 0, release());
  m.def("split", py::overload_cast<const Instance&, const std::vector<int>&, const DroneTimeEstimator&>(&split),
        py::arg("instance"), py::arg("tour"), py::arg("estimator"), release());
  m.def("improve",
        py::overload_cast<const Instance&, const std::vector<int>&, const DroneTimeEstimator&, int>(&improve),
        py::arg("instance"), py::arg("tour"), py::arg("estimator"), py::arg("budget") = 1000, release());
  m.def("exact_small", py::overload_cast<const Instance&, const DroneTimeEstimator&>(&exact_small),
        py::arg("instance"), py::arg("estimator"), release());
  m.def(
      "finalize_plan",
      [](const Instance& inst, const Plan& plan, const DronePhysicsParams& params, bool energy_tiebreak) {
        FinalizeOptions o;
        o.energy_tiebreak = energy_tiebreak;
        return finalize_plan(inst, plan, params, o);
      },
      py::arg("instance"), py::arg("plan"), py::arg("params") = DronePhysicsParams{},
      py::arg("energy_tiebreak") = true, release());
  m.def(
      "plan_to_json", [](const Instance& inst, const Plan& plan) { return dump(plan_to_json(inst, plan)); });
}

void bind_harness(py::module_& m) {
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("scenario", &ScenarioConfig::scenario)
      .def_readwrite("n", &ScenarioConfig::n)
      .def_readwrite("truck_speed_kmh", &ScenarioConfig::truck_speed_kmh)
      .def_readwrite("instance_count", &ScenarioConfig::instance_count)
      .def_readwrite("region_side", &ScenarioConfig::region_side)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("improve_budget", &ScenarioConfig::improve_budget)
      .def_readwrite("energy_tiebreak", &ScenarioConfig::energy_tiebreak);
  m.def("gen_instance", &gen_instance, py::arg("config"), py::arg("index"), py::arg("params") = DronePhysicsParams{});

  py::class_<MethodResult>(m, "MethodResult")
      .def_readonly("method", &MethodResult::method)
      .def_readonly("ok", &MethodResult::ok)
      .def_readonly("error", &MethodResult::error)
      .def_readonly("duration", &MethodResult::duration)
      .def_readonly("dec", &MethodResult::dec)
      .def_readonly("drone_nodes", &MethodResult::drone_nodes)
      .def_readonly("ras_violations", &MethodResult::ras_violations);
  py::class_<InstanceResult>(m, "InstanceResult")
      .def_readonly("index", &InstanceResult::index)
      .def_readonly("methods", &InstanceResult::methods);
  py::class_<Comparison>(m, "Comparison")
      .def_readonly("metric", &Comparison::metric)
      .def_readonly("baseline", &Comparison::baseline)
      .def_readonly("challenger", &Comparison::challenger)
      .def_readonly("count", &Comparison::count)
      .def_readonly("wins", &Comparison::wins)
      .def_readonly("mean_reduction", &Comparison::mean_reduction)
      .def_readonly("ci_half", &Comparison::ci_half);
  py::class_<ComparisonReport>(m, "ComparisonReport")
      .def_readonly("label", &ComparisonReport::label)
      .def_readonly("methods", &ComparisonReport::methods)
      .def_readonly("instances", &ComparisonReport::instances)
      .def_readonly("comparisons", &ComparisonReport::comparisons);
  m.def(
      "run_battery",
      [](const ScenarioConfig& cfg, const std::vector<DroneTimeEstimator>& est, const DronePhysicsParams& params,
         int workers) {
        BatteryOptions o;
        o.workers = workers;
        return run_battery(cfg, est, params, o);
      },
      py::arg("config"), py::arg("estimators"), py::arg("params") = DronePhysicsParams{}, py::arg("workers") = 1,
      release());
  m.def("results_csv", &results_csv);
  m.def("aggregate_csv", &aggregate_csv);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Truck-and-drone delivery planning";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<NoPath>(m, "NoPath", base.ptr());
  py::register_exception<NoRendezvous>(m, "NoRendezvous", base.ptr());
  py::register_exception<InfeasibleEnergy>(m, "InfeasibleEnergy", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<SamplingError>(m, "SamplingError", base.ptr());
  py::register_exception<EmptyDataset>(m, "EmptyDataset", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  bind_geometry(m);
  bind_physics(m);
  bind_predictor(m);
  bind_estimators(m);
  bind_planner(m);
  bind_harness(m);
}
