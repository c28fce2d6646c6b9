#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dronetour/error.hpp"
#include "dronetour/estimators.hpp"
#include "dronetour/harness.hpp"
#include "dronetour/io.hpp"
#include "dronetour/milp.hpp"
#include "dronetour/planner.hpp"
#include "dronetour/predictor.hpp"

using namespace dronetour;

namespace {

Point2 parse_point(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw InvalidArgument("expected x,y but got '" + s + "'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw InvalidArgument("expected x,y but got '" + s + "'");
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct EstimatorFlags {
  std::string methods = "k,mk,p";
  std::string model;
  std::string mk_data;
  double mk_correction = 0.0;
  double drone_speed_kmh = 70.0;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f, bool single) {
  if (single) {
    cmd->add_option("--estimator", f.methods, "k, mk or p")->check(CLI::IsMember({"k", "mk", "p"}));
  } else {
    cmd->add_option("--estimators", f.methods, "comma-separated subset of k,mk,p");
  }
  cmd->add_option("--model", f.model, "trained model JSON (method p)");
  cmd->add_option("--mk-data", f.mk_data, "dataset CSV to calibrate the mk correction");
  cmd->add_option("--mk-correction", f.mk_correction, "mk correction factor (overrides --mk-data)");
  cmd->add_option("--drone-speed-kmh", f.drone_speed_kmh, "straight-line drone speed for k and mk");
}

std::vector<DroneTimeEstimator> build_estimators(const EstimatorFlags& f) {
  std::vector<DroneTimeEstimator> out;
  const double speed = f.drone_speed_kmh / 3.6;
  for (const auto& m : split_list(f.methods)) {
    if (m == "k") {
      out.push_back(DroneTimeEstimator::straight_line(speed));
    } else if (m == "mk") {
      double c = f.mk_correction;
      if (!(c > 0.0)) {
        if (f.mk_data.empty()) throw InvalidArgument("mk needs --mk-correction or --mk-data");
        c = calibrate_mk(dataset_from_csv(read_file(f.mk_data)), speed);
      }
      out.push_back(DroneTimeEstimator::calibrated(speed, c));
    } else if (m == "p") {
      if (f.model.empty()) throw InvalidArgument("p needs --model");
      out.push_back(DroneTimeEstimator::learned(std::make_shared<Mlp>(load_model(f.model))));
    } else {
      throw InvalidArgument("unknown estimator " + m);
    }
  }
  return out;
}

void print_timing(const ComparisonReport& r) {
  std::fprintf(stderr, "[%s n=%d %.0f km/h] ordering %.2fs, planning %.2fs, finalizing %.2fs\n", r.label.c_str(),
               r.config.n, r.config.truck_speed_kmh, r.timing.ordering, r.timing.planning, r.timing.finalizing);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truck-and-drone delivery planning"};
  app.require_subcommand(1);
  std::string params_path;
  app.add_option("--params", params_path, std::string("drone parameter JSON (default: $") + kParamsEnv + ")");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "label random drone-only operations with the trajectory oracle");
  std::size_t gen_count = 5000;
  std::uint64_t gen_seed = 1;
  int gen_scenario = 1;
  double gen_side = 5000.0;
  std::string gen_out = "data.csv";
  gen->add_option("--count", gen_count)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--scenario", gen_scenario)->check(CLI::IsMember({1, 2}));
  gen->add_option("--side", gen_side, "square region side (m)");
  gen->add_option("--out", gen_out);

  // train
  auto* tr = app.add_subcommand("train", "fit the operation-time network");
  std::string tr_data;
  std::string tr_test;
  std::string tr_out = "model.json";
  TrainConfig tc;
  std::string tr_act = "relu";
  std::string tr_sched = "constant";
  tr->add_option("--data", tr_data)->required();
  tr->add_option("--test-data", tr_test, "report held-out error on this CSV");
  tr->add_option("--out", tr_out);
  tr->add_option("--hidden", tc.hidden_size);
  tr->add_option("--activation", tr_act)->check(CLI::IsMember({"relu", "identity"}));
  tr->add_option("--alpha", tc.alpha);
  tr->add_option("--schedule", tr_sched)->check(CLI::IsMember({"constant", "invscaling", "adaptive"}));
  tr->add_option("--lr", tc.base_lr);
  tr->add_option("--batch", tc.batch_size);
  tr->add_option("--epochs", tc.max_epochs);
  tr->add_option("--patience", tc.patience);
  tr->add_option("--seed", tc.seed);

  // grid-search
  auto* gs = app.add_subcommand("grid-search", "hyperparameter lattice search on a holdout split");
  std::string gs_data;
  std::string gs_out = "grid.csv";
  std::string gs_hidden = "1000,2500,4000";
  std::string gs_acts = "identity,relu";
  std::string gs_alphas = "0.0001,0.05,0.5,0.8";
  std::string gs_scheds = "constant,invscaling,adaptive";
  double gs_holdout = 0.2;
  TrainConfig gs_base;
  gs->add_option("--data", gs_data)->required();
  gs->add_option("--out", gs_out);
  gs->add_option("--hidden", gs_hidden);
  gs->add_option("--activations", gs_acts);
  gs->add_option("--alphas", gs_alphas);
  gs->add_option("--schedules", gs_scheds);
  gs->add_option("--holdout", gs_holdout);
  gs->add_option("--epochs", gs_base.max_epochs);
  gs->add_option("--seed", gs_base.seed);

  // plan
  auto* pl = app.add_subcommand("plan", "plan one instance and write plan JSON with trajectory CSVs");
  std::string pl_instance;
  std::string pl_out = "plan";
  int pl_budget = 1000;
  bool pl_no_tiebreak = false;
  EstimatorFlags pl_est;
  pl_est.methods = "p";
  pl->add_option("--instance", pl_instance)->required();
  pl->add_option("--out", pl_out, "output directory");
  pl->add_option("--budget", pl_budget);
  pl->add_flag("--no-tiebreak", pl_no_tiebreak, "earliest landing without the energy tie-break");
  add_estimator_flags(pl, pl_est, true);

  // battery
  auto* bt = app.add_subcommand("battery", "scenario battery with truck-only and estimator comparisons");
  ScenarioConfig bc;
  std::string bt_nodes = "20";
  std::string bt_speeds = "40";
  std::string bt_out = "battery";
  int bt_workers = 1;
  EstimatorFlags bt_est;
  bt->add_option("--scenario", bc.scenario)->check(CLI::IsMember({1, 2}));
  bt->add_option("--nodes", bt_nodes, "comma-separated node counts");
  bt->add_option("--speed-kmh", bt_speeds, "comma-separated truck speeds");
  bt->add_option("--count", bc.instance_count);
  bt->add_option("--seed", bc.seed);
  bt->add_option("--side", bc.region_side);
  bt->add_option("--budget", bc.improve_budget);
  bt->add_option("--workers", bt_workers);
  bt->add_option("--out", bt_out, "output directory");
  add_estimator_flags(bt, bt_est, false);

  // export-milp
  auto* ex = app.add_subcommand("export-milp", "write the trajectory model of one operation as CPLEX LP");
  std::string ex_start;
  std::string ex_delivery;
  std::string ex_end;
  std::string ex_truck;
  double ex_truck_kmh = 40.0;
  std::string ex_mode = "time";
  double ex_tstar = 0.0;
  std::string ex_out = "model.lp";
  ex->add_option("--start", ex_start, "x,y")->required();
  ex->add_option("--delivery", ex_delivery, "x,y")->required();
  ex->add_option("--end", ex_end, "x,y fixed landing point");
  ex->add_option("--truck-path", ex_truck, "x,y;x,y;... truck waypoints (coordinated landing)");
  ex->add_option("--truck-speed-kmh", ex_truck_kmh);
  ex->add_option("--mode", ex_mode)->check(CLI::IsMember({"time", "energy"}));
  ex->add_option("--t-star", ex_tstar, "duration to respect in energy mode");
  ex->add_option("--out", ex_out);

  // case-study
  auto* cs = app.add_subcommand("case-study", "volume-weighted demand on a road network");
  std::string cs_region;
  std::uint64_t cs_synth = 0;
  int cs_nodes = 200;
  int cs_reps = 50;
  std::uint64_t cs_seed = 1;
  std::string cs_out = "case-study";
  int cs_budget = 1000;
  EstimatorFlags cs_est;
  cs->add_option("--region", cs_region, "region JSON");
  cs->add_option("--synthetic-seed", cs_synth, "generate a synthetic region instead");
  cs->add_option("--nodes", cs_nodes);
  cs->add_option("--reps", cs_reps);
  cs->add_option("--seed", cs_seed);
  cs->add_option("--budget", cs_budget);
  cs->add_option("--out", cs_out);
  add_estimator_flags(cs, cs_est, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kInvalidInput);
  }

  try {
    const DronePhysicsParams params = load_params(params_path.empty() ? std::nullopt : std::optional<std::string>(params_path));

    if (*gen) {
      std::vector<Ras> ras;
      ScenarioConfig cfg;
      cfg.region_side = gen_side;
      if (gen_scenario == 2) ras = gen_ras(cfg, derive_seed(gen_seed, 0, 2), params.ras_clearance());
      const Dataset ds = generate_training_data({0.0, 0.0, gen_side, gen_side}, gen_count, params, ras, gen_seed);
      write_file(gen_out, dataset_to_csv(ds));
      std::printf("wrote %zu rows to %s\n", ds.size(), gen_out.c_str());
    } else if (*tr) {
      tc.activation = activation_from_string(tr_act);
      tc.schedule = schedule_from_string(tr_sched);
      const Dataset ds = dataset_from_csv(read_file(tr_data));
      TrainReport rep;
      const Mlp m = train(ds, tc, &rep);
      save_model(m, tr_out);
      std::printf("epochs %d, loss %.6g -> %.6g, train MAPE %.4f\n", rep.epochs, rep.initial_loss, rep.final_loss,
                  mean_abs_percentage_error(m, ds));
      if (!tr_test.empty()) {
        const Dataset test = dataset_from_csv(read_file(tr_test));
        std::printf("test MSE %.6g, test MAPE %.4f\n", mean_squared_error(m, test), mean_abs_percentage_error(m, test));
      }
    } else if (*gs) {
      std::vector<int> hidden;
      for (const auto& h : split_list(gs_hidden)) hidden.push_back(std::stoi(h));
      std::vector<Activation> acts;
      for (const auto& a : split_list(gs_acts)) acts.push_back(activation_from_string(a));
      std::vector<double> alphas;
      for (const auto& a : split_list(gs_alphas)) alphas.push_back(std::stod(a));
      std::vector<LrSchedule> scheds;
      for (const auto& s : split_list(gs_scheds)) scheds.push_back(schedule_from_string(s));
      const Dataset ds = dataset_from_csv(read_file(gs_data));
      const GridResult res = grid_search(ds, make_grid(hidden, acts, alphas, scheds, gs_base), gs_holdout, gs_base.seed);
      std::ostringstream csv;
      csv << "hidden,activation,alpha,schedule,holdout_mse\n";
      for (const auto& row : res.report) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%s,%.17g\n", row.config.hidden_size, to_string(row.config.activation).c_str(),
                      row.config.alpha, to_string(row.config.schedule).c_str(), row.holdout_mse);
        csv << buf;
      }
      write_file(gs_out, csv.str());
      std::printf("best: hidden %d, %s, alpha %g, %s\n", res.best.hidden_size, to_string(res.best.activation).c_str(),
                  res.best.alpha, to_string(res.best.schedule).c_str());
    } else if (*pl) {
      const Instance inst = load_instance(pl_instance);
      const auto ests = build_estimators(pl_est);
      const PlanningContext ctx(inst, ests.front());
      const auto tour = initial_tour_two_opt(ctx, 0);
      const ImproveResult imp = improve(ctx, tour, pl_budget);
      FinalizeOptions fo;
      fo.energy_tiebreak = !pl_no_tiebreak;
      const Plan fin = finalize_plan(inst, imp.plan, params, fo);
      std::filesystem::create_directories(pl_out);
      const std::string prefix = "trajectory_";
      for (std::size_t i = 0; i < fin.operations.size(); ++i) {
        if (fin.operations[i].trajectory) {
          write_file((std::filesystem::path(pl_out) / (prefix + std::to_string(i) + ".csv")).string(),
                     trajectory_csv(*fin.operations[i].trajectory));
        }
      }
      write_file((std::filesystem::path(pl_out) / "plan.json").string(), plan_to_json(inst, fin, prefix).dump(2) + "\n");
      std::printf("duration %.2f s (estimated %.2f s), drone energy %.0f J, %d drone nodes\n", fin.total_duration,
                  imp.plan.total_duration, fin.total_dec, fin.drone_count());
    } else if (*bt) {
      const auto ests = build_estimators(bt_est);
      std::vector<ComparisonReport> reports;
      BatteryOptions bo;
      bo.workers = bt_workers;
      for (const auto& n : split_list(bt_nodes)) {
        for (const auto& v : split_list(bt_speeds)) {
          ScenarioConfig cfg = bc;
          cfg.n = std::stoi(n);
          cfg.truck_speed_kmh = std::stod(v);
          reports.push_back(run_battery(cfg, ests, params, bo));
          print_timing(reports.back());
        }
      }
      for (const auto& p : emit_report(reports, bt_out)) std::printf("wrote %s\n", p.c_str());
    } else if (*ex) {
      FlightSpec spec;
      const Point2 s = parse_point(ex_start);
      const Point2 d = parse_point(ex_delivery);
      spec.start = {s.x, s.y, params.truck_bed_alt};
      spec.delivery = {d.x, d.y, 0.0};
      if (!ex_truck.empty()) {
        std::vector<Point2> pts;
        std::stringstream ss(ex_truck);
        std::string item;
        while (std::getline(ss, item, ';')) pts.push_back(parse_point(item));
        if (pts.size() < 2) throw InvalidArgument("--truck-path needs at least two points");
        spec.end = TimedTruckPath(pts, std::vector<double>(pts.size() - 1, ex_truck_kmh / 3.6), params.dt_minor);
      } else if (!ex_end.empty()) {
        const Point2 e = parse_point(ex_end);
        spec.end = Point3{e.x, e.y, params.truck_bed_alt};
      } else {
        throw InvalidArgument("give --end or --truck-path");
      }
      const MilpMode mode = ex_mode == "energy" ? MilpMode::min_energy_given(ex_tstar) : MilpMode::min_time();
      const MilpInstance m = build_trajectory_milp(spec, params, mode);
      write_file(ex_out, export_milp(m));
      std::printf("wrote %zu variables, %zu constraints to %s\n", m.variables().size(), m.constraints().size(), ex_out.c_str());
    } else if (*cs) {
      RegionFile region;
      if (!cs_region.empty()) {
        region = region_from_json(read_file(cs_region));
      } else {
        region = synthetic_region(cs_synth);
      }
      const auto ests = build_estimators(cs_est);
      ScenarioConfig cfg;
      cfg.n = cs_nodes;
      cfg.instance_count = cs_reps;
      cfg.seed = cs_seed;
      cfg.improve_budget = cs_budget;
      cfg.truck_speed_kmh = 0.0;  // road speeds come from the graph
      const InstanceSource source = [&](int i) {
        return sample_case_study(region, cs_nodes, derive_seed(cs_seed, static_cast<std::uint64_t>(i), 3), params);
      };
      const ComparisonReport rep = run_instances("case", cfg, source, ests, params);
      print_timing(rep);
      for (const auto& p : emit_report({rep}, cs_out)) std::printf("wrote %s\n", p.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
