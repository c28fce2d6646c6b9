// Acceptance battery: one PASS/FAIL line per criterion. Exits nonzero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "dronetour/error.hpp"
#include "dronetour/harness.hpp"
#include "dronetour/io.hpp"
#include "dronetour/milp.hpp"
#include "oracles.hpp"

using namespace dronetour;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Shared {
  DronePhysicsParams params;
  Dataset train_rows;
  Dataset test_rows;
  std::shared_ptr<Mlp> model;
  double mk_correction = 1.0;
  double training_seconds = 0.0;
  std::vector<DroneTimeEstimator> all;  // K, MK, P

  DroneTimeEstimator k() const { return all[0]; }
  DroneTimeEstimator mk() const { return all[1]; }
  DroneTimeEstimator p() const { return all[2]; }
};

const Comparison* find(const ComparisonReport& r, const std::string& metric, const std::string& base,
                       const std::string& chal) {
  for (const auto& c : r.comparisons) {
    if (c.metric == metric && c.baseline == base && c.challenger == chal) return &c;
  }
  return nullptr;
}

int failures(const ComparisonReport& r) {
  int f = 0;
  for (const auto& i : r.instances) {
    for (const auto& m : i.methods) f += m.ok ? 0 : 1;
  }
  return f;
}

ScenarioConfig battery_config(int scenario, int n, int count, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.n = n;
  cfg.truck_speed_kmh = 40.0;
  cfg.instance_count = count;
  cfg.seed = seed;
  return cfg;
}

Outcome split_oracle(const Shared& s) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  int compared = 0;
  int mismatched = 0;
  for (int i = 0; i < 100; ++i) {
    auto cfg = battery_config(1, 5 + i % 3, 1, 101);
    const Instance inst = gen_instance(cfg, i, s.params);
    for (const auto& est : s.all) {
      const PlanningContext ctx(inst, est);
      auto shuffled = initial_tour_two_opt(ctx);
      std::shuffle(shuffled.begin() + 1, shuffled.end() - 1, rng);
      for (const auto& tour : {initial_tour_two_opt(ctx), shuffled}) {
        ++compared;
        if (split_value(ctx, tour).duration != oracle::best_partition(ctx, tour)) ++mismatched;
      }
    }
  }
  const double secs = since(t0);
  return {mismatched == 0 && secs < 60.0, fmt("%d/%d tours match the partition oracle exactly, %.1f s", compared - mismatched, compared, secs)};
}

Outcome global_quality(const Shared& s) {
  const auto t0 = Clock::now();
  std::string detail;
  bool pass = true;
  for (const auto& est : s.all) {
    int close = 0;
    for (int i = 0; i < 50; ++i) {
      const Instance inst = gen_instance(battery_config(1, 6, 1, 202), i, s.params);
      const PlanningContext ctx(inst, est);
      const double local = improve(ctx, initial_tour_two_opt(ctx)).plan.total_duration;
      const double best = exact_small(ctx).total_duration;
      if (local <= 1.02 * best) ++close;
    }
    pass = pass && close >= 45;
    detail += fmt("%s %d/50, ", est.name().c_str(), close);
  }
  const double secs = since(t0);
  return {pass && secs < 300.0, detail + fmt("within 2%% of exhaustive; %.1f s", secs)};
}

Outcome drone_value(const Shared& s, ComparisonReport& kept) {
  const auto t0 = Clock::now();
  BatteryOptions bo;
  bo.keep_plans = true;
  kept = run_battery(battery_config(1, 20, 50, 303), {s.p()}, s.params, bo);
  const double secs = since(t0) + s.training_seconds;
  int wins = 0;
  int count = 0;
  for (const auto& i : kept.instances) {
    const auto& t = i.methods[0];
    const auto& p = i.methods[1];
    if (!t.ok || !p.ok) continue;
    ++count;
    if (p.duration < t.duration) ++wins;
  }
  const Comparison* c = find(kept, "duration", "truck", "P");
  const double red = c != nullptr ? c->mean_reduction : 0.0;
  const bool pass = count == 50 && wins >= 45 && red >= 0.10 && secs < 1800.0;
  return {pass, fmt("P beats truck-only in %d/%d, mean duration reduction %.2f%%, %.0f s with training", wins, count,
                    100.0 * red, secs)};
}

Outcome norm_error() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst2 = 0.0;
  double worst3 = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = g(rng), y = g(rng), z = g(rng);
    const double n2 = std::hypot(x, y);
    worst2 = std::max(worst2, std::fabs(l2_approx_2d(x / n2, y / n2) - 1.0));
    const double n3 = std::sqrt(x * x + y * y + z * z);
    worst3 = std::max(worst3, std::fabs(l2_approx_3d(x / n3, y / n3, z / n3) - 1.0));
  }
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  double homog = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng), k = u(rng) / 10.0;
    const double f2 = l2_approx_2d(x, y), f3 = l2_approx_3d(x, y, z);
    homog = std::max(homog, std::fabs(l2_approx_2d(k * x, k * y) - std::fabs(k) * f2) / std::max(1.0, std::fabs(k) * f2));
    homog = std::max(homog, std::fabs(l2_approx_3d(k * x, k * y, k * z) - std::fabs(k) * f3) / std::max(1.0, std::fabs(k) * f3));
  }
  return {worst2 <= 0.06 && worst3 <= 0.085 && homog <= 1e-12,
          fmt("max error 2D %.4f%%, 3D %.4f%%, homogeneity %.1e", 100 * worst2, 100 * worst3, homog)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> g(0.0, 0.7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(1e-6, std::max(std::fabs(a), std::fabs(b))); };
  for (int net = 0; net < 20; ++net) {
    const int hidden = 1 + net % 8;
    const int rows = 5 + net % 16;
    Mlp m;
    m.activation = net % 2 == 0 ? Activation::kRelu : Activation::kIdentity;
    m.w1.resize(hidden, 6);
    m.b1.resize(hidden);
    m.w2.resize(hidden);
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < hidden; ++i) {
      m.b1(i) = g(rng);
      m.w2(i) = g(rng);
    }
    m.b2 = g(rng);
    Eigen::MatrixXd x(rows, 6);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < rows; ++i) y(i) = u(rng);
    const double alpha = net % 3 == 0 ? 0.0 : 0.05 * net;
    Gradients grad;
    loss_and_gradient(m, x, y, alpha, &grad);
    auto probe = [&](double& slot, double analytic) {
      const double h = 1e-6;
      const double keep = slot;
      slot = keep + h;
      const double up = loss_and_gradient(m, x, y, alpha, nullptr);
      slot = keep - h;
      const double down = loss_and_gradient(m, x, y, alpha, nullptr);
      slot = keep;
      worst = std::max(worst, rel(analytic, (up - down) / (2 * h)));
    };
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) probe(m.w1.data()[i], grad.w1.data()[i]);
    for (Eigen::Index i = 0; i < hidden; ++i) {
      probe(m.b1(i), grad.b1(i));
      probe(m.w2(i), grad.w2(i));
    }
    probe(m.b2, grad.b2);
  }
  return {worst <= 1e-4, fmt("worst relative error %.2e over 20 nets", worst)};
}

Outcome predictor_quality(const Shared& s) {
  const double p = mean_abs_percentage_error(*s.model, s.test_rows);
  const double mk = estimator_mape(s.mk(), s.test_rows);
  const double k = estimator_mape(s.k(), s.test_rows);
  return {p <= 0.08 && p < mk, fmt("held-out MAPE P %.2f%%, MK %.2f%% (correction %.4f), K %.2f%% on %zu rows", 100 * p,
                                   100 * mk, s.mk_correction, 100 * k, s.test_rows.size())};
}

Outcome ras_safety(const Shared& s) {
  const auto rep = run_battery(battery_config(2, 20, 30, 404), {s.k(), s.mk(), s.p()}, s.params);
  long air = 0;
  long bad = 0;
  for (const auto& i : rep.instances) {
    for (const auto& m : i.methods) {
      air += m.airborne_states;
      bad += m.ras_violations;
    }
  }
  return {bad == 0 && air > 0, fmt("%ld airborne minor steps, %ld inside airspace, %d failed methods", air, bad, failures(rep))};
}

// Runs the bundled HiGHS script; empty when python or highspy is missing.
std::string external_solve(const std::string& lp, const std::string& start) {
  const char* script = DRONETOUR_SOLVE_SCRIPT;
  if (std::system("python3 -c 'import highspy' >/dev/null 2>&1") != 0) return {};
  const std::string cmd = std::string("python3 ") + script + " " + lp + " --start " + start + " --time-limit 600";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {};
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
  ::pclose(pipe);
  return out;
}

// Coarse minor steps so that the airborne floor is one climb or descent step
// away. Each spec is certified twice: squeezed into six major steps (the
// smallest n_f that covers the flight) and at one minor step per major step.
Outcome milp_certification(const Shared& s) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-150.0, 150.0);
  int clean_short = 0;
  int clean_fine = 0;
  int checked = 0;
  double worst = 0.0;
  struct Saved {
    MilpInstance model;
    std::vector<double> x;
  };
  std::vector<Saved> solvable;
  for (int trial = 0; trial < 20; ++trial) {
    DronePhysicsParams p = s.params;
    p.dt_minor = 10.0;
    p.cruise_alt = 25.0;
    p.n_f = 1;
    p.t_major = 60;
    FlightSpec spec;
    const Point2 a{u(rng), u(rng)}, d{u(rng), u(rng)}, e{u(rng), u(rng)};
    spec.start = {a.x, a.y, p.truck_bed_alt};
    spec.delivery = {d.x, d.y, 0.0};
    spec.end = Point3{e.x, e.y, p.truck_bed_alt};
    if (trial % 2 == 1) spec.end = TimedTruckPath({a, e}, {2.0}, p.dt_minor);
    if (trial % 4 == 3) spec.ras = {Ras::box("r", 200, -100, 260, 100)};
    const auto traj = std::holds_alternative<Point3>(spec.end) ? plan_drone_only_flight(spec, p)
                                                               : plan_coordinated_flight(spec, p);
    // A coordinated model ends where the truck parks, so the horizon has to
    // reach the truck's arrival as well as the landing.
    int states = static_cast<int>(traj.states.size());
    if (const auto* truck = std::get_if<TimedTruckPath>(&spec.end)) {
      states = std::max(states, static_cast<int>(truck->arrival_sample()) + 1);
    }
    DronePhysicsParams fine = p;
    fine.t_major = states;
    DronePhysicsParams squeezed = p;
    squeezed.t_major = 6;
    squeezed.n_f = (states + 5) / 6;
    for (const auto* q : {&squeezed, &fine}) {
      const double major = q->n_f * q->dt_minor;
      const double quantized = std::ceil(traj.duration / major - 1e-9) * major;
      for (const auto& mode : {MilpMode::min_time(), MilpMode::min_energy_given(quantized)}) {
        auto m = build_trajectory_milp(spec, *q, mode);
        const auto x = assignment_from_trajectory(m, spec, *q, traj);
        const auto bad = check_assignment(m, x, 1e-6);
        if (q == &squeezed) {
          ++checked;
          if (bad.empty()) ++clean_short;
          for (const auto& v : bad) worst = std::max(worst, v.amount);
        } else if (bad.empty()) {
          ++clean_fine;
          if (mode.kind == MilpMode::Kind::kMinTime && solvable.size() < 3) solvable.push_back({std::move(m), x});
        }
      }
    }
  }
  std::string ext = "external solve skipped (no HiGHS)";
  bool ext_ok = true;
  if (!solvable.empty()) {
    const fs::path dir = fs::temp_directory_path() / ("dronetour_milp_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    int solved = 0;
    int attempted = 0;
    std::string objs;
    for (std::size_t i = 0; i < solvable.size(); ++i) {
      const auto& sv = solvable[i];
      const std::string lp = (dir / ("m" + std::to_string(i) + ".lp")).string();
      const std::string st = (dir / ("m" + std::to_string(i) + ".start")).string();
      write_file(lp, export_milp(sv.model));
      std::string start;
      for (std::size_t v = 0; v < sv.x.size(); ++v) start += sv.model.variables()[v].name + " " + fmt("%.17g", sv.x[v]) + "\n";
      write_file(st, start);
      double oracle_obj = 0.0;
      for (const auto& [idx, c] : sv.model.objective()) oracle_obj += c * sv.x[static_cast<std::size_t>(idx)];
      const std::string out = external_solve(lp, st);
      if (out.empty()) break;
      ++attempted;
      char status[64] = {0};
      double obj = 0.0;
      if (std::sscanf(out.c_str(), "%63s %lf", status, &obj) == 2 && obj <= oracle_obj + 1e-6 * std::max(1.0, std::fabs(oracle_obj))) {
        ++solved;
      }
      objs += fmt(" [%s %.1f vs %.1f]", status, obj, oracle_obj);
    }
    fs::remove_all(dir);
    if (attempted > 0) {
      ext_ok = solved == attempted;
      ext = fmt("external solve: %d/%d no worse than the oracle%s", solved, attempted, objs.c_str());
    }
  }
  return {clean_short == checked && checked == 40 && ext_ok,
          fmt("T<=6: %d/%d oracle assignments feasible (worst excess %.1e); one minor step per major: %d/40; ",
              clean_short, checked, worst, clean_fine) +
              ext};
}

Outcome tiebreak(const Shared& s, const ComparisonReport& kept) {
  int plans = 0;
  int equal_ops = 0;
  int lower = 0;
  for (const auto& i : kept.instances) {
    if (plans == 20) break;
    if (i.plans.size() < 2 || !i.methods[1].ok) continue;
    const Plan& on = i.plans[1];
    const Instance inst = gen_instance(kept.config, i.index, s.params);
    FinalizeOptions off;
    off.energy_tiebreak = false;
    off.keep_trajectories = false;
    const Plan re = finalize_plan(inst, on, s.params, off);
    ++plans;
    for (std::size_t k = 0; k < on.operations.size(); ++k) {
      const auto& a = on.operations[k];
      const auto& b = re.operations[k];
      if (!a.drone_node || std::fabs(a.t_o - b.t_o) > 1e-9) continue;
      ++equal_ops;
      if (b.energy < a.energy - 1e-9 * std::max(1.0, a.energy)) ++lower;
    }
  }
  return {plans == 20 && lower == 0,
          fmt("%d plans, %d drone operations at equal duration, %d cheaper without the tie-break", plans, equal_ops, lower)};
}

Outcome determinism(const Shared& s) {
  const auto cfg = battery_config(2, 10, 6, 505);
  const auto a = run_battery(cfg, s.all, s.params);
  const auto b = run_battery(cfg, s.all, s.params);
  const bool same = results_csv({a}) == results_csv({b}) && aggregate_csv({a}) == aggregate_csv({b});
  return {same, same ? "two Scenario II runs give byte-identical CSVs" : "CSV output differs between runs"};
}

Outcome runtime(const Shared& s) {
  const Instance inst = gen_instance(battery_config(1, 100, 1, 606), 0, s.params);
  const auto t0 = Clock::now();
  const PlanningContext ctx(inst, s.p());
  const auto tour = initial_tour_two_opt(ctx);
  const ImproveResult imp = improve(ctx, tour);
  const Plan fin = finalize_plan(inst, imp.plan, s.params);
  const double secs = since(t0);
  return {secs <= 300.0 && fin.verified,
          fmt("n=100 order, split, improve (%d moves) and finalize in %.1f s, duration %.0f s", imp.iterations, secs,
              fin.total_duration)};
}

}  // namespace

// Optional arguments pick criteria by number; by default all of them run.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  Shared s;
  bool trained = false;
  auto train_once = [&] {
    if (trained) return;
    trained = true;
    std::printf("training P on oracle-labeled rows...\n");
    std::fflush(stdout);
    const auto t0 = Clock::now();
    const Bounds2 region{0.0, 0.0, 5000.0, 5000.0};
    s.train_rows = generate_training_data(region, 20000, s.params, {}, 11);
    s.test_rows = generate_training_data(region, 5000, s.params, {}, 12);
    TrainConfig tc;
    tc.hidden_size = 256;
    tc.patience = 20;
    TrainReport rep;
    s.model = std::make_shared<Mlp>(train(s.train_rows, tc, &rep));
    s.mk_correction = calibrate_mk(s.train_rows);
    s.training_seconds = since(t0);
    s.all = {DroneTimeEstimator::straight_line(), DroneTimeEstimator::calibrated(kDefaultDroneSpeed, s.mk_correction),
             DroneTimeEstimator::learned(s.model)};
    std::printf("  %zu rows, hidden %d, %d epochs, %.0f s\n", s.train_rows.size(), tc.hidden_size, rep.epochs,
                s.training_seconds);
  };
  const std::set<int> standalone = {7, 8, 11};

  ComparisonReport n20;
  ComparisonReport n50;
  bool n50_ready = false;
  auto battery50 = [&]() -> const ComparisonReport& {
    if (!n50_ready) {
      n50 = run_battery(battery_config(1, 50, 50, 707), {s.k(), s.p()}, s.params);
      n50_ready = true;
    }
    return n50;
  };

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [&] { return split_oracle(s); }},
      {2, [&] { return global_quality(s); }},
      {3, [&] { return drone_value(s, n20); }},
      {4, [&] {
         const auto& r = battery50();
         const Comparison* c = find(r, "duration", "K", "P");
         if (c == nullptr) return Outcome{false, "no K/P comparison"};
         const bool ok = c->mean_challenger <= c->mean_baseline && c->mean_reduction - c->ci_half > 0.0;
         return Outcome{ok, fmt("n=50: mean duration K %.0f s, P %.0f s, reduction %.2f%% (95%% CI %.2f%% to %.2f%%), %d failed",
                                c->mean_baseline, c->mean_challenger, 100 * c->mean_reduction,
                                100 * (c->mean_reduction - c->ci_half), 100 * (c->mean_reduction + c->ci_half), failures(r))};
       }},
      {5, [&] {
         const auto& r = battery50();
         const Comparison* c = find(r, "dec", "K", "P");
         if (c == nullptr) return Outcome{false, "no K/P comparison"};
         const bool ok = c->mean_challenger <= c->mean_baseline && c->mean_reduction >= 0.05;
         return Outcome{ok, fmt("n=50: mean DEC K %.0f J, P %.0f J, reduction %.2f%%", c->mean_baseline,
                                c->mean_challenger, 100 * c->mean_reduction)};
       }},
      {6, [&] {
         const auto& r = battery50();
         const Comparison* c = find(r, "drone_nodes", "K", "P");
         if (c == nullptr) return Outcome{false, "no K/P comparison"};
         return Outcome{c->mean_challenger < c->mean_baseline,
                        fmt("n=50: mean drone nodes K %.2f, P %.2f", c->mean_baseline, c->mean_challenger)};
       }},
      {7, [] { return norm_error(); }},
      {8, [] { return gradient_check(); }},
      {9, [&] { return predictor_quality(s); }},
      {10, [&] { return ras_safety(s); }},
      {11, [&] { return milp_certification(s); }},
      {12, [&] { return tiebreak(s, n20); }},
      {13, [&] { return determinism(s); }},
      {14, [&] { return runtime(s); }},
  };

  int failed = 0;
  int ran = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    ++ran;
    Outcome o;
    try {
      if (!standalone.count(id)) train_once();
    } catch (const std::exception& e) {
      o = {false, std::string("training error: ") + e.what()};
    }
    const auto t0 = Clock::now();
    try {
      if (o.detail.empty()) o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d: %s  %s  [%.0f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
