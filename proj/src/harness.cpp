#include "dronetour/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "dronetour/error.hpp"
#include "dronetour/io.hpp"

namespace dronetour {

using nlohmann::json;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out + "\"";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (scenario != 1 && scenario != 2) throw InvalidArgument("scenario must be 1 or 2");
  if (n < 1) throw InvalidArgument("node count must be at least 1");
  if (!(truck_speed_kmh > 0.0)) throw InvalidArgument("truck speed must be positive");
  if (instance_count < 0) throw InvalidArgument("instance count must be nonnegative");
  if (!(region_side > 0.0)) throw InvalidArgument("region side must be positive");
  if (ras_count_min < 1 || ras_count_max < ras_count_min) throw InvalidArgument("invalid airspace count range");
  if (!(ras_coverage_min > 0.0) || ras_coverage_max < ras_coverage_min || ras_coverage_max >= 0.9) {
    throw InvalidArgument("invalid airspace coverage range");
  }
  if (improve_budget < 0) throw InvalidArgument("improve budget must be nonnegative");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(purpose)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<Ras> gen_ras(const ScenarioConfig& cfg, std::uint64_t seed, double clearance) {
  std::mt19937_64 rng(seed);
  const int count = cfg.ras_count_min + static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.ras_count_max - cfg.ras_count_min + 1));
  const double coverage = uniform(rng, cfg.ras_coverage_min, cfg.ras_coverage_max);
  const double side = cfg.region_side;
  const double area = coverage * side * side / count;
  const double gap = 4.0 * clearance + 20.0;
  const Point2 depot{side / 2, side / 2};
  struct Box {
    double x0, y0, x1, y1;
  };
  std::vector<Box> boxes;
  for (int b = 0; b < count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double aspect = std::exp(uniform(rng, std::log(0.5), std::log(2.0)));
      const double w = std::sqrt(area * aspect);
      const double h = area / w;
      if (w >= side || h >= side) continue;
      const double x0 = uniform(rng, 0.0, side - w);
      const double y0 = uniform(rng, 0.0, side - h);
      const Box box{x0, y0, x0 + w, y0 + h};
      const double margin = clearance + 50.0;
      if (depot.x > box.x0 - margin && depot.x < box.x1 + margin && depot.y > box.y0 - margin && depot.y < box.y1 + margin) {
        continue;
      }
      const bool clash = std::any_of(boxes.begin(), boxes.end(), [&](const Box& o) {
        return box.x0 < o.x1 + gap && o.x0 < box.x1 + gap && box.y0 < o.y1 + gap && o.y0 < box.y1 + gap;
      });
      if (clash) continue;
      boxes.push_back(box);
      placed = true;
    }
    if (!placed) throw SamplingError("could not place restricted airspace " + std::to_string(b));
  }
  std::vector<Ras> out;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    out.push_back(Ras::box("ras" + std::to_string(b), boxes[b].x0, boxes[b].y0, boxes[b].x1, boxes[b].y1));
  }
  return out;
}

Instance gen_instance(const ScenarioConfig& cfg, int index, const DronePhysicsParams& params) {
  cfg.validate();
  Instance inst;
  inst.name = "s" + std::to_string(cfg.scenario) + "-n" + std::to_string(cfg.n) + "-i" + std::to_string(index);
  inst.depot = {cfg.region_side / 2, cfg.region_side / 2};
  inst.truck_speed = cfg.truck_speed_kmh / 3.6;
  inst.clearance = params.ras_clearance();
  const auto idx = static_cast<std::uint64_t>(index);
  if (cfg.scenario == 2) inst.ras = gen_ras(cfg, derive_seed(cfg.seed, idx, 2), inst.clearance);
  const AvoidanceMap map(inst.ras, inst.clearance + 0.5, 0.0);
  std::mt19937_64 rng(derive_seed(cfg.seed, idx, 1));
  const long limit = 1000L * cfg.n;
  long rejected = 0;
  while (inst.n() < cfg.n) {
    const Point2 p{uniform(rng, 0.0, cfg.region_side), uniform(rng, 0.0, cfg.region_side)};
    if (map.enclosed(p) || p == inst.depot) {
      if (++rejected > limit) throw SamplingError("free area too small for " + std::to_string(cfg.n) + " deliveries");
      continue;
    }
    inst.deliveries.push_back(p);
    inst.ids.push_back(inst.n());
  }
  return inst;
}

void RegionFile::validate() const {
  if (!road || road->size() == 0) throw InvalidArgument("region needs a road graph");
  if (buildings.empty()) throw InvalidArgument("region needs buildings");
  for (const auto& b : buildings) {
    if (!(b.volume > 0.0)) throw InvalidArgument("building volumes must be positive");
  }
}

RegionFile region_from_json(const std::string& text) {
  const json j = parse_json(text, "region");
  RegionFile r;
  try {
    const auto& b = j.at("bounds");
    r.bounds = {b.at("xmin").get<double>(), b.at("ymin").get<double>(), b.at("xmax").get<double>(), b.at("ymax").get<double>()};
    for (const auto& bj : j.at("buildings")) {
      Building bl;
      for (const auto& p : bj.at("footprint")) bl.footprint.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      bl.volume = bj.at("volume").get<double>();
      r.buildings.push_back(std::move(bl));
    }
    r.road = std::make_shared<RoadGraph>(road_from_json(j.at("road")));
    if (j.contains("ras")) {
      for (const auto& rj : j.at("ras")) r.ras.push_back(ras_from_json(rj));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("region: ") + e.what());
  }
  r.validate();
  return r;
}

std::string region_to_json(const RegionFile& r) {
  json buildings = json::array();
  for (const auto& b : r.buildings) {
    json fp = json::array();
    for (const auto& p : b.footprint.vertices) fp.push_back({p.x, p.y});
    buildings.push_back({{"footprint", fp}, {"volume", b.volume}});
  }
  json ras = json::array();
  for (const auto& q : r.ras) ras.push_back(ras_to_json(q));
  const json j = {{"bounds", {{"xmin", r.bounds.xmin}, {"ymin", r.bounds.ymin}, {"xmax", r.bounds.xmax}, {"ymax", r.bounds.ymax}}},
                  {"buildings", buildings}, {"road", road_to_json(*r.road)}, {"ras", ras}};
  return j.dump();
}

RegionFile synthetic_region(std::uint64_t seed, double side, double block) {
  if (!(block > 60.0) || !(side >= 2 * block)) throw InvalidArgument("region side must span at least two blocks of > 60 m");
  std::mt19937_64 rng(seed);
  const int lines = static_cast<int>(std::floor(side / block)) + 1;
  std::vector<Point2> nodes;
  for (int r = 0; r < lines; ++r) {
    for (int c = 0; c < lines; ++c) nodes.push_back({c * block, r * block});
  }
  auto id = [&](int r, int c) { return r * lines + c; };
  std::vector<RoadEdge> edges;
  const double arterial = 50.0 / 3.6;
  const double local = 30.0 / 3.6;
  for (int r = 0; r < lines; ++r) {
    for (int c = 0; c < lines; ++c) {
      // Every fourth street is an arterial; lengths carry some curvature.
      if (c + 1 < lines) edges.push_back({id(r, c), id(r, c + 1), block * uniform(rng, 1.0, 1.1), r % 4 == 0 ? arterial : local, false});
      if (r + 1 < lines) edges.push_back({id(r, c), id(r + 1, c), block * uniform(rng, 1.0, 1.1), c % 4 == 0 ? arterial : local, false});
    }
  }
  RegionFile out;
  out.bounds = {0.0, 0.0, (lines - 1) * block, (lines - 1) * block};
  out.road = std::make_shared<RoadGraph>(std::move(nodes), std::move(edges));
  std::lognormal_distribution<double> height(std::log(12.0), 0.8);
  const double setback = 25.0;
  for (int r = 0; r + 1 < lines; ++r) {
    for (int c = 0; c + 1 < lines; ++c) {
      const double x0 = c * block + setback;
      const double y0 = r * block + setback;
      const double inner = block - 2 * setback;
      const int count = 1 + static_cast<int>(rng() % 4);
      const double cell = inner / count;
      for (int b = 0; b < count; ++b) {
        const double bx0 = x0 + b * cell + 3.0;
        const double bx1 = bx0 + cell - 6.0;
        const double by0 = y0 + uniform(rng, 0.0, inner * 0.3);
        const double by1 = by0 + inner * uniform(rng, 0.3, 0.7);
        const double h = std::clamp(height(rng), 4.0, 200.0);
        Building bl;
        bl.footprint.vertices = {{bx0, by0}, {bx1, by0}, {bx1, by1}, {bx0, by1}};
        bl.volume = (bx1 - bx0) * (by1 - by0) * h;
        out.buildings.push_back(bl);
        if (h > 60.0) {
          out.ras.push_back(Ras::box("tower" + std::to_string(out.ras.size()), bx0, by0, bx1, by1, h));
        }
      }
    }
  }
  return out;
}

std::vector<int> sample_buildings(const RegionFile& region, int n, std::uint64_t seed) {
  const int total = static_cast<int>(region.buildings.size());
  if (n > total) throw InvalidArgument("cannot sample " + std::to_string(n) + " of " + std::to_string(total) + " buildings");
  std::mt19937_64 rng(seed);
  std::vector<double> w;
  for (const auto& b : region.buildings) w.push_back(b.volume);
  std::vector<int> out;
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (double x : w) sum += x;
    const double u = uniform(rng, 0.0, sum);
    double acc = 0.0;
    int pick = -1;
    for (int i = 0; i < total; ++i) {
      if (w[static_cast<std::size_t>(i)] <= 0.0) continue;
      acc += w[static_cast<std::size_t>(i)];
      pick = i;
      if (u < acc) break;
    }
    out.push_back(pick);
    w[static_cast<std::size_t>(pick)] = 0.0;
  }
  return out;
}

Instance sample_case_study(const RegionFile& region, int n, std::uint64_t seed, const DronePhysicsParams& params) {
  region.validate();
  const auto picks = sample_buildings(region, n, seed);
  const RoadGraph& g = *region.road;
  Instance inst;
  inst.name = "case-" + std::to_string(seed);
  inst.mode = TravelMode::kRoad;
  inst.road = region.road;
  inst.ras = region.ras;
  inst.clearance = params.ras_clearance();
  const Point2 center{(region.bounds.xmin + region.bounds.xmax) / 2, (region.bounds.ymin + region.bounds.ymax) / 2};
  const int depot = g.nearest_node(center);
  inst.depot = g.nodes()[static_cast<std::size_t>(depot)];
  inst.anchors.push_back(depot);
  std::vector<char> used(g.size(), 0);
  used[static_cast<std::size_t>(depot)] = 1;
  const AvoidanceMap map(inst.ras, inst.clearance + 0.5, 0.0);
  for (int b : picks) {
    const Point2 c = region.buildings[static_cast<std::size_t>(b)].footprint.centroid();
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (used[v] != 0 || map.enclosed(g.nodes()[v])) continue;
      const double d = distance(c, g.nodes()[v]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(v);
      }
    }
    if (best < 0) throw SamplingError("road graph has too few free nodes for " + std::to_string(n) + " deliveries");
    used[static_cast<std::size_t>(best)] = 1;
    inst.anchors.push_back(best);
    inst.deliveries.push_back(g.nodes()[static_cast<std::size_t>(best)]);
    inst.ids.push_back(b);
  }
  return inst;
}

long count_ras_violations(const Trajectory& traj, const std::vector<Ras>& ras, long* airborne) {
  long bad = 0;
  long air = 0;
  for (const auto& s : traj.states) {
    if (!s.airborne) continue;
    ++air;
    for (const auto& q : ras) {
      if (point_in_ras(s.r, q, 0.0)) {
        ++bad;
        break;
      }
    }
  }
  if (airborne != nullptr) *airborne = air;
  return bad;
}

namespace {

InstanceResult run_one(int index, const ScenarioConfig& cfg, const InstanceSource& source,
                       const std::vector<DroneTimeEstimator>& estimators, const DronePhysicsParams& params,
                       const BatteryOptions& options, PhaseTiming& timing) {
  InstanceResult res;
  res.index = index;
  MethodResult truck;
  truck.method = "truck";
  Instance inst;
  std::vector<int> tour;
  try {
    inst = source(index);
    auto t0 = std::chrono::steady_clock::now();
    const PlanningContext ctx(inst, DroneTimeEstimator::straight_line());
    tour = initial_tour_two_opt(ctx, 0);
    timing.ordering += seconds_since(t0);
    Plan plan = truck_only_plan(ctx, tour);
    truck.estimated_duration = plan.total_duration;
    truck.duration = plan.total_duration;
    if (options.keep_plans) res.plans.push_back(std::move(plan));
  } catch (const Error& e) {
    truck.ok = false;
    truck.error = e.what();
  }
  res.methods.push_back(truck);
  for (const auto& est : estimators) {
    MethodResult mr;
    mr.method = est.name();
    if (!truck.ok) {
      mr.ok = false;
      mr.error = "instance unavailable";
      res.methods.push_back(mr);
      if (options.keep_plans) res.plans.emplace_back();
      continue;
    }
    Plan fin;
    try {
      auto t0 = std::chrono::steady_clock::now();
      const PlanningContext ctx(inst, est);
      const ImproveResult imp = improve(ctx, tour, cfg.improve_budget);
      timing.planning += seconds_since(t0);
      mr.estimated_duration = imp.plan.total_duration;
      t0 = std::chrono::steady_clock::now();
      FinalizeOptions fo;
      fo.energy_tiebreak = cfg.energy_tiebreak;
      fin = finalize_plan(inst, imp.plan, params, fo);
      timing.finalizing += seconds_since(t0);
      mr.duration = fin.total_duration;
      mr.dec = fin.total_dec;
      mr.drone_nodes = fin.drone_count();
      for (const auto& op : fin.operations) {
        if (!op.trajectory) continue;
        long air = 0;
        mr.ras_violations += count_ras_violations(*op.trajectory, inst.ras, &air);
        mr.airborne_states += air;
      }
    } catch (const Error& e) {
      mr.ok = false;
      mr.error = e.what();
    }
    if (options.keep_plans) res.plans.push_back(std::move(fin));
    res.methods.push_back(mr);
  }
  return res;
}

}  // namespace

ComparisonReport run_instances(const std::string& label, const ScenarioConfig& cfg, const InstanceSource& source,
                               const std::vector<DroneTimeEstimator>& estimators, const DronePhysicsParams& params,
                               const BatteryOptions& options) {
  params.validate();
  ComparisonReport rep;
  rep.label = label;
  rep.config = cfg;
  rep.methods.push_back("truck");
  for (const auto& e : estimators) {
    if (std::find(rep.methods.begin(), rep.methods.end(), e.name()) != rep.methods.end()) {
      throw InvalidArgument("duplicate method name " + e.name());
    }
    rep.methods.push_back(e.name());
  }
  const int count = cfg.instance_count;
  rep.instances.resize(static_cast<std::size_t>(count));
  const int workers = std::max(1, std::min(options.workers, count));
  std::vector<PhaseTiming> timings(static_cast<std::size_t>(workers));
  std::atomic<int> next{0};
  auto work = [&](int w) {
    for (int i = next++; i < count; i = next++) {
      rep.instances[static_cast<std::size_t>(i)] =
          run_one(i, cfg, source, estimators, params, options, timings[static_cast<std::size_t>(w)]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& t : timings) {
    rep.timing.ordering += t.ordering;
    rep.timing.planning += t.planning;
    rep.timing.finalizing += t.finalizing;
  }
  rep.comparisons = compare_methods(rep.methods, rep.instances);
  return rep;
}

ComparisonReport run_battery(const ScenarioConfig& cfg, const std::vector<DroneTimeEstimator>& estimators,
                             const DronePhysicsParams& params, const BatteryOptions& options) {
  cfg.validate();
  const InstanceSource source = [&](int i) { return gen_instance(cfg, i, params); };
  return run_instances(cfg.scenario == 1 ? "I" : "II", cfg, source, estimators, params, options);
}

std::vector<Comparison> compare_methods(const std::vector<std::string>& methods,
                                        const std::vector<InstanceResult>& instances) {
  std::vector<Comparison> out;
  for (std::size_t b = 0; b < methods.size(); ++b) {
    for (std::size_t c = b + 1; c < methods.size(); ++c) {
      for (const std::string metric : {"duration", "dec", "drone_nodes"}) {
        if (metric != "duration" && methods[b] == "truck") continue;
        Comparison cmp;
        cmp.metric = metric;
        cmp.baseline = methods[b];
        cmp.challenger = methods[c];
        std::vector<double> red;
        double sb = 0.0;
        double sc = 0.0;
        for (const auto& inst : instances) {
          const auto& mb = inst.methods[b];
          const auto& mc = inst.methods[c];
          if (!mb.ok || !mc.ok) continue;
          auto value = [&](const MethodResult& m) {
            if (metric == "duration") return m.duration;
            if (metric == "dec") return m.dec;
            return static_cast<double>(m.drone_nodes);
          };
          const double vb = value(mb);
          const double vc = value(mc);
          if (!(vb > 0.0)) continue;
          red.push_back((vb - vc) / vb);
          sb += vb;
          sc += vc;
          if (vb > vc) ++cmp.wins;
        }
        cmp.count = static_cast<int>(red.size());
        if (cmp.count > 0) {
          double s = 0.0;
          for (double r : red) s += r;
          cmp.mean_reduction = s / cmp.count;
          cmp.mean_baseline = sb / cmp.count;
          cmp.mean_challenger = sc / cmp.count;
        }
        if (cmp.count > 1) {
          double ss = 0.0;
          for (double r : red) ss += (r - cmp.mean_reduction) * (r - cmp.mean_reduction);
          cmp.ci_half = 1.96 * std::sqrt(ss / (cmp.count - 1)) / std::sqrt(static_cast<double>(cmp.count));
        }
        out.push_back(cmp);
      }
    }
  }
  return out;
}

std::string results_csv(const std::vector<ComparisonReport>& reports) {
  std::ostringstream out;
  out << "label,scenario,n,speed_kmh,instance,method,ok,estimated_duration_s,duration_s,dec_j,drone_nodes,"
         "airborne_states,ras_violations,error\n";
  for (const auto& r : reports) {
    for (const auto& inst : r.instances) {
      for (const auto& m : inst.methods) {
        out << r.label << ',' << r.config.scenario << ',' << r.config.n << ',' << fmt(r.config.truck_speed_kmh) << ','
            << inst.index << ',' << m.method << ',' << (m.ok ? 1 : 0) << ',' << fmt(m.estimated_duration) << ','
            << fmt(m.duration) << ',' << fmt(m.dec) << ',' << m.drone_nodes << ',' << m.airborne_states << ','
            << m.ras_violations << ',' << csv_text(m.error) << '\n';
      }
    }
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<ComparisonReport>& reports) {
  std::ostringstream out;
  out << "label,scenario,n,speed_kmh,metric,baseline,challenger,count,wins,mean_reduction_pct,ci_low_pct,ci_high_pct,"
         "mean_baseline,mean_challenger\n";
  for (const auto& r : reports) {
    for (const auto& c : r.comparisons) {
      out << r.label << ',' << r.config.scenario << ',' << r.config.n << ',' << fmt(r.config.truck_speed_kmh) << ','
          << c.metric << ',' << c.baseline << ',' << c.challenger << ',' << c.count << ',' << c.wins << ','
          << fmt(100.0 * c.mean_reduction) << ',' << fmt(100.0 * (c.mean_reduction - c.ci_half)) << ','
          << fmt(100.0 * (c.mean_reduction + c.ci_half)) << ',' << fmt(c.mean_baseline) << ','
          << fmt(c.mean_challenger) << '\n';
    }
  }
  return out.str();
}

std::string reduction_svg(const std::vector<ComparisonReport>& reports, const std::string& metric,
                          const std::string& baseline, const std::string& challenger) {
  // n -> (speed, mean reduction %) sorted by speed.
  std::map<int, std::map<double, double>> series;
  for (const auto& r : reports) {
    for (const auto& c : r.comparisons) {
      if (c.metric == metric && c.baseline == baseline && c.challenger == challenger && c.count > 0) {
        series[r.config.n][r.config.truck_speed_kmh] = 100.0 * c.mean_reduction;
      }
    }
  }
  double xmin = 20.0, xmax = 80.0, ymin = 0.0, ymax = 10.0;
  for (const auto& [n, pts] : series) {
    for (const auto& [x, y] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const double w = 640, h = 400, left = 60, right = 130, top = 40, bottom = 50;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - ymin) / (ymax - ymin) * (h - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  std::ostringstream s;
  char buf[256];
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n", w, h, w, h);
  s << buf;
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << metric << " reduction of "
    << challenger << " vs " << baseline << " (%)</text>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left, py(ymin), w - right, py(ymin));
  s << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left, py(ymin), left, py(ymax));
  s << buf;
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">%.0f</text>\n", px(xv), h - bottom + 16, xv);
    s << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.1f</text>\n", left - 6, py(yv) + 4, yv);
    s << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">truck speed (km/h)</text>\n", (left + w - right) / 2, h - 12);
  s << buf;
  int ci = 0;
  for (const auto& [n, pts] : series) {
    const char* col = colors[ci++ % 7];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(x), py(y));
      s << buf;
    }
    s << "\"/>\n";
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", px(x), py(y), col);
      s << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" fill=\"%s\">n = %d</text>\n", w - right + 12, top + 18.0 * ci, col, n);
    s << buf;
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<std::string> emit_report(const std::vector<ComparisonReport>& reports, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  std::vector<std::string> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(out_dir) / name).string();
    write_file(path, text);
    written.push_back(path);
  };
  put("results.csv", results_csv(reports));
  put("aggregate.csv", aggregate_csv(reports));
  std::set<std::tuple<std::string, std::string, std::string>> pairs;
  for (const auto& r : reports) {
    for (const auto& c : r.comparisons) pairs.insert({c.metric, c.baseline, c.challenger});
  }
  for (const auto& [metric, base, chal] : pairs) {
    put("reduction_" + metric + "_" + chal + "_vs_" + base + ".svg", reduction_svg(reports, metric, base, chal));
  }
  return written;
}

}  // namespace dronetour
