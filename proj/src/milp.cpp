#include "dronetour/milp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dronetour/error.hpp"

namespace dronetour {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Terms = std::vector<std::pair<int, double>>;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int MilpInstance::add_var(std::string name, VarKind kind, double lb, double ub, std::string symbol) {
  if (index_.count(name) != 0) throw InvalidArgument("duplicate variable " + name);
  const int id = static_cast<int>(vars_.size());
  index_.emplace(name, id);
  vars_.push_back({std::move(name), kind, lb, ub, std::move(symbol)});
  return id;
}

void MilpInstance::add_constraint(std::string name, std::string family, Terms terms, Sense sense, double rhs) {
  for (const auto& [id, c] : terms) {
    if (id < 0 || id >= static_cast<int>(vars_.size())) throw InvalidArgument("row " + name + " uses an undeclared variable");
    (void)c;
  }
  cons_.push_back({std::move(name), std::move(family), std::move(terms), sense, rhs});
}

std::optional<int> MilpInstance::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int MilpInstance::at(const std::string& name) const {
  auto id = find(name);
  if (!id) throw InvalidArgument("unknown variable " + name);
  return *id;
}

std::map<std::string, int> MilpInstance::constraint_census() const {
  std::map<std::string, int> out;
  for (const auto& c : cons_) ++out[c.family];
  return out;
}

std::map<std::string, int> MilpInstance::variable_census() const {
  std::map<std::string, int> out;
  for (const auto& v : vars_) ++out[v.symbol];
  return out;
}

namespace {

// Indices of the per-step variable families.
struct MajorVars {
  int b, bp, bm, d;
  int w[3], wa[3], wd[3];
  int winf, wl2, wmax, wla, wlb;
  std::vector<std::vector<int>> s;          // [alt][throttle]
  std::vector<std::vector<int>> f;          // [ras][face]
};

struct MinorVars {
  int r[3], v[2], a[2];
  int vzp, vzm;
  int va[2], vinf, vl2, vm, vd[2];
  int aa[2], ainf, al2, am, ad[2];
  int g;
};

const char* kAxis[3] = {"x", "y", "z"};

struct NormVars {
  int comp[2], abs[2], inf, l2, which, neg[2];
};

// Approximate 2D norm of a per-step vector through absolute-value, max and
// sign binaries.
void add_norm_2d(MilpInstance& m, const std::string& family, const std::string& tag, const NormVars& n,
                 double lambda, double big) {
  const std::string p = family + "_" + tag;
  m.add_constraint(p + "_def", family,
                   {{n.l2, 1.0}, {n.abs[0], -lambda}, {n.abs[1], -lambda}, {n.inf, -(1.0 - lambda)}}, Sense::kEq, 0.0);
  for (int i = 0; i < 2; ++i) {
    m.add_constraint(p + "_cap" + kAxis[i], family, {{n.abs[i], 1.0}, {n.inf, -1.0}}, Sense::kLe, 0.0);
  }
  m.add_constraint(p + "_xmax_lo", family, {{n.abs[0], 1.0}, {n.inf, -1.0}, {n.which, big}}, Sense::kGe, 0.0);
  m.add_constraint(p + "_xmax_hi", family, {{n.abs[0], 1.0}, {n.inf, -1.0}, {n.which, -big}}, Sense::kLe, 0.0);
  m.add_constraint(p + "_ymax_lo", family, {{n.abs[1], 1.0}, {n.inf, -1.0}, {n.which, -big}}, Sense::kGe, -big);
  m.add_constraint(p + "_ymax_hi", family, {{n.abs[1], 1.0}, {n.inf, -1.0}, {n.which, big}}, Sense::kLe, big);
  for (int i = 0; i < 2; ++i) {
    const std::string a = kAxis[i];
    m.add_constraint(p + "_pos" + a, family, {{n.comp[i], 1.0}, {n.abs[i], -1.0}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_neg" + a, family, {{n.comp[i], -1.0}, {n.abs[i], -1.0}}, Sense::kLe, 0.0);
  }
  for (int i = 0; i < 2; ++i) {
    const std::string a = kAxis[i];
    m.add_constraint(p + "_eqp_lo" + a, family, {{n.abs[i], 1.0}, {n.comp[i], -1.0}, {n.neg[i], big}}, Sense::kGe, 0.0);
    m.add_constraint(p + "_eqp_hi" + a, family, {{n.abs[i], 1.0}, {n.comp[i], -1.0}, {n.neg[i], -big}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_eqn_lo" + a, family, {{n.abs[i], 1.0}, {n.comp[i], 1.0}, {n.neg[i], -big}}, Sense::kGe, -big);
    m.add_constraint(p + "_eqn_hi" + a, family, {{n.abs[i], 1.0}, {n.comp[i], 1.0}, {n.neg[i], big}}, Sense::kLe, big);
  }
}

void add_abs_pair(MilpInstance& m, const std::string& family, const std::string& p, int comp, int abs, int neg,
                  double big) {
  m.add_constraint(p + "_pos", family, {{comp, 1.0}, {abs, -1.0}}, Sense::kLe, 0.0);
  m.add_constraint(p + "_neg", family, {{comp, -1.0}, {abs, -1.0}}, Sense::kLe, 0.0);
  m.add_constraint(p + "_eqp_lo", family, {{abs, 1.0}, {comp, -1.0}, {neg, big}}, Sense::kGe, 0.0);
  m.add_constraint(p + "_eqp_hi", family, {{abs, 1.0}, {comp, -1.0}, {neg, -big}}, Sense::kLe, 0.0);
  m.add_constraint(p + "_eqn_lo", family, {{abs, 1.0}, {comp, 1.0}, {neg, -big}}, Sense::kGe, -big);
  m.add_constraint(p + "_eqn_hi", family, {{abs, 1.0}, {comp, 1.0}, {neg, big}}, Sense::kLe, big);
}

// Nearest-band speed cell [lo_j, hi_j] for throttle band j.
std::pair<double, double> band_cell(const std::vector<double>& theta, std::size_t j, double big) {
  const double lo = j == 0 ? 0.0 : 0.5 * (theta[j - 1] + theta[j]);
  const double hi = j + 1 == theta.size() ? big : 0.5 * (theta[j] + theta[j + 1]);
  return {lo, hi};
}

}  // namespace

MilpInstance build_trajectory_milp(const FlightSpec& spec, const DronePhysicsParams& params, const MilpMode& mode,
                                   std::optional<double> reference_duration) {
  params.validate();
  const int T = params.t_major;
  const int nf = params.n_f;
  const int NT = T * nf;
  const double dt = params.dt_minor;
  const double big = params.big_m;
  if (reference_duration && static_cast<double>(NT) * dt < 1.5 * *reference_duration) {
    throw HorizonTooShort("horizon of " + std::to_string(NT * dt) + " s does not cover 1.5 x " +
                          std::to_string(*reference_duration) + " s");
  }
  const auto* truck = std::get_if<TimedTruckPath>(&spec.end);
  const bool coordinated = truck != nullptr;
  Point3 end_point;
  if (coordinated) {
    end_point = {truck->final_point().x, truck->final_point().y, params.truck_bed_alt};
  } else {
    end_point = std::get<Point3>(spec.end);
  }
  const auto& H = params.altitude_band_limits;
  const auto& theta = params.throttle_band_speeds;
  const std::size_t L = H.size();
  const std::size_t V = theta.size();

  MilpInstance m;
  m.major_steps = T;
  m.minor_per_major = nf;
  m.coordinated = coordinated;
  m.mode = mode;

  const auto B = VarKind::kBinary;
  const auto C = VarKind::kContinuous;
  std::vector<MajorVars> mj(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) {
    auto& x = mj[static_cast<std::size_t>(k)];
    const std::string s = "_" + std::to_string(k);
    x.b = m.add_var("b" + s, B, 0, 1, "b");
    x.bp = m.add_var("bp" + s, B, 0, 1, "b+");
    x.bm = m.add_var("bm" + s, B, 0, 1, "b-");
    x.d = m.add_var("d" + s, B, 0, 1, "d");
    for (int i = 0; i < 3; ++i) {
      const std::string a = kAxis[i];
      x.w[i] = m.add_var("w_" + a + s, C, -kInf, kInf, "w");
      x.wa[i] = m.add_var("wa_" + a + s, C, 0, kInf, "w^A");
      x.wd[i] = m.add_var("wd_" + a + s, B, 0, 1, "w^D");
    }
    x.winf = m.add_var("winf" + s, C, 0, kInf, "w^inf");
    x.wl2 = m.add_var("wl2" + s, C, 0, kInf, "w^L2");
    x.wmax = m.add_var("wmax" + s, C, 0, kInf, "w^M");
    x.wla = m.add_var("wla" + s, B, 0, 1, "w^LA");
    x.wlb = m.add_var("wlb" + s, B, 0, 1, "w^LB");
    x.s.assign(L, std::vector<int>(V));
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < V; ++j) {
        x.s[i][j] = m.add_var("s_" + std::to_string(i) + "_" + std::to_string(j) + s, B, 0, 1, "s");
      }
    }
    x.f.resize(spec.ras.size());
    for (std::size_t q = 0; q < spec.ras.size(); ++q) {
      for (std::size_t n = 0; n < spec.ras[q].halfspaces().size(); ++n) {
        x.f[q].push_back(m.add_var("f_" + std::to_string(q) + "_" + std::to_string(n) + s, B, 0, 1, "f"));
      }
    }
  }
  std::vector<MinorVars> mn(static_cast<std::size_t>(NT));
  for (int t = 0; t < NT; ++t) {
    auto& x = mn[static_cast<std::size_t>(t)];
    const std::string s = "_" + std::to_string(t);
    for (int i = 0; i < 3; ++i) x.r[i] = m.add_var(std::string("r_") + kAxis[i] + s, C, -kInf, kInf, "r");
    for (int i = 0; i < 2; ++i) {
      const std::string a = kAxis[i];
      x.v[i] = m.add_var("v_" + a + s, C, -kInf, kInf, "v");
      x.a[i] = m.add_var("a_" + a + s, C, -kInf, kInf, "a");
    }
    x.vzp = m.add_var("vzp" + s, C, 0, kInf, "v^z+");
    x.vzm = m.add_var("vzm" + s, C, 0, kInf, "v^z-");
    for (int i = 0; i < 2; ++i) {
      const std::string a = kAxis[i];
      x.va[i] = m.add_var("va_" + a + s, C, 0, kInf, "v^A");
      x.vd[i] = m.add_var("vd_" + a + s, B, 0, 1, "v^D");
      x.aa[i] = m.add_var("aa_" + a + s, C, 0, kInf, "a^A");
      x.ad[i] = m.add_var("ad_" + a + s, B, 0, 1, "a^D");
    }
    x.vinf = m.add_var("vinf" + s, C, 0, kInf, "v^inf");
    x.vl2 = m.add_var("vl2" + s, C, 0, kInf, "v^L2");
    x.vm = m.add_var("vm" + s, B, 0, 1, "v^M");
    x.ainf = m.add_var("ainf" + s, C, 0, kInf, "a^inf");
    x.al2 = m.add_var("al2" + s, C, 0, kInf, "a^L2");
    x.am = m.add_var("am" + s, B, 0, 1, "a^M");
    x.g = m.add_var("g" + s, C, 0, kInf, "g");
  }
  const bool min_time = mode.kind == MilpMode::Kind::kMinTime;
  const int top = min_time ? m.add_var("t_o", C, 0, kInf, "t_o") : m.add_var("g_total", C, 0, kInf, "g^T");
  m.set_objective({{top, 1.0}});

  auto bmaj = [&](int t) { return mj[static_cast<std::size_t>(t / nf)].b; };
  auto dmaj = [&](int t) { return mj[static_cast<std::size_t>(t / nf)].d; };
  auto smaj = [&](int t) -> const MajorVars& { return mj[static_cast<std::size_t>(t / nf)]; };
  auto name = [](const std::string& fam, int t, const std::string& extra = {}) {
    return fam + (extra.empty() ? "" : "_" + extra) + "_" + std::to_string(t);
  };

  // Operation duration.
  for (int k = 0; k < T; ++k) {
    const double coef = static_cast<double>(k * nf + nf) * dt;
    if (min_time) {
      m.add_constraint(name("duration_bound", k), "duration_bound", {{mj[static_cast<std::size_t>(k)].b, coef}, {top, -1.0}},
                       Sense::kLe, 0.0);
    } else {
      m.add_constraint(name("duration_cap", k), "duration_cap", {{mj[static_cast<std::size_t>(k)].b, coef}}, Sense::kLe,
                       mode.t_star);
    }
  }
  if (min_time && coordinated) {
    m.add_constraint("truck_duration", "truck_duration", {{top, 1.0}}, Sense::kGe, truck->arrival_time());
  }
  if (!min_time) {
    m.add_constraint("energy_total", "energy_total", {{top, 1.0}, {mn.back().g, -1.0}}, Sense::kEq, 0.0);
  }

  // Resting on the truck.
  if (coordinated) {
    for (int t = 0; t < NT; ++t) {
      const auto& x = mn[static_cast<std::size_t>(t)];
      const auto smp = truck->sample(t);
      const int b = bmaj(t);
      const double pt[2] = {smp.position.x, smp.position.y};
      const double vt[2] = {smp.velocity.x, smp.velocity.y};
      m.add_constraint(name("rest_z_lo", t), "rest_z", {{x.r[2], 1.0}, {b, big}}, Sense::kGe, params.truck_bed_alt);
      m.add_constraint(name("rest_z_hi", t), "rest_z", {{x.r[2], 1.0}, {b, -big}}, Sense::kLe, params.truck_bed_alt);
      for (int i = 0; i < 2; ++i) {
        const std::string a = kAxis[i];
        m.add_constraint(name("rest_r_lo", t, a), "rest_r", {{x.r[i], 1.0}, {b, big}}, Sense::kGe, pt[i]);
        m.add_constraint(name("rest_r_hi", t, a), "rest_r", {{x.r[i], 1.0}, {b, -big}}, Sense::kLe, pt[i]);
        m.add_constraint(name("rest_v_lo", t, a), "rest_v", {{x.v[i], 1.0}, {b, big}}, Sense::kGe, vt[i]);
        m.add_constraint(name("rest_v_hi", t, a), "rest_v", {{x.v[i], 1.0}, {b, -big}}, Sense::kLe, vt[i]);
      }
    }
  }

  // Horizontal kinematics.
  for (int t = 0; t + 1 < NT; ++t) {
    const auto& x = mn[static_cast<std::size_t>(t)];
    const auto& y = mn[static_cast<std::size_t>(t + 1)];
    for (int i = 0; i < 2; ++i) {
      const std::string a = kAxis[i];
      const Terms pos = {{y.r[i], 1.0}, {x.r[i], -1.0}, {x.v[i], -dt}, {x.a[i], -0.5 * dt * dt}};
      const Terms vel = {{y.v[i], 1.0}, {x.v[i], -1.0}, {x.a[i], -dt}};
      if (!coordinated) {
        m.add_constraint(name("kin_pos", t, a), "kin_pos", pos, Sense::kEq, 0.0);
        m.add_constraint(name("kin_vel", t, a), "kin_vel", vel, Sense::kEq, 0.0);
        continue;
      }
      const std::pair<const char*, int> gates[2] = {{"next", bmaj(t + 1)}, {"cur", bmaj(t)}};
      for (const auto& [tag, b] : gates) {
        const std::pair<std::string, const Terms*> rows[2] = {{"kin_pos", &pos}, {"kin_vel", &vel}};
        for (const auto& [fam, base] : rows) {
          Terms lo = *base;
          lo.push_back({b, -big});
          Terms hi = *base;
          hi.push_back({b, big});
          const std::string f = fam + "_" + tag;
          m.add_constraint(name(f + "_lo", t, a), f, lo, Sense::kGe, -big);
          m.add_constraint(name(f + "_hi", t, a), f, hi, Sense::kLe, big);
        }
      }
    }
  }

  // Single take-off and landing.
  for (int k = 0; k < T; ++k) {
    const auto& x = mj[static_cast<std::size_t>(k)];
    m.add_constraint(name("airborne_link", k), "airborne_link", {{x.b, 1.0}, {x.bp, -1.0}, {x.bm, -1.0}}, Sense::kEq, -1.0);
    if (k + 1 < T) {
      const auto& y = mj[static_cast<std::size_t>(k + 1)];
      m.add_constraint(name("takeoff_once", k), "takeoff_once", {{x.bp, 1.0}, {y.bp, -1.0}}, Sense::kLe, 0.0);
      m.add_constraint(name("landing_once", k), "landing_once", {{y.bm, 1.0}, {x.bm, -1.0}}, Sense::kLe, 0.0);
    }
  }

  // Delivery visit.
  const double P[3] = {spec.delivery.x, spec.delivery.y, spec.delivery.z};
  Terms once;
  for (int k = 0; k < T; ++k) {
    const auto& x = mj[static_cast<std::size_t>(k)];
    const auto& r = mn[static_cast<std::size_t>(k * nf)];
    for (int i = 0; i < 3; ++i) {
      m.add_constraint(name("delivery_offset", k, kAxis[i]), "delivery_offset", {{x.w[i], 1.0}, {r.r[i], -1.0}},
                       Sense::kEq, -P[i]);
    }
    m.add_constraint(name("delivery_radius", k), "delivery_radius", {{x.wl2, 1.0}, {x.d, big}}, Sense::kLe,
                     params.delivery_radius + big);
    once.push_back({x.d, 1.0});
  }
  m.add_constraint("delivery_once", "delivery_once", once, Sense::kEq, 1.0);

  // Altitude, start and end, vertical motion, speed and acceleration limits.
  for (int t = 0; t < NT; ++t) {
    const auto& x = mn[static_cast<std::size_t>(t)];
    const int b = bmaj(t);
    m.add_constraint(name("altitude_lo", t), "altitude_limits", {{x.r[2], 1.0}, {b, -params.h_lo}}, Sense::kGe, 0.0);
    m.add_constraint(name("altitude_hi", t), "altitude_limits",
                     {{x.r[2], 1.0}, {b, -(params.h_hi - params.truck_bed_alt)}}, Sense::kLe, params.truck_bed_alt);
    if (t > 0) {
      m.add_constraint(name("min_airborne_alt", t), "min_airborne_alt",
                       {{x.r[2], 1.0}, {b, -params.h_min_airborne}, {dmaj(t), big}}, Sense::kGe, 0.0);
    }
  }
  const double R0[3] = {spec.start.x, spec.start.y, spec.start.z};
  const double RT[3] = {end_point.x, end_point.y, end_point.z};
  for (int i = 0; i < 3; ++i) {
    m.add_constraint(std::string("start_") + kAxis[i], "start", {{mn.front().r[i], 1.0}}, Sense::kEq, R0[i]);
    m.add_constraint(std::string("end_") + kAxis[i], "end", {{mn.back().r[i], 1.0}}, Sense::kGe, RT[i]);
  }
  for (int t = 0; t < NT; ++t) {
    const auto& x = mn[static_cast<std::size_t>(t)];
    if (t + 1 < NT) {
      const auto& y = mn[static_cast<std::size_t>(t + 1)];
      m.add_constraint(name("climb_update", t), "climb_update",
                       {{y.r[2], 1.0}, {x.r[2], -1.0}, {x.vzp, -dt}, {x.vzm, dt}}, Sense::kEq, 0.0);
    }
    m.add_constraint(name("climb_limit", t), "climb_limit", {{x.vzp, 1.0}}, Sense::kLe, params.climb_max);
    m.add_constraint(name("descent_limit", t), "descent_limit", {{x.vzm, 1.0}}, Sense::kLe, params.descent_max);
    // Riding the truck, the drone moves at the truck's speed.
    if (coordinated) {
      m.add_constraint(name("speed_limit", t), "speed_limit", {{x.vl2, 1.0}}, Sense::kLe, params.v_max);
    } else {
      m.add_constraint(name("speed_limit", t), "speed_limit", {{x.vl2, 1.0}, {bmaj(t), -params.v_max}}, Sense::kLe, 0.0);
    }
    m.add_constraint(name("accel_limit", t), "accel_limit", {{x.al2, 1.0}, {bmaj(t), -params.a_max}}, Sense::kLe, 0.0);
  }

  // Energy and band selection.
  m.add_constraint("energy_start", "energy_start", {{mn.front().g, 1.0}}, Sense::kEq, 0.0);
  for (int t = 0; t < NT; ++t) {
    const auto& x = mn[static_cast<std::size_t>(t)];
    const auto& sx = smaj(t);
    const int b = bmaj(t);
    m.add_constraint(name("energy_limits", t), "energy_limits", {{x.g, 1.0}}, Sense::kLe, params.energy_budget());
    if (t + 1 < NT) {
      Terms row = {{mn[static_cast<std::size_t>(t + 1)].g, 1.0}, {x.g, -1.0}, {x.vzp, -dt * params.climb_surplus}};
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < V; ++j) row.push_back({sx.s[i][j], -dt * params.energy_rate[i][j]});
      }
      m.add_constraint(name("energy_update", t), "energy_update", row, Sense::kEq, 0.0);
    }
    Terms speed_lo = {{x.vl2, 1.0}, {b, -big}};
    Terms speed_hi = {{x.vl2, 1.0}, {b, big}};
    Terms alt_lo = {{x.r[2], 1.0}, {b, -big}};
    Terms alt_hi = {{x.r[2], 1.0}, {b, big}};
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < V; ++j) {
        const auto [lo, hi] = band_cell(theta, j, big);
        const int sv = sx.s[i][j];
        if (lo != 0.0) speed_lo.push_back({sv, -lo});
        speed_hi.push_back({sv, -hi});
        const double h_below = i == 0 ? 0.0 : H[i - 1];
        if (h_below != 0.0) alt_lo.push_back({sv, -h_below});
        alt_hi.push_back({sv, -H[i]});
      }
    }
    m.add_constraint(name("band_speed_lo", t), "band_speed", speed_lo, Sense::kGe, -big);
    m.add_constraint(name("band_speed_hi", t), "band_speed", speed_hi, Sense::kLe, big);
    m.add_constraint(name("band_altitude_lo", t), "band_altitude", alt_lo, Sense::kGe, -big);
    m.add_constraint(name("band_altitude_hi", t), "band_altitude", alt_hi, Sense::kLe, big);
  }
  for (int k = 0; k < T; ++k) {
    const auto& x = mj[static_cast<std::size_t>(k)];
    Terms row = {{x.b, -1.0}};
    for (const auto& r : x.s) {
      for (int sv : r) row.push_back({sv, 1.0});
    }
    m.add_constraint(name("band_select", k), "band_select", row, Sense::kEq, 0.0);
  }

  // Restricted airspace: on the safe side of at least one face.
  for (std::size_t q = 0; q < spec.ras.size(); ++q) {
    const auto& faces = spec.ras[q].halfspaces();
    for (int t = 0; t < NT; ++t) {
      const auto& x = mn[static_cast<std::size_t>(t)];
      for (std::size_t n = 0; n < faces.size(); ++n) {
        Terms row;
        for (int i = 0; i < 3; ++i) {
          if (faces[n].normal[static_cast<std::size_t>(i)] != 0.0) row.push_back({x.r[i], faces[n].normal[static_cast<std::size_t>(i)]});
        }
        row.push_back({smaj(t).f[q][n], -big});
        m.add_constraint(name("ras_face", t, std::to_string(q) + "_" + std::to_string(n)), "ras_face", row, Sense::kGe,
                         faces[n].rhs - big);
      }
    }
    for (int k = 0; k < T; ++k) {
      Terms row;
      for (int f : mj[static_cast<std::size_t>(k)].f[q]) row.push_back({f, 1.0});
      m.add_constraint(name("ras_outside", k, std::to_string(q)), "ras_outside", row, Sense::kGe, 1.0);
    }
  }

  // Norm linearizations.
  const double l2 = params.norm.lambda2;
  const double l3 = params.norm.lambda3;
  for (int t = 0; t < NT; ++t) {
    const auto& x = mn[static_cast<std::size_t>(t)];
    const std::string tag = std::to_string(t);
    add_norm_2d(m, "vnorm", tag, {{x.v[0], x.v[1]}, {x.va[0], x.va[1]}, x.vinf, x.vl2, x.vm, {x.vd[0], x.vd[1]}}, l2, big);
    add_norm_2d(m, "anorm", tag, {{x.a[0], x.a[1]}, {x.aa[0], x.aa[1]}, x.ainf, x.al2, x.am, {x.ad[0], x.ad[1]}}, l2, big);
  }
  for (int k = 0; k < T; ++k) {
    const auto& x = mj[static_cast<std::size_t>(k)];
    const std::string p = "wnorm_" + std::to_string(k);
    const std::string fam = "wnorm";
    m.add_constraint(p + "_def", fam,
                     {{x.wl2, 1.0}, {x.wa[0], -l3}, {x.wa[1], -l3}, {x.wa[2], -l3}, {x.winf, -(1.0 - l3)}}, Sense::kEq, 0.0);
    m.add_constraint(p + "_capm", fam, {{x.wmax, 1.0}, {x.winf, -1.0}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_capz", fam, {{x.wa[2], 1.0}, {x.winf, -1.0}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_mmax_lo", fam, {{x.wmax, 1.0}, {x.winf, -1.0}, {x.wlb, big}}, Sense::kGe, 0.0);
    m.add_constraint(p + "_mmax_hi", fam, {{x.wmax, 1.0}, {x.winf, -1.0}, {x.wlb, -big}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_zmax_lo", fam, {{x.wa[2], 1.0}, {x.winf, -1.0}, {x.wlb, -big}}, Sense::kGe, -big);
    m.add_constraint(p + "_zmax_hi", fam, {{x.wa[2], 1.0}, {x.winf, -1.0}, {x.wlb, big}}, Sense::kLe, big);
    m.add_constraint(p + "_capx", fam, {{x.wa[0], 1.0}, {x.wmax, -1.0}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_capy", fam, {{x.wa[1], 1.0}, {x.wmax, -1.0}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_xmax_lo", fam, {{x.wa[0], 1.0}, {x.wmax, -1.0}, {x.wla, big}}, Sense::kGe, 0.0);
    m.add_constraint(p + "_xmax_hi", fam, {{x.wa[0], 1.0}, {x.wmax, -1.0}, {x.wla, -big}}, Sense::kLe, 0.0);
    m.add_constraint(p + "_ymax_lo", fam, {{x.wa[1], 1.0}, {x.wmax, -1.0}, {x.wla, -big}}, Sense::kGe, -big);
    m.add_constraint(p + "_ymax_hi", fam, {{x.wa[1], 1.0}, {x.wmax, -1.0}, {x.wla, big}}, Sense::kLe, big);
    for (int i = 0; i < 3; ++i) add_abs_pair(m, fam, p + "_" + kAxis[i], x.w[i], x.wa[i], x.wd[i], big);
  }
  return m;
}

std::string export_milp(const MilpInstance& m) {
  const auto& vars = m.variables();
  std::ostringstream out;
  auto expr = [&](const Terms& terms) {
    std::string s;
    bool first = true;
    for (const auto& [id, c] : terms) {
      if (c < 0) {
        s += first ? "-" : " - ";
      } else if (!first) {
        s += " + ";
      }
      const double a = std::abs(c);
      if (a != 1.0) s += num(a) + " ";
      s += vars[static_cast<std::size_t>(id)].name;
      first = false;
    }
    return s;
  };
  out << "\\ truck-and-drone operation trajectory model\n";
  out << "Minimize\n obj: " << expr(m.objective()) << "\n";
  out << "Subject To\n";
  for (const auto& c : m.constraints()) {
    const char* op = c.sense == Sense::kLe ? "<=" : c.sense == Sense::kGe ? ">=" : "=";
    out << " " << c.name << ": " << expr(c.terms) << " " << op << " " << num(c.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : vars) {
    if (std::isinf(v.lb) && std::isinf(v.ub)) {
      out << " " << v.name << " free\n";
    } else if (std::isinf(v.ub)) {
      out << " " << v.name << " >= " << num(v.lb) << "\n";
    } else {
      out << " " << (std::isinf(v.lb) ? "-inf" : num(v.lb)) << " <= " << v.name << " <= " << num(v.ub) << "\n";
    }
  }
  bool any_binary = false;
  for (const auto& v : vars) {
    if (v.kind != VarKind::kBinary) continue;
    if (!any_binary) out << "Binaries\n";
    any_binary = true;
    out << " " << v.name << "\n";
  }
  out << "End\n";
  return out.str();
}

namespace {

enum class Section { kNone, kObjective, kRows, kBounds, kBinaries, kGenerals, kEnd };

struct Token {
  enum Kind { kName, kNumber, kOp, kColon } kind;
  std::string text;
  double value = 0.0;
};

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || std::string("_!\"#$%&()/,;?@`'{}|~").find(c) != std::string::npos; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '[' || c == ']' || is_name_start(c); }

std::vector<Token> tokenize(const std::string& line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\\') {
      break;
    } else if (c == ':') {
      out.push_back({Token::kColon, ":"});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      ++i;
      if (i < line.size() && (line[i] == '=' || line[i] == '<' || line[i] == '>')) op += line[i++];
      if (op == "=<" || op == "<") op = "<=";
      if (op == "=>" || op == ">") op = ">=";
      out.push_back({Token::kOp, op});
    } else if (c == '+' || c == '-') {
      out.push_back({Token::kOp, std::string(1, c)});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(line.substr(i), &used);
      } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad number");
      }
      out.push_back({Token::kNumber, line.substr(i, used), v});
      i += used;
    } else if (is_name_start(c)) {
      std::size_t j = i;
      while (j < line.size() && is_name_char(line[j])) ++j;
      std::string word = line.substr(i, j - i);
      std::string lower = word;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (lower == "inf" || lower == "infinity") {
        out.push_back({Token::kNumber, word, kInf});
      } else {
        out.push_back({Token::kName, word});
      }
      i = j;
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unexpected character '" + std::string(1, c) + "'");
    }
  }
  return out;
}

std::optional<Section> section_of(const std::string& raw) {
  std::string s;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (s == "minimize" || s == "minimise" || s == "min" || s == "maximize" || s == "maximise" || s == "max") return Section::kObjective;
  if (s == "subjectto" || s == "st" || s == "s.t." || s == "such that" || s == "suchthat") return Section::kRows;
  if (s == "bounds" || s == "bound") return Section::kBounds;
  if (s == "binaries" || s == "binary" || s == "bin") return Section::kBinaries;
  if (s == "generals" || s == "general" || s == "gen") return Section::kGenerals;
  if (s == "end") return Section::kEnd;
  return std::nullopt;
}

struct LpReader {
  MilpInstance m;
  std::map<std::string, std::pair<double, double>> bounds;
  std::vector<std::string> binaries;
  std::vector<std::string> bound_order;  // first mention in the Bounds section

  int var(const std::string& name) {
    if (auto id = m.find(name)) return *id;
    return m.add_var(name, VarKind::kContinuous, 0.0, kInf);
  }

  // Linear expression from tokens[pos...] until an operator other than +/-.
  Terms expression(const std::vector<Token>& tk, std::size_t& pos, int lineno) {
    Terms terms;
    while (pos < tk.size()) {
      double sign = 1.0;
      bool any = false;
      while (pos < tk.size() && tk[pos].kind == Token::kOp && (tk[pos].text == "+" || tk[pos].text == "-")) {
        if (tk[pos].text == "-") sign = -sign;
        ++pos;
        any = true;
      }
      if (pos >= tk.size()) throw ParseError("line " + std::to_string(lineno) + ": dangling sign");
      if (tk[pos].kind == Token::kOp) {
        if (any) throw ParseError("line " + std::to_string(lineno) + ": sign before relation");
        break;
      }
      double coef = 1.0;
      if (tk[pos].kind == Token::kNumber) {
        if (pos + 1 >= tk.size() || tk[pos + 1].kind != Token::kName) break;  // constant: right-hand side
        coef = tk[pos].value;
        ++pos;
      }
      if (tk[pos].kind != Token::kName) throw ParseError("line " + std::to_string(lineno) + ": expected a variable");
      terms.push_back({var(tk[pos].text), sign * coef});
      ++pos;
    }
    return terms;
  }
};

}  // namespace

MilpInstance parse_lp(const std::string& text) {
  LpReader rd;
  Section section = Section::kNone;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<Token> pending;
  int pending_line = 0;
  bool saw_objective = false;
  int row_counter = 0;

  auto flush_row = [&](bool final_flush) {
    if (pending.empty()) return;
    std::size_t pos = 0;
    std::string label;
    if (pending.size() >= 2 && pending[0].kind == Token::kName && pending[1].kind == Token::kColon) {
      label = pending[0].text;
      pos = 2;
    }
    // Need a relation followed by a right-hand side before the row is done.
    std::size_t rel = pos;
    while (rel < pending.size() && !(pending[rel].kind == Token::kOp && pending[rel].text != "+" && pending[rel].text != "-")) ++rel;
    if (rel + 1 >= pending.size()) {
      if (final_flush) throw ParseError("line " + std::to_string(pending_line) + ": incomplete constraint");
      return;
    }
    Terms terms = rd.expression(pending, pos, pending_line);
    if (pos != rel) throw ParseError("line " + std::to_string(pending_line) + ": malformed constraint");
    const std::string op = pending[rel].text;
    std::size_t r = rel + 1;
    double sign = 1.0;
    while (r < pending.size() && pending[r].kind == Token::kOp && (pending[r].text == "+" || pending[r].text == "-")) {
      if (pending[r].text == "-") sign = -sign;
      ++r;
    }
    if (r >= pending.size() || pending[r].kind != Token::kNumber) {
      if (final_flush) throw ParseError("line " + std::to_string(pending_line) + ": missing right-hand side");
      return;
    }
    if (r + 1 != pending.size()) throw ParseError("line " + std::to_string(pending_line) + ": trailing tokens after constraint");
    const Sense sense = op == "<=" ? Sense::kLe : op == ">=" ? Sense::kGe : Sense::kEq;
    if (label.empty()) label = "R" + std::to_string(++row_counter);
    rd.m.add_constraint(label, "", std::move(terms), sense, sign * pending[r].value);
    pending.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (auto s = section_of(line)) {
      if (section == Section::kRows) flush_row(true);
      section = *s;
      if (section == Section::kEnd) break;
      continue;
    }
    auto tk = tokenize(line, lineno);
    if (tk.empty()) continue;
    switch (section) {
      case Section::kNone:
      case Section::kEnd:
        throw ParseError("line " + std::to_string(lineno) + ": content outside any section");
      case Section::kObjective: {
        std::size_t pos = 0;
        if (tk.size() >= 2 && tk[0].kind == Token::kName && tk[1].kind == Token::kColon) pos = 2;
        Terms t = rd.expression(tk, pos, lineno);
        if (pos != tk.size()) throw ParseError("line " + std::to_string(lineno) + ": malformed objective");
        Terms obj = rd.m.objective();
        obj.insert(obj.end(), t.begin(), t.end());
        rd.m.set_objective(obj);
        saw_objective = true;
        break;
      }
      case Section::kRows: {
        if (tk.size() >= 2 && tk[0].kind == Token::kName && tk[1].kind == Token::kColon) flush_row(true);
        if (pending.empty()) pending_line = lineno;
        pending.insert(pending.end(), tk.begin(), tk.end());
        flush_row(false);
        break;
      }
      case Section::kBounds: {
        auto signed_number = [&](std::size_t& p) {
          double sign = 1.0;
          while (p < tk.size() && tk[p].kind == Token::kOp && (tk[p].text == "+" || tk[p].text == "-")) {
            if (tk[p].text == "-") sign = -sign;
            ++p;
          }
          if (p >= tk.size() || tk[p].kind != Token::kNumber) throw ParseError("line " + std::to_string(lineno) + ": expected a bound");
          return sign * tk[p++].value;
        };
        std::size_t p = 0;
        if (tk.size() == 2 && tk[0].kind == Token::kName && tk[1].kind == Token::kName) {
          std::string w = tk[1].text;
          std::transform(w.begin(), w.end(), w.begin(), [](unsigned char ch) { return std::tolower(ch); });
          if (w != "free") throw ParseError("line " + std::to_string(lineno) + ": unknown bound keyword " + tk[1].text);
          rd.var(tk[0].text);
          rd.bound_order.push_back(tk[0].text);
          rd.bounds[tk[0].text] = {-kInf, kInf};
          break;
        }
        if (tk[0].kind == Token::kName) {
          const std::string v = tk[0].text;
          rd.var(v);
          rd.bound_order.push_back(v);
          if (tk.size() < 3 || tk[1].kind != Token::kOp) throw ParseError("line " + std::to_string(lineno) + ": malformed bound");
          p = 2;
          const double val = signed_number(p);
          auto cur = rd.bounds.count(v) ? rd.bounds[v] : std::pair<double, double>{0.0, kInf};
          if (tk[1].text == "<=") cur.second = val;
          else if (tk[1].text == ">=") cur.first = val;
          else cur = {val, val};
          rd.bounds[v] = cur;
        } else {
          const double lo = signed_number(p);
          if (p + 1 >= tk.size() || tk[p].kind != Token::kOp || tk[p + 1].kind != Token::kName) {
            throw ParseError("line " + std::to_string(lineno) + ": malformed bound");
          }
          const std::string op = tk[p].text;
          const std::string v = tk[p + 1].text;
          rd.var(v);
          rd.bound_order.push_back(v);
          p += 2;
          auto cur = rd.bounds.count(v) ? rd.bounds[v] : std::pair<double, double>{0.0, kInf};
          if (op == "<=") cur.first = lo;
          else if (op == ">=") cur.second = lo;
          else cur = {lo, lo};
          if (p < tk.size()) {
            const std::string op2 = tk[p++].text;
            const double hi = signed_number(p);
            if (op2 == "<=") cur.second = hi;
            else cur.first = hi;
          }
          rd.bounds[v] = cur;
        }
        break;
      }
      case Section::kBinaries:
      case Section::kGenerals:
        for (const auto& t : tk) {
          if (t.kind != Token::kName) throw ParseError("line " + std::to_string(lineno) + ": expected variable names");
          rd.var(t.text);
          if (section == Section::kBinaries) rd.binaries.push_back(t.text);
        }
        break;
    }
  }
  if (section == Section::kRows) flush_row(true);
  if (!saw_objective) throw ParseError("missing objective section");
  if (section != Section::kEnd) throw ParseError("line " + std::to_string(lineno) + ": missing End");

  // Rebuild with final bounds and kinds. Columns follow the Bounds section,
  // which lists every variable in declaration order for exported files.
  MilpInstance out;
  const auto& vars = rd.m.variables();
  std::map<std::string, bool> is_bin;
  for (const auto& b : rd.binaries) is_bin[b] = true;
  std::vector<int> order;
  std::vector<char> placed(vars.size(), 0);
  for (const auto& name : rd.bound_order) {
    const int id = *rd.m.find(name);
    if (placed[static_cast<std::size_t>(id)] == 0) {
      placed[static_cast<std::size_t>(id)] = 1;
      order.push_back(id);
    }
  }
  for (std::size_t id = 0; id < vars.size(); ++id) {
    if (placed[id] == 0) order.push_back(static_cast<int>(id));
  }
  std::vector<int> remap(vars.size());
  for (const int id : order) {
    const auto& v = vars[static_cast<std::size_t>(id)];
    double lo = 0.0;
    double hi = kInf;
    const bool bin = is_bin.count(v.name) != 0;
    if (bin) hi = 1.0;
    if (auto it = rd.bounds.find(v.name); it != rd.bounds.end()) std::tie(lo, hi) = it->second;
    remap[static_cast<std::size_t>(id)] = out.add_var(v.name, bin ? VarKind::kBinary : VarKind::kContinuous, lo, hi);
  }
  auto moved = [&](Terms t) {
    for (auto& term : t) term.first = remap[static_cast<std::size_t>(term.first)];
    return t;
  };
  out.set_objective(moved(rd.m.objective()));
  for (const auto& c : rd.m.constraints()) out.add_constraint(c.name, c.family, moved(c.terms), c.sense, c.rhs);
  return out;
}

std::vector<double> assignment_from_trajectory(const MilpInstance& m, const FlightSpec& spec,
                                               const DronePhysicsParams& params, const Trajectory& traj) {
  const int T = m.major_steps;
  const int nf = m.minor_per_major;
  const int NT = T * nf;
  if (static_cast<int>(traj.states.size()) > NT) {
    throw HorizonTooShort("trajectory has " + std::to_string(traj.states.size()) + " states, model horizon is " +
                          std::to_string(NT));
  }
  const auto* truck = std::get_if<TimedTruckPath>(&spec.end);
  std::vector<TrajectoryState> st = traj.states;
  while (static_cast<int>(st.size()) < NT) {
    TrajectoryState s;
    const long k = static_cast<long>(st.size());
    s.t = static_cast<double>(k) * params.dt_minor;
    s.g = traj.total_energy;
    if (truck != nullptr) {
      const auto smp = truck->sample(k);
      s.r = {smp.position.x, smp.position.y, params.truck_bed_alt};
      s.v = smp.velocity;
    } else {
      s.r = std::get<Point3>(spec.end);
    }
    st.push_back(s);
  }
  std::vector<double> x(m.variables().size(), 0.0);
  auto set = [&](const std::string& name, double v) {
    if (auto id = m.find(name)) x[static_cast<std::size_t>(*id)] = v;
  };
  const double l2 = params.norm.lambda2;
  const double l3 = params.norm.lambda3;

  int first_air = -1;
  int last_air = -1;
  for (int t = 0; t < NT; ++t) {
    if (st[static_cast<std::size_t>(t)].airborne) {
      if (first_air < 0) first_air = t / nf;
      last_air = t / nf;
    }
  }
  for (int k = 0; k < T; ++k) {
    const std::string s = "_" + std::to_string(k);
    bool air = false;
    for (int t = k * nf; t < (k + 1) * nf; ++t) air = air || st[static_cast<std::size_t>(t)].airborne;
    set("b" + s, air ? 1 : 0);
    set("bp" + s, first_air >= 0 && k >= first_air ? 1 : 0);
    set("bm" + s, first_air < 0 || k <= last_air ? 1 : 0);
    const bool delivered = static_cast<int>(traj.delivery_step) / nf == k;
    set("d" + s, delivered ? 1 : 0);
    const auto& r = st[static_cast<std::size_t>(k * nf)];
    const double w[3] = {r.r.x - spec.delivery.x, r.r.y - spec.delivery.y, r.r.z - spec.delivery.z};
    double wa[3];
    for (int i = 0; i < 3; ++i) {
      wa[i] = std::abs(w[i]);
      set(std::string("w_") + kAxis[i] + s, w[i]);
      set(std::string("wa_") + kAxis[i] + s, wa[i]);
      set(std::string("wd_") + kAxis[i] + s, w[i] < 0 ? 1 : 0);
    }
    const double wmax = std::max(wa[0], wa[1]);
    const double winf = std::max(wmax, wa[2]);
    set("wmax" + s, wmax);
    set("winf" + s, winf);
    set("wla" + s, wa[1] > wa[0] ? 1 : 0);
    set("wlb" + s, wa[2] > wmax ? 1 : 0);
    set("wl2" + s, l3 * (wa[0] + wa[1] + wa[2]) + (1.0 - l3) * winf);
    if (r.airborne) set("s_" + std::to_string(r.alt_band) + "_" + std::to_string(r.throttle_band) + s, 1);
    for (std::size_t q = 0; q < spec.ras.size(); ++q) {
      const auto& faces = spec.ras[q].halfspaces();
      std::size_t best = 0;
      double best_val = -kInf;
      for (std::size_t n = 0; n < faces.size(); ++n) {
        // Safest face over the whole major step.
        double worst = kInf;
        for (int t = k * nf; t < (k + 1) * nf; ++t) worst = std::min(worst, faces[n].evaluate(st[static_cast<std::size_t>(t)].r) - faces[n].rhs);
        if (worst > best_val) {
          best_val = worst;
          best = n;
        }
      }
      set("f_" + std::to_string(q) + "_" + std::to_string(best) + s, 1);
    }
  }
  for (int t = 0; t < NT; ++t) {
    const auto& z = st[static_cast<std::size_t>(t)];
    const std::string s = "_" + std::to_string(t);
    set("r_x" + s, z.r.x);
    set("r_y" + s, z.r.y);
    set("r_z" + s, z.r.z);
    set("vzp" + s, std::max(z.vz, 0.0));
    set("vzm" + s, std::max(-z.vz, 0.0));
    set("g" + s, z.g);
    auto norm_family = [&](const std::string& p, const Point2& c) {
      const double ax = std::abs(c.x);
      const double ay = std::abs(c.y);
      set(p + "_x" + s, c.x);
      set(p + "_y" + s, c.y);
      set(p + "a_x" + s, ax);
      set(p + "a_y" + s, ay);
      set(p + "d_x" + s, c.x < 0 ? 1 : 0);
      set(p + "d_y" + s, c.y < 0 ? 1 : 0);
      set(p + "inf" + s, std::max(ax, ay));
      set(p + "m" + s, ay > ax ? 1 : 0);
      set(p + "l2" + s, l2 * (ax + ay) + (1.0 - l2) * std::max(ax, ay));
    };
    norm_family("v", z.v);
    norm_family("a", z.a);
  }
  if (m.mode.kind == MilpMode::Kind::kMinTime) {
    // The model bounds duration by the end of the last airborne major step.
    double t_o = traj.duration;
    if (last_air >= 0) t_o = std::max(t_o, static_cast<double>((last_air + 1) * nf) * params.dt_minor);
    if (truck != nullptr) t_o = std::max(t_o, truck->arrival_time());
    set("t_o", t_o);
  } else {
    set("g_total", st.back().g);
  }
  return x;
}

std::vector<Violation> check_assignment(const MilpInstance& m, const std::vector<double>& x, double tol) {
  std::vector<Violation> out;
  const auto& vars = m.variables();
  if (x.size() != vars.size()) throw InvalidArgument("assignment size does not match the model");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& v = vars[i];
    if (x[i] < v.lb - tol) out.push_back({v.name + " below lower bound", v.lb - x[i]});
    if (x[i] > v.ub + tol) out.push_back({v.name + " above upper bound", x[i] - v.ub});
    if (v.kind == VarKind::kBinary && std::abs(x[i] - std::round(x[i])) > tol) out.push_back({v.name + " not integral", std::abs(x[i] - std::round(x[i]))});
  }
  for (const auto& c : m.constraints()) {
    double lhs = 0.0;
    for (const auto& [id, a] : c.terms) lhs += a * x[static_cast<std::size_t>(id)];
    double excess = 0.0;
    if (c.sense == Sense::kLe) excess = lhs - c.rhs;
    else if (c.sense == Sense::kGe) excess = c.rhs - lhs;
    else excess = std::abs(lhs - c.rhs);
    if (excess > tol) out.push_back({c.name, excess});
  }
  return out;
}

}  // namespace dronetour
