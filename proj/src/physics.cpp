#include "pcuq/physics.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <sstream>

namespace pcuq::physics {

PhysicsParams PhysicsParams::xjtu_sy() {
  PhysicsParams p;
  p.load_rating = 12000.0;
  p.ball_diameter = 0.035;
  p.contact_radius = 0.0175;
  p.archard = 1e-6;
  p.wear_weight = 0.1;
  p.thermal_weight = 0.1;
  return p;
}

void PhysicsParams::validate() const {
  const std::pair<const char*, double> positive[] = {
      {"load_rating", load_rating},
      {"fatigue_exponent", fatigue_exponent},
      {"edv_exponent", edv_exponent},
      {"ball_diameter", ball_diameter},
      {"boltzmann", boltzmann},
      {"reference_temperature", reference_temperature},
      {"ambient_temperature", ambient_temperature},
      {"base_viscosity", base_viscosity},
      {"max_oxidation", max_oxidation},
      {"hardness", hardness},
      {"thermal_mass", thermal_mass},
      {"elastic_modulus", elastic_modulus},
      {"contact_radius", contact_radius},
  };
  for (const auto& [name, value] : positive) {
    if (!(value > 0.0)) throw std::invalid_argument(std::string("PhysicsParams: ") + name + " must be > 0");
  }
  // Rate coefficients may be switched off (0) to isolate subsystems.
  const std::pair<const char*, double> non_negative[] = {
      {"edv_coupling", edv_coupling},
      {"edv_growth", edv_growth},
      {"oxidation_activation", oxidation_activation},
      {"viscosity_activation", viscosity_activation},
      {"viscosity_oxidation", viscosity_oxidation},
      {"oxidation_rate", oxidation_rate},
      {"archard", archard},
      {"abrasive_wear", abrasive_wear},
      {"roughness_from_wear", roughness_from_wear},
      {"roughness_from_debris", roughness_from_debris},
      {"debris_generation", debris_generation},
      {"volume_saturation", volume_saturation},
      {"roughness_saturation", roughness_saturation},
      {"wear_weight", wear_weight},
      {"thermal_weight", thermal_weight},
      {"friction", friction},
      {"heat_transfer", heat_transfer},
      {"oxidation_heat", oxidation_heat},
      {"debris_noise", debris_noise},
      {"debris_sensitivity", debris_sensitivity},
  };
  for (const auto& [name, value] : non_negative) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw std::invalid_argument(std::string("PhysicsParams: ") + name + " must be >= 0");
    }
  }
  if (!(fatigue_exponent < edv_exponent)) throw std::invalid_argument("PhysicsParams: p must be < q");
}

PhysicsState PhysicsState::fresh(const PhysicsParams& params) {
  PhysicsState s;
  s.temperature = params.ambient_temperature;
  return s;
}

Schedule Schedule::constant(double load, double rpm) {
  if (load < 0.0 || rpm < 0.0) throw std::invalid_argument("Schedule: load and rpm must be >= 0");
  return Schedule{[load, rpm](double) { return OperatingPoint{load, rpm}; }};
}

FatigueRates fatigue_rates(double load, double c_eff, double rpm, const PhysicsParams& params) {
  if (!(c_eff > 0.0)) throw std::invalid_argument("fatigue_rate: C_eff must be > 0");
  if (rpm < 0.0) throw std::invalid_argument("fatigue_rate: rpm must be >= 0");
  const double ratio = load / c_eff;
  FatigueRates r;
  r.baseline = std::pow(ratio, params.fatigue_exponent) * rpm / (60.0 * 1e6);
  r.edv = params.edv_growth * std::pow(ratio, params.edv_exponent) * rpm;
  r.damage = r.baseline + params.edv_coupling * r.edv;
  return r;
}

double fatigue_rate(double load, double c_eff, double rpm, const PhysicsParams& params) {
  return fatigue_rates(load, c_eff, rpm, params).damage;
}

double wear_modifier(double wear_volume, double roughness, const PhysicsParams& params) {
  return 1.0 / (1.0 + params.volume_saturation * wear_volume + params.roughness_saturation * roughness * roughness);
}

WearRates wear_system_rates(double load, double sliding, double roughness, double debris, double wear_volume,
                            const PhysicsParams& params) {
  if (!(params.hardness > 0.0)) throw std::invalid_argument("wear_system_rates: hardness must be > 0");
  WearRates r;
  r.wear = params.archard * load / params.hardness * sliding + params.abrasive_wear * roughness;
  r.roughness = params.roughness_from_wear * r.wear + params.roughness_from_debris * debris;
  r.modifier = wear_modifier(wear_volume, roughness, params);
  return r;
}

double viscosity(double oxidation, double temperature, const PhysicsParams& params) {
  if (!(temperature > 0.0)) throw std::invalid_argument("viscosity: temperature must be > 0");
  const double thermal = params.viscosity_activation / params.boltzmann *
                         (1.0 / temperature - 1.0 / params.reference_temperature);
  return params.base_viscosity * std::exp(-params.viscosity_oxidation * oxidation - thermal);
}

LubricationRates lubrication_rates(double oxidation, double temperature, double load, double omega,
                                   const PhysicsParams& params) {
  if (!(temperature > 0.0)) throw std::invalid_argument("lubrication_rates: temperature must be > 0");
  LubricationRates r;
  r.oxidation = params.oxidation_rate * (params.max_oxidation - oxidation) *
                std::exp(-params.oxidation_activation / (params.boltzmann * temperature));
  r.viscosity = viscosity(oxidation, temperature, params);
  r.thermal = (params.friction * load * omega - params.heat_transfer * (temperature - params.ambient_temperature) +
               params.oxidation_heat * r.oxidation) /
              params.thermal_mass;
  return r;
}

double debris_increment(double wear_rate, double dt, double gaussian_draw, const PhysicsParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("debris_increment: dt must be > 0");
  return params.debris_generation * wear_rate * dt + params.debris_noise * std::sqrt(dt) * gaussian_draw;
}

double effective_load_rating(const PhysicsState& state, const PhysicsParams& params) {
  const double life = viscosity(state.oxidation, state.temperature, params) / params.base_viscosity;
  const double mod = wear_modifier(state.wear, state.roughness, params);
  return params.load_rating * life * mod * std::exp(-params.debris_sensitivity * state.debris);
}

StateRates state_rates(const PhysicsState& state, double load, double rpm, const PhysicsParams& params) {
  StateRates r;
  r.c_eff = effective_load_rating(state, params);
  const auto fat = fatigue_rates(load, r.c_eff, rpm, params);
  const auto wear = wear_system_rates(load, sliding_speed(rpm, params.ball_diameter), state.roughness, state.debris,
                                      state.wear, params);
  const auto lub = lubrication_rates(state.oxidation, state.temperature, load, angular_speed(rpm), params);
  r.fatigue = fat.damage;
  r.edv = fat.edv;
  r.wear = wear.wear;
  r.roughness = wear.roughness;
  r.oxidation = lub.oxidation;
  r.temperature = lub.thermal;
  r.damage = fat.damage + params.wear_weight * wear.wear + params.thermal_weight * lub.thermal;
  return r;
}

double coupled_rate(const PhysicsState& state, double load, double rpm, const PhysicsParams& params) {
  return state_rates(state, load, rpm, params).damage;
}

PhysicsState Trajectory::state_at(double t) const {
  if (states.empty()) throw std::invalid_argument("Trajectory::state_at: empty trajectory");
  if (t <= states.front().t) return states.front();
  if (t >= states.back().t) return states.back();
  const auto it = std::upper_bound(states.begin(), states.end(), t,
                                   [](double v, const PhysicsState& s) { return v < s.t; });
  const PhysicsState& b = *it;
  const PhysicsState& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  auto mix = [w](double x, double y) { return x + w * (y - x); };
  PhysicsState s;
  s.t = t;
  s.fatigue = mix(a.fatigue, b.fatigue);
  s.edv = mix(a.edv, b.edv);
  s.wear = mix(a.wear, b.wear);
  s.roughness = mix(a.roughness, b.roughness);
  s.oxidation = mix(a.oxidation, b.oxidation);
  s.temperature = mix(a.temperature, b.temperature);
  s.debris = mix(a.debris, b.debris);
  s.damage = mix(a.damage, b.damage);
  return s;
}

namespace {

using Vec7 = std::array<double, 7>;

Vec7 pack(const PhysicsState& s) {
  return {s.fatigue, s.edv, s.wear, s.roughness, s.oxidation, s.temperature, s.damage};
}

PhysicsState unpack(const Vec7& y, double t, double debris) {
  PhysicsState s;
  s.t = t;
  s.fatigue = y[0];
  s.edv = y[1];
  s.wear = y[2];
  s.roughness = y[3];
  s.oxidation = y[4];
  s.temperature = y[5];
  s.damage = y[6];
  s.debris = debris;
  return s;
}

Vec7 axpy(const Vec7& y, double h, const Vec7& k) {
  Vec7 out;
  for (std::size_t i = 0; i < 7; ++i) out[i] = y[i] + h * k[i];
  return out;
}

void check_finite(const PhysicsState& s) {
  const std::pair<const char*, double> fields[] = {
      {"D_F", s.fatigue}, {"V_d", s.edv},         {"D_W", s.wear},         {"R", s.roughness},
      {"O", s.oxidation}, {"T", s.temperature},   {"C_debris", s.debris},  {"D_coupled", s.damage},
  };
  for (const auto& [name, value] : fields) {
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "simulate_trajectory: non-finite " << name << " at t=" << s.t;
      throw SimulationError(os.str());
    }
  }
  if (!(s.temperature > 0.0)) {
    std::ostringstream os;
    os << "simulate_trajectory: temperature dropped to " << s.temperature << " K at t=" << s.t;
    throw SimulationError(os.str());
  }
}

}  // namespace

Trajectory simulate_trajectory(const PhysicsParams& params, const Schedule& schedule, double t_end, double dt,
                               std::uint64_t seed, const SimulationOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_trajectory: dt must be > 0");
  if (!(t_end > 0.0)) throw std::invalid_argument("simulate_trajectory: t_end must be > 0");
  if (!schedule.at) throw std::invalid_argument("simulate_trajectory: schedule is undefined");
  params.validate();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  PhysicsState state = options.has_initial ? options.initial : PhysicsState::fresh(params);
  check_finite(state);

  auto rhs = [&](const Vec7& y, double t, double debris, double* wear_rate) {
    const PhysicsState s = unpack(y, t, debris);
    const OperatingPoint op = schedule.at(t);
    const StateRates r = state_rates(s, op.load, op.rpm, params);
    if (wear_rate != nullptr) *wear_rate = r.wear;
    const double damage = options.forced_damage_rate ? options.forced_damage_rate(s) : r.damage;
    return Vec7{r.fatigue, r.edv, r.wear, r.roughness, r.oxidation, r.temperature, damage};
  };

  Trajectory traj;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  traj.states.reserve(steps + 1);
  auto record = [&](const PhysicsState& s) {
    traj.states.push_back(s);
    traj.c_eff.push_back(effective_load_rating(s, params));
    traj.operating.push_back(schedule.at(s.t));
  };
  record(state);

  for (std::size_t i = 0; i < steps; ++i) {
    const double t0 = state.t;
    const double h = std::min(dt, t_end - t0);
    if (!(h > 0.0)) break;
    const double c = state.debris;
    const Vec7 y = pack(state);
    double wear_rate = 0.0;
    const Vec7 k1 = rhs(y, t0, c, &wear_rate);
    const Vec7 k2 = rhs(axpy(y, 0.5 * h, k1), t0 + 0.5 * h, c, nullptr);
    const Vec7 k3 = rhs(axpy(y, 0.5 * h, k2), t0 + 0.5 * h, c, nullptr);
    const Vec7 k4 = rhs(axpy(y, h, k3), t0 + h, c, nullptr);
    Vec7 next;
    for (std::size_t j = 0; j < 7; ++j) next[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

    const double z = options.stochastic ? normal(rng) : 0.0;
    double debris = c + (options.stochastic ? debris_increment(wear_rate, h, z, params)
                                            : params.debris_generation * wear_rate * h);

    // clamps
    for (std::size_t j = 0; j < 4; ++j) next[j] = std::max(next[j], 0.0);
    next[4] = std::clamp(next[4], 0.0, params.max_oxidation);
    debris = std::max(debris, 0.0);

    const double t1 = (i + 1 == steps) ? t_end : t0 + h;
    state = unpack(next, t1, debris);
    check_finite(state);
    record(state);
    if (options.stop_damage > 0.0 && state.damage >= options.stop_damage) break;
  }
  return traj;
}

LabelMode parse_label_mode(const std::string& name) {
  if (name == "linear") return LabelMode::Linear;
  if (name == "physics") return LabelMode::Physics;
  throw std::invalid_argument("unknown label mode '" + name + "' (expected linear or physics)");
}

std::vector<double> linear_labels(std::size_t length) {
  if (length < 2) throw std::invalid_argument("linear_labels: length must be >= 2");
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = static_cast<double>(i) / static_cast<double>(length - 1);
  out.back() = 1.0;
  return out;
}

std::vector<double> physics_labels(const Trajectory& trajectory) {
  if (trajectory.states.empty()) throw std::invalid_argument("physics_labels: empty trajectory");
  const double d0 = trajectory.states.front().damage;
  const double span = trajectory.states.back().damage - d0;
  if (!(span != 0.0)) throw std::invalid_argument("physics_labels: terminal D_coupled is zero");
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory.states) out.push_back((s.damage - d0) / span);
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

std::vector<double> physics_labels_at(const Trajectory& trajectory, const std::vector<double>& times) {
  if (trajectory.states.empty()) throw std::invalid_argument("physics_labels_at: empty trajectory");
  const double d0 = trajectory.states.front().damage;
  const double span = trajectory.states.back().damage - d0;
  if (!(span != 0.0)) throw std::invalid_argument("physics_labels_at: terminal D_coupled is zero");
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(std::clamp((trajectory.state_at(t).damage - d0) / span, 0.0, 1.0));
  return out;
}

}  // namespace pcuq::physics
