#pragma once

// Coupled bearing degradation model: Lundberg-Palmgren fatigue with an
// equivalent-damaged-volume correction, Archard wear with roughness
// feedback, Arrhenius lubricant oxidation with a lumped thermal balance,
// stochastic debris contamination, and a shared effective load rating.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcuq::physics {

struct PhysicsParams {
  double load_rating = 4000.0;            // C_load, N
  double fatigue_exponent = 3.0;          // p
  double edv_exponent = 4.0;              // q
  double edv_coupling = 1e-6;             // beta
  double edv_growth = 1e-5;               // phi
  double ball_diameter = 0.025;           // D_m, m
  double boltzmann = 8.617e-5;            // k_B, eV/K
  double oxidation_activation = 0.1;      // E_a, eV
  double viscosity_activation = 0.1;      // E_vis, eV
  double reference_temperature = 298.0;   // T_0, K
  double ambient_temperature = 298.0;     // T_a, K
  double viscosity_oxidation = 1e-5;      // alpha
  double base_viscosity = 1e-5;           // nu_0
  double oxidation_rate = 1e-4;           // k_o
  double max_oxidation = 1.0;             // O_max
  double archard = 1e-5;                  // A_v
  double abrasive_wear = 1e-6;            // A_a
  double hardness = 1.5e9;                // H_hard, Pa
  double roughness_from_wear = 1e-3;      // gamma_r
  double roughness_from_debris = 1e-5;    // delta_c
  double debris_generation = 1e6;         // rho
  double volume_saturation = 1e6;         // eta
  double roughness_saturation = 1e12;     // zeta
  double wear_weight = 0.5;               // gamma_w
  double thermal_weight = 0.5;            // zeta_L
  double thermal_mass = 3.77e6;           // m c_p
  double friction = 0.005;                // mu_f
  double heat_transfer = 5.0;             // h_A
  double oxidation_heat = 100.0;          // xi
  double debris_noise = 1e-4;             // sigma_c
  double debris_sensitivity = 1e-8;       // psi
  double elastic_modulus = 2.2e11;        // E*, Pa
  double contact_radius = 0.0125;         // R*, m

  static PhysicsParams pronostia() { return {}; }
  static PhysicsParams xjtu_sy();

  /// Throws std::invalid_argument when a physical constant is not > 0, a
  /// weight is negative, or p >= q.
  void validate() const;
};

struct PhysicsState {
  double t = 0.0;
  double fatigue = 0.0;      // D_F
  double edv = 0.0;          // V_d, m^3
  double wear = 0.0;         // D_W, m^3
  double roughness = 0.0;    // R
  double oxidation = 0.0;    // O
  double temperature = 298.0;  // T, K
  double debris = 0.0;       // C_debris
  double damage = 0.0;       // D_coupled

  static PhysicsState fresh(const PhysicsParams& params);
};

struct OperatingPoint {
  double load = 0.0;  // N
  double rpm = 0.0;
};

/// Load and speed as functions of time (s).
struct Schedule {
  std::function<OperatingPoint(double)> at;

  static Schedule constant(double load, double rpm);
};

inline double angular_speed(double rpm) { return 2.0 * std::numbers::pi * rpm / 60.0; }
inline double sliding_speed(double rpm, double ball_diameter) { return std::numbers::pi * ball_diameter * rpm / 60.0; }

template <typename Scalar>
Scalar hertzian_pressure(Scalar load, Scalar elastic_modulus, Scalar contact_radius) {
  if (!(elastic_modulus > Scalar(0)) || !(contact_radius > Scalar(0))) {
    throw std::invalid_argument("hertzian_pressure: E* and R* must be > 0");
  }
  if (load < Scalar(0)) throw std::invalid_argument("hertzian_pressure: load must be >= 0");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  using std::cbrt;
  return cbrt(Scalar(6) * load * elastic_modulus * elastic_modulus / (pi * pi * pi * contact_radius * contact_radius));
}

struct FatigueRates {
  double damage = 0.0;  // dD_F/dt
  double edv = 0.0;     // dV_d/dt
  double baseline = 0.0;  // k_f
};

FatigueRates fatigue_rates(double load, double c_eff, double rpm, const PhysicsParams& params);
double fatigue_rate(double load, double c_eff, double rpm, const PhysicsParams& params);

struct WearRates {
  double wear = 0.0;       // dD_W/dt
  double roughness = 0.0;  // dR/dt
  double modifier = 1.0;   // W_mod
};

double wear_modifier(double wear_volume, double roughness, const PhysicsParams& params);
WearRates wear_system_rates(double load, double sliding, double roughness, double debris, double wear_volume,
                            const PhysicsParams& params);

struct LubricationRates {
  double oxidation = 0.0;  // dO/dt
  double viscosity = 0.0;  // nu
  double thermal = 0.0;    // dD_O/dt, integrated as dT/dt
};

double viscosity(double oxidation, double temperature, const PhysicsParams& params);
LubricationRates lubrication_rates(double oxidation, double temperature, double load, double omega,
                                   const PhysicsParams& params);

/// Euler-Maruyama increment rho * dD_W/dt * dt + sigma_c * sqrt(dt) * z.
double debris_increment(double wear_rate, double dt, double gaussian_draw, const PhysicsParams& params);

double effective_load_rating(const PhysicsState& state, const PhysicsParams& params);

struct StateRates {
  double fatigue = 0.0;
  double edv = 0.0;
  double wear = 0.0;
  double roughness = 0.0;
  double oxidation = 0.0;
  double temperature = 0.0;
  double damage = 0.0;
  double c_eff = 0.0;
};

StateRates state_rates(const PhysicsState& state, double load, double rpm, const PhysicsParams& params);
double coupled_rate(const PhysicsState& state, double load, double rpm, const PhysicsParams& params);

struct Trajectory {
  std::vector<PhysicsState> states;
  std::vector<double> c_eff;
  std::vector<OperatingPoint> operating;

  std::size_t size() const { return states.size(); }
  /// Linear interpolation of the state at time t (clamped to the ends).
  PhysicsState state_at(double t) const;
};

struct SimulationOptions {
  bool stochastic = true;
  /// Stop once D_coupled reaches this value (the crossing sample is kept); <= 0 disables.
  double stop_damage = 0.0;
  bool has_initial = false;
  PhysicsState initial;
  /// Replaces the RHS of D_coupled; used to check the integrator on known rates.
  std::function<double(const PhysicsState&)> forced_damage_rate;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RK4 on the deterministic states with C_debris frozen inside each step,
/// then one Euler-Maruyama debris step (Lie splitting) and the state clamps.
Trajectory simulate_trajectory(const PhysicsParams& params, const Schedule& schedule, double t_end, double dt,
                               std::uint64_t seed, const SimulationOptions& options = {});

enum class LabelMode { Linear, Physics };

LabelMode parse_label_mode(const std::string& name);

/// Evenly spaced 0 -> 1 over `length` samples (length >= 2).
std::vector<double> linear_labels(std::size_t length);

/// (D - D_0) / (D_end - D_0) along the trajectory. Throws when D_end == D_0.
std::vector<double> physics_labels(const Trajectory& trajectory);

/// Physics labels interpolated at arbitrary times within the trajectory.
std::vector<double> physics_labels_at(const Trajectory& trajectory, const std::vector<double>& times);

}  // namespace pcuq::physics
