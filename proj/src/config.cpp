#include "pcuq/config.hpp"

#include "pcuq/csv.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <functional>
#include <sstream>

namespace pcuq::config {

namespace {

using PhysMember = double physics::PhysicsParams::*;

const std::vector<std::pair<std::string, PhysMember>>& physics_keys() {
  using P = physics::PhysicsParams;
  static const std::vector<std::pair<std::string, PhysMember>> keys = {
      {"load_rating", &P::load_rating},
      {"fatigue_exponent", &P::fatigue_exponent},
      {"edv_exponent", &P::edv_exponent},
      {"edv_coupling", &P::edv_coupling},
      {"edv_growth", &P::edv_growth},
      {"ball_diameter", &P::ball_diameter},
      {"boltzmann", &P::boltzmann},
      {"oxidation_activation", &P::oxidation_activation},
      {"viscosity_activation", &P::viscosity_activation},
      {"reference_temperature", &P::reference_temperature},
      {"ambient_temperature", &P::ambient_temperature},
      {"viscosity_oxidation", &P::viscosity_oxidation},
      {"base_viscosity", &P::base_viscosity},
      {"oxidation_rate", &P::oxidation_rate},
      {"max_oxidation", &P::max_oxidation},
      {"archard", &P::archard},
      {"abrasive_wear", &P::abrasive_wear},
      {"hardness", &P::hardness},
      {"roughness_from_wear", &P::roughness_from_wear},
      {"roughness_from_debris", &P::roughness_from_debris},
      {"debris_generation", &P::debris_generation},
      {"volume_saturation", &P::volume_saturation},
      {"roughness_saturation", &P::roughness_saturation},
      {"wear_weight", &P::wear_weight},
      {"thermal_weight", &P::thermal_weight},
      {"thermal_mass", &P::thermal_mass},
      {"friction", &P::friction},
      {"heat_transfer", &P::heat_transfer},
      {"oxidation_heat", &P::oxidation_heat},
      {"debris_noise", &P::debris_noise},
      {"debris_sensitivity", &P::debris_sensitivity},
      {"elastic_modulus", &P::elastic_modulus},
      {"contact_radius", &P::contact_radius},
  };
  return keys;
}

double to_double(const std::string& key, const std::string& value) {
  const auto v = io::parse_double(value);
  if (!v) throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  return *v;
}

long long to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != static_cast<double>(static_cast<long long>(v))) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  }
  return static_cast<long long>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + value + "'");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::format_double(v[i]);
  return s;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : io::split_line(text)) {
    if (cell.empty()) continue;
    const auto v = io::parse_double(cell);
    if (!v) throw ConfigError("config: list entry '" + cell + "' is not a number");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("config: empty list '" + text + "'");
  return out;
}

RunConfig defaults() { return RunConfig{}; }

void apply(RunConfig& c, const std::string& section, const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  auto& t = c.train;
  auto& n = c.train.network;
  if (section == "run") {
    if (key == "family") {
      c.family = training::parse_family(value);
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(to_int(full, value));
    } else if (key == "load") {
      c.operating.load = to_double(full, value);
    } else if (key == "rpm") {
      c.operating.rpm = to_double(full, value);
    } else if (key == "reference_dt") {
      c.reference_dt = to_double(full, value);
    } else if (key == "physics_set") {
      if (value == "pronostia") {
        c.physics = physics::PhysicsParams::pronostia();
      } else if (value == "xjtu") {
        c.physics = physics::PhysicsParams::xjtu_sy();
      } else {
        throw ConfigError("config: run.physics_set must be pronostia or xjtu");
      }
    } else {
      throw ConfigError("config: unknown key '" + full + "'");
    }
  } else if (section == "train") {
    if (key == "epochs") t.epochs = static_cast<int>(to_int(full, value));
    else if (key == "batch_size") t.batch_size = static_cast<int>(to_int(full, value));
    else if (key == "learning_rate") t.adam.learning_rate = to_double(full, value);
    else if (key == "beta1") t.adam.beta1 = to_double(full, value);
    else if (key == "beta2") t.adam.beta2 = to_double(full, value);
    else if (key == "epsilon") t.adam.epsilon = to_double(full, value);
    else if (key == "lambda") t.evidential_lambda = to_double(full, value);
    else if (key == "physics") t.physics = to_bool(full, value);
    else if (key == "collocation_points") t.collocation_points = static_cast<int>(to_int(full, value));
    else if (key == "collocation") {
      if (value == "random") t.collocation = training::Collocation::Random;
      else if (value == "grid") t.collocation = training::Collocation::Grid;
      else throw ConfigError("config: train.collocation must be random or grid");
    } else if (key == "physics_criterion") {
      if (value == "head") t.physics_criterion = training::PhysicsCriterion::HeadLoss;
      else if (value == "squared") t.physics_criterion = training::PhysicsCriterion::SquaredError;
      else throw ConfigError("config: train.physics_criterion must be head or squared");
    } else if (key == "spectral_iters") t.spectral_iters = static_cast<int>(to_int(full, value));
    else if (key == "spectral_final_iters") t.spectral_final_iters = static_cast<int>(to_int(full, value));
    else if (key == "ensemble_size") t.ensemble_size = static_cast<int>(to_int(full, value));
    else if (key == "mc_samples") t.mc_samples = static_cast<int>(to_int(full, value));
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "network") {
    if (key == "hidden") {
      n.hidden.clear();
      for (double w : parse_list(value)) n.hidden.push_back(static_cast<Index>(to_int(full, io::format_double(w))));
    } else if (key == "residual") n.residual = to_bool(full, value);
    else if (key == "dropout") n.dropout_rate = to_double(full, value);
    else if (key == "rff_features") n.rff_features = static_cast<Index>(to_int(full, value));
    else if (key == "rff_gamma") n.rff_gamma = to_double(full, value);
    else if (key == "spectral_c") n.spectral_c = to_double(full, value);
    else if (key == "spectral_norm") n.spectral_norm = to_bool(full, value);
    else if (key == "noise_variance") n.initial_noise_variance = to_double(full, value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "physics") {
    for (const auto& [name, member] : physics_keys()) {
      if (name == key) {
        c.physics.*member = to_double(full, value);
        return;
      }
    }
    throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "features") {
    auto& f = c.features;
    if (key == "sampling_rate") f.sampling_rate = to_double(full, value);
    else if (key == "f_min") f.f_min = to_double(full, value);
    else if (key == "f_max") f.f_max = to_double(full, value);
    else if (key == "n_scales") f.n_scales = static_cast<int>(to_int(full, value));
    else if (key == "window_len") f.window_len = static_cast<std::size_t>(to_int(full, value));
    else if (key == "stride") f.stride = static_cast<std::size_t>(to_int(full, value));
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "synthetic") {
    auto& s = c.synthetic;
    if (key == "train_bearings") s.train_bearings = static_cast<int>(to_int(full, value));
    else if (key == "test_bearings") s.test_bearings = static_cast<int>(to_int(full, value));
    else if (key == "ood_bearings") s.ood_bearings = static_cast<int>(to_int(full, value));
    else if (key == "samples_per_bearing") s.samples_per_bearing = static_cast<int>(to_int(full, value));
    else if (key == "dt") s.dt = to_double(full, value);
    else if (key == "noise") s.noise = to_double(full, value);
    else if (key == "labels") s.labels = physics::parse_label_mode(value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "sweep") {
    auto& g = c.sweep;
    if (key == "gamma") g.gamma = parse_list(value);
    else if (key == "lambda") g.lambda = parse_list(value);
    else if (key == "dropout") g.dropout = parse_list(value);
    else if (key == "ensemble") {
      g.ensemble.clear();
      for (double v : parse_list(value)) g.ensemble.push_back(static_cast<int>(to_int(full, io::format_double(v))));
    } else throw ConfigError("config: unknown key '" + full + "'");
  } else if (section == "attack") {
    if (key == "eps") c.attack_eps = parse_list(value);
    else throw ConfigError("config: unknown key '" + full + "'");
  } else {
    throw ConfigError("config: unknown section '" + section + "'");
  }
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c = defaults();
  // physics_set resets the physics block, so it is applied before other keys.
  if (auto run = tree.get_child_optional("run")) {
    if (auto set = run->get_optional<std::string>("physics_set")) apply(c, "run", "physics_set", *set);
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (section == "run" && key == "physics_set") continue;
      apply(c, section, key, value.data());
    }
  }
  c.train.seed = c.seed;
  c.train.network.head = training::head_for(c.family);
  c.physics.validate();
  c.train.validate();
  c.synthetic.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(io::read_text_file(path)); }

std::map<std::string, std::string> echo(const RunConfig& c) {
  std::map<std::string, std::string> m;
  const auto& t = c.train;
  const auto& n = t.network;
  auto d = [](double v) { return io::format_double(v); };
  m["run.family"] = training::to_string(c.family);
  m["run.seed"] = std::to_string(c.seed);
  m["run.load"] = d(c.operating.load);
  m["run.rpm"] = d(c.operating.rpm);
  m["run.reference_dt"] = d(c.reference_dt);
  m["train.epochs"] = std::to_string(t.epochs);
  m["train.batch_size"] = std::to_string(t.batch_size);
  m["train.learning_rate"] = d(t.adam.learning_rate);
  m["train.lambda"] = d(t.evidential_lambda);
  m["train.physics"] = t.physics ? "true" : "false";
  m["train.collocation"] = t.collocation == training::Collocation::Grid ? "grid" : "random";
  m["train.physics_criterion"] = t.physics_criterion == training::PhysicsCriterion::HeadLoss ? "head" : "squared";
  m["train.ensemble_size"] = std::to_string(t.ensemble_size);
  m["train.mc_samples"] = std::to_string(t.mc_samples);
  std::vector<double> hidden(n.hidden.begin(), n.hidden.end());
  m["network.hidden"] = join(hidden);
  m["network.residual"] = n.residual ? "true" : "false";
  m["network.dropout"] = d(n.dropout_rate);
  m["network.rff_features"] = std::to_string(n.rff_features);
  m["network.rff_gamma"] = d(n.rff_gamma);
  m["network.spectral_c"] = d(n.spectral_c);
  m["network.spectral_norm"] = n.spectral_norm ? "true" : "false";
  for (const auto& [name, member] : physics_keys()) m["physics." + name] = d(c.physics.*member);
  return m;
}

}  // namespace pcuq::config
