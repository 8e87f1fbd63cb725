#include "pcuq/checkpoint.hpp"

#include "pcuq/csv.hpp"

#include <sstream>

namespace pcuq::io {

namespace {

class Writer {
 public:
  void word(const std::string& w) { os_ << w << '\n'; }
  void key(const std::string& k, const std::string& v) { os_ << k << ' ' << v << '\n'; }
  void number(const std::string& k, double v) { key(k, format_double(v)); }
  void matrix(const std::string& k, const Matrix& m) {
    os_ << k << ' ' << m.rows() << ' ' << m.cols();
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) os_ << ' ' << format_double(m(i, j));
    }
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string token() {
    std::string t;
    if (!(in_ >> t)) throw CheckpointError("corrupt checkpoint: unexpected end of file");
    return t;
  }
  void expect(const std::string& w) {
    const std::string t = token();
    if (t != w) throw CheckpointError("corrupt checkpoint: expected '" + w + "', found '" + t + "'");
  }
  double number() {
    const std::string t = token();
    const auto v = parse_double(t);
    if (!v) throw CheckpointError("corrupt checkpoint: '" + t + "' is not a number");
    return *v;
  }
  long long integer() {
    const double v = number();
    if (v != static_cast<double>(static_cast<long long>(v))) throw CheckpointError("corrupt checkpoint: expected an integer");
    return static_cast<long long>(v);
  }
  double number(const std::string& k) {
    expect(k);
    return number();
  }
  long long integer(const std::string& k) {
    expect(k);
    return integer();
  }
  std::string word(const std::string& k) {
    expect(k);
    return token();
  }
  Matrix matrix(const std::string& k) {
    expect(k);
    const long long r = integer();
    const long long c = integer();
    if (r < 0 || c < 0 || r * c > 100000000LL) throw CheckpointError("corrupt checkpoint: bad matrix shape");
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j) {
      for (Index i = 0; i < r; ++i) m(i, j) = number();
    }
    return m;
  }
  RowVector row(const std::string& k) {
    Matrix m = matrix(k);
    if (m.rows() != 1) throw CheckpointError("corrupt checkpoint: '" + k + "' must be a row vector");
    return m;
  }
  Vector column(const std::string& k) {
    Matrix m = matrix(k);
    if (m.cols() != 1 && m.size() != 0) throw CheckpointError("corrupt checkpoint: '" + k + "' must be a column vector");
    return m.size() == 0 ? Vector() : Vector(m);
  }
  bool at_end() {
    std::string t;
    return !(in_ >> t);
  }

 private:
  std::istringstream in_;
};

const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "linear"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "linear") return Activation::Linear;
  throw CheckpointError("corrupt checkpoint: unknown activation '" + s + "'");
}

void write_model(Writer& w, const NetworkModel& m) {
  const auto& c = m.config;
  w.key("head", to_string(m.head_kind()));
  w.number("input_dim", static_cast<double>(c.input_dim));
  w.number("spectral_c", c.spectral_c);
  w.key("spectral_norm", c.spectral_norm ? "1" : "0");
  w.number("rff_features", static_cast<double>(c.rff_features));
  w.number("rff_gamma", c.rff_gamma);
  w.number("seed", static_cast<double>(c.seed));
  w.number("layers", static_cast<double>(m.layers.size()));
  for (const auto& l : m.layers) {
    w.key("layer", std::to_string(l.spec.in_dim) + " " + std::to_string(l.spec.out_dim) + " " +
                       activation_name(l.spec.activation) + " " + (l.spec.residual ? "1" : "0") + " " +
                       format_double(l.spec.dropout_rate));
    w.matrix("weight", l.weight);
    w.matrix("bias", l.bias);
    w.matrix("u", l.spectral.u);
    w.matrix("v", l.spectral.v);
    w.number("multiplier", l.spectral.multiplier);
    w.number("estimate", l.spectral.last_estimate);
  }
  std::visit(
      [&](const auto& head) {
        using T = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<T, GPHead>) {
          w.matrix("rff_weight", head.projection.weight);
          w.matrix("rff_phase", head.projection.phase);
          w.number("rff_head_gamma", head.projection.gamma);
          w.matrix("beta", head.posterior.beta);
          w.matrix("covariance", head.posterior.covariance);
          w.number("noise_variance", head.posterior.noise_variance);
          w.key("fitted", head.posterior_fitted ? "1" : "0");
        } else if constexpr (std::is_same_v<T, NIGHead>) {
          w.matrix("nig_weight", head.weight);
          w.matrix("nig_bias", head.bias);
        } else {
          w.matrix("dense_weight", head.weight);
          w.number("dense_bias", head.bias);
        }
      },
      m.head);
}

NetworkModel read_model(Reader& r) {
  NetworkModel m;
  const HeadKind kind = parse_head_kind(r.word("head"));
  auto& c = m.config;
  c.head = kind;
  c.input_dim = r.integer("input_dim");
  c.spectral_c = r.number("spectral_c");
  c.spectral_norm = r.integer("spectral_norm") != 0;
  c.rff_features = r.integer("rff_features");
  c.rff_gamma = r.number("rff_gamma");
  c.seed = static_cast<std::uint64_t>(r.integer("seed"));
  const long long n = r.integer("layers");
  if (n < 0 || n > 10000) throw CheckpointError("corrupt checkpoint: bad layer count");
  c.hidden.clear();
  for (long long i = 0; i < n; ++i) {
    DenseLayer l;
    r.expect("layer");
    l.spec.in_dim = r.integer();
    l.spec.out_dim = r.integer();
    l.spec.activation = parse_activation(r.token());
    l.spec.residual = r.integer() != 0;
    l.spec.dropout_rate = r.number();
    l.weight = r.matrix("weight");
    l.bias = r.row("bias");
    l.spectral.u = r.column("u");
    l.spectral.v = r.column("v");
    l.spectral.multiplier = r.number("multiplier");
    l.spectral.last_estimate = r.number("estimate");
    if (l.weight.rows() != l.spec.in_dim || l.weight.cols() != l.spec.out_dim ||
        l.bias.size() != l.spec.out_dim) {
      throw CheckpointError("corrupt checkpoint: layer shape does not match its spec");
    }
    c.layers.push_back(l.spec);
    c.hidden.push_back(l.spec.out_dim);
    m.layers.push_back(std::move(l));
  }
  switch (kind) {
    case HeadKind::GaussianProcess: {
      GPHead h;
      h.projection.weight = r.matrix("rff_weight");
      h.projection.phase = r.row("rff_phase");
      h.projection.gamma = r.number("rff_head_gamma");
      h.posterior.beta = r.column("beta");
      h.posterior.covariance = r.matrix("covariance");
      h.posterior.noise_variance = r.number("noise_variance");
      h.posterior_fitted = r.integer("fitted") != 0;
      const Index d = h.projection.feature_count();
      if (h.posterior.beta.size() != d || h.posterior.covariance.rows() != d || h.posterior.covariance.cols() != d ||
          h.projection.phase.size() != d) {
        throw CheckpointError("corrupt checkpoint: GP head shapes disagree");
      }
      m.head = std::move(h);
      break;
    }
    case HeadKind::Evidential: {
      NIGHead h;
      h.weight = r.matrix("nig_weight");
      h.bias = r.row("nig_bias");
      if (h.weight.cols() != 4 || h.bias.size() != 4) throw CheckpointError("corrupt checkpoint: NIG head shapes");
      m.head = std::move(h);
      break;
    }
    case HeadKind::Dense: {
      DenseHead h;
      h.weight = r.column("dense_weight");
      h.bias = r.number("dense_bias");
      m.head = std::move(h);
      break;
    }
  }
  return m;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  Writer w;
  w.key("pcuq-checkpoint", std::to_string(kCheckpointVersion));
  const auto& p = cp.predictor;
  w.key("family", training::to_string(p.family));
  w.number("mc_rate", p.mc_rate);
  w.number("mc_samples", p.mc_samples);
  w.number("mc_seed", static_cast<double>(p.mc_seed));
  w.number("config", static_cast<double>(cp.config.size()));
  for (const auto& [k, v] : cp.config) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.empty() || v.find_first_of(" \t\n") != std::string::npos) {
      throw std::invalid_argument("serialize_checkpoint: config entries must be non-empty single tokens");
    }
    w.key(k, v);
  }
  if (cp.normalization) {
    w.key("normalization", "1");
    w.matrix("mean", cp.normalization->mean);
    w.matrix("scale", cp.normalization->scale);
  } else {
    w.key("normalization", "0");
  }
  w.number("members", static_cast<double>(p.members.size()));
  for (const auto& m : p.members) write_model(w, m);
  w.word("end");
  return w.str();
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  Reader r(text);
  const std::string magic = r.token();
  if (magic != "pcuq-checkpoint") throw CheckpointError("corrupt checkpoint: missing header");
  const long long version = r.integer();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint cp;
  auto& p = cp.predictor;
  p.family = training::parse_family(r.word("family"));
  p.mc_rate = r.number("mc_rate");
  p.mc_samples = static_cast<int>(r.integer("mc_samples"));
  p.mc_seed = static_cast<std::uint64_t>(r.integer("mc_seed"));
  const long long nc = r.integer("config");
  for (long long i = 0; i < nc; ++i) {
    std::string k = r.token();
    cp.config[k] = r.token();
  }
  if (r.integer("normalization") != 0) {
    features::Normalization n;
    n.mean = r.row("mean");
    n.scale = r.row("scale");
    if (n.mean.size() != n.scale.size()) throw CheckpointError("corrupt checkpoint: normalization shapes differ");
    cp.normalization = n;
  }
  const long long members = r.integer("members");
  if (members < 1 || members > 100000) throw CheckpointError("corrupt checkpoint: bad member count");
  for (long long i = 0; i < members; ++i) p.members.push_back(read_model(r));
  r.expect("end");
  if (!r.at_end()) throw CheckpointError("corrupt checkpoint: trailing data after end marker");
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  write_text_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const CsvError& e) {
    throw CheckpointError(e.what());
  }
  return deserialize_checkpoint(text);
}

}  // namespace pcuq::io
