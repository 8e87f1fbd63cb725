#include "doctest.h"
#include "oracles.hpp"

#include "pcuq/checkpoint.hpp"
#include "pcuq/config.hpp"
#include "pcuq/csv.hpp"
#include "pcuq/metrics.hpp"
#include "pcuq/raw_io.hpp"
#include "pcuq/synthetic.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>

using namespace pcuq;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pcuq_io_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

io::RawRecord small_record() {
  std::mt19937_64 rng(3);
  io::RawRecord r;
  for (int s = 0; s < 3; ++s) {
    io::RawSnapshot snap;
    snap.horizontal = oracle::random_matrix(4, 1, rng).col(0);
    snap.vertical = oracle::random_matrix(4, 1, rng).col(0);
    snap.timestamp = 3600.0 * 9 + 10.0 * s + 0.25;
    snap.temperature = 300.0 + s;
    r.snapshots.push_back(snap);
  }
  return r;
}

synthetic::SyntheticConfig small_synthetic() {
  synthetic::SyntheticConfig c;
  c.train_bearings = 2;
  c.test_bearings = 1;
  c.ood_bearings = 1;
  c.samples_per_bearing = 40;
  return c;
}

}  // namespace

TEST_CASE("csv: number formatting round trips and parsing is strict") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0}) CHECK(*io::parse_double(io::format_double(v)) == v);
  CHECK(io::parse_double(" 2.5 ") == 2.5);
  CHECK(io::parse_double("+4") == 4.0);
  CHECK_FALSE(io::parse_double("abc"));
  CHECK_FALSE(io::parse_double("1.0x"));
  CHECK_FALSE(io::parse_double(""));
  CHECK_FALSE(io::parse_double("nan"));
}

TEST_CASE("csv: tables report line numbers for malformed rows") {
  const auto p = scratch("t.csv");
  write(p, "a,b\n1,2\n3,4\n");
  const io::Table t = io::read_table(p.string());
  CHECK(t.rows.size() == 2);
  CHECK(t.column_values("b")(1) == 4.0);
  CHECK(error_of([&] { (void)t.column("c"); }).find("'c'") != std::string::npos);

  write(p, "a,b\n1,2\n3\n");
  CHECK(error_of([&] { io::read_table(p.string()); }).find(":3:") != std::string::npos);
  write(p, "a,b\n1,2\n3,x\n");
  const std::string e = error_of([&] { io::read_table(p.string()); });
  CHECK(e.find(":3:") != std::string::npos);
  CHECK(e.find("'b'") != std::string::npos);
  CHECK_THROWS_AS(io::read_table(scratch("missing.csv").string()), io::CsvError);
}

TEST_CASE("raw csv: two snapshots parse, round trip, and malformations are rejected") {
  io::RawSchema schema;
  schema.rows_per_snapshot = 1;
  const auto p = scratch("raw.csv");
  write(p, "hour,minute,second,microsecond,horizontal_accel,vertical_accel\n9,39,39,65664,0.552,-0.146\n9,39,49,65664,0.1,0.2\n");
  const io::RawRecord two = io::load_raw_csv(p.string(), schema);
  CHECK(two.snapshots.size() == 2);
  CHECK(two.snapshots[1].timestamp - two.snapshots[0].timestamp == doctest::Approx(10.0));
  CHECK(two.temperature_substituted);
  CHECK(two.snapshots[0].temperature == 298.0);

  io::RawSchema with_t = schema;
  with_t.temperature = "temperature";
  CHECK(error_of([&] { io::load_raw_csv(p.string(), with_t); }).find("'temperature'") != std::string::npos);

  write(p, "hour,minute,second,microsecond,horizontal_accel,vertical_accel\n9,39,49,0,0.5,0.1\n9,39,39,0,0.1,0.2\n");
  CHECK_THROWS_AS(io::load_raw_csv(p.string(), schema), io::CsvError);
  write(p, "hour,minute,second,microsecond,horizontal_accel,vertical_accel\n9,39,39,0,abc,0.1\n");
  CHECK_THROWS_AS(io::load_raw_csv(p.string(), schema), io::CsvError);

  io::RawSchema four = with_t;
  four.rows_per_snapshot = 4;
  const io::RawRecord rec = small_record();
  io::write_raw_csv(p.string(), rec, four);
  const io::RawRecord back = io::load_raw_csv(p.string(), four);
  REQUIRE(back.snapshots.size() == rec.snapshots.size());
  for (std::size_t s = 0; s < rec.snapshots.size(); ++s) {
    CHECK(back.snapshots[s].horizontal == rec.snapshots[s].horizontal);
    CHECK(back.snapshots[s].vertical == rec.snapshots[s].vertical);
    CHECK(back.snapshots[s].timestamp == doctest::Approx(rec.snapshots[s].timestamp).epsilon(1e-12));
    CHECK(back.snapshots[s].temperature == rec.snapshots[s].temperature);
  }
  CHECK_FALSE(back.temperature_substituted);

  four.rows_per_snapshot = 5;
  CHECK(error_of([&] { io::load_raw_csv(p.string(), four); }).find("incomplete snapshot") != std::string::npos);
}

TEST_CASE("raw csv: temperature files join by nearest time") {
  const auto p = scratch("temp.csv");
  write(p, "hour,minute,second,microsecond,temperature\n9,0,0,0,20\n9,0,12,0,30\n9,0,30,0,40\n");
  const io::TemperatureSeries s = io::load_temperature_csv(p.string());
  CHECK(s.kelvin[0] == doctest::Approx(293.15));
  io::RawRecord r = small_record();
  r.temperature_substituted = true;
  for (auto& snap : r.snapshots) snap.timestamp -= 0.25;  // 0 s, 10 s, 20 s past 9:00
  io::join_temperatures(r, s);
  CHECK(r.snapshots[0].temperature == doctest::Approx(293.15));
  CHECK(r.snapshots[1].temperature == doctest::Approx(303.15));
  CHECK(r.snapshots[2].temperature == doctest::Approx(303.15));
  CHECK_FALSE(r.temperature_substituted);

  write(p, "hour,minute,second,microsecond\n9,0,0,0\n");
  CHECK(error_of([&] { io::load_temperature_csv(p.string()); }).find("'temperature'") != std::string::npos);
}

TEST_CASE("feature and report csv") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(5, 16, rng);
  const Vector y = Vector::LinSpaced(5, 0.0, 1.0);
  const std::vector<int> split = {0, 0, 1, 2, 2};
  const auto p = scratch("features.csv");
  io::write_feature_csv(p.string(), x, &y, &split);
  const io::FeatureTable t = io::read_feature_csv(p.string());
  CHECK(t.x == x);
  CHECK(t.y == y);
  CHECK(t.split == split);

  write(p, "a,b\n1,2\n");
  CHECK_THROWS_AS(io::read_feature_csv(p.string()), io::CsvError);

  const auto r = scratch("report.csv");
  io::write_report_csv(r.string(), {{"sngp", "gamma=1", 0.1, 0.2, 3.0, 0.5}, {"mc", "p=0.1", 0.1, 0.2, 3.0, std::nullopt}});
  const std::string text = io::read_text_file(r.string());
  CHECK(text.rfind("model,config,MSE,MAE,Score,DAC\n", 0) == 0);
  CHECK(text.find("mc,p=0.1,0.1,0.2,3,-\n") != std::string::npos);
}

TEST_CASE("checkpoint: round trip is bit-identical for every family") {
  const auto data = synthetic::synthesize_dataset(small_synthetic(), physics::PhysicsParams{}, 4);
  const training::Dataset train = data.subset(synthetic::Train);
  training::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.ensemble_size = 2;
  cfg.network.rff_features = 64;
  cfg.network.dropout_rate = 0.1;
  cfg.mc_samples = 5;
  for (const auto fam : {training::ModelFamily::Sngp, training::ModelFamily::Sner, training::ModelFamily::McDropout,
                         training::ModelFamily::DeepEnsemble}) {
    CAPTURE(training::to_string(fam));
    io::Checkpoint ck;
    ck.predictor = training::train_predictor(fam, train, cfg, &data.reference);
    ck.normalization = data.normalization;
    ck.config = {{"train.epochs", "2"}};
    const auto p = scratch("model.ckpt");
    io::save_checkpoint(ck, p.string());
    const io::Checkpoint back = io::load_checkpoint(p.string());
    const auto a = training::predict(ck.predictor, data.x);
    const auto b = training::predict(back.predictor, data.x);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.normalization);
    CHECK(back.normalization->mean == data.normalization.mean);
    CHECK(back.config == ck.config);
    CHECK(io::serialize_checkpoint(back) == io::serialize_checkpoint(ck));
  }
}

TEST_CASE("checkpoint: truncation, corruption and version mismatch are explicit errors") {
  training::TrainConfig cfg;
  cfg.epochs = 0;
  io::Checkpoint ck;
  const auto data = synthetic::synthesize_dataset(small_synthetic(), physics::PhysicsParams{}, 4);
  ck.predictor = training::train_predictor(training::ModelFamily::Sngp, data.subset(synthetic::Train), cfg, nullptr);
  const std::string text = io::serialize_checkpoint(ck);

  const std::string cut = error_of([&] { io::deserialize_checkpoint(text.substr(0, text.size() / 2)); });
  CHECK(cut.find("corrupt checkpoint") != std::string::npos);
  CHECK_THROWS_AS(io::deserialize_checkpoint(text + " extra"), io::CheckpointError);
  CHECK_THROWS_AS(io::deserialize_checkpoint("hello"), io::CheckpointError);

  std::string v2 = text;
  const auto pos = v2.find(std::to_string(io::kCheckpointVersion));
  v2.replace(pos, 1, "2");
  CHECK(error_of([&] { io::deserialize_checkpoint(v2); }).find("version 2") != std::string::npos);

  const auto p = scratch("trunc.ckpt");
  write(p, text.substr(0, text.size() - 10));
  CHECK_THROWS_AS(io::load_checkpoint(p.string()), io::CheckpointError);
}

TEST_CASE("config: sections, typed values, and rejection of unknown keys") {
  const config::RunConfig c = config::parse_config(
      "[run]\nfamily = sner\nseed = 7\n[train]\nepochs = 3\nlambda = 0.5\ncollocation = grid\n"
      "[network]\nhidden = 8,8\nrff_gamma = 2\n[physics]\nfriction = 0.02\n[sweep]\ngamma = 0.5,1\n");
  CHECK(c.family == training::ModelFamily::Sner);
  CHECK(c.train.seed == 7);
  CHECK(c.train.epochs == 3);
  CHECK(c.train.evidential_lambda == 0.5);
  CHECK(c.train.collocation == training::Collocation::Grid);
  CHECK(c.train.network.head == HeadKind::Evidential);
  CHECK(c.train.network.hidden == std::vector<Index>{8, 8});
  CHECK(c.physics.friction == 0.02);
  CHECK(c.sweep.gamma == std::vector<double>{0.5, 1.0});

  CHECK_THROWS_AS(config::parse_config("[train]\nepoch = 3\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("[nope]\na = 1\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("[train]\nepochs = three\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("[train]\nphysics = maybe\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("[train]\nbatch_size = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(config::parse_list(""), config::ConfigError);

  // The echo is itself a valid configuration that reproduces the run.
  const auto e = config::echo(c);
  config::RunConfig again = config::defaults();
  for (const auto& [k, v] : e) {
    const auto dot = k.find('.');
    config::apply(again, k.substr(0, dot), k.substr(dot + 1), v);
  }
  CHECK(config::echo(again) == e);
}

TEST_CASE("synthetic: determinism, exact trends without noise, and OOD distance") {
  const physics::PhysicsParams params;
  auto cfg = small_synthetic();
  const auto a = synthetic::synthesize_dataset(cfg, params, 12);
  const auto b = synthetic::synthesize_dataset(cfg, params, 12);
  CHECK(a.raw == b.raw);
  CHECK(a.y == b.y);
  CHECK(a.split == b.split);
  CHECK(synthetic::synthesize_dataset(cfg, params, 13).raw != a.raw);

  cfg.noise = 0.0;
  const auto clean = synthetic::synthesize_dataset(cfg, params, 12);
  for (Index i = 0; i < clean.raw.rows(); ++i) {
    if (clean.split[static_cast<std::size_t>(i)] == synthetic::OutOfDomain) continue;
    const double d = clean.y(i);
    CHECK(clean.raw(i, 0) == doctest::Approx(1.0 + 3.0 * d).epsilon(1e-14));
    CHECK(clean.raw(i, 3) == doctest::Approx(3.0 + 5.0 * d * d).epsilon(1e-14));
  }
  // Labels grow along each bearing, so every trend column follows them.
  for (Index i = 1; i < clean.raw.rows(); ++i) {
    if (clean.bearing[static_cast<std::size_t>(i)] != clean.bearing[static_cast<std::size_t>(i - 1)]) continue;
    CHECK(clean.y(i) >= clean.y(i - 1));
    CHECK(clean.raw(i, 1) >= clean.raw(i - 1, 1));
  }

  const auto tr = a.subset(synthetic::Train);
  const auto te = a.subset(synthetic::Test);
  const auto ood = a.subset(synthetic::OutOfDomain);
  CHECK(metrics::distances_to_training(ood.x, tr.x).mean() > metrics::distances_to_training(te.x, tr.x).mean());

  cfg.samples_per_bearing = 0;
  CHECK_THROWS_AS(synthetic::synthesize_dataset(cfg, params, 1), std::invalid_argument);
}
