/* SPDX-FileCopyrightText: 2026 ssdnet Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ssdnet/trainer.hpp"
#include "test_util.hpp"

using namespace ssdnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("ssdnet_train_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.width = 8;
  cfg.cascade_depth = 1;
  cfg.ast_depth = 1;
  return cfg;
}

}  // namespace

TEST_CASE("adam_step: first step, zero gradient, missing gradient") {
  ModelConfig cfg = tiny_model();
  OptimState state;

  // first step with a constant gradient moves by about lr per element
  ParameterStore store;
  store.add("p", Tensor::zeros({4}));
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = reduce_sum(mul(store.get("p"), Tensor::full({4}, real(3))));
    tape.backward(loss);
  }
  adam_step(store, state, 0.01);
  for (real v : store.get("p").data()) CHECK(static_cast<double>(v) == doctest::Approx(-0.01).epsilon(1e-4));
  CHECK(state.step == 1);

  // zero gradient leaves parameters unchanged while moments decay
  ParameterStore store2;
  store2.add("q", Tensor::full({2}, real(1.5)));
  OptimState st2;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = reduce_sum(mul(store2.get("q"), Tensor::zeros({2})));
    tape.backward(loss);
  }
  adam_step(store2, st2, 0.01);
  for (real v : store2.get("q").data()) CHECK(v == real(1.5));

  // missing gradient raises naming the parameter
  ParameterStore store3;
  store3.add("lonely.weight", Tensor::ones({2}));
  OptimState st3;
  try {
    adam_step(store3, st3, 0.01);
    CHECK(false);
  } catch (const GraphError& e) {
    CHECK(std::string(e.what()).find("lonely.weight") != std::string::npos);
  }
  (void)cfg;
}

TEST_CASE("adam_step: trajectory matches the 64-bit scalar oracle") {
  // f(theta) = theta^2 from theta = 1, three steps
  ParameterStore store;
  store.add("theta", Tensor::ones({1}));
  OptimState state;
  std::vector<double> ref{1.0};
  oracle::AdamRef oracle_state;
  for (int step = 0; step < 3; ++step) {
    store.zero_grads();
    {
      Tape tape;
      TapeScope scope(tape);
      Tensor loss = mul(store.get("theta"), store.get("theta"));
      tape.backward(loss);
    }
    adam_step(store, state, 0.1);
    const std::vector<double> g{2.0 * ref[0]};
    oracle_state.step(ref, g, 0.1);
    CHECK(std::abs(static_cast<double>(store.get("theta").item()) - ref[0]) < 1e-7);
  }

  // random 10-step problems over a vector parameter
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ParameterStore s;
    s.add("w", Tensor::uniform({6}, 500 + seed, -1.0, 1.0));
    Tensor target = Tensor::uniform({6}, 600 + seed, -1.0, 1.0);
    OptimState st;
    std::vector<double> refw = testutil::to_doubles(s.get("w"));
    const std::vector<double> tgt = testutil::to_doubles(target);
    oracle::AdamRef ast;
    for (int step = 0; step < 10; ++step) {
      s.zero_grads();
      {
        Tape tape;
        TapeScope scope(tape);
        Tensor d = sub(s.get("w"), target);
        Tensor loss = reduce_sum(mul(d, d));
        tape.backward(loss);
      }
      adam_step(s, st, 0.05);
      std::vector<double> g(6);
      for (int i = 0; i < 6; ++i) g[static_cast<std::size_t>(i)] = 2.0 * (refw[static_cast<std::size_t>(i)] - tgt[static_cast<std::size_t>(i)]);
      ast.step(refw, g, 0.05);
    }
    auto got = s.get("w").data();
    for (int i = 0; i < 6; ++i)
      CHECK(std::abs(static_cast<double>(got[static_cast<std::size_t>(i)]) - refw[static_cast<std::size_t>(i)]) < 1e-6);
  }
}

TEST_CASE("lr_schedule: endpoints, midpoint, monotonicity") {
  CHECK(lr_schedule(0, 500, 3e-4, 3e-5) == doctest::Approx(3e-4));
  CHECK(lr_schedule(499, 500, 3e-4, 3e-5) == doctest::Approx(3e-5));

  // midpoint of 500 epochs under linear decay
  const double mid = 0.5 * (lr_schedule(249, 500, 3e-4, 3e-5) + lr_schedule(250, 500, 3e-4, 3e-5));
  CHECK(mid == doctest::Approx(1.65e-4).epsilon(1e-12));

  double prev = 1.0;
  for (int e = 0; e < 50; ++e) {
    const double lr = lr_schedule(e, 50, 3e-4, 3e-5);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK(lr_schedule(0, 1, 3e-4, 3e-5) == doctest::Approx(3e-4));
  CHECK_THROWS_AS(lr_schedule(5, 5, 3e-4, 3e-5), ValueError);
  CHECK_THROWS_AS(lr_schedule(-1, 5, 3e-4, 3e-5), ValueError);
}

TEST_CASE("checkpoint: byte-exact round trip, error kinds") {
  TempDir tmp;
  ModelConfig cfg = tiny_model();
  ParameterStore store = init_params(cfg, 11);
  OptimState state;
  state.step = 17;
  for (const auto& [name, t] : store.entries()) {
    OptimState::Moments mom;
    mom.m.assign(static_cast<std::size_t>(t.numel()), real(0.25));
    mom.v.assign(static_cast<std::size_t>(t.numel()), real(0.5));
    state.moments.emplace(name, std::move(mom));
  }

  const Checkpoint ckpt = Checkpoint::from_store(cfg, store, 42, &state);
  const fs::path p1 = tmp.path / "a.ssdn";
  save_checkpoint(p1, ckpt);
  const Checkpoint back = load_checkpoint(p1);
  CHECK(back.step == 42);
  CHECK(back.optim.step == 17);
  CHECK(back.config.width == cfg.width);

  const fs::path p2 = tmp.path / "b.ssdn";
  save_checkpoint(p2, back);
  CHECK(slurp(p1) == slurp(p2));  // save -> load -> save is byte-identical

  // store reconstruction matches names/shapes/payloads
  ParameterStore rebuilt = back.to_store();
  REQUIRE(rebuilt.size() == store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    CHECK(rebuilt.entries()[i].first == store.entries()[i].first);
    CHECK(testutil::bitwise_equal(rebuilt.entries()[i].second, store.entries()[i].second));
  }

  // corrupting one payload byte fails the whole-file checksum
  std::string bytes = slurp(p1);
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
  const fs::path corrupt = tmp.path / "corrupt.ssdn";
  {
    std::ofstream out(corrupt, std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_AS(load_checkpoint(corrupt), FormatError);

  // bad magic, version, truncation: distinct error kinds by message
  {
    std::ofstream out(tmp.path / "magic.ssdn", std::ios::binary);
    out << "NOPE" << bytes.substr(4);
  }
  try {
    load_checkpoint(tmp.path / "magic.ssdn");
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
  {
    std::ofstream out(tmp.path / "trunc.ssdn", std::ios::binary);
    out << bytes.substr(0, 40);
  }
  CHECK_THROWS_AS(load_checkpoint(tmp.path / "trunc.ssdn"), FormatError);

  // loading into a config with a different width reports the mismatch
  ModelConfig wider = cfg;
  wider.width = 16;
  CHECK_THROWS_AS(back.to_store(wider), FormatError);
}

TEST_CASE("train: determinism, learning smoke, loss log") {
  TempDir data_dir;
  DegradationPolicy policy;
  DatasetOutput ds = make_dataset(8, 2, 5, policy, data_dir.path, 32, 32);

  ModelConfig model = tiny_model();
  TrainConfig tcfg;
  tcfg.epochs = 10;
  tcfg.batch_size = 4;
  tcfg.seed = 3;
  tcfg.eval_every = 0;

  TempDir run1, run2;
  TrainResult r1 = train(model, tcfg, ds.train, run1.path);
  TrainResult r2 = train(model, tcfg, ds.train, run2.path);
  REQUIRE(r1.log.size() == 10);

  // bit-identical loss sequences for identical seeds
  for (int e = 0; e < 3; ++e) {
    CHECK(r1.log[static_cast<std::size_t>(e)].mean_loss == r2.log[static_cast<std::size_t>(e)].mean_loss);
  }

  // the desk-scale smoke property: loss at epoch 10 below epoch 0
  CHECK(r1.log.back().mean_loss < r1.log.front().mean_loss);

  // loss log file carries one line per epoch
  std::ifstream log(run1.path / "loss_log.txt");
  int lines = 0;
  std::string line;
  while (std::getline(log, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 10);
  CHECK(fs::exists(run1.path / "ckpt_final.ssdn"));

  // different seed diverges
  TrainConfig other = tcfg;
  other.seed = 4;
  TempDir run3;
  TrainResult r3 = train(model, other, ds.train, run3.path);
  CHECK(r3.log.front().mean_loss != r1.log.front().mean_loss);
}

TEST_CASE("evaluate: sanity rows and aggregate bounds") {
  TempDir data_dir;
  DegradationPolicy policy;
  DatasetOutput ds = make_dataset(4, 3, 9, policy, data_dir.path, 32, 32);

  ModelConfig model = tiny_model();
  ParameterStore store = init_params(model, 1);
  Checkpoint ckpt = Checkpoint::from_store(model, store, 0);
  MetricsReport report = evaluate(ckpt, ds.test);
  CHECK(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.ssim <= 1.0);
    CHECK(row.mse_x1000 >= 0.0);
    CHECK(std::isfinite(row.uiqm));
    CHECK(std::isfinite(row.uciqe));
  }

  // clean images scored against themselves: the oracle sanity row
  DatasetManifest self = ds.test;
  for (auto& pair : self.pairs) pair.degraded = pair.clean;
  // (scoring the clean image directly through the metric functions)
  ImageBuffer clean = read_ppm(ds.test.pairs[0].clean);
  CHECK(ssim_index(clean, clean) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mse(clean, clean) == 0.0);
}

TEST_CASE("train config validation") {
  TrainConfig bad;
  bad.lr_end = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  TrainConfig neg;
  neg.batch_size = 0;
  CHECK_THROWS_AS(neg.validate(), ConfigError);
}
