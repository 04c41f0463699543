#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "pdml/errors.hpp"
#include "pdml/losses.hpp"
#include "pdml/trainer.hpp"

using namespace pdml;

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.points = Matrix(2, 3);
  ds.points.set_row(0, {1.0, 0.0, -0.5});
  ds.points.set_row(1, {-0.3, 0.8, 0.4});
  ds.labels = {0, 1};
  ds.num_classes = 2;
  ds.class_names = {0, 1};
  ds.name = "tiny";
  return ds;
}

Dataset separable_dataset(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_classes = 8;
  cfg.per_class = 12;
  cfg.dim = 4;
  cfg.center_scale = 10.0;
  cfg.stddev = 0.3;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

struct Capture {
  std::vector<MetricsRecord> records;
  std::vector<BatchInfo> batches;

  TrainSinks sinks() {
    TrainSinks s;
    s.metrics = [this](const MetricsRecord& r) { records.push_back(r); };
    s.batch = [this](const BatchInfo& b) { batches.push_back(b); };
    return s;
  }
};

bool records_equal_modulo_clock(const std::vector<MetricsRecord>& a,
                                const std::vector<MetricsRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].step != b[i].step) return false;
    if (a[i].loss != b[i].loss) return false;
    if (a[i].learning_rate != b[i].learning_rate) return false;
    if (a[i].recall_at_k != b[i].recall_at_k) return false;
    if (a[i].nmi != b[i].nmi) return false;
    if (a[i].epsilon != b[i].epsilon) return false;
  }
  return true;
}

bool models_equal(const EmbeddingModel& a, const EmbeddingModel& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (!(a.layers[l].weight == b.layers[l].weight)) return false;
    if (a.layers[l].bias != b.layers[l].bias) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("zero steps leave the initial parameters untouched") {
  const auto ds = tiny_dataset();
  ModelConfig model_cfg;
  model_cfg.embed_dim = 2;
  model_cfg.seed = 5;
  TrainConfig cfg;
  cfg.steps = 0;
  cfg.batch_size = 2;
  cfg.seed = 9;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  const auto result = train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());

  CHECK(capture.records.empty());
  CHECK(result.stats.steps_run == 0);

  const auto fresh = init_model(3, {{2, Activation::identity}}, model_cfg.seed);
  CHECK(models_equal(result.model, fresh));
  const auto fresh_proxies = init_proxies(2, cfg.proxy_ratio, 2,
                                          1.0 / std::sqrt(2.0),
                                          derive_seed(cfg.seed, 1));
  CHECK(result.proxies.vectors == fresh_proxies.vectors);
  CHECK(result.proxies.label_to_proxy == fresh_proxies.label_to_proxy);
}

TEST_CASE("one sgd step equals the finite-difference oracle update") {
  const auto ds = tiny_dataset();
  ModelConfig model_cfg;
  model_cfg.embed_dim = 2;
  model_cfg.seed = 5;
  TrainConfig cfg;
  cfg.loss_kind = LossKind::proxy_nca;
  cfg.steps = 1;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.1;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.seed = 9;
  cfg.eval_every = 100;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  const auto result = train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());
  REQUIRE(capture.batches.size() == 1);
  const BatchInfo& batch = capture.batches[0];
  REQUIRE(batch.anchors.size() == 2);

  // Rebuild the initial parameters and differentiate the recorded batch's
  // mean loss numerically, slot by slot.
  auto model = init_model(3, {{2, Activation::identity}}, model_cfg.seed);
  auto proxies = init_proxies(2, cfg.proxy_ratio, 2, 1.0 / std::sqrt(2.0),
                              derive_seed(cfg.seed, 1));

  const auto objective = [&] {
    double total = 0.0;
    for (std::size_t a = 0; a < batch.anchors.size(); ++a) {
      const auto emb = embed(model, ds.points.row(batch.anchors[a]));
      const auto pos = static_cast<std::size_t>(batch.positive_proxy[a]);
      Matrix negatives(proxies.count() - 1, proxies.dim());
      std::size_t r = 0;
      for (std::size_t p = 0; p < proxies.count(); ++p) {
        if (p != pos) negatives.set_row(r++, proxies.vectors.row_copy(p));
      }
      total += proxy_nca_loss(emb, proxies.vectors.row(pos), negatives).value;
    }
    return total / static_cast<double>(batch.anchors.size());
  };

  for (std::size_t k = 0; k < model.layers[0].weight.data.size(); ++k) {
    const double fd = test::central_diff(objective, model.layers[0].weight.data[k]);
    const double expected = model.layers[0].weight.data[k] - cfg.learning_rate * fd;
    CHECK(std::abs(result.model.layers[0].weight.data[k] - expected) < 1e-8);
  }
  for (std::size_t i = 0; i < model.layers[0].bias.size(); ++i) {
    const double fd = test::central_diff(objective, model.layers[0].bias[i]);
    const double expected = model.layers[0].bias[i] - cfg.learning_rate * fd;
    CHECK(std::abs(result.model.layers[0].bias[i] - expected) < 1e-8);
  }
  for (std::size_t k = 0; k < proxies.vectors.data.size(); ++k) {
    const double fd = test::central_diff(objective, proxies.vectors.data[k]);
    const double expected = proxies.vectors.data[k] - cfg.learning_rate * fd;
    CHECK(std::abs(result.proxies.vectors.data[k] - expected) < 1e-8);
  }
}

TEST_CASE("identical configs give identical runs") {
  const auto ds = separable_dataset(2);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.steps = 30;
  cfg.batch_size = 8;
  cfg.eval_every = 10;
  cfg.seed = 77;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1, 2};

  Capture a, b;
  const auto ra = train(model_cfg, cfg, ds, ds, eval_cfg, a.sinks());
  const auto rb = train(model_cfg, cfg, ds, ds, eval_cfg, b.sinks());

  CHECK(records_equal_modulo_clock(a.records, b.records));
  CHECK(models_equal(ra.model, rb.model));
  CHECK(ra.proxies.vectors == rb.proxies.vectors);

  TrainConfig other = cfg;
  other.seed = 78;
  Capture c;
  train(model_cfg, cfg, ds, ds, eval_cfg, c.sinks());
  Capture d;
  train(model_cfg, other, ds, ds, eval_cfg, d.sinks());
  CHECK_FALSE(records_equal_modulo_clock(c.records, d.records));
}

TEST_CASE("learning rate decays by the configured factor on schedule") {
  const auto ds = separable_dataset(3);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.steps = 25;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.08;
  cfg.lr_decay_rate = 0.5;
  cfg.lr_decay_every = 10;
  cfg.eval_every = 100;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());

  const MetricsRecord* last_loss_record = nullptr;
  for (const auto& rec : capture.records) {
    if (!rec.learning_rate.has_value()) continue;
    const auto exponent = static_cast<double>((rec.step - 1) / cfg.lr_decay_every);
    const double expected = cfg.learning_rate * std::pow(cfg.lr_decay_rate, exponent);
    CHECK(*rec.learning_rate == doctest::Approx(expected).epsilon(1e-15));
    last_loss_record = &rec;
  }
  REQUIRE(last_loss_record != nullptr);
  CHECK(last_loss_record->step == 25);
  CHECK(*last_loss_record->learning_rate == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("static assignment is constant and uses every other proxy") {
  const auto ds = separable_dataset(4);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.batch_size = 8;
  cfg.seed = 31;
  cfg.eval_every = 100;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  const auto result = train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());

  CHECK(result.proxies.count() == 8);
  CHECK(result.stats.negatives_per_anchor == 7);

  std::vector<int> proxy_of_label(8, -1);
  for (const auto& batch : capture.batches) {
    for (std::size_t a = 0; a < batch.anchors.size(); ++a) {
      const int label = ds.labels[batch.anchors[a]];
      const int proxy = batch.positive_proxy[a];
      REQUIRE(proxy >= 0);
      if (proxy_of_label[static_cast<std::size_t>(label)] < 0) {
        proxy_of_label[static_cast<std::size_t>(label)] = proxy;
      } else {
        CHECK(proxy_of_label[static_cast<std::size_t>(label)] == proxy);
      }
    }
  }
}

TEST_CASE("loss trends downward on separable data") {
  const auto ds = separable_dataset(5);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.steps = 200;
  cfg.batch_size = 16;
  cfg.seed = 3;
  cfg.eval_every = 1000;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());

  std::vector<double> losses;
  for (const auto& rec : capture.records) {
    if (rec.loss.has_value()) losses.push_back(*rec.loss);
  }
  REQUIRE(losses.size() == 200);
  const std::size_t tenth = 20;
  const double first = std::accumulate(losses.begin(), losses.begin() + tenth, 0.0) /
                       static_cast<double>(tenth);
  const double last = std::accumulate(losses.end() - tenth, losses.end(), 0.0) /
                      static_cast<double>(tenth);
  CHECK(last < first);
}

TEST_CASE("metrics stream holds one loss record per step plus eval records") {
  const auto ds = separable_dataset(6);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.steps = 25;
  cfg.batch_size = 4;
  cfg.eval_every = 10;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1, 4};

  Capture capture;
  train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());

  std::size_t loss_records = 0;
  std::vector<std::size_t> eval_steps;
  for (const auto& rec : capture.records) {
    if (rec.loss.has_value()) ++loss_records;
    if (rec.recall_at_k.has_value()) {
      eval_steps.push_back(rec.step);
      REQUIRE(rec.nmi.has_value());
      REQUIRE(rec.epsilon.has_value());
      CHECK(*rec.nmi >= 0.0);
      CHECK(*rec.nmi <= 1.0);
      CHECK(rec.recall_at_k->count(1) == 1);
      CHECK(rec.recall_at_k->count(4) == 1);
    }
  }
  CHECK(loss_records == 25);
  CHECK(eval_steps == std::vector<std::size_t>{10, 20, 25});
  CHECK(capture.records.size() == 28);
}

TEST_CASE("invalid train configs are rejected up front") {
  const auto ds = tiny_dataset();
  ModelConfig model_cfg;
  model_cfg.embed_dim = 2;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, eval_cfg), ConfigError);

  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, eval_cfg), ConfigError);

  cfg = TrainConfig{};
  cfg.lr_decay_rate = 0.0;
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, eval_cfg), ConfigError);

  cfg = TrainConfig{};
  cfg.lr_decay_rate = 1.5;
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, eval_cfg), ConfigError);

  // Recall k must stay below the eval gallery size.
  cfg = TrainConfig{};
  EvalConfig big_k;
  big_k.ks = {2};
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, big_k), ConfigError);

  const Dataset empty;
  cfg = TrainConfig{};
  CHECK_THROWS_AS(train(model_cfg, cfg, empty, ds, eval_cfg), ConfigError);
}

TEST_CASE("a diverging run aborts with a diagnostic record") {
  const auto ds = separable_dataset(7);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e8;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.eval_every = 1000;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks()),
                  NumericError);
  REQUIRE(!capture.records.empty());
  const auto& last = capture.records.back();
  REQUIRE(last.loss.has_value());
  CHECK_FALSE(std::isfinite(*last.loss));
}

TEST_CASE("semihard batches without a class pair are skipped with zero loss") {
  // Batch size 4 draws all anchors from a single class, so no valid triplet
  // ever forms even though the dataset itself has two classes.
  Dataset ds;
  ds.points = Matrix(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    ds.points.set_row(i, {static_cast<double>(i), 0.0});
  }
  ds.labels = {0, 0, 0, 1, 1, 1};
  ds.num_classes = 2;
  ds.class_names = {0, 1};
  ds.name = "two_blobs";

  ModelConfig model_cfg;
  model_cfg.embed_dim = 2;
  TrainConfig cfg;
  cfg.loss_kind = LossKind::triplet_semihard;
  cfg.steps = 5;
  cfg.batch_size = 4;
  cfg.eval_every = 100;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  const auto result = train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());
  CHECK(result.stats.skipped_steps == 5);
  for (const auto& rec : capture.records) {
    if (rec.loss.has_value()) CHECK(*rec.loss == 0.0);
  }
}

TEST_CASE("single-class datasets cannot build a proxy set") {
  Dataset ds;
  ds.points = Matrix(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    ds.points.set_row(i, {static_cast<double>(i), 0.0});
  }
  ds.labels = std::vector<int>(4, 0);
  ds.num_classes = 1;
  ds.class_names = {0};

  ModelConfig model_cfg;
  model_cfg.embed_dim = 2;
  TrainConfig cfg;
  cfg.steps = 2;
  cfg.batch_size = 2;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};
  CHECK_THROWS_AS(train(model_cfg, cfg, ds, ds, eval_cfg), ConfigError);
}

TEST_CASE("proxy triplet and batch nca losses run deterministically") {
  const auto ds = separable_dataset(8);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  for (LossKind kind : {LossKind::proxy_triplet, LossKind::nca_batch,
                        LossKind::triplet_semihard}) {
    TrainConfig cfg;
    cfg.loss_kind = kind;
    cfg.steps = 15;
    cfg.batch_size = 8;
    cfg.seed = 21;
    cfg.eval_every = 100;

    Capture a, b;
    const auto ra = train(model_cfg, cfg, ds, ds, eval_cfg, a.sinks());
    const auto rb = train(model_cfg, cfg, ds, ds, eval_cfg, b.sinks());
    CHECK(records_equal_modulo_clock(a.records, b.records));
    CHECK(models_equal(ra.model, rb.model));
    if (kind == LossKind::proxy_triplet) {
      CHECK(ra.stats.negatives_per_anchor == ra.proxies.count() - 1);
    }
  }
}

TEST_CASE("dynamic assignment trains with in-range positives") {
  const auto ds = separable_dataset(9);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.assignment = Assignment::nearest;
  cfg.steps = 10;
  cfg.batch_size = 4;
  cfg.eval_every = 100;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  Capture capture;
  const auto result = train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());
  CHECK(result.proxies.mode == Assignment::nearest);
  for (const auto& batch : capture.batches) {
    for (int proxy : batch.positive_proxy) {
      CHECK(proxy >= 0);
      CHECK(proxy < static_cast<int>(result.proxies.count()));
    }
  }
}

TEST_CASE("normalized losses keep proxies trainable") {
  const auto ds = separable_dataset(10);
  ModelConfig model_cfg;
  model_cfg.embed_dim = 4;
  TrainConfig cfg;
  cfg.normalize_embeddings_in_loss = true;
  cfg.steps = 20;
  cfg.batch_size = 8;
  cfg.eval_every = 100;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  const auto before = init_proxies(8, 1.0, 4, 0.5, derive_seed(0, 1));
  Capture capture;
  const auto result = train(model_cfg, cfg, ds, ds, eval_cfg, capture.sinks());
  CHECK_FALSE(result.proxies.vectors == before.vectors);
  for (const auto& rec : capture.records) {
    if (rec.loss.has_value()) CHECK(std::isfinite(*rec.loss));
  }
}

TEST_CASE("triplet space of four balanced points is eight") {
  Dataset ds;
  ds.points = Matrix(4, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    ds.points.set_row(i, {static_cast<double>(i)});
  }
  ds.labels = {0, 0, 1, 1};
  ds.num_classes = 2;
  ds.class_names = {0, 1};

  const auto narrow = triplet_space_report(ds, 4);
  CHECK(narrow.total_triplets == 8);
  CHECK(narrow.balanced);
  CHECK(narrow.batch_capacity == 0);
  CHECK(narrow.batches_to_cover == 0);

  const auto wide = triplet_space_report(ds, 8);
  CHECK(wide.total_triplets == 8);
  CHECK(wide.batch_capacity == 8 * 3 * 4);
  CHECK(wide.batches_to_cover == 1);
}

TEST_CASE("single-class datasets span no triplets") {
  Dataset ds;
  ds.points = Matrix(3, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    ds.points.set_row(i, {static_cast<double>(i)});
  }
  ds.labels = {0, 0, 0};
  ds.num_classes = 1;
  ds.class_names = {0};

  const auto report = triplet_space_report(ds, 4);
  CHECK(report.total_triplets == 0);
  CHECK(report.batches_to_cover == 0);
}

TEST_CASE("unbalanced triplet counts match brute-force enumeration") {
  Dataset ds;
  ds.points = Matrix(6, 1);
  for (std::size_t i = 0; i < 6; ++i) {
    ds.points.set_row(i, {static_cast<double>(i)});
  }
  ds.labels = {0, 0, 1, 2, 2, 2};
  ds.num_classes = 3;
  ds.class_names = {0, 1, 2};

  std::size_t count = 0;
  for (std::size_t x = 0; x < 6; ++x) {
    for (std::size_t y = 0; y < 6; ++y) {
      for (std::size_t z = 0; z < 6; ++z) {
        if (x == y) continue;
        if (ds.labels[x] != ds.labels[y]) continue;
        if (ds.labels[x] == ds.labels[z]) continue;
        ++count;
      }
    }
  }
  REQUIRE(count == 26);

  const auto report = triplet_space_report(ds, 4);
  CHECK(report.total_triplets == 26);
  CHECK_FALSE(report.balanced);
}

TEST_CASE("balanced closed form matches enumeration across sizes") {
  for (std::size_t k : {2, 3, 4}) {
    for (std::size_t per : {2, 3, 5}) {
      const std::size_t n = k * per;
      Dataset ds;
      ds.points = Matrix(n, 1);
      ds.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        ds.points.set_row(i, {static_cast<double>(i)});
        ds.labels[i] = static_cast<int>(i % k);
      }
      ds.num_classes = k;
      for (std::size_t c = 0; c < k; ++c) {
        ds.class_names.push_back(static_cast<long long>(c));
      }

      std::size_t count = 0;
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
          for (std::size_t z = 0; z < n; ++z) {
            if (x != y && ds.labels[x] == ds.labels[y] &&
                ds.labels[x] != ds.labels[z]) {
              ++count;
            }
          }
        }
      }
      const auto report = triplet_space_report(ds, 8);
      CHECK(report.balanced);
      CHECK(report.total_triplets == count);
      CHECK(report.total_triplets == n * n * (n - k) * (k - 1) / (k * k));
    }
  }
}

}  // TEST_SUITE
