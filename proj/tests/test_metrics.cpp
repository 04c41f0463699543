#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "pdml/errors.hpp"
#include "pdml/metrics.hpp"

using namespace pdml;

TEST_SUITE("metrics") {

TEST_CASE("loss records round-trip through json") {
  MetricsRecord rec;
  rec.step = 42;
  rec.loss = 1.25;
  rec.learning_rate = 0.02;
  rec.wall_clock_ms = 17;

  const auto j = rec.to_json();
  const auto back = MetricsRecord::from_json(j);
  CHECK(back.step == 42);
  CHECK(back.loss == 1.25);
  CHECK(back.learning_rate == 0.02);
  CHECK(back.wall_clock_ms == 17);
  CHECK_FALSE(back.recall_at_k.has_value());
  CHECK_FALSE(back.nmi.has_value());
  CHECK_FALSE(back.epsilon.has_value());
}

TEST_CASE("eval records round-trip with the recall map intact") {
  MetricsRecord rec;
  rec.step = 100;
  rec.recall_at_k = std::map<std::size_t, double>{{1, 0.9}, {2, 0.95}, {8, 1.0}};
  rec.nmi = 0.85;
  rec.epsilon = 0.4;
  rec.wall_clock_ms = 3;

  const auto back = MetricsRecord::from_json(rec.to_json());
  REQUIRE(back.recall_at_k.has_value());
  CHECK(back.recall_at_k->at(1) == 0.9);
  CHECK(back.recall_at_k->at(2) == 0.95);
  CHECK(back.recall_at_k->at(8) == 1.0);
  CHECK(back.nmi == 0.85);
  CHECK(back.epsilon == 0.4);
  CHECK_FALSE(back.loss.has_value());
}

TEST_CASE("a non-finite loss serializes as null and reads back as nan") {
  MetricsRecord rec;
  rec.step = 9;
  rec.loss = std::numeric_limits<double>::quiet_NaN();
  rec.learning_rate = 0.01;

  const std::string line = rec.to_json().dump();
  CHECK(line.find("\"loss\":null") != std::string::npos);
  const auto back = MetricsRecord::from_json(nlohmann::json::parse(line));
  REQUIRE(back.loss.has_value());
  CHECK(std::isnan(*back.loss));
}

TEST_CASE("writer emits one json line per record and loads back") {
  const auto dir = test::make_temp_dir("metrics");
  const auto path = (dir / "metrics.jsonl").string();
  {
    MetricsWriter writer(path);
    for (std::size_t s = 1; s <= 3; ++s) {
      MetricsRecord rec;
      rec.step = s;
      rec.loss = static_cast<double>(s) * 0.5;
      rec.learning_rate = 0.1;
      writer.write(rec);
    }
  }
  const auto records = load_metrics(path);
  REQUIRE(records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(records[i].step == i + 1);
    CHECK(records[i].loss == 0.5 * static_cast<double>(i + 1));
  }
}

TEST_CASE("malformed metrics lines are reported with their line number") {
  const auto dir = test::make_temp_dir("metrics");
  const auto path = (dir / "broken.jsonl").string();
  test::write_file(path, "{\"step\":1,\"loss\":0.5,\"learning_rate\":0.1,\"wall_clock_ms\":0}\nnot json\n");
  CHECK_THROWS_WITH_AS(load_metrics(path), doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_AS(load_metrics((dir / "absent.jsonl").string()), ParseError);
}

}  // TEST_SUITE
