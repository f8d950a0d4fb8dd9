#include <doctest.h>

#include "mat/run_config.hpp"

using namespace mat;

TEST_SUITE("run_config") {

TEST_CASE("empty text yields defaults") {
  RunConfig c = parse_run_config_text("");
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.lr_initial == doctest::Approx(0.1));
  CHECK(c.train.dropout_rate == doctest::Approx(0.5));
  CHECK(c.train.plateau_patience == 2);
  CHECK(c.train.early_stop_patience == 5);
  CHECK(c.train.hidden_dim == 512);
  CHECK(c.train.variant == Variant::kFull);
  CHECK(c.train.modulation == ModulationMode::kSigmoid);
  CHECK(c.train.buckets == default_buckets());
  CHECK(c.synthetic.num_classes == 12);
  CHECK(c.min_count == 5);
  CHECK(c.beam_size == 20);
  CHECK(c.max_len == 30);
}

TEST_CASE("keys parse with comments and blank lines") {
  const std::string text =
      "# experiment\n"
      "\n"
      "hidden_dim = 64  # small model\n"
      "variant = no-attention\n"
      "modulation = tanh\n"
      "buckets = 2x10,4x15\n"
      "noise_std = 0.25\n"
      "length_normalize = true\n"
      "out_dir = /tmp/run1\n";
  RunConfig c = parse_run_config_text(text);
  CHECK(c.train.hidden_dim == 64);
  CHECK(c.train.variant == Variant::kNoAttention);
  CHECK(c.train.modulation == ModulationMode::kTanh);
  REQUIRE(c.train.buckets.size() == 2);
  CHECK(c.train.buckets[1] == Bucket{4, 15});
  CHECK(c.synthetic.noise_std == doctest::Approx(0.25));
  CHECK(c.length_normalize);
  CHECK(c.out_dir == "/tmp/run1");
}

TEST_CASE("unknown keys are rejected with their line number") {
  const std::string text = "hidden_dim = 8\n\nnot_a_key = 3\n";
  CHECK_THROWS_WITH_AS(parse_run_config_text(text), doctest::Contains("line 3"),
                       ConfigError);
  try {
    parse_run_config_text(text);
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("not_a_key") != std::string::npos);
  }
}

TEST_CASE("malformed values report their line") {
  CHECK_THROWS_WITH_AS(parse_run_config_text("batch_size = many\n"),
                       doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("x\n"), doctest::Contains("key = value"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("seed =\n"), doctest::Contains("empty value"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("variant = huge\n"),
                       doctest::Contains("unknown variant"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("buckets = 4x15,2x10\n"),
                       doctest::Contains("increasing"), ConfigError);
}

TEST_CASE("feature_dim applies to both model and synthetic spec") {
  RunConfig c = parse_run_config_text("feature_dim = 24\n");
  CHECK(c.train.feature_dim == 24);
  CHECK(c.synthetic.feature_dim == 24);
}

TEST_CASE("echo round trips") {
  RunConfig c;
  c.train.hidden_dim = 48;
  c.train.seed = 99;
  c.train.variant = Variant::kSingleVector;
  c.train.dropout_rate = 0.125;
  c.synthetic.num_classes = 9;
  c.synthetic.seed = 5;
  c.num_train = 123;
  c.cider_d = true;
  c.out_dir = "runs/x";

  RunConfig back = parse_run_config_text(to_text(c));
  CHECK(back.train.hidden_dim == 48);
  CHECK(back.train.seed == 99);
  CHECK(back.train.variant == Variant::kSingleVector);
  CHECK(back.train.dropout_rate == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(back.synthetic.num_classes == 9);
  CHECK(back.synthetic.seed == 5);
  CHECK(back.num_train == 123);
  CHECK(back.cider_d);
  CHECK(back.out_dir == "runs/x");
  CHECK(to_text(back) == to_text(c));
}

}  // TEST_SUITE
