#include <doctest.h>

#include <fstream>

#include "deepcurrents/checkpoint.hpp"
#include "deepcurrents/config.hpp"
#include "deepcurrents/errors.hpp"
#include "helpers.hpp"

namespace dc = deepcurrents;
using dc::Vec3;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("bitwise round trip") {
    const auto dir = testing::scratch("checkpoint");
    for (bool rff : {true, false}) {
      auto config = testing::tiny_config(3);
      config.use_rff = rff;
      config.activation = rff ? dc::Activation::softplus : dc::Activation::relu;
      const dc::NeuralCurrent current{dc::NeuralField::init(config),
                                      dc::generate_curve(dc::CurveKind::borromean, 30, 0.7), 2.5e-3};
      dc::save_checkpoint(current, dir / "a.ckpt");
      const auto back = dc::load_checkpoint(dir / "a.ckpt");
      CHECK(back.field.params() == current.field.params());
      CHECK(back.field.features().frequencies == current.field.features().frequencies);
      CHECK(back.field.config().activation == config.activation);
      CHECK(back.field.config().use_rff == rff);
      CHECK(back.alpha_scale == current.alpha_scale);
      REQUIRE(back.boundary.loops.size() == 3);
      CHECK(back.boundary.loops[2] == current.boundary.loops[2]);
      dc::save_checkpoint(back, dir / "b.ckpt");
      CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
    }
  }

  TEST_CASE("corrupt files are rejected") {
    const auto dir = testing::scratch("checkpoint_bad");
    const dc::NeuralCurrent current{dc::NeuralField::init(testing::tiny_config()),
                                    dc::generate_curve(dc::CurveKind::circle, 20, 0.5), 1e-3};
    dc::save_checkpoint(current, dir / "ok.ckpt");
    const std::string bytes = slurp(dir / "ok.ckpt");

    std::ofstream(dir / "magic.ckpt", std::ios::binary) << "XXXXXXXX" << bytes.substr(8);
    CHECK_THROWS_AS(dc::load_checkpoint(dir / "magic.ckpt"), dc::FormatError);
    std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 9);
    CHECK_THROWS_AS(dc::load_checkpoint(dir / "short.ckpt"), dc::FormatError);
    std::ofstream(dir / "long.ckpt", std::ios::binary) << bytes << "x";
    CHECK_THROWS_AS(dc::load_checkpoint(dir / "long.ckpt"), dc::FormatError);
    CHECK_THROWS_AS(dc::load_checkpoint(dir / "missing.ckpt"), dc::InputError);
  }

  TEST_CASE("config JSON round trip and validation") {
    auto c = dc::TrainConfig::reconstruction_defaults();
    c.seed = 99;
    c.field.width = 48;
    c.precision = dc::Precision::float32;
    c.schedule.decay_every = 123;
    dc::TrainConfig back = dc::TrainConfig::minimal_defaults();
    dc::merge_json(back, dc::to_json(c));
    CHECK(dc::to_json(back) == dc::to_json(c));
    CHECK(back.field.width == 48);
    CHECK(back.precision == dc::Precision::float32);

    dc::TrainConfig partial = dc::TrainConfig::minimal_defaults();
    dc::merge_json(partial, nlohmann::json::parse(R"({"iterations": 5, "field": {"activation": "relu"}})"));
    CHECK(partial.iterations == 5);
    CHECK(partial.field.activation == dc::Activation::relu);
    CHECK(partial.schedule.base_lr == 0.0005);

    CHECK_THROWS_AS(dc::merge_json(partial, nlohmann::json::parse(R"({"iteratons": 5})")), dc::InputError);
    CHECK_THROWS_AS(dc::merge_json(partial, nlohmann::json::parse(R"({"iterations": "many"})")), dc::InputError);
    CHECK_THROWS_AS(dc::merge_json(partial, nlohmann::json::parse(R"({"field": {"seed": 3}})")), dc::InputError);
    CHECK_THROWS_AS(dc::merge_json(partial, nlohmann::json::parse(R"({"precision": "half"})")), dc::InputError);
    CHECK_THROWS_AS(dc::merge_json(partial, nlohmann::json::parse("[1, 2]")), dc::InputError);
  }
}
