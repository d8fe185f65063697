#include "doctest.h"

#include "barlowwalk/config.hpp"

#include <cstdio>
#include <fstream>
#include <string>

using namespace barlowwalk;

namespace {

std::string error_of(const std::vector<std::string>& overrides) {
  try {
    load_config("", overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults validate and carry the documented values") {
  const TrainConfig c = load_config("");
  CHECK(c.num_envs == 64);
  CHECK(c.horizon == 24);
  CHECK(c.iterations == 1500);
  CHECK(c.ppo.gamma == 0.99);
  CHECK(c.ppo.gae_lambda == 0.95);
  CHECK(c.ppo.clip_range == 0.2);
  CHECK(c.ppo.epochs == 5);
  CHECK(c.ppo.num_mini_batches == 4);
  CHECK(c.ppo.learning_rate == 1e-3);
  CHECK(c.barlow.enabled);
  CHECK(c.barlow.lambda == 5e-3);
  CHECK(c.families() == std::vector<TerrainFamily>{TerrainFamily::Rough});
}

TEST_CASE("overrides reach nested keys") {
  const TrainConfig c =
      load_config("", {"ppo.gamma=0.9", "barlow.enabled=false", "terrain.families=[\"stairs_up\"]",
                       "num_envs=8"});
  CHECK(c.ppo.gamma == 0.9);
  CHECK_FALSE(c.barlow.enabled);
  CHECK(c.families() == std::vector<TerrainFamily>{TerrainFamily::StairsUp});
  CHECK(c.num_envs == 8);
}

TEST_CASE("out-of-range values name the key and the interval") {
  const std::string msg = error_of({"ppo.gamma=1.5"});
  CHECK(msg.find("ppo.gamma") != std::string::npos);
  CHECK(msg.find("[0, 1]") != std::string::npos);
  CHECK(error_of({"ppo.clip_range=-0.1"}).find("ppo.clip_range") != std::string::npos);
  CHECK(error_of({"num_envs=10"}).find("num_mini_batches") != std::string::npos);
  CHECK_FALSE(error_of({"ppo.gamma=1.0"}).size());
}

TEST_CASE("unknown keys and malformed overrides are rejected") {
  CHECK(error_of({"ppo.gamme=0.9"}).find("ppo.gamme") != std::string::npos);
  CHECK(error_of({"nonsense"}).find("key=value") != std::string::npos);
  CHECK(error_of({"ppo=1"}).find("section") != std::string::npos);
  CHECK_FALSE(error_of({"terrain.families=[\"lava\"]"}).empty());
  CHECK_FALSE(error_of({"ppo.epochs=\"many\""}).empty());
}

TEST_CASE("files merge strictly and round-trip") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream out(path);
    out << "{ // comments are allowed\n \"ppo\": {\"epochs\": 3}, \"seed\": 42 }";
  }
  const TrainConfig c = load_config(path, {"seed=7"});
  CHECK(c.ppo.epochs == 3);
  CHECK(c.seed == 7);  // overrides win over the file
  const TrainConfig back = from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  {
    std::ofstream out(path);
    out << "{\"ppo\": {\"epoch\": 3}}";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("does/not/exist.json"), ConfigError);
}
