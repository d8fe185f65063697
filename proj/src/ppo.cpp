#include "barlowwalk/ppo.hpp"

#include <string>

namespace barlowwalk {

namespace {

void require(bool ok, const std::string& key, const std::string& interval) {
  if (!ok) throw ConfigError(key + " must lie in " + interval);
}

}  // namespace

void PpoConfig::validate() const {
  require(clip_range > 0 && clip_range < 1, "ppo.clip_range", "(0, 1)");
  require(epochs >= 1, "ppo.epochs", "[1, inf)");
  require(gamma >= 0 && gamma <= 1, "ppo.gamma", "[0, 1]");
  require(gae_lambda >= 0 && gae_lambda <= 1, "ppo.gae_lambda", "[0, 1]");
  require(entropy_coef >= 0, "ppo.entropy_coef", "[0, inf)");
  require(desired_kl > 0, "ppo.desired_kl", "(0, inf)");
  require(value_coef >= 0, "ppo.value_coef", "[0, inf)");
  require(num_mini_batches >= 1, "ppo.num_mini_batches", "[1, inf)");
  require(lr_min > 0 && lr_min <= lr_max, "ppo.lr_min", "(0, ppo.lr_max]");
  require(learning_rate >= lr_min && learning_rate <= lr_max, "ppo.learning_rate",
          "[ppo.lr_min, ppo.lr_max]");
  require(max_grad_norm >= 0, "ppo.max_grad_norm", "[0, inf)");
  require(adam_beta1 >= 0 && adam_beta1 < 1, "ppo.adam_beta1", "[0, 1)");
  require(adam_beta2 >= 0 && adam_beta2 < 1, "ppo.adam_beta2", "[0, 1)");
  require(adam_eps > 0, "ppo.adam_eps", "(0, inf)");
}

}  // namespace barlowwalk
