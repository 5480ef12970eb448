#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "macrobottle/diffcore/matrix.hpp"
#include "macrobottle/metrics.hpp"

namespace macrobottle::cae {

// combined: one optimizer step on the six-term sum, gradients crossing halves.
// alternating: halves take turns per minibatch, the other half frozen.
enum class TrainingMode { combined, alternating };

// diagonal: bottleneck neuron i of one half predicts neuron i of the other.
// full: unconstrained linear map between the bottlenecks.
enum class CrossMap { diagonal, full };

// How squared errors are reduced over the output dimensions of one sample.
// Both variants average over samples.
enum class Reduction { sum, mean };

NLOHMANN_JSON_SERIALIZE_ENUM(TrainingMode, {{TrainingMode::combined, "combined"},
                                            {TrainingMode::alternating, "alternating"}})
NLOHMANN_JSON_SERIALIZE_ENUM(CrossMap, {{CrossMap::diagonal, "diagonal"}, {CrossMap::full, "full"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Reduction, {{Reduction::sum, "sum"}, {Reduction::mean, "mean"}})

struct CaeConfig {
  Index bottleneck_dim = 4;
  std::vector<Index> encoder_hidden{64};
  std::vector<Index> decoder_hidden_per_variable{32};
  double beta = 0.01;
  double gamma = 1.0;
  int epochs = 1500;
  Index batch_size = 128;
  double learning_rate = 1e-3;
  // Decoupled. Pulls the encoders toward even pixel weighting, which keeps
  // the codes' measurement noise near the pixel-averaging floor.
  double weight_decay = 0.1;
  std::uint64_t seed = 0;

  TrainingMode training_mode = TrainingMode::combined;
  CrossMap cross_map = CrossMap::diagonal;
  Reduction reduction = Reduction::sum;
  double informative_threshold = metrics::kDefaultInformativeThreshold;
  // Stop after this many epochs without validation-loss improvement (0: off).
  int early_stop_patience = 0;
  double early_stop_min_delta = 1e-4;
  // Scale inputs and targets with train-split column statistics.
  bool standardize = false;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("CaeConfig: " + m); };
    if (bottleneck_dim < 1) fail("bottleneck_dim must be >= 1");
    if (!(beta >= 0.0) || !(gamma >= 0.0)) fail("beta and gamma must be >= 0");
    if (epochs < 1) fail("epochs must be >= 1");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
    if (!(informative_threshold > 0.0)) fail("informative_threshold must be > 0");
    if (early_stop_patience < 0) fail("early_stop_patience must be >= 0");
    for (Index w : encoder_hidden) {
      if (w < 1) fail("encoder_hidden widths must be >= 1");
    }
    for (Index w : decoder_hidden_per_variable) {
      if (w < 1) fail("decoder_hidden_per_variable widths must be >= 1");
    }
  }
};

inline void to_json(nlohmann::json& j, const CaeConfig& c) {
  j = {{"bottleneck_dim", c.bottleneck_dim},
       {"encoder_hidden", c.encoder_hidden},
       {"decoder_hidden_per_variable", c.decoder_hidden_per_variable},
       {"beta", c.beta},
       {"gamma", c.gamma},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"seed", c.seed},
       {"training_mode", c.training_mode},
       {"cross_map", c.cross_map},
       {"reduction", c.reduction},
       {"informative_threshold", c.informative_threshold},
       {"early_stop_patience", c.early_stop_patience},
       {"early_stop_min_delta", c.early_stop_min_delta},
       {"standardize", c.standardize}};
}

// Missing keys keep their defaults; unknown keys are rejected so that typos
// in hand-written configs do not pass silently.
inline void from_json(const nlohmann::json& j, CaeConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("CaeConfig: expected a JSON object");
  static const std::set<std::string> known = {
      "bottleneck_dim", "encoder_hidden", "decoder_hidden_per_variable", "beta", "gamma",
      "epochs", "batch_size", "learning_rate", "weight_decay", "seed", "training_mode", "cross_map", "reduction",
      "informative_threshold", "early_stop_patience", "early_stop_min_delta", "standardize"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("CaeConfig: unknown field '" + key + "'");
  }
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("bottleneck_dim", c.bottleneck_dim);
  get("encoder_hidden", c.encoder_hidden);
  get("decoder_hidden_per_variable", c.decoder_hidden_per_variable);
  get("beta", c.beta);
  get("gamma", c.gamma);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("learning_rate", c.learning_rate);
  get("weight_decay", c.weight_decay);
  get("seed", c.seed);
  get("training_mode", c.training_mode);
  get("cross_map", c.cross_map);
  get("reduction", c.reduction);
  get("informative_threshold", c.informative_threshold);
  get("early_stop_patience", c.early_stop_patience);
  get("early_stop_min_delta", c.early_stop_min_delta);
  get("standardize", c.standardize);
  c.validate();
}

}  // namespace macrobottle::cae
