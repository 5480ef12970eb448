#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "macrobottle/cae/config.hpp"
#include "macrobottle/dataset.hpp"
#include "macrobottle/diffcore.hpp"

namespace macrobottle::cae {

// One half of the Causal Autoencoder: an encoder emitting (mu, logvar) per
// bottleneck neuron, an additive decoder with one subnet per neuron, and an
// affine cross-map onto the other half's bottleneck.
//
// Parameter names: enc.W*/enc.b* (encoder), dec<i>.W*/dec<i>.b* (subnet i),
// dec.bias (global output bias), cross.a/cross.b (diagonal map) or
// cross.A/cross.b (full map).
struct CaeHalf {
  Index input_dim = 0;
  Index output_dim = 0;
  Index bottleneck_dim = 0;
  diff::MlpSpec encoder;
  diff::MlpSpec decoder_subnet;
  CrossMap cross_map = CrossMap::diagonal;
  diff::ParamStore params;
};

struct CaeModel {
  CaeHalf net_x;  // X -> (Y, bottleneck of net_y)
  CaeHalf net_y;  // Y -> (X, bottleneck of net_x)
  CaeConfig config;
  std::optional<ColumnStats> x_scaling;
  std::optional<ColumnStats> y_scaling;

  [[nodiscard]] Matrix prepare_x(const Matrix& raw) const {
    return x_scaling ? x_scaling->apply(raw) : raw;
  }
  [[nodiscard]] Matrix prepare_y(const Matrix& raw) const {
    return y_scaling ? y_scaling->apply(raw) : raw;
  }
};

inline std::string subnet_prefix(Index i) { return "dec" + std::to_string(i); }

inline CaeHalf make_half(Index input_dim, Index output_dim, const CaeConfig& cfg, Rng& rng) {
  cfg.validate();
  if (input_dim < 1 || output_dim < 1) throw DimensionError("make_half: dimensions must be >= 1");
  CaeHalf h;
  h.input_dim = input_dim;
  h.output_dim = output_dim;
  h.bottleneck_dim = cfg.bottleneck_dim;
  h.cross_map = cfg.cross_map;
  h.encoder.layer_widths.push_back(input_dim);
  for (Index w : cfg.encoder_hidden) h.encoder.layer_widths.push_back(w);
  h.encoder.layer_widths.push_back(2 * cfg.bottleneck_dim);
  h.decoder_subnet.layer_widths.push_back(1);
  for (Index w : cfg.decoder_hidden_per_variable) h.decoder_subnet.layer_widths.push_back(w);
  h.decoder_subnet.layer_widths.push_back(output_dim);

  // A zero encoder head makes the untrained bottleneck exactly the prior:
  // mu = 0, logvar = 0 for every input.
  diff::init_mlp(h.params, "enc", h.encoder, rng, {.zero_output_layer = true});
  for (Index i = 0; i < cfg.bottleneck_dim; ++i) {
    diff::init_mlp(h.params, subnet_prefix(i), h.decoder_subnet, rng);
  }
  h.params.add("dec.bias", Matrix::Zero(1, output_dim));
  if (cfg.cross_map == CrossMap::diagonal) {
    h.params.add("cross.a", Matrix::Ones(1, cfg.bottleneck_dim));
  } else {
    h.params.add("cross.A", Matrix::Identity(cfg.bottleneck_dim, cfg.bottleneck_dim));
  }
  h.params.add("cross.b", Matrix::Zero(1, cfg.bottleneck_dim));
  return h;
}

inline CaeModel make_model(Index x_dim, Index y_dim, const CaeConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  CaeModel m;
  m.config = cfg;
  m.net_x = make_half(x_dim, y_dim, cfg, rng);
  m.net_y = make_half(y_dim, x_dim, cfg, rng);
  return m;
}

// ---- tape versions (training) ----------------------------------------------

struct EncodedVars {
  diff::Var mu;
  diff::Var logvar;
};

inline EncodedVars encode(diff::Tape& tape, CaeHalf& half, const diff::Var& input) {
  if (input.cols() != half.input_dim) {
    throw DimensionError("encode: input has " + std::to_string(input.cols()) +
                         " columns, expected " + std::to_string(half.input_dim));
  }
  diff::Var out = diff::mlp_forward(tape, half.encoder, half.params, "enc", input);
  const Index k = half.bottleneck_dim;
  return {diff::slice_cols(out, 0, k),
          diff::clamp(diff::slice_cols(out, k, k), diff::kLogvarMin, diff::kLogvarMax)};
}

inline diff::Var decode_additive(diff::Tape& tape, CaeHalf& half, const diff::Var& z) {
  if (z.cols() != half.bottleneck_dim) {
    throw DimensionError("decode_additive: z has " + std::to_string(z.cols()) +
                         " columns, expected " + std::to_string(half.bottleneck_dim));
  }
  diff::Var acc;
  for (Index i = 0; i < half.bottleneck_dim; ++i) {
    diff::Var part = diff::mlp_forward(tape, half.decoder_subnet, half.params, subnet_prefix(i),
                                       diff::slice_cols(z, i, 1));
    acc = acc.valid() ? diff::add(acc, part) : part;
  }
  return diff::add_row(acc, tape.param(half.params, "dec.bias"));
}

inline diff::Var cross_predict(diff::Tape& tape, CaeHalf& half, const diff::Var& z) {
  if (z.cols() != half.bottleneck_dim) {
    throw DimensionError("cross_predict: z has " + std::to_string(z.cols()) +
                         " columns, expected " + std::to_string(half.bottleneck_dim));
  }
  diff::Var b = tape.param(half.params, "cross.b");
  if (half.cross_map == CrossMap::diagonal) {
    return diff::add_row(diff::mul_row(z, tape.param(half.params, "cross.a")), b);
  }
  return diff::add_row(diff::matmul(z, tape.param(half.params, "cross.A")), b);
}

// ---- matrix versions (evaluation) ------------------------------------------

struct Encoding {
  Matrix mu;
  Matrix logvar;
};

// Deterministic bottleneck: mu is the macrovariable value.
inline Encoding encode(const CaeHalf& half, const Matrix& input) {
  if (input.cols() != half.input_dim) {
    throw DimensionError("encode: input has " + std::to_string(input.cols()) +
                         " columns, expected " + std::to_string(half.input_dim));
  }
  const Matrix out = diff::mlp_eval(half.encoder, half.params, "enc", input);
  const Index k = half.bottleneck_dim;
  return {out.leftCols(k), out.rightCols(k).cwiseMax(diff::kLogvarMin).cwiseMin(diff::kLogvarMax)};
}

// Contribution of subnet i alone (without the global bias).
inline Matrix decode_subnet(const CaeHalf& half, Index i, const Matrix& z) {
  if (i < 0 || i >= half.bottleneck_dim || z.cols() != half.bottleneck_dim) {
    throw DimensionError("decode_subnet: bad neuron index or z shape");
  }
  return diff::mlp_eval(half.decoder_subnet, half.params, subnet_prefix(i), z.col(i));
}

inline Matrix decode_additive(const CaeHalf& half, const Matrix& z) {
  if (z.cols() != half.bottleneck_dim) {
    throw DimensionError("decode_additive: z has " + std::to_string(z.cols()) +
                         " columns, expected " + std::to_string(half.bottleneck_dim));
  }
  Matrix out = Matrix::Zero(z.rows(), half.output_dim);
  for (Index i = 0; i < half.bottleneck_dim; ++i) out += decode_subnet(half, i, z);
  out.rowwise() += half.params.value("dec.bias").row(0);
  return out;
}

inline Matrix cross_predict(const CaeHalf& half, const Matrix& z) {
  if (z.cols() != half.bottleneck_dim) {
    throw DimensionError("cross_predict: z has " + std::to_string(z.cols()) +
                         " columns, expected " + std::to_string(half.bottleneck_dim));
  }
  const RowVector b = half.params.value("cross.b").row(0);
  Matrix out;
  if (half.cross_map == CrossMap::diagonal) {
    out = (z.array().rowwise() * half.params.value("cross.a").row(0).array()).matrix();
  } else {
    out = z * half.params.value("cross.A");
  }
  out.rowwise() += b;
  return out;
}

// ---- checkpoints -----------------------------------------------------------

namespace detail {

inline nlohmann::json stats_json(const std::optional<ColumnStats>& s) {
  if (!s) return nullptr;
  std::vector<double> mean(s->mean.data(), s->mean.data() + s->mean.size());
  std::vector<double> sd(s->stddev.data(), s->stddev.data() + s->stddev.size());
  return {{"mean", mean}, {"stddev", sd}, {"constant", s->constant}};
}

inline std::optional<ColumnStats> stats_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  ColumnStats s;
  s.mean = Eigen::Map<const RowVector>(mean.data(), static_cast<Index>(mean.size()));
  s.stddev = Eigen::Map<const RowVector>(sd.data(), static_cast<Index>(sd.size()));
  s.constant = j.at("constant").get<std::vector<bool>>();
  return s;
}

}  // namespace detail

inline void save_model(const CaeModel& m, const std::filesystem::path& stem,
                       nlohmann::json extra = nlohmann::json::object()) {
  diff::ParamStore flat;
  for (const auto& [prefix, half] : {std::pair{"x.", &m.net_x}, std::pair{"y.", &m.net_y}}) {
    for (const auto& [name, p] : half->params) flat.add(prefix + name, p.value, p.nonnegative);
  }
  nlohmann::json meta = {{"kind", "cae"},
                         {"config", m.config},
                         {"x_dim", m.net_x.input_dim},
                         {"y_dim", m.net_y.input_dim},
                         {"x_scaling", detail::stats_json(m.x_scaling)},
                         {"y_scaling", detail::stats_json(m.y_scaling)},
                         {"extra", std::move(extra)}};
  diff::save_checkpoint(flat, stem, meta);
}

inline CaeModel load_model(const std::filesystem::path& stem) {
  diff::Checkpoint cp = diff::load_checkpoint(stem);
  const auto& meta = cp.metadata;
  if (meta.value("kind", "") != "cae") throw DataError(stem.string() + ": not a CAE checkpoint");
  CaeModel m;
  try {
    m = make_model(meta.at("x_dim").get<Index>(), meta.at("y_dim").get<Index>(),
                   meta.at("config").get<CaeConfig>());
    m.x_scaling = detail::stats_from_json(meta.at("x_scaling"));
    m.y_scaling = detail::stats_from_json(meta.at("y_scaling"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(stem.string() + ": bad checkpoint metadata: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(stem.string() + ": " + e.what());
  }
  for (const auto& [prefix, half] : {std::pair{"x.", &m.net_x}, std::pair{"y.", &m.net_y}}) {
    for (auto& [name, p] : half->params) {
      const std::string key = prefix + name;
      if (!cp.params.contains(key)) throw DataError(stem.string() + ": missing array " + key);
      const Matrix& v = cp.params.value(key);
      if (v.rows() != p.value.rows() || v.cols() != p.value.cols()) {
        throw DataError(stem.string() + ": array " + key + " has the wrong shape");
      }
      p.value = v;
    }
  }
  return m;
}

}  // namespace macrobottle::cae
