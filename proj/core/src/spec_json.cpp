#include "dwnet/spec_json.hpp"

#include <set>
#include <string>

#include "dwnet/errors.hpp"

namespace dwnet {

namespace {

Json layer_to_json(const LayerSpec& layer) {
  if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
    return Json{{"type", "dense"},
                {"units", dense->units},
                {"activation", to_string(dense->activation)},
                {"double_weight", dense->double_weight}};
  }
  const auto& conv = std::get<ConvSpec>(layer);
  return Json{{"type", "conv"},
              {"depth", conv.depth},
              {"window", conv.window},
              {"stride", conv.stride},
              {"activation", to_string(conv.activation)}};
}

void reject_unknown(const Json& json, const std::set<std::string>& allowed, const std::string& where) {
  if (!json.is_object()) throw ValidationError(where, "expected an object");
  for (const auto& item : json.items()) {
    if (!allowed.contains(item.key())) {
      throw ValidationError(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
    }
  }
}

template <typename T>
T get_as(const Json& json, const std::string& field) {
  try {
    return json.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(field, std::string("wrong type: ") + e.what());
  }
}

std::size_t get_count(const Json& json, const std::string& field) {
  if (!json.is_number_integer() || json.get<long long>() < 0) {
    throw ValidationError(field, "expected a non-negative integer");
  }
  return json.get<std::size_t>();
}

Activation get_activation(const Json& json, const std::string& field) {
  try {
    return parse_activation(get_as<std::string>(json, field));
  } catch (const ArgumentError& e) {
    throw ValidationError(field, e.what());
  }
}

LayerSpec layer_from_json(const Json& json, const std::string& where) {
  if (!json.is_object() || !json.contains("type")) throw ValidationError(where + ".type", "missing layer type");
  const auto type = get_as<std::string>(json["type"], where + ".type");
  if (type == "dense") {
    reject_unknown(json, {"type", "units", "activation", "double_weight"}, where);
    DenseSpec dense;
    if (!json.contains("units")) throw ValidationError(where + ".units", "missing");
    dense.units = get_count(json["units"], where + ".units");
    if (json.contains("activation")) dense.activation = get_activation(json["activation"], where + ".activation");
    if (json.contains("double_weight")) dense.double_weight = get_as<bool>(json["double_weight"], where + ".double_weight");
    return dense;
  }
  if (type == "conv") {
    reject_unknown(json, {"type", "depth", "window", "stride", "activation"}, where);
    ConvSpec conv;
    for (const char* key : {"depth", "window"}) {
      if (!json.contains(key)) throw ValidationError(where + "." + key, "missing");
    }
    conv.depth = get_count(json["depth"], where + ".depth");
    conv.window = get_count(json["window"], where + ".window");
    if (json.contains("stride")) conv.stride = get_count(json["stride"], where + ".stride");
    if (json.contains("activation")) conv.activation = get_activation(json["activation"], where + ".activation");
    return conv;
  }
  throw ValidationError(where + ".type", "unknown layer type '" + type + "'");
}

}  // namespace

Json network_spec_to_json(const NetworkSpec& spec, bool include_seed) {
  Json layers = Json::array();
  for (const auto& layer : spec.layers) layers.push_back(layer_to_json(layer));
  Json optimizer{{"kind", to_string(spec.optimizer.kind)}};
  if (spec.optimizer.kind == OptimizerKind::adam) {
    optimizer["beta1"] = spec.optimizer.adam.beta1;
    optimizer["beta2"] = spec.optimizer.adam.beta2;
    optimizer["epsilon"] = spec.optimizer.adam.epsilon;
  }
  Json out{{"name", spec.name},
           {"input_shape", spec.input_shape},
           {"layers", std::move(layers)},
           {"loss", to_string(spec.loss)},
           {"learning_rate", spec.learning_rate},
           {"batch_size", spec.batch_size},
           {"optimizer", std::move(optimizer)},
           {"init", {{"weight_sigma", spec.init.weight_sigma}, {"gamma_init", to_string(spec.init.gamma_init)}}},
           {"iterations", spec.iterations}};
  if (include_seed) out["seed"] = spec.seed;
  return out;
}

NetworkSpec network_spec_from_json(const Json& json, NetworkSpec spec, bool allow_seed) {
  std::set<std::string> allowed{"name",       "input_shape", "layers", "loss",      "learning_rate",
                                "batch_size", "optimizer",   "init",   "iterations"};
  if (allow_seed) allowed.insert("seed");
  reject_unknown(json, allowed, "");

  if (json.contains("name")) spec.name = get_as<std::string>(json["name"], "name");
  if (json.contains("input_shape")) {
    const auto& shape = json["input_shape"];
    if (!shape.is_array()) throw ValidationError("input_shape", "expected an array");
    spec.input_shape.clear();
    for (std::size_t i = 0; i < shape.size(); ++i) {
      spec.input_shape.push_back(get_count(shape[i], "input_shape[" + std::to_string(i) + "]"));
    }
  }
  if (json.contains("layers")) {
    const auto& layers = json["layers"];
    if (!layers.is_array()) throw ValidationError("layers", "expected an array");
    spec.layers.clear();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      spec.layers.push_back(layer_from_json(layers[i], "layers[" + std::to_string(i) + "]"));
    }
  }
  if (json.contains("loss")) {
    try {
      spec.loss = parse_loss(get_as<std::string>(json["loss"], "loss"));
    } catch (const ArgumentError& e) {
      throw ValidationError("loss", e.what());
    }
  }
  if (json.contains("learning_rate")) spec.learning_rate = get_as<double>(json["learning_rate"], "learning_rate");
  if (json.contains("batch_size")) spec.batch_size = get_count(json["batch_size"], "batch_size");
  if (json.contains("iterations")) spec.iterations = get_count(json["iterations"], "iterations");
  if (json.contains("seed")) spec.seed = get_as<std::uint64_t>(json["seed"], "seed");
  if (json.contains("optimizer")) {
    const auto& opt = json["optimizer"];
    reject_unknown(opt, {"kind", "beta1", "beta2", "epsilon"}, "optimizer");
    if (opt.contains("kind")) {
      const auto kind = get_as<std::string>(opt["kind"], "optimizer.kind");
      if (kind == "adam") spec.optimizer.kind = OptimizerKind::adam;
      else if (kind == "sgd") spec.optimizer.kind = OptimizerKind::sgd;
      else throw ValidationError("optimizer.kind", "unknown optimizer '" + kind + "'");
    }
    if (opt.contains("beta1")) spec.optimizer.adam.beta1 = get_as<double>(opt["beta1"], "optimizer.beta1");
    if (opt.contains("beta2")) spec.optimizer.adam.beta2 = get_as<double>(opt["beta2"], "optimizer.beta2");
    if (opt.contains("epsilon")) spec.optimizer.adam.epsilon = get_as<double>(opt["epsilon"], "optimizer.epsilon");
  }
  if (json.contains("init")) {
    const auto& init = json["init"];
    reject_unknown(init, {"weight_sigma", "gamma_init"}, "init");
    if (init.contains("weight_sigma")) spec.init.weight_sigma = get_as<double>(init["weight_sigma"], "init.weight_sigma");
    if (init.contains("gamma_init")) {
      const auto g = get_as<std::string>(init["gamma_init"], "init.gamma_init");
      if (g == "ones") spec.init.gamma_init = GammaInit::ones;
      else if (g == "truncated_normal") spec.init.gamma_init = GammaInit::truncated_normal;
      else throw ValidationError("init.gamma_init", "expected 'truncated_normal' or 'ones'");
    }
  }
  return spec;
}

}  // namespace dwnet
