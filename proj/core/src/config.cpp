#include "sheafnn/config.hpp"

#include <cmath>

#include "sheafnn/errors.hpp"

namespace sheafnn::pipeline {

namespace {

double as_double(std::string_view name, const json& v) {
  if (!v.is_number()) throw ValidationError("config: '" + std::string(name) + "' must be a number");
  return v.get<double>();
}

std::size_t as_count(std::string_view name, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d >= 0.0 && std::floor(d) == d) return static_cast<std::size_t>(d);
  }
  throw ValidationError("config: '" + std::string(name) + "' must be a non-negative integer");
}

std::string as_string(std::string_view name, const json& v) {
  if (!v.is_string()) throw ValidationError("config: '" + std::string(name) + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::string to_string(nn::ModelKind k) {
  switch (k) {
    case nn::ModelKind::gcn: return "gcn";
    case nn::ModelKind::sage: return "sage";
    case nn::ModelKind::gat: return "gat";
    case nn::ModelKind::sheaf_general: return "sheaf";
  }
  return "?";
}

std::string to_string(nn::Activation a) {
  switch (a) {
    case nn::Activation::identity: return "identity";
    case nn::Activation::relu: return "relu";
    case nn::Activation::elu: return "elu";
  }
  return "?";
}

std::string to_string(nn::Normalization n) {
  return n == nn::Normalization::none ? "none" : "batch_then_layer";
}

nn::ModelKind parse_model_kind(std::string_view s) {
  if (s == "gcn") return nn::ModelKind::gcn;
  if (s == "sage" || s == "graphsage") return nn::ModelKind::sage;
  if (s == "gat") return nn::ModelKind::gat;
  if (s == "sheaf" || s == "sheaf_general") return nn::ModelKind::sheaf_general;
  throw ValidationError("unknown model kind '" + std::string(s) + "' (expected gcn, sage, gat or sheaf)");
}

nn::Activation parse_activation(std::string_view s) {
  if (s == "identity") return nn::Activation::identity;
  if (s == "relu") return nn::Activation::relu;
  if (s == "elu") return nn::Activation::elu;
  throw ValidationError("unknown activation '" + std::string(s) + "'");
}

nn::Normalization parse_normalization(std::string_view s) {
  if (s == "none") return nn::Normalization::none;
  if (s == "batch_then_layer") return nn::Normalization::batch_then_layer;
  throw ValidationError("unknown normalization '" + std::string(s) + "'");
}

void ModelConfig::set(std::string_view name, const json& v) {
  if (name == "kind") kind = parse_model_kind(as_string(name, v));
  else if (name == "hidden_dim" || name == "hidden") hidden_dim = as_count(name, v);
  else if (name == "num_layers" || name == "layers") num_layers = as_count(name, v);
  else if (name == "dropout") dropout = as_double(name, v);
  else if (name == "lr") lr = as_double(name, v);
  else if (name == "weight_decay" || name == "wd") weight_decay = as_double(name, v);
  else if (name == "patience") patience = as_count(name, v);
  else if (name == "min_epochs") min_epochs = as_count(name, v);
  else if (name == "sched_patience") sched_patience = as_count(name, v);
  else if (name == "sched_factor" || name == "gamma") sched_factor = as_double(name, v);
  else if (name == "grad_clip" || name == "clip") grad_clip = as_double(name, v);
  else if (name == "heads") heads = as_count(name, v);
  else if (name == "stalk_dim" || name == "d") stalk_dim = as_count(name, v);
  else if (name == "channels" || name == "f") channels = as_count(name, v);
  else if (name == "activation") activation = parse_activation(as_string(name, v));
  else if (name == "alpha") alpha = as_double(name, v);
  else if (name == "normalization") normalization = parse_normalization(as_string(name, v));
  else if (name == "normalized_laplacian") {
    if (!v.is_boolean()) throw ValidationError("config: 'normalized_laplacian' must be a boolean");
    normalized_laplacian = v.get<bool>();
  } else if (name == "label_smoothing" || name == "ls") label_smoothing = as_double(name, v);
  else if (name == "epochs") epochs = as_count(name, v);
  else throw ValidationError("config: unknown hyperparameter '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (hidden_dim == 0) fail("hidden_dim must be positive");
  if (num_layers == 0) fail("num_layers must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (!(sched_factor > 0.0 && sched_factor < 1.0)) fail("sched_factor must lie in (0, 1)");
  if (!(grad_clip > 0.0)) fail("grad_clip must be positive");
  if (heads == 0) fail("heads must be positive");
  if (kind == nn::ModelKind::gat && hidden_dim % heads != 0) fail("hidden_dim must be divisible by heads");
  if (stalk_dim == 0) fail("stalk_dim must be positive");
  if (channels == 0) fail("channels must be positive");
  if (!std::isfinite(alpha)) fail("alpha must be finite");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) fail("label_smoothing must lie in [0, 1)");
}

nn::ModelSpec ModelConfig::model_spec(std::size_t in_dim) const {
  nn::ModelSpec s;
  s.kind = kind;
  s.in_dim = in_dim;
  s.hidden_dim = hidden_dim;
  s.num_layers = num_layers;
  s.dropout = dropout;
  s.heads = heads;
  s.stalk_dim = stalk_dim;
  s.channels = channels;
  s.activation = activation;
  s.alpha = alpha;
  s.normalization = normalization;
  s.normalized_laplacian = normalized_laplacian;
  return s;
}

ordered_json ModelConfig::to_json() const {
  ordered_json j;
  j["kind"] = to_string(kind);
  j["hidden_dim"] = hidden_dim;
  j["num_layers"] = num_layers;
  j["dropout"] = dropout;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["patience"] = patience;
  j["min_epochs"] = min_epochs;
  j["sched_patience"] = sched_patience;
  j["sched_factor"] = sched_factor;
  j["grad_clip"] = grad_clip;
  j["heads"] = heads;
  j["stalk_dim"] = stalk_dim;
  j["channels"] = channels;
  j["activation"] = to_string(activation);
  j["alpha"] = alpha;
  j["normalization"] = to_string(normalization);
  j["normalized_laplacian"] = normalized_laplacian;
  j["label_smoothing"] = label_smoothing;
  j["epochs"] = epochs;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  ModelConfig c;
  if (auto it = j.find("kind"); it != j.end()) c = default_config(parse_model_kind(as_string("kind", *it)));
  for (const auto& [key, value] : j.items()) c.set(key, value);
  c.validate();
  return c;
}

ModelConfig default_config(nn::ModelKind kind) {
  ModelConfig c;
  const nn::ModelSpec spec = nn::default_model_spec(kind, 1);
  c.kind = kind;
  c.activation = spec.activation;
  c.alpha = spec.alpha;
  return c;
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& [name, values] : axes) n *= values.size();
  return n;
}

ModelConfig GridSpec::at(std::size_t index) const {
  if (index >= size()) throw ContractError("GridSpec::at: index out of range");
  ModelConfig c = base;
  c.kind = kind;
  for (std::size_t a = axes.size(); a-- > 0;) {
    const auto& [name, values] = axes[a];
    c.set(name, values[index % values.size()]);
    index /= values.size();
  }
  return c;
}

ordered_json GridSpec::to_json() const {
  ordered_json j;
  j["kind"] = to_string(kind);
  j["base"] = base.to_json();
  ordered_json ax = ordered_json::object();
  for (const auto& [name, values] : axes) ax[name] = values;
  j["axes"] = ax;
  return j;
}

GridSpec GridSpec::from_json(nn::ModelKind kind, const json& axes, const json& overrides) {
  GridSpec g;
  g.kind = kind;
  g.base = default_config(kind);
  if (!overrides.is_null()) {
    if (!overrides.is_object()) throw ValidationError("grid: base overrides must be an object");
    for (const auto& [key, value] : overrides.items()) g.base.set(key, value);
  }
  if (!axes.is_object()) throw ValidationError("grid: axes must be an object of name → list");
  for (const auto& [key, value] : axes.items()) {
    if (!value.is_array() || value.empty())
      throw ValidationError("grid: axis '" + key + "' must be a non-empty list");
    ModelConfig probe = g.base;
    for (const auto& v : value) probe.set(key, v);  // rejects unknown names early
    g.axes.emplace_back(key, std::vector<json>(value.begin(), value.end()));
  }
  for (std::size_t i = 0; i < g.size(); ++i) g.at(i).validate();
  return g;
}

namespace {

std::vector<json> list(std::initializer_list<json> v) { return std::vector<json>(v); }

}  // namespace

GridSpec standard_grid(nn::ModelKind kind) {
  GridSpec g;
  g.kind = kind;
  g.base = tuned_config(kind);
  switch (kind) {
    case nn::ModelKind::gcn:
      g.axes = {{"hidden_dim", list({32, 64, 128})},
                {"num_layers", list({2, 3, 4})},
                {"dropout", list({0.1, 0.2, 0.3})},
                {"lr", list({0.002, 0.005, 0.01, 0.05, 0.2, 0.5})},
                {"weight_decay", list({1e-5, 1e-4})},
                {"patience", list({80})},
                {"min_epochs", list({200})},
                {"sched_patience", list({40})},
                {"grad_clip", list({1.0, 2.0, 3.0})}};
      break;
    case nn::ModelKind::sage:
      g.axes = {{"hidden_dim", list({16, 32, 64})},
                {"num_layers", list({2, 3, 4})},
                {"dropout", list({0.1, 0.2, 0.3})},
                {"lr", list({0.001, 0.002, 0.005, 0.01, 0.05})},
                {"weight_decay", list({1e-5, 1e-4, 2e-4})}};
      break;
    case nn::ModelKind::gat:
      g.axes = {{"hidden_dim", list({32, 64, 128})},
                {"num_layers", list({2, 3, 4})},
                {"dropout", list({0.1, 0.2, 0.3})},
                {"lr", list({0.001, 0.002, 0.005, 0.01, 0.05, 0.2, 0.5})},
                {"weight_decay", list({1e-5, 1e-4})},
                {"patience", list({80})},
                {"min_epochs", list({200})},
                {"sched_patience", list({40})},
                {"grad_clip", list({2.0})},
                {"heads", list({2, 4})}};
      break;
    case nn::ModelKind::sheaf_general:
      g.axes = {{"stalk_dim", list({4, 6, 8})},
                {"channels", list({12, 16, 24})},
                {"num_layers", list({2, 4})},
                {"dropout", list({0.1, 0.2, 0.3})},
                {"lr", list({0.05, 0.1, 0.2, 0.25})},
                {"weight_decay", list({1e-3, 1e-4})},
                {"activation", list({"elu"})},
                {"patience", list({100})},
                {"grad_clip", list({1.0})}};
      break;
  }
  return g;
}

ModelConfig tuned_config(nn::ModelKind kind) {
  ModelConfig c = default_config(kind);
  switch (kind) {
    case nn::ModelKind::sheaf_general:
      c.stalk_dim = 8;
      c.channels = 24;
      c.num_layers = 2;
      c.activation = nn::Activation::elu;
      c.dropout = 0.2;
      c.lr = 0.01;
      c.weight_decay = 1e-3;
      c.sched_factor = 0.5;
      c.patience = 50;
      c.grad_clip = 0.5;
      break;
    case nn::ModelKind::sage:
      c.hidden_dim = 32;
      c.num_layers = 2;
      c.dropout = 0.1;
      c.lr = 0.005;
      c.weight_decay = 1e-4;
      c.patience = 80;
      c.min_epochs = 100;
      c.sched_patience = 40;
      c.label_smoothing = 0.1;
      c.grad_clip = 2.0;
      break;
    case nn::ModelKind::gat:
      c.hidden_dim = 32;
      c.num_layers = 4;
      c.heads = 2;
      c.dropout = 0.1;
      c.lr = 0.002;
      c.weight_decay = 1e-5;
      c.patience = 80;
      c.min_epochs = 200;
      c.sched_patience = 40;
      c.grad_clip = 2.0;
      break;
    case nn::ModelKind::gcn:
      c.hidden_dim = 32;
      c.num_layers = 3;
      c.dropout = 0.2;
      c.lr = 0.002;
      c.weight_decay = 1e-5;
      c.patience = 80;
      c.min_epochs = 200;
      c.sched_patience = 40;
      c.grad_clip = 1.0;
      break;
  }
  return c;
}

}  // namespace sheafnn::pipeline
