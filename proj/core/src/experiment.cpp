#include "sheafnn/experiment.hpp"

#include <set>

#include "sheafnn/errors.hpp"
#include "sheafnn/io.hpp"

namespace sheafnn::pipeline {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {"dataset", "model", "grid", "base", "k", "repetitions",
                                             "seed", "pca_components", "output_dir", "jobs"};
  return keys;
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ValidationError(std::string("experiment: '") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

Experiment parse_experiment(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("experiment: expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().contains(key)) throw ValidationError("experiment: unknown key '" + key + "'");

  Experiment e;
  const json& ds = j.contains("dataset") ? j.at("dataset") : json();
  if (ds.is_string()) {
    fs::path p = ds.get<std::string>();
    e.dataset_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  } else if (ds.is_object() && ds.contains("synthetic")) {
    const json& s = ds.at("synthetic");
    if (!s.is_object()) throw ValidationError("experiment: 'synthetic' must be an object");
    for (const auto& [key, value] : s.items())
      if (key != "preset" && key != "n" && key != "tumor_fraction" && key != "seed")
        throw ValidationError("experiment: unknown synthetic key '" + key + "'");
    if (s.contains("preset")) {
      if (!s.at("preset").is_string()) throw ValidationError("experiment: synthetic preset must be a string");
      e.synthetic.preset = data::parse_preset(s.at("preset").get<std::string>());
    }
    e.synthetic.n = get_u64(s, "n", e.synthetic.n);
    if (s.contains("tumor_fraction")) {
      if (!s.at("tumor_fraction").is_number())
        throw ValidationError("experiment: tumor_fraction must be a number");
      e.synthetic.tumor_fraction = s.at("tumor_fraction").get<double>();
    }
    e.synthetic.seed = get_u64(s, "seed", e.synthetic.seed);
  } else {
    throw ValidationError("experiment: 'dataset' must be a CSV path or {\"synthetic\": {...}}");
  }

  if (!j.contains("model") || !j.at("model").is_string())
    throw ValidationError("experiment: 'model' must name a model kind");
  const nn::ModelKind kind = parse_model_kind(j.at("model").get<std::string>());
  const json base = j.contains("base") ? j.at("base") : json();
  const json grid = j.contains("grid") ? j.at("grid") : json("best");
  if (grid.is_string() && grid.get<std::string>() == "full") {
    e.grid = standard_grid(kind);
    if (base.is_object())
      for (const auto& [key, value] : base.items()) e.grid.base.set(key, value);
  } else if (grid.is_string() && grid.get<std::string>() == "best") {
    e.grid.kind = kind;
    e.grid.base = tuned_config(kind);
    if (base.is_object())
      for (const auto& [key, value] : base.items()) e.grid.base.set(key, value);
  } else if (grid.is_object()) {
    e.grid = GridSpec::from_json(kind, grid, base);
  } else {
    throw ValidationError("experiment: 'grid' must be \"full\", \"best\" or an object of axes");
  }
  if (!base.is_null() && !base.is_object()) throw ValidationError("experiment: 'base' must be an object");
  for (std::size_t i = 0; i < e.grid.size(); ++i) e.grid.at(i).validate();

  e.options.k = get_u64(j, "k", e.options.k);
  e.options.repetitions = get_u64(j, "repetitions", e.options.repetitions);
  e.options.seed = get_u64(j, "seed", e.options.seed);
  e.options.pca_components = get_u64(j, "pca_components", e.options.pca_components);
  e.options.jobs = get_u64(j, "jobs", e.options.jobs);
  if (e.options.k < 2) throw ValidationError("experiment: k must be at least 2");
  if (e.options.repetitions == 0) throw ValidationError("experiment: repetitions must be positive");
  if (e.options.pca_components == 0) throw ValidationError("experiment: pca_components must be positive");
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ValidationError("experiment: 'output_dir' must be a string");
    fs::path p = j.at("output_dir").get<std::string>();
    e.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  return e;
}

Experiment load_experiment(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
  return parse_experiment(j, path.parent_path());
}

data::SpectraDataset Experiment::load_dataset() const {
  if (dataset_path) return data::load_csv(*dataset_path);
  return data::generate_synthetic(synthetic.n, synthetic.tumor_fraction, synthetic.seed, synthetic.preset);
}

ordered_json Experiment::to_json() const {
  ordered_json j;
  if (dataset_path) {
    j["dataset"] = dataset_path->string();
  } else {
    j["dataset"] = {{"synthetic",
                     {{"preset", data::to_string(synthetic.preset)},
                      {"n", synthetic.n},
                      {"tumor_fraction", synthetic.tumor_fraction},
                      {"seed", synthetic.seed}}}};
  }
  j["grid"] = grid.to_json();
  j["k"] = options.k;
  j["repetitions"] = options.repetitions;
  j["seed"] = options.seed;
  j["pca_components"] = options.pca_components;
  if (output_dir) j["output_dir"] = output_dir->string();
  return j;
}

}  // namespace sheafnn::pipeline
