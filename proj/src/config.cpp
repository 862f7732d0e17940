#include "tripod/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "tripod/error.hpp"

#ifndef TRIPOD_VERSION
#define TRIPOD_VERSION "unknown"
#endif

namespace tripod {

using nlohmann::json;

namespace {

template <typename E>
struct EnumNames;

template <>
struct EnumNames<QuantizerKind> {
  static constexpr std::pair<QuantizerKind, const char*> table[] = {
      {QuantizerKind::fsq, "fsq"}, {QuantizerKind::lq, "lq"}, {QuantizerKind::none, "none"}};
};
template <>
struct EnumNames<DensityLeg> {
  static constexpr std::pair<DensityLeg, const char*> table[] = {
      {DensityLeg::klm, "klm"}, {DensityLeg::klm_naive, "klm_naive"}, {DensityLeg::off, "off"}};
};
template <>
struct EnumNames<HessianLeg> {
  static constexpr std::pair<HessianLeg, const char*> table[] = {
      {HessianLeg::nhp, "nhp"}, {HessianLeg::vanilla, "vanilla"}, {HessianLeg::off, "off"}};
};
template <>
struct EnumNames<ModelKind> {
  static constexpr std::pair<ModelKind, const char*> table[] = {{ModelKind::autoencoder, "autoencoder"},
                                                                {ModelKind::source_oracle, "source_oracle"}};
};
template <>
struct EnumNames<MarginalBandwidth> {
  static constexpr std::pair<MarginalBandwidth, const char*> table[] = {
      {MarginalBandwidth::silverman, "silverman"}, {MarginalBandwidth::sigma, "sigma"}};
};
template <>
struct EnumNames<NhpAggregation> {
  static constexpr std::pair<NhpAggregation, const char*> table[] = {{NhpAggregation::sample, "sample"},
                                                                     {NhpAggregation::activation, "activation"}};
};

template <typename E>
std::string enum_name(E e) {
  for (const auto& [v, name] : EnumNames<E>::table)
    if (v == e) return name;
  throw Error("unnamed enum value");
}

template <typename E>
E enum_parse(const std::string& key, const std::string& s) {
  std::string options;
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (s == name) return v;
    options += options.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(key + ": '" + s + "' is not one of " + options);
}

// One entry per key: how to write it and how to read it back.
struct Field {
  std::function<json(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const json&)> set;
};

template <typename T>
T typed(const std::string& key, const json& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(key + ": expected a nonnegative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key + ": expected a number");
    } else {
      if (!v.is_string()) throw ConfigError(key + ": expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

#define TRIPOD_FIELD(name)                                                                     \
  {                                                                                            \
    #name, Field {                                                                             \
      [](const TrainConfig& c) { return json(c.name); },                                       \
          [](TrainConfig& c, const json& v) { c.name = typed<decltype(c.name)>(#name, v); } \
    }                                                                                          \
  }

#define TRIPOD_ENUM_FIELD(name)                                                                               \
  {                                                                                                           \
    #name, Field {                                                                                            \
      [](const TrainConfig& c) { return json(enum_name(c.name)); }, [](TrainConfig& c, const json& v) { \
        c.name = enum_parse<decltype(c.name)>(#name, typed<std::string>(#name, v));                         \
      }                                                                                                       \
    }                                                                                                         \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      TRIPOD_FIELD(dataset),
      TRIPOD_ENUM_FIELD(model),
      TRIPOD_ENUM_FIELD(quantizer),
      TRIPOD_ENUM_FIELD(density),
      TRIPOD_ENUM_FIELD(hessian),
      TRIPOD_FIELD(lambda_klm),
      TRIPOD_FIELD(lambda_nhp),
      TRIPOD_FIELD(n_q),
      TRIPOD_FIELD(n_z),
      TRIPOD_FIELD(batch_size),
      TRIPOD_FIELD(n_p),
      TRIPOD_FIELD(epsilon),
      TRIPOD_FIELD(learning_rate),
      TRIPOD_FIELD(beta1),
      TRIPOD_FIELD(beta2),
      TRIPOD_FIELD(adam_epsilon),
      TRIPOD_FIELD(weight_decay),
      TRIPOD_FIELD(max_updates),
      TRIPOD_FIELD(eval_every),
      TRIPOD_FIELD(seed),
      TRIPOD_FIELD(hidden_width),
      TRIPOD_FIELD(hidden_layers),
      TRIPOD_FIELD(klm_bandwidth),
      TRIPOD_ENUM_FIELD(marginal_bandwidth),
      TRIPOD_FIELD(quantize_weight),
      TRIPOD_FIELD(commit_weight),
      TRIPOD_FIELD(normalize_hp_activations),
      TRIPOD_ENUM_FIELD(nhp_aggregation),
      TRIPOD_FIELD(psnr_threshold),
      TRIPOD_FIELD(eval_samples),
  };
  return table;
}

#undef TRIPOD_FIELD
#undef TRIPOD_ENUM_FIELD

}  // namespace

std::string to_string(QuantizerKind k) { return enum_name(k); }
std::string to_string(DensityLeg k) { return enum_name(k); }
std::string to_string(HessianLeg k) { return enum_name(k); }
std::string to_string(ModelKind k) { return enum_name(k); }
std::string to_string(MarginalBandwidth k) { return enum_name(k); }
std::string to_string(NhpAggregation k) { return enum_name(k); }

std::string config_to_json(const TrainConfig& config, int indent) {
  json j = json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(config);
  return j.dump(indent);
}

TrainConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig config;
  for (const auto& [key, value] : j.items()) {
    auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(config, value);
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::uint64_t config_hash(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void apply_seed_override(TrainConfig& config) {
  const char* env = std::getenv("TRIPOD_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') throw ConfigError(std::string("TRIPOD_SEED is not an unsigned integer: ") + env);
  config.seed = v;
}

const char* version() { return TRIPOD_VERSION; }

}  // namespace tripod
