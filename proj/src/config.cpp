#include "pfilin/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>

#include "pfilin/csv.hpp"

namespace pfilin {
namespace {

using Inputs = std::vector<std::string>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"'");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"'");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kConfigParse, key + ": expected a number, got '" + raw + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kConfigParse, key + ": expected a nonnegative integer, got '" + raw + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::kConfigParse, key + ": expected a boolean, got '" + raw + "'");
}

// Array values arrive as separate inputs; a single comma-separated string is
// accepted too.
Inputs split_list(const Inputs& in) {
  Inputs out;
  for (const std::string& item : in) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

const std::string& single(const std::string& key, const Inputs& in) {
  if (in.size() != 1) throw Error(ErrorCode::kConfigParse, key + ": expected a single value");
  return in.front();
}

std::string join_inputs(const Inputs& in) {
  std::string out;
  for (std::size_t i = 0; i < in.size(); ++i) out += (i ? "," : "") + in[i];
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string& key, const Inputs&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number_field(T ExperimentConfig::*member) {
  return Field{[member](ExperimentConfig& c, const std::string& key, const Inputs& in) {
                 if constexpr (std::is_floating_point_v<T>) {
                   c.*member = to_double(key, single(key, in));
                 } else {
                   c.*member = static_cast<T>(to_unsigned(key, single(key, in)));
                 }
               },
               [member](const ExperimentConfig& c) {
                 if constexpr (std::is_floating_point_v<T>) {
                   return csv::format_number(c.*member);
                 } else {
                   return std::to_string(c.*member);
                 }
               }};
}

Field text_field(std::string ExperimentConfig::*member, bool allow_list = false) {
  return Field{[member, allow_list](ExperimentConfig& c, const std::string& key, const Inputs& in) {
                 c.*member = allow_list ? join_inputs(in) : trim(single(key, in));
               },
               [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["experiment"] = text_field(&ExperimentConfig::experiment);
    t["seed"] = number_field(&ExperimentConfig::seed);
    t["replications"] = number_field(&ExperimentConfig::replications);
    t["workers"] = number_field(&ExperimentConfig::workers);
    t["output"] = text_field(&ExperimentConfig::output_dir);

    t["environment.kind"] = text_field(&ExperimentConfig::env_kind);
    t["environment.sigma"] = number_field(&ExperimentConfig::sigma);
    t["environment.theta"] = text_field(&ExperimentConfig::theta, true);
    t["environment.contexts"] = text_field(&ExperimentConfig::contexts);
    t["environment.noise_corr"] = text_field(&ExperimentConfig::noise_corr, true);
    t["environment.noise"] = text_field(&ExperimentConfig::noise);
    t["environment.rewards"] = text_field(&ExperimentConfig::rewards);
    t["environment.clusters"] = number_field(&ExperimentConfig::clusters);
    t["environment.kmeans_restarts"] = number_field(&ExperimentConfig::kmeans_restarts);

    t["estimators.rounds"] = number_field(&ExperimentConfig::rounds);
    t["estimators.warmup"] = number_field(&ExperimentConfig::warmup);
    t["estimators.exploit_arm"] = number_field(&ExperimentConfig::exploit_arm);
    t["estimators.checkpoints"] = Field{
        [](ExperimentConfig& c, const std::string& key, const Inputs& in) {
          c.checkpoints.clear();
          for (const std::string& s : split_list(in)) c.checkpoints.push_back(to_unsigned(key, s));
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.checkpoints.size(); ++i) out += (i ? "," : "") + std::to_string(c.checkpoints[i]);
          return out;
        }};
    t["estimators.feed_unmatched"] =
        Field{[](ExperimentConfig& c, const std::string& key, const Inputs& in) {
                c.feed_unmatched = to_bool(key, single(key, in));
              },
              [](const ExperimentConfig& c) { return std::string(c.feed_unmatched ? "true" : "false"); }};

    t["algorithm.names"] = Field{[](ExperimentConfig& c, const std::string&, const Inputs& in) {
                                   c.algorithms = split_list(in);
                                 },
                                 [](const ExperimentConfig& c) { return join_inputs(c.algorithms); }};
    t["algorithm.epsilon"] = Field{
        [](ExperimentConfig& c, const std::string& key, const Inputs& in) {
          c.epsilons.clear();
          for (const std::string& s : split_list(in)) c.epsilons.push_back(to_double(key, s));
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.epsilons.size(); ++i) out += (i ? "," : "") + csv::format_number(c.epsilons[i]);
          return out;
        }};
    t["algorithm.delta"] = number_field(&ExperimentConfig::delta);
    t["algorithm.gamma_constant"] = number_field(&ExperimentConfig::gamma_constant);
    t["algorithm.max_rounds"] = number_field(&ExperimentConfig::max_rounds);
    t["algorithm.sigma"] = number_field(&ExperimentConfig::pfi_sigma);
    t["algorithm.theta_max"] = number_field(&ExperimentConfig::theta_max);
    t["algorithm.radius_scale"] = number_field(&ExperimentConfig::radius_scale);
    t["algorithm.curve_epsilon"] = number_field(&ExperimentConfig::curve_epsilon);
    t["algorithm.round_logs"] = number_field(&ExperimentConfig::round_logs);
    return t;
  }();
  return table;
}

}  // namespace

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out[key] = field.get(*this);
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::kConfigParse, e.what());
  }
  ExperimentConfig config;
  for (const CLI::ConfigItem& item : items) {
    // [table] header lines.
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    const auto it = fields().find(key);
    if (it == fields().end()) throw Error(ErrorCode::kConfigParse, "unknown key '" + key + "'");
    it->second.set(config, key, item.inputs);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidParameter, msg); };
  static const std::vector<std::string> experiments{"estimator-consistency", "density", "dr-imputation", "pfi-compare",
                                                    "custom"};
  if (std::find(experiments.begin(), experiments.end(), c.experiment) == experiments.end()) {
    bad("unknown experiment '" + c.experiment + "'");
  }
  if (c.replications < 1) bad("replications must be at least 1");
  if (c.workers < 1) bad("workers must be at least 1");
  if (c.env_kind != "linear" && c.env_kind != "mab" && c.env_kind != "clustered") {
    bad("environment.kind must be linear, mab or clustered");
  }
  if (c.noise != "gaussian" && c.noise != "uniform") bad("environment.noise must be gaussian or uniform");
  if (!(c.sigma >= 0.0)) bad("environment.sigma must be nonnegative");
  if (!(c.delta > 0.0 && c.delta < 1.0)) bad("algorithm.delta must be in (0, 1)");
  if (c.epsilons.empty()) bad("algorithm.epsilon needs at least one value");
  for (double e : c.epsilons) {
    if (!(e > 0.0)) bad("epsilon values must be positive");
  }
  if (!(c.curve_epsilon > 0.0)) bad("algorithm.curve_epsilon must be positive");
  if (!(c.gamma_constant > 0.0)) bad("algorithm.gamma_constant must be positive");
  if (c.max_rounds < 1) bad("algorithm.max_rounds must be at least 1");
  if (!(c.radius_scale >= 0.0)) bad("algorithm.radius_scale must be nonnegative");
  if (c.rounds < 1) bad("estimators.rounds must be at least 1");
  for (std::size_t n : c.checkpoints) {
    if (n < 1 || n > c.rounds) bad("checkpoints must lie in [1, estimators.rounds]");
  }
  for (const std::string& a : c.algorithms) {
    if (a != "pfiwr" && a != "multipfi") bad("unknown algorithm '" + a + "'");
  }
  if (c.algorithms.empty()) bad("algorithm.names needs at least one algorithm");
  if (c.env_kind == "clustered" && c.clusters < 1) bad("environment.clusters must be at least 1");
  const bool estimator_run =
      c.experiment == "estimator-consistency" || c.experiment == "density" || c.experiment == "dr-imputation";
  if (estimator_run && c.env_kind == "clustered") bad(c.experiment + " needs a linear or mab environment");
  if (c.experiment == "pfi-compare" && c.env_kind == "linear") bad("pfi-compare needs a mab or clustered environment");
}

std::vector<std::vector<double>> parse_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    if (trim(row).empty()) continue;
    std::vector<double> values;
    for (const std::string& part : split_list({row})) values.push_back(to_double("matrix", part));
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error(ErrorCode::kConfigParse, "matrix rows differ in length: '" + text + "'");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorCode::kConfigParse, "empty matrix");
  return rows;
}

}  // namespace pfilin
