#include "edfvae/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "edfvae/io.hpp"

namespace edfvae {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      continue;
    }
    std::stringstream conv(item);
    T value;
    conv >> value;
    if (conv.fail()) {
      throw ConfigError("config: cannot parse list item '" + item + "'");
    }
    values.push_back(value);
  }
  return values;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config: cannot parse boolean '" + text + "'");
}

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::stringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) {
      out << ',';
    }
    out << values[i];
  }
  return out.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (kappa < 1) throw ConfigError("config: kappa must be >= 1");
  if (beta < 0.0) throw ConfigError("config: beta must be >= 0");
  if (batch < 1) throw ConfigError("config: batch must be >= 1");
  if (total_batches < 0) throw ConfigError("config: total_batches must be >= 0");
  if (lr <= 0.0) throw ConfigError("config: lr must be > 0");
  if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
  if (eval_mc < 1) throw ConfigError("config: eval_mc must be >= 1");
  if (train_mc < 1) throw ConfigError("config: train_mc must be >= 1");
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (hidden_scale <= 0.0) throw ConfigError("config: hidden_scale must be > 0");
  if (split_fraction <= 0.0 || split_fraction > 1.0) {
    throw ConfigError("config: split_fraction must be in (0, 1]");
  }
  if (init != "bench" && init != "mle_b") {
    throw ConfigError("config: init must be 'bench' or 'mle_b'");
  }
  if (architecture != "deep" && architecture != "canonical") {
    throw ConfigError("config: architecture must be 'deep' or 'canonical'");
  }
  if (family != "gaussian" && family != "bernoulli" && family != "binomial" &&
      family != "poisson") {
    throw ConfigError("config: unknown family '" + family + "'");
  }
  for (double b : betas) {
    if (b < 0.0) throw ConfigError("config: betas must be >= 0");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) {
      line = line.substr(0, comment);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected 'key = value' at line " +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "dataset") config.dataset = value;
      else if (key == "dataset_test") config.dataset_test = value;
      else if (key == "family") config.family = value;
      else if (key == "trials_n") config.trials_n = std::stoi(value);
      else if (key == "rho") config.rho = std::stod(value);
      else if (key == "phi") config.phi = std::stod(value);
      else if (key == "architecture") config.architecture = value;
      else if (key == "kappa") config.kappa = std::stol(value);
      else if (key == "beta") config.beta = std::stod(value);
      else if (key == "betas") config.betas = parse_list<double>(value);
      else if (key == "seeds") config.seeds = parse_list<std::uint64_t>(value);
      else if (key == "batch") config.batch = std::stol(value);
      else if (key == "total_batches") config.total_batches = std::stol(value);
      else if (key == "lr") config.lr = std::stod(value);
      else if (key == "eval_every") config.eval_every = std::stol(value);
      else if (key == "eval_mc") config.eval_mc = std::stoi(value);
      else if (key == "train_mc") config.train_mc = std::stoi(value);
      else if (key == "init") config.init = value;
      else if (key == "mle_b_identity_trunk")
        config.mle_b_identity_trunk = parse_bool(value);
      else if (key == "hidden_scale") config.hidden_scale = std::stod(value);
      else if (key == "output_dir") config.output_dir = value;
      else if (key == "csv_has_header") config.csv_has_header = parse_bool(value);
      else if (key == "allow_raw") config.allow_raw = parse_bool(value);
      else if (key == "split_fraction") config.split_fraction = std::stod(value);
      else if (key == "limit_rows") config.limit_rows = std::stol(value);
      else if (key == "synth_n") config.synth_n = std::stol(value);
      else if (key == "synth_d") config.synth_d = std::stol(value);
      else if (key == "synth_seed") config.synth_seed = std::stoull(value);
      else if (key == "emit_svg") config.emit_svg = parse_bool(value);
      else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config: cannot parse value for '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::stringstream out;
  out << "dataset = " << config.dataset << '\n';
  if (!config.dataset_test.empty()) {
    out << "dataset_test = " << config.dataset_test << '\n';
  }
  out << "family = " << config.family << '\n';
  out << "trials_n = " << config.trials_n << '\n';
  out << "rho = " << format_double(config.rho) << '\n';
  out << "phi = " << format_double(config.phi) << '\n';
  out << "architecture = " << config.architecture << '\n';
  out << "kappa = " << config.kappa << '\n';
  out << "beta = " << format_double(config.beta) << '\n';
  if (!config.betas.empty()) {
    out << "betas = " << join_list(config.betas) << '\n';
  }
  out << "seeds = " << join_list(config.seeds) << '\n';
  out << "batch = " << config.batch << '\n';
  out << "total_batches = " << config.total_batches << '\n';
  out << "lr = " << format_double(config.lr) << '\n';
  out << "eval_every = " << config.eval_every << '\n';
  out << "eval_mc = " << config.eval_mc << '\n';
  out << "train_mc = " << config.train_mc << '\n';
  out << "init = " << config.init << '\n';
  out << "mle_b_identity_trunk = "
      << (config.mle_b_identity_trunk ? "true" : "false") << '\n';
  out << "hidden_scale = " << format_double(config.hidden_scale) << '\n';
  out << "output_dir = " << config.output_dir << '\n';
  out << "csv_has_header = " << (config.csv_has_header ? "true" : "false")
      << '\n';
  out << "allow_raw = " << (config.allow_raw ? "true" : "false") << '\n';
  out << "split_fraction = " << format_double(config.split_fraction) << '\n';
  out << "limit_rows = " << config.limit_rows << '\n';
  out << "synth_n = " << config.synth_n << '\n';
  out << "synth_d = " << config.synth_d << '\n';
  out << "synth_seed = " << config.synth_seed << '\n';
  out << "emit_svg = " << (config.emit_svg ? "true" : "false") << '\n';
  return out.str();
}

void write_config_file(const std::string& path,
                       const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("config: cannot open " + path + " for writing");
  }
  out << serialize_config(config);
}

std::string resolve_output_dir(const ExperimentConfig& config) {
  const char* root = std::getenv("EDFVAE_OUTPUT_ROOT");
  if (root != nullptr && root[0] != '\0') {
    return std::string(root) + "/" + config.output_dir;
  }
  return config.output_dir;
}

}  // namespace edfvae
