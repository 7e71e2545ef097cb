#pragma once

// Run configuration: a small [section] key=value text format with strict key
// checking, plus a resolved echo so every run is self-describing.
// Precedence is flags > file > defaults; the CLI applies flags after load.

#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tif/model.hpp"
#include "tif/serialize.hpp"

namespace tif {

struct RunConfig {
  std::string dataset_path;
  int folds = 10;
  TifConfig model;
  double metric_noise = 0.05;
  int metric_runs = 10;
  int kernel_truncation = -1;  // < 0: exact solve
  int surrogate_epochs = 100;
  std::string out_dir = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean value '" + v + "'");
}

}  // namespace detail

inline void apply_config_key(RunConfig& rc, const std::string& key, const std::string& value) {
  TifConfig& m = rc.model;
  if (key == "dataset.path") rc.dataset_path = value;
  else if (key == "dataset.folds") rc.folds = std::stoi(value);
  else if (key == "model.levels") m.levels = std::stoi(value);
  else if (key == "model.branches") m.branches = std::stoi(value);
  else if (key == "model.q") m.q = std::stod(value);
  else if (key == "model.hidden") m.hidden = std::stoi(value);
  else if (key == "model.feature_dim") m.feature_dim = std::stoi(value);
  else if (key == "model.classes") m.classes = std::stoi(value);
  else if (key == "model.k_max") m.k_max = std::stoi(value);
  else if (key == "model.gcn_layers") m.gcn_layers = std::stoi(value);
  else if (key == "model.router_hidden") m.router_hidden = std::stoi(value);
  else if (key == "model.alpha1") m.alpha1 = std::stod(value);
  else if (key == "model.alpha2") m.alpha2 = std::stod(value);
  else if (key == "model.alpha3") m.alpha3 = std::stod(value);
  else if (key == "model.lr") m.lr = std::stod(value);
  else if (key == "model.batch") m.batch = std::stoi(value);
  else if (key == "model.epochs") m.epochs = std::stoi(value);
  else if (key == "model.seed") m.seed = std::stoull(value);
  else if (key == "model.threads") m.threads = std::stoi(value);
  else if (key == "model.router") {
    if (value == "mlp") m.router_variant = RouterVariant::Mlp;
    else if (value == "linear") m.router_variant = RouterVariant::Linear;
    else throw std::invalid_argument("config: router must be mlp or linear");
  } else if (key == "model.perturb_space") {
    if (value == "logit") m.perturb_space = PerturbSpace::Logit;
    else if (value == "simplex") m.perturb_space = PerturbSpace::Simplex;
    else throw std::invalid_argument("config: perturb_space must be logit or simplex");
  } else if (key == "model.gate") m.gate = detail::parse_bool(value);
  else if (key == "model.entropy_sign") m.entropy_sign = std::stoi(value);
  else if (key == "model.literal_diversity") m.literal_eq9 = detail::parse_bool(value);
  else if (key == "model.link_all_levels") m.link_all_levels = detail::parse_bool(value);
  else if (key == "model.perturb_lambda") m.perturb_lambda = std::stod(value);
  else if (key == "model.perturb_mu") m.perturb_mu = std::stod(value);
  else if (key == "model.perturb_margin") m.perturb_margin = std::stod(value);
  else if (key == "model.variant") {
    bool ok = false;
    for (auto p : {VariantProfile::Full, VariantProfile::BiTree, VariantProfile::NoIar,
                   VariantProfile::NoPm, VariantProfile::Sv})
      if (value == variant_name(p)) {
        m.profile = p;
        ok = true;
      }
    if (!ok) throw std::invalid_argument("config: unknown variant '" + value + "'");
  } else if (key == "metrics.noise") rc.metric_noise = std::stod(value);
  else if (key == "metrics.runs") rc.metric_runs = std::stoi(value);
  else if (key == "metrics.kernel_truncation") rc.kernel_truncation = std::stoi(value);
  else if (key == "metrics.surrogate_epochs") rc.surrogate_epochs = std::stoi(value);
  else if (key == "output.dir") rc.out_dir = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline void parse_config_text(RunConfig& rc, const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": key outside section");
    apply_config_key(rc, section + "." + key, value);
  }
}

inline void load_config_file(RunConfig& rc, const std::filesystem::path& path) {
  parse_config_text(rc, read_text(path));
}

// Full echo: every effective value, defaults included.
inline std::string resolved_config_text(const RunConfig& rc) {
  const TifConfig& m = rc.model;
  std::ostringstream out;
  out << "[dataset]\n";
  out << "path = " << rc.dataset_path << "\n";
  out << "folds = " << rc.folds << "\n\n";
  out << "[model]\n";
  out << "levels = " << m.levels << "\n";
  out << "branches = " << m.branches << "\n";
  out << "q = " << m.q << "\n";
  out << "hidden = " << m.hidden << "\n";
  out << "feature_dim = " << m.feature_dim << "\n";
  out << "classes = " << m.classes << "\n";
  out << "k_max = " << m.k_max << "\n";
  out << "gcn_layers = " << m.gcn_layers << "\n";
  out << "router_hidden = " << m.router_hidden << "\n";
  out << "alpha1 = " << m.alpha1 << "\n";
  out << "alpha2 = " << m.alpha2 << "\n";
  out << "alpha3 = " << m.alpha3 << "\n";
  out << "lr = " << m.lr << "\n";
  out << "batch = " << m.batch << "\n";
  out << "epochs = " << m.epochs << "\n";
  out << "seed = " << m.seed << "\n";
  out << "threads = " << m.threads << "\n";
  out << "router = " << (m.router_variant == RouterVariant::Mlp ? "mlp" : "linear") << "\n";
  out << "perturb_space = " << (m.perturb_space == PerturbSpace::Logit ? "logit" : "simplex")
      << "\n";
  out << "gate = " << (m.gate ? "true" : "false") << "\n";
  out << "entropy_sign = " << m.entropy_sign << "\n";
  out << "literal_diversity = " << (m.literal_eq9 ? "true" : "false") << "\n";
  out << "link_all_levels = " << (m.link_all_levels ? "true" : "false") << "\n";
  out << "perturb_lambda = " << m.perturb_lambda << "\n";
  out << "perturb_mu = " << m.perturb_mu << "\n";
  out << "perturb_margin = " << m.perturb_margin << "\n";
  out << "variant = " << variant_name(m.profile) << "\n\n";
  out << "[metrics]\n";
  out << "noise = " << rc.metric_noise << "\n";
  out << "runs = " << rc.metric_runs << "\n";
  out << "kernel_truncation = " << rc.kernel_truncation << "\n";
  out << "surrogate_epochs = " << rc.surrogate_epochs << "\n\n";
  out << "[output]\n";
  out << "dir = " << rc.out_dir << "\n";
  return out.str();
}

}  // namespace tif
