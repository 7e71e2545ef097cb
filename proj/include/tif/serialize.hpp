#pragma once

// On-disk artifacts: model checkpoints, explanation traces (JSON + DOT),
// dataset manifests, and metric reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tif/datasets.hpp"
#include "tif/model.hpp"

namespace tif {

using nlohmann::json;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline json config_to_json(const TifConfig& c) {
  return json{{"levels", c.levels},
              {"branches", c.branches},
              {"q", c.q},
              {"hidden", c.hidden},
              {"feature_dim", c.feature_dim},
              {"classes", c.classes},
              {"k_max", c.k_max},
              {"gcn_layers", c.gcn_layers},
              {"router_hidden", c.router_hidden},
              {"alpha1", c.alpha1},
              {"alpha2", c.alpha2},
              {"alpha3", c.alpha3},
              {"lr", c.lr},
              {"batch", c.batch},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"threads", c.threads},
              {"router", c.router_variant == RouterVariant::Mlp ? "mlp" : "linear"},
              {"perturb_space", c.perturb_space == PerturbSpace::Logit ? "logit" : "simplex"},
              {"gate", c.gate},
              {"entropy_sign", c.entropy_sign},
              {"literal_diversity", c.literal_eq9},
              {"link_all_levels", c.link_all_levels},
              {"perturb_lambda", c.perturb_lambda},
              {"perturb_mu", c.perturb_mu},
              {"perturb_margin", c.perturb_margin},
              {"variant", variant_name(c.profile)}};
}

inline TifConfig config_from_json(const json& j) {
  TifConfig c;
  c.levels = j.at("levels");
  c.branches = j.at("branches");
  c.q = j.at("q");
  c.hidden = j.at("hidden");
  c.feature_dim = j.at("feature_dim");
  c.classes = j.at("classes");
  c.k_max = j.at("k_max");
  c.gcn_layers = j.at("gcn_layers");
  c.router_hidden = j.at("router_hidden");
  c.alpha1 = j.at("alpha1");
  c.alpha2 = j.at("alpha2");
  c.alpha3 = j.at("alpha3");
  c.lr = j.at("lr");
  c.batch = j.at("batch");
  c.epochs = j.at("epochs");
  c.seed = j.at("seed");
  c.threads = j.at("threads");
  c.router_variant = j.at("router") == "mlp" ? RouterVariant::Mlp : RouterVariant::Linear;
  c.perturb_space = j.at("perturb_space") == "logit" ? PerturbSpace::Logit : PerturbSpace::Simplex;
  c.gate = j.at("gate");
  c.entropy_sign = j.at("entropy_sign");
  c.literal_eq9 = j.at("literal_diversity");
  c.link_all_levels = j.at("link_all_levels");
  c.perturb_lambda = j.at("perturb_lambda");
  c.perturb_mu = j.at("perturb_mu");
  c.perturb_margin = j.at("perturb_margin");
  std::string v = j.at("variant");
  for (auto p : {VariantProfile::Full, VariantProfile::BiTree, VariantProfile::NoIar,
                 VariantProfile::NoPm, VariantProfile::Sv})
    if (v == variant_name(p)) c.profile = p;
  return c;
}

// Checkpoint: "TIF1" header line, config echo as one JSON line, then one line
// per parameter: name rows cols values... (full precision).
inline void save_checkpoint(const TifModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path.string());
  out << "TIF1\n";
  out << config_to_json(model.config).dump() << "\n";
  out << model.params.size() << "\n";
  for (int p = 0; p < model.params.size(); ++p) {
    const Param& pr = model.params[p];
    out << pr.name << " " << pr.value.rows << " " << pr.value.cols << " " << (pr.trainable ? 1 : 0);
    for (double v : pr.value.data) out << " " << detail::fmt_double(v);
    out << "\n";
  }
}

inline TifModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  if (header != "TIF1") throw std::runtime_error("load_checkpoint: bad header in " + path.string());
  std::string cfg_line;
  std::getline(in, cfg_line);
  TifModel model = TifModel::create(config_from_json(json::parse(cfg_line)));
  int count = 0;
  in >> count;
  if (count != model.params.size())
    throw std::runtime_error("load_checkpoint: parameter count does not match config");
  for (int p = 0; p < count; ++p) {
    std::string name;
    int rows, cols, trainable;
    in >> name >> rows >> cols >> trainable;
    int idx = model.params.find(name);
    if (idx < 0) throw std::runtime_error("load_checkpoint: unknown parameter " + name);
    Param& pr = model.params[idx];
    if (pr.value.rows != rows || pr.value.cols != cols)
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    for (double& v : pr.value.data) in >> v;
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file");
  return model;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json trace_to_json(const TreeTrace& t) {
  json levels = json::array();
  for (const auto& l : t.levels) {
    levels.push_back(json{{"selected", l.selected},
                          {"probs", l.probs},
                          {"graph", json{{"n", l.coarse.n},
                                         {"adj", matrix_to_json(l.coarse.adjacency)},
                                         {"feat", matrix_to_json(l.coarse.features)}}}});
  }
  return json{{"levels", levels}, {"pred", t.pred}, {"probs", t.probs}};
}

// One digraph per trace; tree nodes labeled "level:branch", chosen path bold.
inline std::string trace_to_dot(const TreeTrace& t, int branches) {
  std::ostringstream out;
  out << "digraph trace {\n  rankdir=TB;\n  root [label=\"root\"];\n";
  for (size_t l = 0; l < t.levels.size(); ++l)
    for (int b = 0; b < branches; ++b)
      out << "  n" << l << "_" << b << " [label=\"" << l << ":" << b << "\"];\n";
  for (size_t l = 0; l < t.levels.size(); ++l) {
    std::string parent =
        l == 0 ? std::string("root")
               : "n" + std::to_string(l - 1) + "_" + std::to_string(t.levels[l - 1].selected);
    for (int b = 0; b < branches; ++b) {
      out << "  " << parent << " -> n" << l << "_" << b;
      if (b == t.levels[l].selected) out << " [style=bold, penwidth=2]";
      out << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Dataset manifest.

namespace detail {

// FNV-1a over the rounded structural payload; stable across platforms.
inline uint64_t bundle_checksum(const DatasetBundle& b) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const Graph& g : b.graphs) {
    mix(g.n);
    mix(g.label);
    for (int i = 0; i < g.n; ++i)
      for (int j = i + 1; j < g.n; ++j)
        if (g.adjacency.at(i, j) > 0.0) mix(static_cast<uint64_t>(i) << 32 | j);
  }
  return h;
}

}  // namespace detail

inline json bundle_manifest(const DatasetBundle& b) {
  std::vector<int> per_class(b.num_classes, 0);
  double node_sum = 0.0, edge_sum = 0.0;
  for (const Graph& g : b.graphs) {
    per_class[g.label]++;
    node_sum += g.n;
    double e = 0.0;
    for (double v : g.adjacency.data) e += v > 0.0 ? 1.0 : 0.0;
    edge_sum += e / 2.0;
  }
  json m{{"graphs", b.graphs.size()},
         {"classes", b.num_classes},
         {"class_names", b.class_names},
         {"per_class", per_class},
         {"avg_nodes", b.graphs.empty() ? 0.0 : node_sum / b.graphs.size()},
         {"avg_edges", b.graphs.empty() ? 0.0 : edge_sum / b.graphs.size()},
         {"has_ground_truth", b.has_ground_truth()},
         {"provenance", b.provenance},
         {"checksum", detail::bundle_checksum(b)}};
  if (!b.folds.empty()) m["folds"] = b.folds;
  return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Ground-truth templates travel as a JSON sidecar next to the TU files.
inline void save_ground_truth(const DatasetBundle& b, const std::filesystem::path& path) {
  json arr = json::array();
  for (const Graph& g : b.ground_truth)
    arr.push_back(json{{"n", g.n}, {"label", g.label}, {"adj", matrix_to_json(g.adjacency)}});
  write_text(path, json{{"templates", arr}}.dump(2) + "\n");
}

inline void load_ground_truth(DatasetBundle& b, const std::filesystem::path& path,
                              int feature_dim) {
  json j = json::parse(read_text(path));
  b.ground_truth.clear();
  for (const auto& t : j.at("templates")) {
    Graph g;
    g.n = t.at("n");
    g.label = t.at("label");
    g.adjacency = Matrix(g.n, g.n);
    for (int i = 0; i < g.n; ++i)
      for (int jj = 0; jj < g.n; ++jj) g.adjacency.at(i, jj) = t.at("adj")[i][jj];
    g.features = degree_onehot_features(g.adjacency, feature_dim);
    b.ground_truth.push_back(std::move(g));
  }
  if (b.ground_truth.size() != b.graphs.size())
    throw std::runtime_error("ground truth count does not match dataset");
}

}  // namespace tif
