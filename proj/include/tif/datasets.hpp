#pragma once

// Synthetic benchmark generators (GraphCycle, GraphFive, MultipleCycle)
// with ground-truth templates, TU flat-file ingestion, and fold management.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tif/graph.hpp"
#include "tif/rng.hpp"

namespace tif {

enum class SynthKind { GraphCycle, GraphFive, MultipleCycle };

inline const char* synth_name(SynthKind k) {
  switch (k) {
    case SynthKind::GraphCycle: return "graphcycle";
    case SynthKind::GraphFive: return "graphfive";
    case SynthKind::MultipleCycle: return "multiplecycle";
  }
  return "graphcycle";
}

struct SynthSpec {
  SynthKind kind = SynthKind::GraphCycle;
  int count = 2000;
  int community_lo = 8, community_hi = 15;
  int size_lo = 10, size_hi = 200;
  double p_lo = 0.05, p_hi = 0.15;
  int ba_attach = 2;  // edges per new BA node; unstated in the source material
  double scale = 1.0;
  uint64_t seed = 1;
  int feature_dim = 10;
  // MultipleCycle nesting ranges (before scaling)
  int mc_level1_lo = 4, mc_level1_hi = 7;
  int mc_level2_lo = 5, mc_level2_hi = 10;
  int mc_motif_cycle_lo = 3, mc_motif_cycle_hi = 8;

  void validate() const {
    if (count < 1) throw std::invalid_argument("SynthSpec: count must be >= 1");
    if (community_lo < 3 || community_hi < community_lo)
      throw std::invalid_argument("SynthSpec: bad community range");
    if (size_lo < 3 || size_hi < size_lo) throw std::invalid_argument("SynthSpec: bad size range");
    if (!(p_lo > 0.0 && p_hi < 1.0 && p_lo <= p_hi))
      throw std::invalid_argument("SynthSpec: probability range must be inside (0,1)");
    if (scale <= 0.0 || scale > 1.0) throw std::invalid_argument("SynthSpec: scale in (0,1]");
  }
};

struct DatasetBundle {
  std::vector<Graph> graphs;
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<int> folds;                     // per graph, -1 when unassigned
  std::vector<Graph> ground_truth;            // synthetic only; empty otherwise
  std::vector<std::vector<int>> level2_kinds; // MultipleCycle composition (0=cycle,1=chain)
  std::vector<std::vector<int>> node_labels;  // TU node labels, kept for round-trips
  bool has_node_features = false;
  std::string provenance;

  bool has_ground_truth() const { return !ground_truth.empty(); }
};

namespace detail {

using EdgeList = std::vector<std::pair<int, int>>;

inline Matrix edges_to_adjacency(int n, const EdgeList& edges) {
  Matrix a(n, n);
  for (auto [u, v] : edges) {
    if (u == v) continue;
    a.at(u, v) = 1.0;
    a.at(v, u) = 1.0;
  }
  return a;
}

inline bool connected(int n, const Matrix& a) {
  std::vector<int> stack{0};
  std::vector<bool> seen(n, false);
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v)
      if (a.at(u, v) > 0.0 && !seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
  }
  return count == n;
}

// Barabasi-Albert growth: seed clique of (attach+1) nodes, then preferential
// attachment of `attach` distinct targets per new node.
inline EdgeList barabasi_albert(Rng& rng, int n, int attach) {
  EdgeList edges;
  std::vector<int> endpoints;  // degree-proportional sampling pool
  int seed_n = std::min(n, attach + 1);
  for (int i = 0; i < seed_n; ++i)
    for (int j = i + 1; j < seed_n; ++j) {
      edges.push_back({i, j});
      endpoints.push_back(i);
      endpoints.push_back(j);
    }
  for (int v = seed_n; v < n; ++v) {
    std::set<int> targets;
    int guard = 0;
    while (static_cast<int>(targets.size()) < std::min(attach, v) && guard++ < 1000) {
      int t = endpoints[rng.uniform_int(0, static_cast<int>(endpoints.size()) - 1)];
      targets.insert(t);
    }
    for (int t : targets) {
      edges.push_back({v, t});
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  return edges;
}

// Truncated Pareto on [lo, hi] by inverse CDF. Calibrates community sizes
// toward the reference statistics.
inline int truncated_pareto(Rng& rng, int lo, int hi, double alpha) {
  if (lo >= hi) return lo;
  double u = rng.uniform(0.0, 1.0);
  double L = lo, H = hi;
  double t = 1.0 - std::pow(L / H, alpha);
  double x = L / std::pow(1.0 - u * t, 1.0 / alpha);
  return std::max(lo, std::min(hi, static_cast<int>(std::lround(x))));
}

// Backbone templates over c community slots.
inline EdgeList template_ring(int c) {
  EdgeList e;
  for (int i = 0; i < c; ++i) e.push_back({i, (i + 1) % c});
  return e;
}
inline EdgeList template_chain(int c) {
  EdgeList e;
  for (int i = 0; i + 1 < c; ++i) e.push_back({i, i + 1});
  return e;
}
inline EdgeList template_random_tree(Rng& rng, int c) {
  EdgeList e;
  for (int i = 1; i < c; ++i) e.push_back({i, rng.uniform_int(0, i - 1)});
  return e;
}
inline EdgeList template_star(int c) {
  EdgeList e;
  for (int i = 1; i < c; ++i) e.push_back({0, i});
  return e;
}
inline EdgeList template_wheel(int c) {
  // hub 0, ring over 1..c-1
  EdgeList e = template_star(c);
  for (int i = 1; i < c; ++i) {
    int j = i == c - 1 ? 1 : i + 1;
    if (c - 1 >= 3 || i < j) e.push_back({i, j});
  }
  return e;
}
inline EdgeList template_grid(int rows, int cols) {
  EdgeList e;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) e.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) e.push_back({id(r, c), id(r + 1, c)});
    }
  return e;
}
inline EdgeList template_ladder(int c) {
  // 2 x (c/2) grid
  return template_grid(2, c / 2);
}

inline bool grid_dims(int c, int& rows, int& cols) {
  int best = -1;
  for (int a = 2; a * a <= c; ++a)
    if (c % a == 0) best = a;
  if (best < 0) return false;
  rows = best;
  cols = c / best;
  return true;
}

// Expands a template over communities into one flat graph: BA communities,
// anchor-node backbone edges, then random cross-community noise edges along
// backbone-adjacent pairs.
struct CommunityGraph {
  Matrix adjacency;
  int n = 0;
};

inline CommunityGraph assemble_communities(Rng& rng, const std::vector<int>& sizes,
                                           const EdgeList& backbone, double p, int attach) {
  int c = static_cast<int>(sizes.size());
  std::vector<int> offset(c, 0);
  int n = 0;
  for (int i = 0; i < c; ++i) {
    offset[i] = n;
    n += sizes[i];
  }
  EdgeList edges;
  for (int i = 0; i < c; ++i)
    for (auto [u, v] : barabasi_albert(rng, sizes[i], attach))
      edges.push_back({offset[i] + u, offset[i] + v});
  for (auto [a, b] : backbone) {
    edges.push_back({offset[a], offset[b]});  // anchor nodes
    int tries = std::min(sizes[a], sizes[b]);
    for (int t = 0; t < tries; ++t)
      if (rng.bernoulli(p))
        edges.push_back({offset[a] + rng.uniform_int(0, sizes[a] - 1),
                         offset[b] + rng.uniform_int(0, sizes[b] - 1)});
  }
  CommunityGraph g;
  g.n = n;
  g.adjacency = edges_to_adjacency(n, edges);
  return g;
}

inline int scaled_lo(int v, double s, double expo, int floor_v) {
  return std::max(floor_v, static_cast<int>(std::lround(v * std::pow(s, expo))));
}

struct ScaledRanges {
  int community_lo, community_hi;
  int size_lo, size_hi;
};

// scale 1 keeps the configured ranges; scale 0.1 reproduces the desk-scale
// profile of 3-5 communities of 5-15 nodes.
inline ScaledRanges scaled_ranges(const SynthSpec& spec) {
  double s = spec.scale;
  ScaledRanges r;
  r.community_lo = scaled_lo(spec.community_lo, s, 0.45, 3);
  r.community_hi = std::max(r.community_lo + 2, scaled_lo(spec.community_hi, s, 0.45, 4));
  r.size_lo = scaled_lo(spec.size_lo, s, 0.30, 5);
  r.size_hi = std::max(r.size_lo + 5, scaled_lo(spec.size_hi, s, 1.125, 10));
  return r;
}

inline Graph finalize_graph(Matrix adjacency, int label, int feature_dim) {
  Graph g;
  g.n = adjacency.rows;
  g.adjacency = std::move(adjacency);
  g.features = degree_onehot_features(g.adjacency, feature_dim);
  g.label = label;
  return g;
}

inline Graph template_to_graph(int c, const EdgeList& edges, int label, int feature_dim) {
  return finalize_graph(edges_to_adjacency(c, edges), label, feature_dim);
}

}  // namespace detail

inline DatasetBundle gen_graphcycle(const SynthSpec& spec) {
  spec.validate();
  if (spec.kind != SynthKind::GraphCycle)
    throw std::invalid_argument("gen_graphcycle: wrong spec kind");
  auto ranges = detail::scaled_ranges(spec);
  DatasetBundle b;
  b.num_classes = 2;
  b.class_names = {"Cycle", "Non-Cycle"};
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    int label = i % 2;  // balanced by construction
    int c = rng.uniform_int(ranges.community_lo, ranges.community_hi);
    std::vector<int> sizes(c);
    for (auto& sz : sizes) sz = detail::truncated_pareto(rng, ranges.size_lo, ranges.size_hi, 1.3);
    detail::EdgeList backbone =
        label == 0 ? detail::template_ring(c) : detail::template_random_tree(rng, c);
    double p = rng.uniform(spec.p_lo, spec.p_hi);
    auto cg = detail::assemble_communities(rng, sizes, backbone, p, spec.ba_attach);
    b.graphs.push_back(detail::finalize_graph(std::move(cg.adjacency), label, spec.feature_dim));
    b.ground_truth.push_back(detail::template_to_graph(c, backbone, label, spec.feature_dim));
  }
  b.provenance = std::string("graphcycle seed=") + std::to_string(spec.seed) +
                 " scale=" + std::to_string(spec.scale) + " ba_attach=" +
                 std::to_string(spec.ba_attach);
  return b;
}

inline DatasetBundle gen_graphfive(const SynthSpec& spec) {
  spec.validate();
  if (spec.kind != SynthKind::GraphFive)
    throw std::invalid_argument("gen_graphfive: wrong spec kind");
  auto ranges = detail::scaled_ranges(spec);
  DatasetBundle b;
  b.num_classes = 5;
  b.class_names = {"Wheel", "Grid", "Tree", "Ladder", "Star"};
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    int label = i % 5;
    int c = rng.uniform_int(ranges.community_lo, ranges.community_hi);
    detail::EdgeList backbone;
    int guard = 0;
    for (;;) {
      if (guard++ > 200) throw std::runtime_error("gen_graphfive: cannot realize backbone");
      int rows = 0, cols = 0;
      switch (label) {
        case 0:
          if (c >= 4) backbone = detail::template_wheel(c);
          break;
        case 1:
          if (c >= 4 && detail::grid_dims(c, rows, cols))
            backbone = detail::template_grid(rows, cols);
          break;
        case 2:
          backbone = detail::template_random_tree(rng, c);
          break;
        case 3:
          if (c >= 4 && c % 2 == 0) backbone = detail::template_ladder(c);
          break;
        case 4:
          backbone = detail::template_star(c);
          break;
      }
      if (!backbone.empty()) break;
      c = rng.uniform_int(ranges.community_lo, ranges.community_hi);
    }
    std::vector<int> sizes(c);
    for (auto& sz : sizes) sz = detail::truncated_pareto(rng, ranges.size_lo, ranges.size_hi, 1.0);
    double p = rng.uniform(spec.p_lo, spec.p_hi);
    auto cg = detail::assemble_communities(rng, sizes, backbone, p, spec.ba_attach);
    b.graphs.push_back(detail::finalize_graph(std::move(cg.adjacency), label, spec.feature_dim));
    b.ground_truth.push_back(detail::template_to_graph(c, backbone, label, spec.feature_dim));
  }
  b.provenance = std::string("graphfive seed=") + std::to_string(spec.seed) +
                 " scale=" + std::to_string(spec.scale);
  return b;
}

inline DatasetBundle gen_multiplecycle(const SynthSpec& spec) {
  spec.validate();
  if (spec.kind != SynthKind::MultipleCycle)
    throw std::invalid_argument("gen_multiplecycle: wrong spec kind");
  double s = spec.scale;
  int l1_lo = detail::scaled_lo(spec.mc_level1_lo, s, 0.2, 3);
  int l1_hi = std::max(l1_lo + 1, detail::scaled_lo(spec.mc_level1_hi, s, 0.2, 4));
  int l2_lo = detail::scaled_lo(spec.mc_level2_lo, s, 0.25, 3);
  int l2_hi = std::max(l2_lo + 1, detail::scaled_lo(spec.mc_level2_hi, s, 0.25, 4));
  int mcyc_lo = detail::scaled_lo(spec.mc_motif_cycle_lo, s, 0.1, 3);
  int mcyc_hi = std::max(mcyc_lo + 1, detail::scaled_lo(spec.mc_motif_cycle_hi, s, 0.35, 4));

  DatasetBundle b;
  b.num_classes = 4;
  b.class_names = {"Pure Cycle", "Pure Chain", "Hybrid Cycle", "Hybrid Chain"};
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    int label = i % 4;
    bool level1_cycle = label == 0 || label == 2;
    bool pure = label < 2;

    int n1 = rng.uniform_int(l1_lo, l1_hi);
    detail::EdgeList level1 =
        level1_cycle ? detail::template_ring(n1) : detail::template_chain(n1);

    // level-2 kinds: 0 = cycle, 1 = chain
    std::vector<int> kinds(n1, level1_cycle ? 0 : 1);
    if (pure) {
      // pure: every level-2 structure matches the level-1 kind
    } else {
      bool ok = false;
      while (!ok) {
        for (auto& k : kinds) k = rng.uniform_int(0, 1);
        bool any0 = false, any1 = false;
        for (int k : kinds) (k == 0 ? any0 : any1) = true;
        ok = any0 && any1;
      }
    }

    // expand level-1 nodes into level-2 structures
    std::vector<std::vector<int>> l2_nodes(n1);  // global level-2 node ids
    detail::EdgeList l2_edges;
    int total2 = 0;
    for (int a = 0; a < n1; ++a) {
      int n2 = rng.uniform_int(l2_lo, l2_hi);
      for (int j = 0; j < n2; ++j) l2_nodes[a].push_back(total2 + j);
      auto sub = kinds[a] == 0 ? detail::template_ring(n2) : detail::template_chain(n2);
      for (auto [u, v] : sub) l2_edges.push_back({total2 + u, total2 + v});
      total2 += n2;
    }
    for (auto [a, c] : level1) l2_edges.push_back({l2_nodes[a][0], l2_nodes[c][0]});

    // expand each level-2 node into a level-3 motif
    std::vector<int> motif_anchor(total2);
    detail::EdgeList edges;
    int total3 = 0;
    for (int v = 0; v < total2; ++v) {
      int motif = rng.uniform_int(0, 3);  // triangle, star, trapezoid, cycle
      detail::EdgeList me;
      int mn = 0;
      switch (motif) {
        case 0:
          mn = 3;
          me = detail::template_ring(3);
          break;
        case 1:
          mn = 4;
          me = detail::template_star(4);
          break;
        case 2:
          // trapezoid: 4-cycle with one chord
          mn = 4;
          me = detail::template_ring(4);
          me.push_back({0, 2});
          break;
        case 3:
          mn = rng.uniform_int(mcyc_lo, mcyc_hi);
          me = detail::template_ring(mn);
          break;
      }
      motif_anchor[v] = total3;
      for (auto [u, w] : me) edges.push_back({total3 + u, total3 + w});
      total3 += mn;
    }
    for (auto [u, v] : l2_edges) edges.push_back({motif_anchor[u], motif_anchor[v]});

    b.graphs.push_back(detail::finalize_graph(detail::edges_to_adjacency(total3, edges), label,
                                              spec.feature_dim));
    b.ground_truth.push_back(detail::template_to_graph(n1, level1, label, spec.feature_dim));
    b.level2_kinds.push_back(kinds);
  }
  b.provenance = std::string("multiplecycle seed=") + std::to_string(spec.seed) +
                 " scale=" + std::to_string(spec.scale);
  return b;
}

inline DatasetBundle gen_synthetic(const SynthSpec& spec) {
  switch (spec.kind) {
    case SynthKind::GraphCycle: return gen_graphcycle(spec);
    case SynthKind::GraphFive: return gen_graphfive(spec);
    case SynthKind::MultipleCycle: return gen_multiplecycle(spec);
  }
  throw std::invalid_argument("gen_synthetic: unknown kind");
}

// ---------------------------------------------------------------------------
// TU flat-file format

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace detail

// Loads a TU-format dataset directory (DS_A.txt, DS_graph_indicator.txt,
// DS_graph_labels.txt, optional DS_node_labels.txt / DS_node_attributes.txt).
// Attribute-free datasets fall back to degree one-hot features.
inline DatasetBundle load_tu(const std::filesystem::path& dir, int fallback_feature_dim = 10,
                             std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  std::string prefix;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    auto pos = name.rfind("_A.txt");
    if (pos != std::string::npos && pos + 6 == name.size()) prefix = name.substr(0, pos);
  }
  if (prefix.empty()) throw std::runtime_error("load_tu: no *_A.txt found in " + dir.string());
  auto file = [&](const std::string& suffix) { return dir / (prefix + suffix); };

  auto indicator_lines = detail::read_lines(file("_graph_indicator.txt"));
  auto label_lines = detail::read_lines(file("_graph_labels.txt"));

  int total_nodes = static_cast<int>(indicator_lines.size());
  std::vector<int> graph_of(total_nodes);
  int num_graphs = 0;
  for (int i = 0; i < total_nodes; ++i) {
    graph_of[i] = std::stoi(indicator_lines[i]) - 1;
    num_graphs = std::max(num_graphs, graph_of[i] + 1);
  }
  if (static_cast<int>(label_lines.size()) != num_graphs)
    throw std::runtime_error("load_tu: graph label count mismatch");

  // remap labels to 0-based contiguous
  std::vector<int> raw_labels(num_graphs);
  std::map<int, int> label_map;
  for (int i = 0; i < num_graphs; ++i) {
    raw_labels[i] = std::stoi(label_lines[i]);
    label_map.emplace(raw_labels[i], 0);
  }
  int next = 0;
  for (auto& [k, v] : label_map) v = next++;

  std::vector<int> node_offset(num_graphs, -1);
  std::vector<int> graph_n(num_graphs, 0);
  for (int i = 0; i < total_nodes; ++i) {
    if (node_offset[graph_of[i]] < 0) node_offset[graph_of[i]] = i;
    ++graph_n[graph_of[i]];
  }

  std::vector<Matrix> adjacency;
  adjacency.reserve(num_graphs);
  for (int gi = 0; gi < num_graphs; ++gi) adjacency.push_back(Matrix(graph_n[gi], graph_n[gi]));

  bool asymmetric = false;
  for (const auto& line : detail::read_lines(file("_A.txt"))) {
    auto row = detail::parse_csv_row(line);
    if (row.size() != 2) throw std::runtime_error("load_tu: bad edge line: " + line);
    int u = static_cast<int>(row[0]) - 1, v = static_cast<int>(row[1]) - 1;
    if (u < 0 || u >= total_nodes || v < 0 || v >= total_nodes)
      throw std::runtime_error("load_tu: dangling node index in edge list");
    if (graph_of[u] != graph_of[v])
      throw std::runtime_error("load_tu: edge crosses graph boundary");
    if (u == v) continue;
    int gi = graph_of[u];
    int lu = u - node_offset[gi], lv = v - node_offset[gi];
    if (adjacency[gi].at(lu, lv) == 0.0 && adjacency[gi].at(lv, lu) == 0.0) asymmetric = true;
    adjacency[gi].at(lu, lv) = 1.0;
    adjacency[gi].at(lv, lu) = 1.0;  // auto-symmetrize
  }
  if (asymmetric && warnings)
    warnings->push_back("edge list was not fully symmetric; symmetrized");

  DatasetBundle b;
  b.num_classes = next;
  for (auto& [k, v] : label_map) b.class_names.push_back(std::to_string(k));

  // node features: attributes verbatim > one-hot node labels > degree one-hot
  std::vector<std::vector<double>> attrs;
  std::vector<int> nlabels;
  bool have_attrs = fs::exists(file("_node_attributes.txt"));
  bool have_nlabels = fs::exists(file("_node_labels.txt"));
  if (have_attrs) {
    for (const auto& line : detail::read_lines(file("_node_attributes.txt")))
      attrs.push_back(detail::parse_csv_row(line));
    if (static_cast<int>(attrs.size()) != total_nodes)
      throw std::runtime_error("load_tu: node attribute count mismatch");
  }
  std::map<int, int> nlabel_map;
  if (have_nlabels) {
    for (const auto& line : detail::read_lines(file("_node_labels.txt"))) {
      nlabels.push_back(std::stoi(line));
      nlabel_map.emplace(nlabels.back(), 0);
    }
    if (nlabels.empty()) {
      have_nlabels = false;  // empty optional file: degree fallback
      if (warnings) warnings->push_back("empty node label file; using degree features");
    } else if (static_cast<int>(nlabels.size()) != total_nodes) {
      throw std::runtime_error("load_tu: node label count mismatch");
    } else {
      int nn = 0;
      for (auto& [k, v] : nlabel_map) v = nn++;
    }
  }

  for (int gi = 0; gi < num_graphs; ++gi) {
    Graph g;
    g.n = graph_n[gi];
    g.adjacency = std::move(adjacency[gi]);
    g.label = label_map[raw_labels[gi]];
    if (have_attrs) {
      int d = static_cast<int>(attrs[node_offset[gi]].size());
      g.features = Matrix(g.n, d);
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < d; ++j) g.features.at(i, j) = attrs[node_offset[gi] + i][j];
      b.has_node_features = true;
    } else if (have_nlabels) {
      g.features = Matrix(g.n, static_cast<int>(nlabel_map.size()));
      std::vector<int> gl;
      for (int i = 0; i < g.n; ++i) {
        int raw = nlabels[node_offset[gi] + i];
        g.features.at(i, nlabel_map[raw]) = 1.0;
        gl.push_back(raw);
      }
      b.node_labels.push_back(gl);
      b.has_node_features = true;
    } else {
      g.features = degree_onehot_features(g.adjacency, fallback_feature_dim);
    }
    b.graphs.push_back(std::move(g));
  }
  b.provenance = "tu:" + dir.string();
  return b;
}

// Writes the bundle back out in TU format (deterministic edge order: each
// undirected edge as "u, v" then "v, u" with u < v, ascending).
inline void save_tu(const DatasetBundle& b, const std::filesystem::path& dir,
                    const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream fa(dir / (name + "_A.txt"));
  std::ofstream fi(dir / (name + "_graph_indicator.txt"));
  std::ofstream fl(dir / (name + "_graph_labels.txt"));
  int offset = 0;
  for (size_t gi = 0; gi < b.graphs.size(); ++gi) {
    const Graph& g = b.graphs[gi];
    for (int i = 0; i < g.n; ++i) {
      fi << (gi + 1) << "\n";
      for (int j = i + 1; j < g.n; ++j)
        if (g.adjacency.at(i, j) > 0.0) {
          fa << (offset + i + 1) << ", " << (offset + j + 1) << "\n";
          fa << (offset + j + 1) << ", " << (offset + i + 1) << "\n";
        }
    }
    fl << g.label + 1 << "\n";
    offset += g.n;
  }
  if (!b.node_labels.empty()) {
    std::ofstream fn(dir / (name + "_node_labels.txt"));
    for (const auto& gl : b.node_labels)
      for (int v : gl) fn << v << "\n";
  }
}

// Stratified-by-label shuffled fold assignment; per-class counts across
// folds differ by at most one.
inline void assign_folds(DatasetBundle& b, int k, uint64_t seed,
                         std::vector<std::string>* warnings = nullptr) {
  if (k < 2) throw std::invalid_argument("assign_folds: k must be >= 2");
  b.folds.assign(b.graphs.size(), -1);
  std::vector<std::vector<int>> by_class(b.num_classes);
  for (size_t i = 0; i < b.graphs.size(); ++i) by_class[b.graphs[i].label].push_back(i);
  Rng rng(derive_seed(seed, 0xF01D5));
  int cursor = 0;
  for (int c = 0; c < b.num_classes; ++c) {
    auto& members = by_class[c];
    if (static_cast<int>(members.size()) < k && warnings)
      warnings->push_back("class " + std::to_string(c) + " has fewer members than folds");
    std::shuffle(members.begin(), members.end(), rng.engine());
    for (int m : members) b.folds[m] = cursor++ % k;
  }
}

inline std::pair<std::vector<int>, std::vector<int>> split_fold(const DatasetBundle& b,
                                                                int heldout) {
  std::vector<int> train, test;
  for (size_t i = 0; i < b.graphs.size(); ++i)
    (b.folds[i] == heldout ? test : train).push_back(static_cast<int>(i));
  return {train, test};
}

}  // namespace tif
