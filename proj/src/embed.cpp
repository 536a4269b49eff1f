#include "fixseeker/embed.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <unordered_map>

#include "fixseeker/error.hpp"
#include "fixseeker/kernels.hpp"

namespace fixseeker {

std::uint64_t HashEmbedder::fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> HashEmbedder::tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto word = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (word(c) || c >= 0x80) {
      std::size_t j = i;
      while (j < text.size() &&
             (word(static_cast<unsigned char>(text[j])) || static_cast<unsigned char>(text[j]) >= 0x80))
        ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (c == '[' && (text.substr(i, 5) == "[CLS]" || text.substr(i, 5) == "[SEP]" ||
                            text.substr(i, 5) == "[EOS]")) {
      out.emplace_back(text.substr(i, 5));
      i += 5;
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

std::vector<double> HashEmbedder::embed(std::string_view text) {
  std::vector<double> v(kFeatureWidth, 0.0);
  const auto toks = tokens(text);
  auto add = [&](std::uint64_t h) {
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % kFeatureWidth] += sign;
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    add(fnv1a(toks[i]));
    if (i + 1 < toks.size()) add(fnv1a(toks[i] + '\x1f' + toks[i + 1]));
  }
  const double norm = std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
  if (norm > 0) kernels::scale(1.0 / norm, v.data(), v.size());
  return v;
}

Matrix HashEmbedder::embed_batch(const std::vector<std::string>& texts) {
  Matrix out(texts.size(), kFeatureWidth);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto v = embed(texts[i]);
    std::copy(v.begin(), v.end(), out.row(i));
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(std::string_view spec, bool allow_fallback,
                                        const std::function<void(const std::string&)>& warn) {
  if (spec == "builtin") return std::make_unique<HashEmbedder>();
  std::string address;
  if (spec == "service") {
    const char* env = std::getenv("FIXSEEKER_EMBEDDER");
    if (!env || !*env)
      throw Error(ErrorCode::InvalidArgument, "--embedder service needs FIXSEEKER_EMBEDDER=host:port");
    address = env;
  } else if (spec.substr(0, 8) == "service:") {
    address = std::string(spec.substr(8));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown embedder '" + std::string(spec) + "'");
  }
  ServiceOptions opts;
  opts.address = address;
  auto service = std::make_unique<ServiceEmbedder>(opts);
  try {
    const auto info = service->health();
    if (info.width != kFeatureWidth)
      throw Error(ErrorCode::EmbedderFailure, "service reports width " + std::to_string(info.width));
  } catch (const Error& e) {
    if (!allow_fallback) throw;
    if (warn) warn(std::string("embedding service unavailable, using builtin embedder: ") + e.what());
    return std::make_unique<HashEmbedder>();
  }
  return service;
}

namespace embed {

std::string node_input_text(const UnifiedHunkNode& node) {
  std::string out = "[CLS]";
  for (std::size_t i = 0; i < node.removed_lines.size(); ++i) {
    if (i) out += '\n';
    out += '-';
    out += node.removed_lines[i];
  }
  out += "[SEP]";
  for (std::size_t i = 0; i < node.added_lines.size(); ++i) {
    if (i) out += '\n';
    out += '+';
    out += node.added_lines[i];
  }
  out += "[EOS]";
  return out;
}

EdgeBits edge_vector(const std::set<EdgeKind>& kinds) {
  if (kinds.empty()) throw Error(ErrorCode::EmptyKindSet, "edge without kinds");
  EdgeBits bits{0, 0, 0, 0};
  for (const auto k : kinds) bits[static_cast<std::size_t>(k)] = 1;
  return bits;
}

void edge_tensors(const CommitHCG& g, GraphTensors& out) {
  std::unordered_map<int, int> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, static_cast<int>(i));
  std::map<std::pair<int, int>, std::set<EdgeKind>> pairs;
  for (const auto& e : g.edges) {
    const auto s = index.find(e.src), d = index.find(e.dst);
    if (s == index.end() || d == index.end())
      throw Error(ErrorCode::DanglingEdge, "edge endpoint is not a node");
    pairs[{s->second, d->second}].insert(e.kind);
    if (e.kind == EdgeKind::SIM) pairs[{d->second, s->second}].insert(e.kind);
  }
  out.edge_index[0].clear();
  out.edge_index[1].clear();
  out.edge_attr.clear();
  for (const auto& [pair, kinds] : pairs) {
    out.edge_index[0].push_back(pair.first);
    out.edge_index[1].push_back(pair.second);
    out.edge_attr.push_back(edge_vector(kinds));
  }
}

std::vector<GraphTensors> embed_graphs(const std::vector<CommitHCG>& graphs, Embedder& e) {
  std::vector<std::string> texts;
  for (const auto& g : graphs)
    for (const auto& n : g.nodes) texts.push_back(node_input_text(n));
  const Matrix features = texts.empty() ? Matrix(0, kFeatureWidth) : e.embed_batch(texts);
  if (features.rows != texts.size() || features.cols != kFeatureWidth)
    throw Error(ErrorCode::EmbedderFailure, e.name() + " returned a " + std::to_string(features.rows) +
                                                "x" + std::to_string(features.cols) + " matrix");
  std::vector<GraphTensors> out(graphs.size());
  std::size_t row = 0;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto& g = graphs[k];
    auto& t = out[k];
    t.node_features = Matrix(g.nodes.size(), kFeatureWidth);
    for (std::size_t i = 0; i < g.nodes.size(); ++i, ++row)
      std::copy(features.row(row), features.row(row) + kFeatureWidth, t.node_features.row(i));
    edge_tensors(g, t);
    if (g.label) t.label = static_cast<int>(*g.label);
  }
  return out;
}

GraphTensors embed_graph(const CommitHCG& g, Embedder& e) {
  return std::move(embed_graphs({g}, e).front());
}

}  // namespace embed
}  // namespace fixseeker
