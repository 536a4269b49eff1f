#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fixseeker/hcg.hpp"
#include "fixseeker/tensor.hpp"

namespace fixseeker {

inline constexpr std::size_t kFeatureWidth = 768;

/// Edge attribute bits in (CALL, CD, DD, SIM) order.
using EdgeBits = std::array<std::uint8_t, 4>;

struct GraphTensors {
  Matrix node_features;                  // |V| x 768, rows in node order
  std::array<std::vector<int>, 2> edge_index;  // (source, target) per column
  std::vector<EdgeBits> edge_attr;       // one row per column, never zero
  std::optional<int> label;

  std::size_t num_nodes() const { return node_features.rows; }
  std::size_t num_edges() const { return edge_attr.size(); }
};

/// Maps node texts to 768-wide rows. One caller at a time per instance.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Matrix embed_batch(const std::vector<std::string>& texts) = 0;
  virtual std::string name() const = 0;
  virtual bool deterministic() const = 0;
};

/// Signed feature hashing of token unigrams and bigrams, L2-normalized.
class HashEmbedder final : public Embedder {
 public:
  Matrix embed_batch(const std::vector<std::string>& texts) override;
  std::string name() const override { return "builtin-hash"; }
  bool deterministic() const override { return true; }

  static std::vector<double> embed(std::string_view text);
  /// Tokens hashed for `text`: identifier/number runs, bracketed markers, and
  /// single punctuation characters.
  static std::vector<std::string> tokens(std::string_view text);
  static std::uint64_t fnv1a(std::string_view bytes);
};

namespace protocol {

// Wire format: decimal byte length, '\n', then that many bytes of JSON.
std::string encode_frame(std::string_view payload);
/// Extracts one frame from the front of `buffer`; nullopt while incomplete.
/// Throws EmbedderFailure on a malformed length line.
std::optional<std::string> take_frame(std::string& buffer);

std::string embed_request(const std::vector<std::string>& texts);
std::string health_request();

struct EmbedResponse {
  std::string model;
  std::string revision;
  Matrix vectors;
};
struct HealthInfo {
  std::string model;
  std::string revision;
  std::size_t width = 0;
  std::size_t max_seq_len = 0;
};

/// Validate and decode; throw EmbedderFailure on error replies, wrong counts,
/// widths other than 768 and non-finite values.
EmbedResponse parse_embed_response(std::string_view payload, std::size_t expected);
HealthInfo parse_health_response(std::string_view payload);

}  // namespace protocol

struct ServiceOptions {
  std::string address;  // host:port
  int retries = 3;
  int backoff_ms = 100;  // doubled after each failed attempt
  int timeout_ms = 30000;
  std::size_t max_batch = 64;
};

/// Client for the external embedding service.
class ServiceEmbedder final : public Embedder {
 public:
  explicit ServiceEmbedder(ServiceOptions opts);
  Matrix embed_batch(const std::vector<std::string>& texts) override;
  std::string name() const override { return "service:" + opts_.address; }
  bool deterministic() const override { return true; }
  protocol::HealthInfo health();

 private:
  std::string round_trip(const std::string& request);
  ServiceOptions opts_;
};

/// "builtin", "service" (address from FIXSEEKER_EMBEDDER) or
/// "service:host:port". With `allow_fallback`, an unreachable service is
/// reported through `warn` and replaced by the builtin embedder.
std::unique_ptr<Embedder> make_embedder(std::string_view spec, bool allow_fallback = false,
                                        const std::function<void(const std::string&)>& warn = {});

namespace embed {

/// "[CLS]" removed lines "[SEP]" added lines "[EOS]"; each line keeps its
/// -/+ prefix and lines within a segment are joined by newlines.
std::string node_input_text(const UnifiedHunkNode& node);

/// Throws EmptyKindSet for an empty set.
EdgeBits edge_vector(const std::set<EdgeKind>& kinds);

/// Fills edge_index and edge_attr: SIM expanded to both directions, one
/// column per ordered node pair, columns sorted by (source, target).
void edge_tensors(const CommitHCG& g, GraphTensors& out);

GraphTensors embed_graph(const CommitHCG& g, Embedder& e);
/// Same as embed_graph per element, with texts batched across graphs.
std::vector<GraphTensors> embed_graphs(const std::vector<CommitHCG>& graphs, Embedder& e);

}  // namespace embed
}  // namespace fixseeker
