#include <doctest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fixseeker/embed.hpp"
#include "fixseeker/error.hpp"
#include "fixseeker/util/rng.hpp"
#include "support/fixture_repo.hpp"

using namespace fixseeker;

namespace {

const std::string kData = FIXSEEKER_TEST_DATA;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

UnifiedHunkNode node(int id, std::vector<std::string> removed, std::vector<std::string> added) {
  UnifiedHunkNode n;
  n.id = id;
  n.file = make_file_change("a.c", "a.c");
  n.removed_lines = std::move(removed);
  n.added_lines = std::move(added);
  return n;
}

CommitHCG graph(int n, std::set<HunkEdge> edges) {
  CommitHCG g;
  for (int i = 0; i < n; ++i) g.nodes.push_back(node(i, {"x = " + std::to_string(i) + ";"}, {}));
  g.edges = std::move(edges);
  return g;
}

// Serves the frame protocol on 127.0.0.1; every connection carries one
// request answered by `reply` (empty reply: hang up without answering).
class FakeService {
 public:
  explicit FakeService(std::function<std::string(const std::string&)> reply) : reply_(std::move(reply)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    REQUIRE(::listen(fd_, 8) == 0);
    thread_ = std::thread([this] { serve(); });
  }
  ~FakeService() {
    stop_ = true;
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    thread_.join();
  }
  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }

 private:
  void serve() {
    while (!stop_) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) return;
      std::string buffer;
      char chunk[4096];
      std::optional<std::string> req;
      while (!(req = protocol::take_frame(buffer))) {
        const ssize_t n = ::recv(c, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
      }
      if (req) {
        ++requests_;
        const std::string out = reply_(*req);
        if (!out.empty()) {
          const std::string frame = protocol::encode_frame(out);
          ::send(c, frame.data(), frame.size(), MSG_NOSIGNAL);
        }
      }
      ::close(c);
    }
  }

  std::function<std::string(const std::string&)> reply_;
  int fd_ = -1;
  int port_ = 0;
  std::thread thread_;
  std::atomic<bool> stop_{false};
  std::atomic<int> requests_{0};
};

// A well-behaved service: health, and hash vectors for embed requests.
std::string good_reply(const std::string& req) {
  const auto j = nlohmann::json::parse(req);
  if (j.at("op") == "health")
    return R"({"ok":true,"model":"m","revision":"r","width":768,"max_seq_len":512})";
  nlohmann::json vectors = nlohmann::json::array();
  for (const auto& t : j.at("texts")) vectors.push_back(HashEmbedder::embed(t.get<std::string>()));
  return nlohmann::json{{"ok", true}, {"model", "m"}, {"revision", "r"}, {"vectors", vectors}}.dump();
}

}  // namespace

TEST_CASE("node input text") {
  CHECK(embed::node_input_text(node(0, {"int x;"}, {"long x;"})) == "[CLS]-int x;[SEP]+long x;[EOS]");
  CHECK(embed::node_input_text(node(0, {}, {"a();", "b();"})) == "[CLS][SEP]+a();\n+b();[EOS]");
  CHECK(embed::node_input_text(node(0, {"\tif (x)", "\t\treturn;"}, {"\tif (x && y)", "\t\treturn;"})) ==
        "[CLS]-\tif (x)\n-\t\treturn;[SEP]+\tif (x && y)\n+\t\treturn;[EOS]");
  CHECK(embed::node_input_text(node(0, {"gone"}, {})) == "[CLS]-gone[SEP][EOS]");
}

TEST_CASE("edge vectors") {
  CHECK(embed::edge_vector({EdgeKind::CD, EdgeKind::SIM}) == EdgeBits{0, 1, 0, 1});
  CHECK(embed::edge_vector({EdgeKind::CALL}) == EdgeBits{1, 0, 0, 0});
  CHECK(embed::edge_vector({EdgeKind::CALL, EdgeKind::CD, EdgeKind::DD, EdgeKind::SIM}) ==
        EdgeBits{1, 1, 1, 1});
  CHECK(code_of([] { embed::edge_vector({}); }) == ErrorCode::EmptyKindSet);

  const EdgeKind kinds[] = {EdgeKind::CALL, EdgeKind::CD, EdgeKind::DD, EdgeKind::SIM};
  std::set<EdgeBits> seen;
  for (int mask = 1; mask < 16; ++mask) {
    std::set<EdgeKind> s;
    for (int b = 0; b < 4; ++b)
      if (mask & (1 << b)) s.insert(kinds[b]);
    const auto v = embed::edge_vector(s);
    CHECK(v != EdgeBits{0, 0, 0, 0});
    for (int b = 0; b < 4; ++b) CHECK(v[b] == ((mask >> b) & 1));
    seen.insert(v);
  }
  CHECK(seen.size() == 15);
}

TEST_CASE("hash embedder") {
  CHECK(HashEmbedder::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(HashEmbedder::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(HashEmbedder::tokens("[CLS]-x1 = y->z;[SEP][EOS]") ==
        std::vector<std::string>{"[CLS]", "-", "x1", "=", "y", "-", ">", "z", ";", "[SEP]", "[EOS]"});

  const std::string a = "[CLS]-int len = buf_len;[SEP]+size_t len = buf_len;[EOS]";
  const std::string b = "[CLS]-int len = buf_size;[SEP]+size_t len = buf_size;[EOS]";
  const auto va = HashEmbedder::embed(a);
  CHECK(va == HashEmbedder::embed(a));
  CHECK(va.size() == kFeatureWidth);
  double norm = 0;
  for (double x : va) norm += x * x;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);

  // Bucket oracle: the coordinates touched by the differing features must
  // carry the count differences.
  auto counts = [](const std::string& text) {
    std::vector<double> c(kFeatureWidth, 0.0);
    const auto t = HashEmbedder::tokens(text);
    auto add = [&](const std::string& f) {
      const auto h = HashEmbedder::fnv1a(f);
      c[h % kFeatureWidth] += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
      add(t[i]);
      if (i + 1 < t.size()) add(t[i] + '\x1f' + t[i + 1]);
    }
    return c;
  };
  const auto ca = counts(a), cb = counts(b);
  const auto vb = HashEmbedder::embed(b);
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < kFeatureWidth; ++i) {
    na += ca[i] * ca[i];
    nb += cb[i] * cb[i];
  }
  bool differs = false;
  for (std::size_t i = 0; i < kFeatureWidth; ++i) {
    CHECK(va[i] == doctest::Approx(ca[i] / std::sqrt(na)).epsilon(1e-12));
    CHECK(vb[i] == doctest::Approx(cb[i] / std::sqrt(nb)).epsilon(1e-12));
    differs = differs || va[i] != vb[i];
  }
  CHECK(differs);

  HashEmbedder e;
  const auto m = e.embed_batch({a, b, a});
  CHECK(m.rows == 3);
  CHECK(std::equal(va.begin(), va.end(), m.row(2)));
}

TEST_CASE("graph tensors") {
  HashEmbedder e;
  SUBCASE("single hunk") {
    const auto t = embed::embed_graph(graph(1, {}), e);
    CHECK(t.node_features.rows == 1);
    CHECK(t.node_features.cols == 768);
    CHECK(t.num_edges() == 0);
    CHECK(t.edge_index[0].empty());
  }
  SUBCASE("sim is bidirectional") {
    const auto t = embed::embed_graph(graph(2, {{0, 1, EdgeKind::SIM, EdgeSide::BOTH}}), e);
    CHECK(t.edge_index[0] == std::vector<int>{0, 1});
    CHECK(t.edge_index[1] == std::vector<int>{1, 0});
    CHECK(t.edge_attr == std::vector<EdgeBits>{{0, 0, 0, 1}, {0, 0, 0, 1}});
  }
  SUBCASE("kinds merge per ordered pair") {
    const auto t = embed::embed_graph(
        graph(2, {{0, 1, EdgeKind::CALL, EdgeSide::BOTH}, {0, 1, EdgeKind::SIM, EdgeSide::BOTH}}), e);
    CHECK(t.edge_index[0] == std::vector<int>{0, 1});
    CHECK(t.edge_index[1] == std::vector<int>{1, 0});
    CHECK(t.edge_attr == std::vector<EdgeBits>{{1, 0, 0, 1}, {0, 0, 0, 1}});
  }
  SUBCASE("ids map to row positions") {
    CommitHCG g;
    g.nodes = {node(3, {"a"}, {}), node(7, {}, {"b"})};
    g.edges = {{7, 3, EdgeKind::DD, EdgeSide::BOTH}};
    g.label = Label::VFC;
    const auto t = embed::embed_graph(g, e);
    CHECK(t.edge_index[0] == std::vector<int>{1});
    CHECK(t.edge_index[1] == std::vector<int>{0});
    CHECK(t.label == 1);
    const auto row = HashEmbedder::embed("[CLS][SEP]+b[EOS]");
    CHECK(std::equal(row.begin(), row.end(), t.node_features.row(1)));
  }
  SUBCASE("random graphs") {
    util::Rng rng(8);
    const EdgeKind kinds[] = {EdgeKind::CALL, EdgeKind::CD, EdgeKind::DD, EdgeKind::SIM};
    for (int round = 0; round < 100; ++round) {
      const int n = 1 + static_cast<int>(rng.below(6));
      std::set<HunkEdge> edges;
      for (int k = 0; k < 10 && n > 1; ++k) {
        int a = static_cast<int>(rng.below(n)), b = static_cast<int>(rng.below(n));
        if (a == b) continue;
        const auto kind = kinds[rng.below(4)];
        if (kind == EdgeKind::SIM && a > b) std::swap(a, b);
        edges.insert({a, b, kind, EdgeSide::BOTH});
      }
      std::set<std::pair<int, int>> pairs;
      for (const auto& ed : edges) {
        pairs.insert({ed.src, ed.dst});
        if (ed.kind == EdgeKind::SIM) pairs.insert({ed.dst, ed.src});
      }
      const auto t = embed::embed_graph(graph(n, edges), e);
      CHECK(t.num_edges() == pairs.size());
      std::set<std::pair<int, int>> cols;
      for (std::size_t c = 0; c < t.num_edges(); ++c) {
        cols.insert({t.edge_index[0][c], t.edge_index[1][c]});
        CHECK(t.edge_attr[c] != EdgeBits{0, 0, 0, 0});
        CHECK(t.edge_index[0][c] < n);
        CHECK(t.edge_index[1][c] < n);
      }
      CHECK(cols == pairs);
    }
  }
}

TEST_CASE("protocol frames") {
  CHECK(protocol::encode_frame("{}") == "2\n{}");
  std::string buf = "2\n{}5\nhel";
  CHECK(protocol::take_frame(buf) == "{}");
  CHECK(!protocol::take_frame(buf).has_value());
  buf += "lo";
  CHECK(protocol::take_frame(buf) == "hello");
  CHECK(buf.empty());
  std::string bad = "x2\n{}";
  CHECK(code_of([&] { protocol::take_frame(bad); }) == ErrorCode::EmbedderFailure);
  std::string huge(40, '9');
  CHECK(code_of([&] { protocol::take_frame(huge); }) == ErrorCode::EmbedderFailure);
}

TEST_CASE("golden transcripts") {
  const std::vector<std::string> texts{"[CLS]-int x;[SEP]+long x;[EOS]",
                                       "[CLS][SEP]+if (len > max)\n+\treturn -EINVAL;[EOS]"};
  CHECK(protocol::encode_frame(protocol::embed_request(texts)) ==
        testing::read_file(kData + "/protocol/embed.request"));
  CHECK(protocol::encode_frame(protocol::health_request()) ==
        testing::read_file(kData + "/protocol/health.request"));

  std::string buf = testing::read_file(kData + "/protocol/embed.response");
  const auto payload = protocol::take_frame(buf);
  REQUIRE(payload.has_value());
  CHECK(buf.empty());
  const auto r = protocol::parse_embed_response(*payload, 2);
  CHECK(r.model == "codebert-base");
  CHECK(r.vectors.rows == 2);
  CHECK(r.vectors(0, 0) == doctest::Approx(0.042074));
  CHECK(r.vectors(1, 767) == doctest::Approx(0.011827));
  CHECK(code_of([&] { protocol::parse_embed_response(*payload, 3); }) == ErrorCode::EmbedderFailure);

  buf = testing::read_file(kData + "/protocol/health.response");
  const auto h = protocol::parse_health_response(*protocol::take_frame(buf));
  CHECK(h.width == 768);
  CHECK(h.max_seq_len == 512);

  buf = testing::read_file(kData + "/protocol/error.response");
  const auto err = *protocol::take_frame(buf);
  CHECK(code_of([&] { protocol::parse_embed_response(err, 1); }) == ErrorCode::EmbedderFailure);

  CHECK(code_of([] { protocol::parse_embed_response(R"({"ok":true,"model":"m","revision":"r","vectors":[[1,2]]})", 1); }) ==
        ErrorCode::EmbedderFailure);
  CHECK(code_of([] { protocol::parse_embed_response("not json", 1); }) == ErrorCode::EmbedderFailure);
}

TEST_CASE("service embedder against a local server") {
  FakeService service(good_reply);
  ServiceOptions opts;
  opts.address = service.address();
  opts.max_batch = 3;
  ServiceEmbedder client(opts);
  CHECK(client.health().width == 768);

  std::vector<std::string> texts;
  for (int i = 0; i < 8; ++i) texts.push_back("[CLS]-v" + std::to_string(i) + "[SEP][EOS]");
  const auto m = client.embed_batch(texts);
  CHECK(m == HashEmbedder().embed_batch(texts));
  CHECK(service.requests() == 1 + 3);

  std::vector<std::string> reversed(texts.rbegin(), texts.rend());
  const auto r = client.embed_batch(reversed);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::equal(r.row(i), r.row(i) + 768, m.row(7 - i)));

  auto e = make_embedder("service:" + service.address());
  CHECK(e->name() == "service:" + service.address());
}

TEST_CASE("service failures") {
  SUBCASE("error reply") {
    FakeService service([](const std::string&) { return std::string(R"({"ok":false,"error":"boom"})"); });
    ServiceEmbedder client({service.address(), 0, 1, 2000, 8});
    CHECK(code_of([&] { client.embed_batch({"x"}); }) == ErrorCode::EmbedderFailure);
  }
  SUBCASE("hang-up is retried") {
    std::atomic<int> calls{0};
    FakeService service([&](const std::string& req) {
      return ++calls == 1 ? std::string() : good_reply(req);
    });
    ServiceEmbedder client({service.address(), 2, 1, 2000, 8});
    CHECK(client.embed_batch({"x"}).rows == 1);
    CHECK(calls == 2);
  }
  SUBCASE("unreachable") {
    int port = 0;
    {
      FakeService gone(good_reply);
      port = std::stoi(gone.address().substr(10));
    }
    const std::string addr = "127.0.0.1:" + std::to_string(port);
    ServiceEmbedder client({addr, 1, 1, 500, 8});
    CHECK(code_of([&] { client.embed_batch({"x"}); }) == ErrorCode::EmbedderFailure);
    CHECK(code_of([&] { make_embedder("service:" + addr); }) == ErrorCode::EmbedderFailure);
    std::vector<std::string> warnings;
    auto e = make_embedder("service:" + addr, true, [&](const std::string& w) { warnings.push_back(w); });
    CHECK(e->name() == "builtin-hash");
    CHECK(warnings.size() == 1);
  }
  CHECK(code_of([] { make_embedder("bogus"); }) == ErrorCode::InvalidArgument);
  CHECK(make_embedder("builtin")->deterministic());
}
