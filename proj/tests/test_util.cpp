#include <doctest.h>

#include <set>
#include <system_error>

#include "fixseeker/error.hpp"
#include "fixseeker/util/base64.hpp"
#include "fixseeker/util/rng.hpp"
#include "fixseeker/util/subprocess.hpp"
#include "fixseeker/util/text.hpp"

using namespace fixseeker;

TEST_CASE("base64 round trip") {
  CHECK(util::base64_encode("") == "");
  CHECK(util::base64_encode("f") == "Zg==");
  CHECK(util::base64_encode("fo") == "Zm8=");
  CHECK(util::base64_encode("foo") == "Zm9v");
  CHECK(util::base64_encode("foobar") == "Zm9vYmFy");
  CHECK(util::base64_decode("Zm9vYg==") == "foob");
  CHECK(!util::base64_decode("Zm9v!"));
  CHECK(!util::base64_decode("Zm9"));
  util::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::string s(rng.below(40), '\0');
    for (auto& c : s) c = static_cast<char>(rng.below(256));
    CHECK(util::base64_decode(util::base64_encode(s)) == s);
  }
}

TEST_CASE("text helpers") {
  CHECK(util::split_lines("a\nb\n") == std::vector<std::string>{"a", "b"});
  CHECK(util::split_lines("a\n\nb") == std::vector<std::string>{"a", "", "b"});
  CHECK(util::split_lines("").empty());
  CHECK(util::utf8_lossy("ok \xc3\xa9") == "ok \xc3\xa9");
  CHECK(util::utf8_lossy("\xc3") == "\xEF\xBF\xBD");
  CHECK(util::format_double(0.1) == "0.1");
  CHECK(std::stod(util::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(util::format_fixed(0.66666, 3) == "0.667");
  CHECK(util::to_lower("AbC") == "abc");
}

TEST_CASE("rng is reproducible") {
  util::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  util::Rng c(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = c.below(7);
    CHECK(x < 7);
    seen.insert(x);
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(seen.size() == 7);
  std::vector<int> v{1, 2, 3, 4, 5, 6};
  util::Rng d(9);
  d.shuffle(v);
  std::multiset<int> ms(v.begin(), v.end());
  CHECK(ms == std::multiset<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("subprocess") {
  const auto r = util::run_process({"sh", "-c", "printf out; printf err >&2; exit 3"});
  CHECK(r.exit_code == 3);
  CHECK(r.out == "out");
  CHECK(r.err == "err");
  const auto e = util::run_process({"sh", "-c", "printf \"$FOO\""}, {"FOO=bar"});
  CHECK(e.out == "bar");
  CHECK_THROWS_AS(util::run_process({"/nonexistent/binary"}), std::system_error);
}

TEST_CASE("error codes render their name") {
  const Error e(ErrorCode::UnknownCommit, "abc");
  CHECK(std::string(e.what()) == "UnknownCommit: abc");
  CHECK(e.code() == ErrorCode::UnknownCommit);
}
