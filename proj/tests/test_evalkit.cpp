#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fixseeker/error.hpp"
#include "fixseeker/evalkit.hpp"
#include "fixseeker/util/rng.hpp"

using namespace fixseeker;

namespace {

std::vector<LabeledCommit> commits(std::size_t n, Label label, const std::string& repo = "proj") {
  std::vector<LabeledCommit> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledCommit c;
    c.repo = repo;
    c.commit = repo + "-" + std::string(to_string(label)) + "-" + std::to_string(i);
    c.label = label;
    c.loc_changed = static_cast<long>(i % 7 + 1);
    c.graph = c.commit + ".hcg";
    out.push_back(c);
  }
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return good / pairs;
}

}  // namespace

TEST_CASE("assemble_dataset") {
  const auto vfcs = commits(100, Label::VFC);
  const auto pool = commits(3000, Label::NONVFC);
  SUBCASE("ratios") {
    for (std::size_t k : {1u, 25u}) {
      const auto d = evalkit::assemble_dataset(vfcs, pool, k, false, 1);
      const auto neg = std::count_if(d.begin(), d.end(), [](const auto& c) { return c.label == Label::NONVFC; });
      CHECK(static_cast<std::size_t>(neg) == 100 * k);
      std::set<std::string> ids;
      for (const auto& c : d) ids.insert(c.commit);
      CHECK(ids.size() == d.size());
    }
  }
  SUBCASE("per-project proportions") {
    auto mixed = commits(70, Label::NONVFC, "alpha");
    for (const auto& c : commits(30, Label::NONVFC, "beta")) mixed.push_back(c);
    const auto d = evalkit::assemble_dataset(commits(10, Label::VFC, "x"), mixed, 1, true, 3);
    std::map<std::string, int> per;
    for (const auto& c : d)
      if (c.label == Label::NONVFC) ++per[c.repo];
    CHECK(per["alpha"] == 7);
    CHECK(per["beta"] == 3);
  }
  SUBCASE("deterministic per seed") {
    CHECK(evalkit::assemble_dataset(vfcs, pool, 2, true, 9) == evalkit::assemble_dataset(vfcs, pool, 2, true, 9));
    CHECK(evalkit::assemble_dataset(vfcs, pool, 2, true, 9) != evalkit::assemble_dataset(vfcs, pool, 2, true, 10));
  }
  SUBCASE("pool too small") {
    CHECK(code_of([&] { evalkit::assemble_dataset(vfcs, pool, 31, false, 1); }) == ErrorCode::InsufficientPool);
  }
}

TEST_CASE("split") {
  auto data = commits(30, Label::VFC);
  for (const auto& c : commits(70, Label::NONVFC)) data.push_back(c);
  SUBCASE("default sizes and stratification") {
    const auto s = evalkit::split(data);
    CHECK(s.train.size() == 64);
    CHECK(s.val.size() == 16);
    CHECK(s.test.size() == 20);
    auto pos = [](const auto& v) {
      return std::count_if(v.begin(), v.end(), [](const auto& c) { return c.label == Label::VFC; });
    };
    CHECK(std::abs(pos(s.train) - 19.2) <= 1.0);
    CHECK(std::abs(pos(s.val) - 4.8) <= 1.0);
    CHECK(std::abs(pos(s.test) - 6.0) <= 1.0);
    std::multiset<std::string> all;
    for (const auto* part : {&s.train, &s.val, &s.test})
      for (const auto& c : *part) all.insert(c.commit);
    CHECK(all.size() == 100);
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == 100);
  }
  SUBCASE("single class") {
    const auto s = evalkit::split(commits(100, Label::NONVFC));
    CHECK(s.train.size() == 64);
    CHECK(s.val.size() == 16);
    CHECK(s.test.size() == 20);
  }
  SUBCASE("seed changes membership, not sizes") {
    SplitSpec a, b;
    b.seed = 7;
    const auto x = evalkit::split(data, a), y = evalkit::split(data, b);
    CHECK(x.train.size() == y.train.size());
    CHECK(x.test != y.test);
    CHECK(evalkit::split(data, a).test == x.test);
  }
  SUBCASE("random sizes stay stratified within one") {
    util::Rng rng(4);
    for (int round = 0; round < 200; ++round) {
      const std::size_t p = rng.below(40), n = 1 + rng.below(120);
      auto d = commits(p, Label::VFC);
      for (const auto& c : commits(n, Label::NONVFC)) d.push_back(c);
      SplitSpec spec;
      spec.seed = rng.next();
      const auto s = evalkit::split(d, spec);
      CHECK(s.train.size() + s.val.size() + s.test.size() == d.size());
      const double fracs[3] = {0.64, 0.16, 0.20};
      const std::vector<LabeledCommit>* parts[3] = {&s.train, &s.val, &s.test};
      for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(static_cast<double>(parts[k]->size()) - fracs[k] * static_cast<double>(d.size())) < 1.0);
        const auto pos = std::count_if(parts[k]->begin(), parts[k]->end(),
                                       [](const auto& c) { return c.label == Label::VFC; });
        CHECK(std::abs(static_cast<double>(pos) - fracs[k] * static_cast<double>(p)) <= 1.5);
      }
    }
  }
  SUBCASE("bad fractions") {
    SplitSpec bad;
    bad.test_frac = 0.5;
    CHECK(code_of([&] { evalkit::split(data, bad); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("prf1") {
  const auto perfect = evalkit::prf1({1, 0, 1}, {1, 0, 1});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const auto all_pos = evalkit::prf1({1, 1, 1, 1}, {1, 0, 1, 0});
  CHECK(all_pos.precision == 0.5);
  CHECK(all_pos.recall == 1.0);
  CHECK(all_pos.f1 == doctest::Approx(2.0 / 3).epsilon(1e-12));

  const auto none = evalkit::prf1({0, 0, 0}, {1, 0, 1});
  CHECK(none.precision == 0.0);
  CHECK(none.precision_undefined);
  CHECK(!none.recall_undefined);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  util::Rng rng(2);
  for (int round = 0; round < 300; ++round) {
    std::vector<int> p(1 + rng.below(50)), y(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = static_cast<int>(rng.below(2));
      y[i] = static_cast<int>(rng.below(2));
    }
    const auto r = evalkit::prf1(p, y);
    CHECK(r.tp + r.fn == static_cast<std::size_t>(std::count(y.begin(), y.end(), 1)));
    CHECK(r.tp + r.fp == static_cast<std::size_t>(std::count(p.begin(), p.end(), 1)));
    CHECK(r.tp + r.fp + r.fn + r.tn == p.size());
  }
  CHECK(evalkit::threshold_scores({0.5, 0.49, 0.9}) == std::vector<int>{1, 0, 1});
}

TEST_CASE("auc_roc") {
  CHECK(evalkit::auc_roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(evalkit::auc_roc({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}) == 0.75);
  CHECK(evalkit::auc_roc({0.3, 0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 1, 0}) == 0.5);
  CHECK(code_of([] { evalkit::auc_roc({0.1, 0.2}, {1, 1}); }) == ErrorCode::SingleClass);

  util::Rng rng(100);
  for (int round = 0; round < 1000; ++round) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(10)) / 10.0;  // coarse grid forces ties
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    const double auc = evalkit::auc_roc(s, y);
    CHECK(std::abs(auc - pairwise_auc(s, y)) <= 1e-9);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(std::abs(evalkit::auc_roc(t, y) - auc) <= 1e-12);
  }
}

TEST_CASE("auc_pr") {
  CHECK(evalkit::auc_pr({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(evalkit::auc_pr({0.9, 0.5, 0.3, 0.1}, {1, 0, 0, 0}) == 1.0);
  // Hand sweep: positives at ranks 1 and 3 give 1/2 * 1 + 1/2 * 2/3.
  CHECK(evalkit::auc_pr({0.9, 0.5, 0.3, 0.1}, {1, 0, 1, 0}) == doctest::Approx(0.5 + 1.0 / 3));
  CHECK(code_of([] { evalkit::auc_pr({0.1, 0.2}, {0, 0}); }) == ErrorCode::NoPositives);

  util::Rng rng(77);
  std::vector<double> s(20000);
  std::vector<int> y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    y[i] = rng.uniform() < 0.1 ? 1 : 0;
  }
  CHECK(std::abs(evalkit::auc_pr(s, y) - 0.10) <= 0.05);
}

TEST_CASE("cost_effort") {
  CHECK(evalkit::cost_effort({0.9, 0.8, 0.1, 0.05}, {1, 1, 0, 0}, {1, 1, 500, 500}, 5) == 1.0);
  CHECK(evalkit::cost_effort({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}, {10, 10, 10, 10}, 50) == 0.5);
  CHECK(evalkit::cost_effort({0.9, 0.8, 0.7, 0.6}, {0, 1, 1, 0}, {10, 10, 10, 10}, 100) == 1.0);
  // The commit crossing the boundary is read in full.
  CHECK(evalkit::cost_effort({0.9, 0.8, 0.7}, {0, 1, 1}, {10, 30, 60}, 20) == 0.5);
  CHECK(evalkit::cost_effort({0.9, 0.8}, {0, 0}, {1, 1}, 50) == 0.0);

  util::Rng rng(5);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<double> s(n);
    std::vector<int> y(n);
    std::vector<long> loc(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      y[i] = static_cast<int>(rng.below(2));
      loc[i] = static_cast<long>(1 + rng.below(50));
    }
    double prev = 0;
    for (double l = 0; l <= 100; l += 2.5) {
      const double ce = evalkit::cost_effort(s, y, loc, l);
      CHECK(ce >= prev);
      prev = ce;
    }
    if (std::count(y.begin(), y.end(), 1)) CHECK(evalkit::cost_effort(s, y, loc, 100) == 1.0);
  }
}

TEST_CASE("evaluate and report") {
  const auto r = evalkit::evaluate({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}, {5, 5, 5, 5});
  CHECK(r.n == 4);
  CHECK(r.positives == 2);
  CHECK(*r.auc_roc == 0.75);
  CHECK(r.prf.precision == 0.5);
  const auto kv = evalkit::format_report(r);
  CHECK(kv.find("auc_roc=0.75\n") != std::string::npos);
  CHECK(kv.find("precision=0.5\n") != std::string::npos);
  CHECK(evalkit::format_report_table(r).find("AUC-ROC         0.7500\n") != std::string::npos);
  const auto one = evalkit::evaluate({0.9, 0.4}, {0, 0}, {1, 1});
  CHECK(!one.auc_roc);
  CHECK(evalkit::format_report(one).find("auc_pr=undefined") != std::string::npos);
}

TEST_CASE("manifest round trip") {
  auto rows = commits(3, Label::VFC, "repo one");
  rows[1].label = Label::NONVFC;
  rows[2].loc_changed = 0;
  const auto text = evalkit::format_manifest(rows);
  CHECK(text.rfind("# fixseeker-manifest 1\n", 0) == 0);
  CHECK(evalkit::parse_manifest(text) == rows);
  CHECK(code_of([] { evalkit::parse_manifest("repo\tc\tVFC\t1\tg\n"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { evalkit::parse_manifest("# fixseeker-manifest 1\nr\tc\tmaybe\t1\tg\n"); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { evalkit::parse_manifest("# fixseeker-manifest 1\nr\tc\tVFC\t-3\tg\n"); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("security keyword filter") {
  CHECK(evalkit::security_keyword_match("Fix heap Overflow in parser (CVE-2021-1234)"));
  CHECK(evalkit::security_keyword_match("avoid use-after-free on close"));
  CHECK(!evalkit::security_keyword_match("Update README and bump version"));
}
