#include "fixseeker/evalkit.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "fixseeker/error.hpp"
#include "fixseeker/util/rng.hpp"
#include "fixseeker/util/text.hpp"

namespace fixseeker::evalkit {

namespace {

constexpr std::string_view kManifestHeader = "# fixseeker-manifest 1";

// Integer shares of `total` proportional to `weights`, largest remainder
// first, ties to the earlier index.
std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size(), 0);
  if (sum <= 0 || weights.empty()) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    // Round away representation noise such as 0.2 * 100 = 20.000000000000004.
    const double snapped = std::round(exact * 1e9) / 1e9;
    out[i] = static_cast<std::size_t>(std::floor(snapped));
    used += out[i];
    rem.emplace_back(snapped - std::floor(snapped), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

void check_binary(const std::vector<int>& labels) {
  for (int y : labels)
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
}

// Indices sorted by descending score, stable on input order.
std::vector<std::size_t> by_score_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

std::vector<LabeledCommit> assemble_dataset(const std::vector<LabeledCommit>& vfcs,
                                            const std::vector<LabeledCommit>& nonvfc_pool, std::size_t k,
                                            bool per_project_proportional, std::uint64_t seed) {
  const std::size_t want = k * vfcs.size();
  if (want > nonvfc_pool.size())
    throw Error(ErrorCode::InsufficientPool, "need " + std::to_string(want) + " non-VFCs, pool holds " +
                                                 std::to_string(nonvfc_pool.size()));
  std::vector<LabeledCommit> out = vfcs;
  for (auto& c : out) c.label = Label::VFC;
  util::Rng rng(seed);

  std::vector<std::string> projects;
  std::map<std::string, std::vector<std::size_t>> members;
  if (per_project_proportional) {
    for (std::size_t i = 0; i < nonvfc_pool.size(); ++i) {
      auto [it, fresh] = members.try_emplace(nonvfc_pool[i].repo);
      if (fresh) projects.push_back(nonvfc_pool[i].repo);
      it->second.push_back(i);
    }
    std::sort(projects.begin(), projects.end());
  } else {
    projects.push_back("");
    auto& all = members[""];
    all.resize(nonvfc_pool.size());
    std::iota(all.begin(), all.end(), 0);
  }
  std::vector<double> share;
  for (const auto& p : projects) share.push_back(static_cast<double>(members[p].size()));
  const auto quota = largest_remainder(want, share);
  for (std::size_t p = 0; p < projects.size(); ++p) {
    auto& idx = members[projects[p]];
    if (quota[p] > idx.size())
      throw Error(ErrorCode::InsufficientPool, "project " + projects[p] + " cannot supply " +
                                                   std::to_string(quota[p]) + " non-VFCs");
    rng.shuffle(idx);
    for (std::size_t i = 0; i < quota[p]; ++i) {
      out.push_back(nonvfc_pool[idx[i]]);
      out.back().label = Label::NONVFC;
    }
  }
  return out;
}

Splits split(const std::vector<LabeledCommit>& dataset, const SplitSpec& spec) {
  const std::vector<double> fracs{spec.train_frac, spec.val_frac, spec.test_frac};
  for (double f : fracs)
    if (!(f >= 0)) throw Error(ErrorCode::InvalidArgument, "split fractions must be non-negative");
  if (std::abs(fracs[0] + fracs[1] + fracs[2] - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "split fractions must sum to 1");
  const std::size_t n = dataset.size();
  const auto target = largest_remainder(n, fracs);

  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < n; ++i) (dataset[i].label == Label::VFC ? pos : neg).push_back(i);
  util::Rng rng(spec.seed);
  rng.shuffle(neg);
  rng.shuffle(pos);
  std::vector<std::size_t> order = neg;
  order.insert(order.end(), pos.begin(), pos.end());

  // Deal each item to the split furthest behind its quota so that every class
  // block is spread in proportion across the splits.
  Splits out;
  std::array<std::vector<LabeledCommit>*, 3> dest{&out.train, &out.val, &out.test};
  std::array<std::size_t, 3> assigned{};
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = 3;
    double best_lag = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      if (assigned[s] >= target[s]) continue;
      const double lag = static_cast<double>(target[s]) * static_cast<double>(p + 1) / static_cast<double>(n) -
                         static_cast<double>(assigned[s]);
      if (best == 3 || lag > best_lag + 1e-12) {
        best = s;
        best_lag = lag;
      }
    }
    ++assigned[best];
    dest[best]->push_back(dataset[order[p]]);
  }
  return out;
}

PRF1 prf1(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw Error(ErrorCode::InvalidArgument, "predictions and labels differ in length");
  check_binary(labels);
  check_binary(predictions);
  PRF1 r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == 1 && labels[i] == 1) ++r.tp;
    else if (predictions[i] == 1) ++r.fp;
    else if (labels[i] == 1) ++r.fn;
    else ++r.tn;
  }
  r.precision_undefined = r.tp + r.fp == 0;
  r.recall_undefined = r.tp + r.fn == 0;
  r.precision = r.precision_undefined ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  r.recall = r.recall_undefined ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold) {
  std::vector<int> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s >= threshold ? 1 : 0);
  return out;
}

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "scores and labels differ in length");
  check_binary(labels);
  const std::size_t m = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t nn = labels.size() - m;
  if (m == 0 || nn == 0) throw Error(ErrorCode::SingleClass, "AUC-ROC needs both classes");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) rank_sum += avg;
    i = j;
  }
  const double md = static_cast<double>(m);
  return (rank_sum - md * (md + 1) / 2) / (md * static_cast<double>(nn));
}

double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "scores and labels differ in length");
  check_binary(labels);
  const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (total_pos == 0) throw Error(ErrorCode::NoPositives, "AUC-PR needs a positive sample");
  const auto idx = by_score_desc(scores);
  double area = 0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i, group_tp = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) group_tp += static_cast<std::size_t>(labels[idx[j++]]);
    tp += group_tp;
    seen += j - i;
    if (group_tp)
      area += (static_cast<double>(group_tp) / static_cast<double>(total_pos)) *
              (static_cast<double>(tp) / static_cast<double>(seen));
    i = j;
  }
  return area;
}

double cost_effort(const std::vector<double>& scores, const std::vector<int>& labels,
                   const std::vector<long>& loc, double l_percent) {
  if (scores.size() != labels.size() || loc.size() != labels.size())
    throw Error(ErrorCode::InvalidArgument, "scores, labels and loc differ in length");
  check_binary(labels);
  const long total = std::accumulate(loc.begin(), loc.end(), 0L);
  if (total <= 0) throw Error(ErrorCode::InvalidArgument, "total changed lines must be positive");
  const auto total_pos = std::count(labels.begin(), labels.end(), 1);
  if (total_pos == 0) return 0.0;
  const double budget = static_cast<double>(total) * l_percent / 100.0;
  long cum = 0;
  std::size_t found = 0;
  for (std::size_t i : by_score_desc(scores)) {
    const double before = static_cast<double>(cum);
    cum += loc[i];
    // A commit counts when inspection starts inside the budget, or when it
    // is empty and still within it.
    if (!(before < budget || static_cast<double>(cum) <= budget)) break;
    found += static_cast<std::size_t>(labels[i]);
  }
  return static_cast<double>(found) / static_cast<double>(total_pos);
}

MetricsReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels,
                       const std::vector<long>& loc, double threshold) {
  MetricsReport r;
  r.n = labels.size();
  r.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  r.threshold = threshold;
  r.prf = prf1(threshold_scores(scores, threshold), labels);
  if (r.positives > 0 && r.positives < r.n) r.auc_roc = auc_roc(scores, labels);
  if (r.positives > 0) r.auc_pr = auc_pr(scores, labels);
  r.cost_effort_5 = cost_effort(scores, labels, loc, 5);
  r.cost_effort_20 = cost_effort(scores, labels, loc, 20);
  return r;
}

std::string format_report(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? util::format_double(*v) : std::string("undefined"); };
  std::ostringstream os;
  os << "n=" << r.n << "\n"
     << "positives=" << r.positives << "\n"
     << "threshold=" << util::format_double(r.threshold) << "\n"
     << "precision=" << util::format_double(r.prf.precision) << "\n"
     << "precision_undefined=" << (r.prf.precision_undefined ? 1 : 0) << "\n"
     << "recall=" << util::format_double(r.prf.recall) << "\n"
     << "recall_undefined=" << (r.prf.recall_undefined ? 1 : 0) << "\n"
     << "f1=" << util::format_double(r.prf.f1) << "\n"
     << "tp=" << r.prf.tp << "\nfp=" << r.prf.fp << "\nfn=" << r.prf.fn << "\ntn=" << r.prf.tn << "\n"
     << "auc_roc=" << opt(r.auc_roc) << "\n"
     << "auc_pr=" << opt(r.auc_pr) << "\n"
     << "cost_effort_5=" << util::format_double(r.cost_effort_5) << "\n"
     << "cost_effort_20=" << util::format_double(r.cost_effort_20) << "\n";
  return os.str();
}

std::string format_report_table(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? util::format_fixed(*v, 4) : std::string("n/a"); };
  std::vector<std::pair<std::string, std::string>> rows{
      {"commits", std::to_string(r.n) + " (" + std::to_string(r.positives) + " VFC)"},
      {"precision", util::format_fixed(r.prf.precision, 4) + (r.prf.precision_undefined ? " (undefined)" : "")},
      {"recall", util::format_fixed(r.prf.recall, 4) + (r.prf.recall_undefined ? " (undefined)" : "")},
      {"F1", util::format_fixed(r.prf.f1, 4)},
      {"AUC-ROC", opt(r.auc_roc)},
      {"AUC-PR", opt(r.auc_pr)},
      {"CostEffort@5", util::format_fixed(r.cost_effort_5, 4)},
      {"CostEffort@20", util::format_fixed(r.cost_effort_20, 4)},
  };
  std::string out;
  for (const auto& [k, v] : rows) {
    out += k;
    out.append(16 - k.size(), ' ');
    out += v + "\n";
  }
  return out;
}

std::string format_manifest(const std::vector<LabeledCommit>& rows) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& r : rows) {
    for (const auto& field : {r.repo, r.graph})
      if (field.find_first_of("\t\n") != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "manifest fields cannot hold tabs or newlines");
    out += r.repo + "\t" + r.commit + "\t" + std::string(to_string(r.label)) + "\t" +
           std::to_string(r.loc_changed) + "\t" + r.graph + "\n";
  }
  return out;
}

std::vector<LabeledCommit> parse_manifest(std::string_view text) {
  const auto lines = util::split_lines(text);
  if (lines.empty() || lines[0] != kManifestHeader)
    throw Error(ErrorCode::InvalidArgument, "manifest must start with '" + std::string(kManifestHeader) + "'");
  std::vector<LabeledCommit> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty() || lines[n][0] == '#') continue;
    const auto where = "manifest line " + std::to_string(n + 1) + ": ";
    const auto f = util::split(lines[n], '\t');
    if (f.size() != 5) throw Error(ErrorCode::InvalidArgument, where + "expected 5 tab-separated fields");
    LabeledCommit c;
    c.repo = std::string(f[0]);
    c.commit = std::string(f[1]);
    const auto label = label_from_name(f[2]);
    if (!label) throw Error(ErrorCode::InvalidArgument, where + "label must be VFC or NONVFC");
    c.label = *label;
    const auto res = std::from_chars(f[3].data(), f[3].data() + f[3].size(), c.loc_changed);
    if (res.ec != std::errc() || res.ptr != f[3].data() + f[3].size() || c.loc_changed < 0)
      throw Error(ErrorCode::InvalidArgument, where + "bad loc_changed");
    c.graph = std::string(f[4]);
    out.push_back(std::move(c));
  }
  return out;
}

bool security_keyword_match(std::string_view message) {
  static const std::vector<std::string> kKeywords{
      "cve-",     "cwe-",       "vulnerab",      "security",  "exploit",     "overflow",   "underflow",
      "use-after-free", "use after free", "double free", "out-of-bounds", "out of bounds", "null pointer",
      "injection", "xss",       "csrf",          "denial of service", "dos attack", "sanitiz", "privilege",
      "race condition", "memory leak", "crash",  "infinite loop", "uninitialized", "bypass", "traversal"};
  const auto lower = util::to_lower(message);
  for (const auto& k : kKeywords)
    if (lower.find(k) != std::string::npos) return true;
  return false;
}

}  // namespace fixseeker::evalkit
