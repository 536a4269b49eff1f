#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fixseeker/hcg.hpp"

namespace fixseeker {

// One manifest record. `repo` doubles as the project key for
// proportional sampling.
struct LabeledCommit {
  std::string repo;
  std::string commit;
  Label label = Label::NONVFC;
  std::optional<double> score;
  long loc_changed = 0;
  std::string graph;

  bool operator==(const LabeledCommit&) const = default;
};

struct SplitSpec {
  double train_frac = 0.64;
  double val_frac = 0.16;
  double test_frac = 0.20;
  std::uint64_t seed = 42;
};

struct Splits {
  std::vector<LabeledCommit> train, val, test;
};

struct PRF1 {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool precision_undefined = false;  // nothing predicted positive
  bool recall_undefined = false;     // no positive labels
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
  std::size_t n = 0;
  std::size_t positives = 0;
  double threshold = 0.5;
  PRF1 prf;
  std::optional<double> auc_roc;  // absent with a single class
  std::optional<double> auc_pr;   // absent without positives
  double cost_effort_5 = 0;
  double cost_effort_20 = 0;
};

namespace evalkit {

/// All VFCs followed by k * |vfc| non-VFCs drawn without replacement, either
/// from the whole pool or per project in proportion to the project's share of
/// the pool (largest-remainder rounding). Throws InsufficientPool.
std::vector<LabeledCommit> assemble_dataset(const std::vector<LabeledCommit>& vfcs,
                                            const std::vector<LabeledCommit>& nonvfc_pool, std::size_t k,
                                            bool per_project_proportional, std::uint64_t seed);

/// Split sizes by largest remainder over the whole set; members dealt class
/// by class so every split keeps the label mix. Throws InvalidArgument for
/// fractions that are negative or do not sum to 1.
Splits split(const std::vector<LabeledCommit>& dataset, const SplitSpec& spec = {});

PRF1 prf1(const std::vector<int>& predictions, const std::vector<int>& labels);
std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold = 0.5);

/// Mann-Whitney form with average ranks for ties. Throws SingleClass.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Step-wise area under the precision-recall curve; tied scores enter as a
/// single threshold. Throws NoPositives.
double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels);

/// Fraction of all VFCs among the highest-scored commits whose changed lines
/// fit in L% of the total; the commit crossing the budget counts.
double cost_effort(const std::vector<double>& scores, const std::vector<int>& labels,
                   const std::vector<long>& loc, double l_percent);

MetricsReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels,
                       const std::vector<long>& loc, double threshold = 0.5);

std::string format_report(const MetricsReport& r);        // key=value lines
std::string format_report_table(const MetricsReport& r);  // aligned table

/// Tab-separated, one record per line after a version header.
std::string format_manifest(const std::vector<LabeledCommit>& rows);
/// Throws InvalidArgument naming the offending line.
std::vector<LabeledCommit> parse_manifest(std::string_view text);

using CommitPredicate = std::function<bool(std::string_view message)>;

/// Default corpus filter: the message mentions a security keyword
/// (case-insensitive substring match).
bool security_keyword_match(std::string_view message);

}  // namespace evalkit
}  // namespace fixseeker
