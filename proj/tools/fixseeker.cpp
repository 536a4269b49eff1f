#include <CLI11.hpp>
#include <iostream>

#include "fixseeker/app.hpp"
#include "fixseeker/error.hpp"

using namespace fixseeker;

int main(int argc, char** argv) {
  CLI::App cli{"Detect vulnerability-fixing commits from hunk correlation graphs."};
  cli.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  cli.add_option("--seed", seed, "Seed for splits, initialization and shuffling");

  app::BuildGraphOptions build;
  auto* b = cli.add_subcommand("build-graph", "Write one .hcg file per commit");
  b->add_option("--repo", build.repo, "Git repository")->required();
  b->add_option("--commits", build.commits, "Commit, A..B range, or file of 'commit [label]' lines")->required();
  b->add_option("--out", build.out, "Output directory")->required();
  b->add_option("--jobs", build.jobs, "Parallel commits")->check(CLI::PositiveNumber);

  app::TrainOptions train;
  auto* t = cli.add_subcommand("train", "Train a model from a graph manifest");
  t->add_option("--manifest", train.manifest, "Manifest written by build-graph")->required();
  t->add_option("--config", train.config, "key=value training config");
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--ratio", train.ratio, "Re-sample non-VFCs to 1:k per project before splitting");
  t->add_option("--embedder", train.embedder, "builtin, service or service:host:port");
  t->add_flag("--allow-fallback", train.allow_fallback, "Use the builtin embedder if the service is down");
  t->add_option("--jobs", train.threads, "Worker threads");

  app::EvaluateOptions eval;
  auto* e = cli.add_subcommand("evaluate", "Score a labeled manifest");
  e->add_option("--manifest", eval.manifest, "Labeled manifest")->required();
  e->add_option("--checkpoint", eval.checkpoint, "Model checkpoint")->required();
  e->add_option("--report", eval.report, "Also write key=value metrics here");
  e->add_option("--embedder", eval.embedder, "builtin, service or service:host:port");
  e->add_flag("--allow-fallback", eval.allow_fallback, "Use the builtin embedder if the service is down");
  e->add_option("--threshold", eval.threshold, "Decision threshold on p_vfc");

  app::ScanOptions scan;
  std::optional<std::filesystem::path> scan_report;
  auto* s = cli.add_subcommand("scan", "Rank the commits of a range by p_vfc");
  s->add_option("--repo", scan.repo, "Git repository")->required();
  s->add_option("--commits", scan.range, "Commit or A..B range")->required();
  s->add_option("--checkpoint", scan.checkpoint, "Model checkpoint")->required();
  s->add_option("--embedder", scan.embedder, "builtin, service or service:host:port");
  s->add_flag("--allow-fallback", scan.allow_fallback, "Use the builtin embedder if the service is down");
  s->add_option("--threshold", scan.threshold, "Flag commits at or above this p_vfc");
  s->add_option("--out", scan_report, "Also write the machine-readable report here");
  s->add_option("--jobs", scan.jobs, "Parallel commits")->check(CLI::PositiveNumber);

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*b) {
      const auto r = app::build_graphs(build, std::cerr);
      std::cout << r.written.size() << " graphs written to " << r.dir.string() << ", " << r.failed
                << " failed (see " << r.log.string() << ")\n";
      if (r.manifest) std::cout << "manifest " << r.manifest->string() << "\n";
      return r.written.empty() && r.failed > 0 ? 1 : 0;
    }
    if (*t) {
      train.seed = seed;
      const auto r = app::train_model(train, std::cerr);
      std::cout << "trained on " << r.train << " commits (" << r.result.train_size << " after up-sampling), "
                << r.val << " validation, " << r.test << " held out\n"
                << "best epoch " << r.result.best_epoch << " of " << r.result.history.size() << "\n"
                << "checkpoint " << r.checkpoint.string() << "\n"
                << "test manifest " << r.test_manifest.string() << "\n";
      return 0;
    }
    if (*e) {
      std::cout << evalkit::format_report_table(app::evaluate_model(eval, std::cerr));
      return 0;
    }
    if (*s) {
      const auto r = app::scan(scan, std::cerr);
      std::cout << app::format_scan_table(r);
      if (scan_report) app::write_text(*scan_report, app::format_scan_report(r));
      return 0;
    }
  } catch (const Error& err) {
    std::cerr << "fixseeker: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "fixseeker: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
