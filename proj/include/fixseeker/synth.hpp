#pragma once

#include <cstdint>
#include <vector>

#include "fixseeker/hcg.hpp"

namespace fixseeker::synth {

struct CorpusOptions {
  std::size_t graphs = 250;
  double positive_fraction = 0.4;
  std::size_t min_nodes = 2;
  std::size_t max_nodes = 6;
  std::uint64_t seed = 7;
};

/// Labeled commit graphs with random C-like hunk text. Positives carry a
/// CALL edge into a hunk that adds a bounds guard; negatives never carry
/// either, but get random CD/DD/SIM edges. Graph i is positive iff
/// i < round(graphs * positive_fraction); the order is then shuffled.
std::vector<CommitHCG> make_corpus(const CorpusOptions& opts);

}  // namespace fixseeker::synth
