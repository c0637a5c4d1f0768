#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftbench/corpus.hpp"

namespace driftbench {

// Parameters for the synthetic drifting corpus. Each topic owns a pool of
// indicative token slots; at every era boundary a slot is refreshed with
// probability drift_rate, replacing its surface form with a fresh alias that
// keeps the same label correlation. Background tokens are label-neutral and
// stable over time.
struct DriftConfig {
    int num_classes = 2;
    int num_posts = 2000;
    int vocab_size = 300;  // active vocabulary: background + per-topic slots
    int num_topics = 2;
    double drift_rate = 0.0;
    double background_fraction = 0.3;
    double indicative_fraction = 0.6;  // share of a post's tokens from its topic pool
    int tokens_per_post = 12;          // +/- jitter of 4
    int num_eras = 10;
    int64_t start_timestamp = 1500000000;
    int64_t step_seconds = 60;
};

// Ground truth recorded by the generator for test assertions.
struct SynthOracle {
    std::unordered_map<std::string, int> token_class;  // indicative token -> class

    // Majority class over a post's indicative tokens (ties -> lowest class);
    // -1 if the post carries no indicative token.
    int predict(const Post& post, int num_classes) const;
};

struct SynthCorpus {
    Corpus corpus;
    SynthOracle oracle;
    // All surface forms each topic ever used (era 0 plus aliases).
    std::vector<std::set<std::string>> topic_pools;
};

SynthCorpus synth_drift_generate(uint64_t seed, const DriftConfig& config);

}  // namespace driftbench
