#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftbench/bow.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------
struct Post {
    std::string id;
    int64_t timestamp = 0;  // seconds since epoch
    std::vector<std::string> tokens;
    std::optional<int> label;
};

struct Corpus {
    std::vector<Post> posts;
    int num_classes = 0;
    std::vector<std::string> label_names;  // optional; empty when labels are numeric

    size_t size() const { return posts.size(); }
    bool empty() const { return posts.empty(); }
};

class Vocabulary {
public:
    Vocabulary() = default;
    // tokens in index order with their fitting-corpus frequencies.
    Vocabulary(std::vector<std::string> tokens, std::vector<double> frequencies,
               std::set<std::string> stopwords);

    int size() const { return static_cast<int>(tokens_.size()); }
    // Index in [0, size) or -1 for out-of-vocabulary tokens.
    int index_of(const std::string& token) const;
    const std::string& token(int index) const { return tokens_.at(static_cast<size_t>(index)); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<double>& frequencies() const { return frequencies_; }
    const std::set<std::string>& stopwords() const { return stopwords_; }

private:
    std::vector<std::string> tokens_;
    std::vector<double> frequencies_;
    std::set<std::string> stopwords_;
    std::unordered_map<std::string, int> index_;
};

// t0 static partition plus the four chronological test slices.
struct TimeSlices {
    Corpus t0_train;
    Corpus t0_val;
    Corpus t0_test;
    std::array<Corpus, 4> slices;  // t1..t4
};

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------
// Lowercases, splits on whitespace/punctuation, keeps "#hashtag" as one
// token, and replaces @mentions with "<mention>". Bytes >= 0x80 (multi-byte
// UTF-8) are treated as word characters.
std::vector<std::string> tokenize(const std::string& text);

// Built-in English stopword list; override by loading a file (one token per
// line, UTF-8).
const std::set<std::string>& builtin_stopwords();
std::set<std::string> load_stopwords(const std::string& path);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------
struct CorpusSchema {
    std::string id_field = "id";
    std::string timestamp_field = "timestamp";
    std::string text_field = "text";
    std::string label_field = "label";
    // When set, string labels must come from this list (index = position) and
    // num_classes is its size. When empty, string labels are collected and
    // sorted lexicographically; integer labels are used as-is.
    std::vector<std::string> label_names;
    // Overrides the inferred class count for integer labels.
    std::optional<int> num_classes;
};

// Reads one JSON object per line: id, timestamp, text, optional label.
Corpus load_corpus(const std::string& path, const CorpusSchema& schema = {});

void save_corpus_jsonl(const std::string& path, const Corpus& corpus);

struct SplitParams {
    // Exactly one of t0_fraction / cut_timestamp picks the t0 boundary.
    std::optional<double> t0_fraction;
    std::optional<int64_t> cut_timestamp;
    std::array<double, 3> static_ratios = {0.8, 0.1, 0.1};
    uint64_t seed = 13;
};

// Sorts by (timestamp, id), puts the earliest segment into t0 (randomly
// partitioned into train/val/test by the seed), and cuts the remainder into
// four equal chronological slices.
TimeSlices chronological_split(const Corpus& corpus, const SplitParams& params);

// Frequency-ranked vocabulary (ties lexicographic) over the given fitting
// corpus, excluding stopwords and tokens below min_freq, truncated to
// max_size. Callers are responsible for fitting only on t0-train plus
// trans-data, never on test slices.
Vocabulary build_vocabulary(const Corpus& corpus, int min_freq, int max_size,
                            const std::set<std::string>& stopword_list);

// Counts of in-vocabulary tokens; OOV tokens are dropped (all-OOV posts give
// the zero vector).
BowVector vectorize_bow(const Post& post, const Vocabulary& vocab);

// |TopK(a) & TopK(b)| / k * 100 where TopK ranks tokens by (frequency desc,
// token asc) after stopword removal; k shrinks to the smaller distinct-token
// count when a slice has fewer than top_k distinct tokens.
double vocabulary_overlap(const Corpus& slice_a, const Corpus& slice_b, int top_k,
                          const std::set<std::string>& stopword_list);

}  // namespace driftbench
