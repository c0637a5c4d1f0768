#include "driftbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "driftbench/io_util.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------
Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<double> frequencies,
                       std::set<std::string> stopwords)
    : tokens_(std::move(tokens)),
      frequencies_(std::move(frequencies)),
      stopwords_(std::move(stopwords)) {
    if (tokens_.size() != frequencies_.size()) {
        throw ConfigError("vocabulary tokens/frequencies length mismatch");
    }
    for (size_t i = 0; i < tokens_.size(); ++i) {
        if (stopwords_.count(tokens_[i])) {
            throw ConfigError("stopword in vocabulary: " + tokens_[i]);
        }
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw ConfigError("duplicate vocabulary token: " + tokens_[i]);
        }
    }
}

int Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------
namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c == '_' || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c == '@' && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
            // User mentions are anonymized to a generic tag.
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
            ++i;
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            tokens.push_back("<mention>");
            continue;
        }
        if (c == '#' && current.empty() && i + 1 < n &&
            is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
            // Hashtags stay single tokens.
            current.push_back('#');
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
            ++i;
            continue;
        }
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
        ++i;
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

const std::set<std::string>& builtin_stopwords() {
    static const std::set<std::string> words = {
        "i",       "me",      "my",      "myself",  "we",       "our",     "ours",
        "ourselves", "you",   "your",    "yours",   "yourself", "yourselves",
        "he",      "him",     "his",     "himself", "she",      "her",     "hers",
        "herself", "it",      "its",     "itself",  "they",     "them",    "their",
        "theirs",  "themselves", "what", "which",   "who",      "whom",    "this",
        "that",    "these",   "those",   "am",      "is",       "are",     "was",
        "were",    "be",      "been",    "being",   "have",     "has",     "had",
        "having",  "do",      "does",    "did",     "doing",    "a",       "an",
        "the",     "and",     "but",     "if",      "or",       "because", "as",
        "until",   "while",   "of",      "at",      "by",       "for",     "with",
        "about",   "against", "between", "into",    "through",  "during",  "before",
        "after",   "above",   "below",   "to",      "from",     "up",      "down",
        "in",      "out",     "on",      "off",     "over",     "under",   "again",
        "further", "then",    "once",    "here",    "there",    "when",    "where",
        "why",     "how",     "all",     "any",     "both",     "each",    "few",
        "more",    "most",    "other",   "some",    "such",     "no",      "nor",
        "not",     "only",    "own",     "same",    "so",       "than",    "too",
        "very",    "s",       "t",       "can",     "will",     "just",    "don",
        "should",  "now"};
    return words;
}

std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open stopword file: " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

// ---------------------------------------------------------------------------
// load_corpus
// ---------------------------------------------------------------------------
Corpus load_corpus(const std::string& path, const CorpusSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path);

    Corpus corpus;
    corpus.label_names = schema.label_names;
    std::map<std::string, int> label_index;
    for (size_t i = 0; i < schema.label_names.size(); ++i) {
        label_index[schema.label_names[i]] = static_cast<int>(i);
    }
    const bool fixed_labels = !schema.label_names.empty();

    struct RawPost {
        Post post;
        std::optional<std::string> string_label;
    };
    std::vector<RawPost> raw;
    std::set<std::string> seen_ids;
    std::set<std::string> free_labels;

    std::string line;
    size_t line_no = 0;
    int max_int_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError("line " + std::to_string(line_no) + ": not a JSON object");
        }
        RawPost rp;
        if (!obj.contains(schema.id_field) || !obj[schema.id_field].is_string()) {
            throw ParseError("line " + std::to_string(line_no) + ": missing string field '" +
                             schema.id_field + "'");
        }
        rp.post.id = obj[schema.id_field].get<std::string>();
        if (!seen_ids.insert(rp.post.id).second) {
            throw ParseError("line " + std::to_string(line_no) + ": duplicate id '" +
                             rp.post.id + "'");
        }
        if (!obj.contains(schema.timestamp_field) ||
            !obj[schema.timestamp_field].is_number_integer()) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": missing integer field '" + schema.timestamp_field + "'");
        }
        rp.post.timestamp = obj[schema.timestamp_field].get<int64_t>();
        if (rp.post.timestamp < 0) {
            throw ParseError("line " + std::to_string(line_no) + ": negative timestamp");
        }
        if (!obj.contains(schema.text_field) || !obj[schema.text_field].is_string()) {
            throw ParseError("line " + std::to_string(line_no) + ": missing string field '" +
                             schema.text_field + "'");
        }
        rp.post.tokens = tokenize(obj[schema.text_field].get<std::string>());
        if (rp.post.tokens.empty()) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": text yields no tokens after preprocessing");
        }
        if (obj.contains(schema.label_field) && !obj[schema.label_field].is_null()) {
            const json& lab = obj[schema.label_field];
            if (lab.is_number_integer()) {
                const int v = lab.get<int>();
                if (v < 0) {
                    throw SchemaError("line " + std::to_string(line_no) +
                                      ": negative label " + std::to_string(v));
                }
                rp.post.label = v;
                max_int_label = std::max(max_int_label, v);
            } else if (lab.is_string()) {
                rp.string_label = lab.get<std::string>();
                if (fixed_labels && !label_index.count(*rp.string_label)) {
                    throw SchemaError("line " + std::to_string(line_no) +
                                      ": unknown label '" + *rp.string_label + "'");
                }
                if (!fixed_labels) free_labels.insert(*rp.string_label);
            } else {
                throw SchemaError("line " + std::to_string(line_no) +
                                  ": label must be a string or integer");
            }
        }
        raw.push_back(std::move(rp));
    }

    const bool any_string_label = fixed_labels || !free_labels.empty();
    if (any_string_label && max_int_label >= 0) {
        throw SchemaError("corpus mixes string and integer labels");
    }
    if (!fixed_labels && !free_labels.empty()) {
        for (const std::string& l : free_labels) {
            label_index[l] = static_cast<int>(corpus.label_names.size());
            corpus.label_names.push_back(l);
        }
    }
    for (RawPost& rp : raw) {
        if (rp.string_label) rp.post.label = label_index.at(*rp.string_label);
        corpus.posts.push_back(std::move(rp.post));
    }

    if (!corpus.label_names.empty()) {
        corpus.num_classes = static_cast<int>(corpus.label_names.size());
    } else if (schema.num_classes) {
        corpus.num_classes = *schema.num_classes;
    } else {
        corpus.num_classes = max_int_label + 1;
    }
    for (const Post& p : corpus.posts) {
        if (p.label && *p.label >= corpus.num_classes) {
            throw SchemaError("label " + std::to_string(*p.label) +
                              " out of range for num_classes " +
                              std::to_string(corpus.num_classes));
        }
    }
    return corpus;
}

void save_corpus_jsonl(const std::string& path, const Corpus& corpus) {
    std::string out;
    for (const Post& p : corpus.posts) {
        json obj;
        obj["id"] = p.id;
        obj["timestamp"] = p.timestamp;
        std::string text;
        for (size_t i = 0; i < p.tokens.size(); ++i) {
            if (i) text += ' ';
            text += p.tokens[i];
        }
        obj["text"] = text;
        if (p.label) obj["label"] = *p.label;
        out += obj.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// chronological_split
// ---------------------------------------------------------------------------
namespace {

using PostPtrIter = std::vector<const Post*>::const_iterator;

Corpus subcorpus(const Corpus& base, PostPtrIter first, PostPtrIter last) {
    Corpus c;
    c.num_classes = base.num_classes;
    c.label_names = base.label_names;
    c.posts.reserve(static_cast<size_t>(last - first));
    for (auto it = first; it != last; ++it) c.posts.push_back(**it);
    return c;
}

}  // namespace

TimeSlices chronological_split(const Corpus& corpus, const SplitParams& params) {
    if (corpus.size() < 10) {
        throw SplitError("corpus too small to split: " + std::to_string(corpus.size()) +
                         " posts");
    }
    if (params.t0_fraction.has_value() == params.cut_timestamp.has_value()) {
        throw ConfigError("exactly one of t0_fraction / cut_timestamp must be set");
    }
    const double ratio_sum =
        params.static_ratios[0] + params.static_ratios[1] + params.static_ratios[2];
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw ConfigError("static ratios must sum to 1");
    }

    std::vector<const Post*> sorted;
    sorted.reserve(corpus.size());
    for (const Post& p : corpus.posts) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const Post* a, const Post* b) {
        if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
        return a->id < b->id;
    });

    size_t n0;
    if (params.t0_fraction) {
        if (*params.t0_fraction <= 0.0 || *params.t0_fraction >= 1.0) {
            throw ConfigError("t0_fraction must be in (0, 1)");
        }
        n0 = static_cast<size_t>(
            std::llround(*params.t0_fraction * static_cast<double>(sorted.size())));
    } else {
        n0 = 0;
        while (n0 < sorted.size() && sorted[n0]->timestamp < *params.cut_timestamp) ++n0;
    }
    if (n0 == 0) throw SplitError("empty partition: t0");
    if (n0 >= sorted.size()) throw SplitError("empty partition: t1..t4 (t0 takes everything)");

    std::vector<const Post*> t0(sorted.begin(), sorted.begin() + static_cast<long>(n0));
    std::vector<const Post*> rest(sorted.begin() + static_cast<long>(n0), sorted.end());

    // Static split inside t0.
    Rng rng(stream_seed(params.seed, "static_split"));
    rng.shuffle(t0);
    const auto n_train = static_cast<size_t>(
        std::llround(params.static_ratios[0] * static_cast<double>(n0)));
    const auto n_val = static_cast<size_t>(
        std::llround(params.static_ratios[1] * static_cast<double>(n0)));
    if (n_train == 0) throw SplitError("empty partition: t0_train");
    if (n_val == 0) throw SplitError("empty partition: t0_val");
    if (n_train + n_val >= n0) throw SplitError("empty partition: t0_test");

    TimeSlices out;
    out.t0_train = subcorpus(corpus, t0.begin(), t0.begin() + static_cast<long>(n_train));
    out.t0_val = subcorpus(corpus, t0.begin() + static_cast<long>(n_train),
                           t0.begin() + static_cast<long>(n_train + n_val));
    out.t0_test = subcorpus(corpus, t0.begin() + static_cast<long>(n_train + n_val), t0.end());

    const size_t m = rest.size();
    const size_t base = m / 4;
    const size_t extra = m % 4;
    if (base == 0) throw SplitError("empty partition: t" + std::to_string(extra + 1));
    size_t offset = 0;
    for (size_t s = 0; s < 4; ++s) {
        const size_t len = base + (s < extra ? 1 : 0);
        out.slices[s] = subcorpus(corpus, rest.begin() + static_cast<long>(offset),
                                  rest.begin() + static_cast<long>(offset + len));
        offset += len;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vocabulary building / vectorization / overlap
// ---------------------------------------------------------------------------
namespace {

std::map<std::string, double> count_tokens(const Corpus& corpus,
                                           const std::set<std::string>& stopwords) {
    std::map<std::string, double> freq;
    for (const Post& p : corpus.posts) {
        for (const std::string& t : p.tokens) {
            if (!stopwords.count(t)) freq[t] += 1.0;
        }
    }
    return freq;
}

// (frequency desc, token asc)
std::vector<std::pair<std::string, double>> ranked_tokens(
    const std::map<std::string, double>& freq) {
    std::vector<std::pair<std::string, double>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

}  // namespace

Vocabulary build_vocabulary(const Corpus& corpus, int min_freq, int max_size,
                            const std::set<std::string>& stopword_list) {
    if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
    if (max_size < 1) throw ConfigError("max_size must be >= 1");
    auto freq = count_tokens(corpus, stopword_list);
    std::erase_if(freq, [&](const auto& kv) { return kv.second < min_freq; });
    auto ranked = ranked_tokens(freq);
    if (ranked.size() > static_cast<size_t>(max_size)) {
        ranked.resize(static_cast<size_t>(max_size));
    }
    if (ranked.empty()) throw Error("empty vocabulary after filtering");
    std::vector<std::string> tokens;
    std::vector<double> freqs;
    tokens.reserve(ranked.size());
    freqs.reserve(ranked.size());
    for (auto& [t, f] : ranked) {
        tokens.push_back(t);
        freqs.push_back(f);
    }
    return Vocabulary(std::move(tokens), std::move(freqs), stopword_list);
}

BowVector vectorize_bow(const Post& post, const Vocabulary& vocab) {
    std::map<int, double> counts;
    for (const std::string& t : post.tokens) {
        const int idx = vocab.index_of(t);
        if (idx >= 0) counts[idx] += 1.0;
    }
    BowVector bow;
    bow.dimension = vocab.size();
    bow.counts.assign(counts.begin(), counts.end());
    return bow;
}

double vocabulary_overlap(const Corpus& slice_a, const Corpus& slice_b, int top_k,
                          const std::set<std::string>& stopword_list) {
    if (slice_a.empty() || slice_b.empty()) throw Error("vocabulary_overlap: empty slice");
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    auto top_set = [&](const Corpus& c) {
        auto ranked = ranked_tokens(count_tokens(c, stopword_list));
        if (ranked.size() > static_cast<size_t>(top_k)) {
            ranked.resize(static_cast<size_t>(top_k));
        }
        std::set<std::string> s;
        for (const auto& [t, f] : ranked) s.insert(t);
        return s;
    };
    const std::set<std::string> ta = top_set(slice_a);
    const std::set<std::string> tb = top_set(slice_b);
    if (ta.empty() || tb.empty()) throw Error("vocabulary_overlap: slice has no tokens");
    size_t inter = 0;
    for (const std::string& t : ta) inter += tb.count(t);
    const size_t denom = std::min(ta.size(), tb.size());
    return 100.0 * static_cast<double>(inter) / static_cast<double>(denom);
}

}  // namespace driftbench
