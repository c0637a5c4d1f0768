#include "driftbench/synth.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/rng.hpp"

namespace driftbench {

int SynthOracle::predict(const Post& post, int num_classes) const {
    std::vector<int> votes(static_cast<size_t>(num_classes), 0);
    bool any = false;
    for (const std::string& t : post.tokens) {
        auto it = token_class.find(t);
        if (it != token_class.end()) {
            votes[static_cast<size_t>(it->second)] += 1;
            any = true;
        }
    }
    if (!any) return -1;
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
        if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)]) best = c;
    }
    return best;
}

SynthCorpus synth_drift_generate(uint64_t seed, const DriftConfig& config) {
    if (config.drift_rate < 0.0 || config.drift_rate > 1.0) {
        throw ConfigError("drift_rate must be in [0, 1]");
    }
    if (config.num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (config.num_topics < config.num_classes) {
        throw ConfigError("num_topics must be >= num_classes");
    }
    if (config.num_posts < 10) throw ConfigError("num_posts must be >= 10");
    if (config.num_eras < 1) throw ConfigError("num_eras must be >= 1");
    if (config.background_fraction < 0.0 || config.background_fraction >= 1.0) {
        throw ConfigError("background_fraction must be in [0, 1)");
    }
    if (config.indicative_fraction <= 0.0 || config.indicative_fraction > 1.0) {
        throw ConfigError("indicative_fraction must be in (0, 1]");
    }
    if (config.tokens_per_post < 5) throw ConfigError("tokens_per_post must be >= 5");

    const int n_background = static_cast<int>(
        std::llround(config.background_fraction * config.vocab_size));
    const int slots_per_topic = (config.vocab_size - n_background) / config.num_topics;
    if (slots_per_topic < 2) {
        throw ConfigError("vocab_size too small for the requested topic pools");
    }

    // Slot refresh schedule: version[k][j][e] counts how many refreshes slot j
    // of topic k has seen by era e.
    Rng drift_rng(stream_seed(seed, "synth_drift"));
    std::vector<std::vector<std::vector<int>>> version(
        static_cast<size_t>(config.num_topics),
        std::vector<std::vector<int>>(static_cast<size_t>(slots_per_topic),
                                      std::vector<int>(static_cast<size_t>(config.num_eras), 0)));
    for (int k = 0; k < config.num_topics; ++k) {
        for (int j = 0; j < slots_per_topic; ++j) {
            for (int e = 1; e < config.num_eras; ++e) {
                const int prev = version[k][j][static_cast<size_t>(e - 1)];
                const bool refresh = drift_rng.uniform() < config.drift_rate;
                version[k][j][static_cast<size_t>(e)] = prev + (refresh ? 1 : 0);
            }
        }
    }

    auto topic_token = [](int k, int j, int v) {
        std::string t = "t" + std::to_string(k) + "w" + std::to_string(j);
        if (v > 0) t += "x" + std::to_string(v);
        return t;
    };

    SynthCorpus out;
    out.topic_pools.resize(static_cast<size_t>(config.num_topics));
    for (int k = 0; k < config.num_topics; ++k) {
        const int cls = k % config.num_classes;
        for (int j = 0; j < slots_per_topic; ++j) {
            const int max_v = version[k][j][static_cast<size_t>(config.num_eras - 1)];
            for (int v = 0; v <= max_v; ++v) {
                const std::string tok = topic_token(k, j, v);
                out.oracle.token_class[tok] = cls;
                out.topic_pools[static_cast<size_t>(k)].insert(tok);
            }
        }
    }

    std::vector<std::string> background;
    background.reserve(static_cast<size_t>(n_background));
    for (int j = 0; j < n_background; ++j) background.push_back("b" + std::to_string(j));

    // Topic assignment: shuffled round-robin blocks keep every contiguous
    // window of posts class-balanced.
    Rng assign_rng(stream_seed(seed, "synth_assign"));
    std::vector<int> topic_of(static_cast<size_t>(config.num_posts));
    {
        std::vector<int> block(static_cast<size_t>(config.num_topics));
        for (int i = 0; i < config.num_posts; ++i) {
            const int r = i % config.num_topics;
            if (r == 0) {
                for (int k = 0; k < config.num_topics; ++k) block[static_cast<size_t>(k)] = k;
                assign_rng.shuffle(block);
            }
            topic_of[static_cast<size_t>(i)] = block[static_cast<size_t>(r)];
        }
    }

    Rng text_rng(stream_seed(seed, "synth_text"));
    Corpus& corpus = out.corpus;
    corpus.num_classes = config.num_classes;
    corpus.posts.reserve(static_cast<size_t>(config.num_posts));
    for (int i = 0; i < config.num_posts; ++i) {
        const int era = static_cast<int>(
            (static_cast<int64_t>(i) * config.num_eras) / config.num_posts);
        const int topic = topic_of[static_cast<size_t>(i)];

        Post p;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "s%06d", i);
        p.id = idbuf;
        p.timestamp = config.start_timestamp + static_cast<int64_t>(i) * config.step_seconds;
        p.label = topic % config.num_classes;

        const int jitter = text_rng.uniform_int(9) - 4;
        const int n_tok = std::max(4, config.tokens_per_post + jitter);
        const int n_ind = std::max(
            1, static_cast<int>(std::llround(config.indicative_fraction * n_tok)));
        for (int t = 0; t < n_tok; ++t) {
            if (t < n_ind || n_background == 0) {
                const int j = text_rng.uniform_int(slots_per_topic);
                p.tokens.push_back(
                    topic_token(topic, j, version[topic][j][static_cast<size_t>(era)]));
            } else {
                p.tokens.push_back(background[static_cast<size_t>(
                    text_rng.uniform_int(n_background))]);
            }
        }
        text_rng.shuffle(p.tokens);
        corpus.posts.push_back(std::move(p));
    }
    return out;
}

}  // namespace driftbench
