#include "driftbench/encoder.hpp"

#include <cmath>

namespace driftbench {

std::string encoder_kind_name(EncoderKind kind) {
    return kind == EncoderKind::bag_of_embeddings ? "bag_of_embeddings" : "tiny_attention";
}

EncoderKind parse_encoder_kind(const std::string& name) {
    if (name == "bag_of_embeddings" || name == "bag") return EncoderKind::bag_of_embeddings;
    if (name == "tiny_attention" || name == "attention") return EncoderKind::tiny_attention;
    throw ConfigError("unknown encoder kind: " + name);
}

namespace {

Mat randn(Rng& rng, Eigen::Index rows, Eigen::Index cols, double std_dev) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = std_dev * rng.normal();
        }
    }
    return m;
}

Mat sinusoidal_positions(int len, int dim) {
    Mat pe(len, dim);
    for (int pos = 0; pos < len; ++pos) {
        for (int i = 0; i < dim; ++i) {
            const double angle =
                pos / std::pow(10000.0, 2.0 * (i / 2) / static_cast<double>(dim));
            pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

}  // namespace

void init_encoder_params(ParameterStore& params, const EncoderConfig& config,
                         int vocab_size, Rng& rng) {
    if (config.embed_dim < 2) throw ConfigError("embed_dim must be >= 2");
    const int d = config.embed_dim;
    params.create("enc.embed", randn(rng, vocab_size + 1, d, 0.1));
    params.create("enc.proj_w", randn(rng, d, d, 1.0 / std::sqrt(static_cast<double>(d))));
    params.create("enc.proj_b", Mat::Zero(d, 1));
    if (config.kind == EncoderKind::tiny_attention) {
        const double s = 1.0 / std::sqrt(static_cast<double>(d));
        params.create("enc.attn_q", randn(rng, d, d, s));
        params.create("enc.attn_k", randn(rng, d, d, s));
        params.create("enc.attn_v", randn(rng, d, d, s));
    }
}

std::vector<int> embedding_indices(const Post& post, const Vocabulary& vocab,
                                   const EncoderConfig& config) {
    std::vector<int> idx;
    idx.reserve(post.tokens.size());
    const int unk = vocab.size();
    for (const std::string& t : post.tokens) {
        const int i = vocab.index_of(t);
        idx.push_back(i >= 0 ? i : unk);
    }
    if (config.kind == EncoderKind::tiny_attention &&
        idx.size() > static_cast<size_t>(config.max_len)) {
        idx.resize(static_cast<size_t>(config.max_len));
    }
    return idx;
}

EncodeVars encode_on_tape(Tape& tape, ParameterStore& params, const EncoderConfig& config,
                          const Vocabulary& vocab, const Post& post) {
    if (post.tokens.empty()) throw Error("encode: post has no tokens");
    const std::vector<int> idx = embedding_indices(post, vocab, config);
    Var table = tape.param(params, "enc.embed");
    Var embedded = gather_rows(table, idx);  // T x d

    EncodeVars out;
    if (config.kind == EncoderKind::tiny_attention) {
        const int len = static_cast<int>(idx.size());
        Var with_pos =
            add(embedded, tape.input(sinusoidal_positions(len, config.embed_dim)));
        Var q = matmul(with_pos, tape.param(params, "enc.attn_q"));
        Var k = matmul(with_pos, tape.param(params, "enc.attn_k"));
        Var v = matmul(with_pos, tape.param(params, "enc.attn_v"));
        Var scores =
            scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(config.embed_dim)));
        Var attn = softmax(scores);  // row-wise
        out.attention = attn.value();
        embedded = matmul(attn, v);
    }
    Var pooled = mean_rows(embedded);
    out.b = relu(affine(pooled, tape.param(params, "enc.proj_w"),
                        tape.param(params, "enc.proj_b")));
    return out;
}

EncodedPost encode(const Post& post, ParameterStore& params, const EncoderConfig& config,
                   const Vocabulary& vocab) {
    Tape tape;
    EncodeVars vars = encode_on_tape(tape, params, config, vocab, post);
    EncodedPost out;
    out.b = vars.b.value().col(0);
    out.attention = std::move(vars.attention);
    return out;
}

Eigen::MatrixXd attention_weights(const EncodedPost& encoded) {
    if (!encoded.attention) {
        throw UnsupportedError(
            "attention_weights: encoder kind does not expose attention");
    }
    return *encoded.attention;
}

}  // namespace driftbench
