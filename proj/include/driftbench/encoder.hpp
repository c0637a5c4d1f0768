#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftbench/autodiff.hpp"
#include "driftbench/corpus.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

enum class EncoderKind { bag_of_embeddings, tiny_attention };

std::string encoder_kind_name(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& name);

struct EncoderConfig {
    EncoderKind kind = EncoderKind::bag_of_embeddings;
    int embed_dim = 64;
    int max_len = 64;  // tiny_attention truncates inputs to this length
};

struct EncodedPost {
    Vec b;                                 // post embedding
    std::optional<Eigen::MatrixXd> attention;  // tiny_attention only
};

// Registers the encoder parameters under the "enc." prefix: an embedding
// table with one extra row for unknown tokens, the output projection, and
// (for tiny_attention) the query/key/value maps.
void init_encoder_params(ParameterStore& params, const EncoderConfig& config,
                         int vocab_size, Rng& rng);

// Token -> embedding row; out-of-vocabulary tokens share the last row.
std::vector<int> embedding_indices(const Post& post, const Vocabulary& vocab,
                                   const EncoderConfig& config);

struct EncodeVars {
    Var b;
    std::optional<Eigen::MatrixXd> attention;
};

// Tape-recorded forward pass (used for training and, without backward, for
// inference).
EncodeVars encode_on_tape(Tape& tape, ParameterStore& params, const EncoderConfig& config,
                          const Vocabulary& vocab, const Post& post);

EncodedPost encode(const Post& post, ParameterStore& params, const EncoderConfig& config,
                   const Vocabulary& vocab);

// The stored self-attention matrix; errors for bag_of_embeddings outputs.
Eigen::MatrixXd attention_weights(const EncodedPost& encoded);

}  // namespace driftbench
