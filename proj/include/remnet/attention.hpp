#pragma once

#include <vector>

#include "remnet/matrix.hpp"
#include "remnet/tape.hpp"

namespace remnet {

// Evidence slots: row i of `embeddings` is slot i. Erased rows are zeroed and
// flagged dead; dead slots are excluded from attention by logit masking.
struct EvidenceMemory {
  Matrix embeddings;        // I x h
  std::vector<char> alive;  // length I

  int slot_count() const { return embeddings.rows; }
  int alive_count() const {
    int n = 0;
    for (char a : alive) n += a ? 1 : 0;
    return n;
  }
};

// How per-head attention weight vectors collapse into one score per slot.
enum class HeadCombine { Mean, Sum };

struct AttentionParams {
  std::vector<Matrix> query_proj;  // per head, h x d_k
  std::vector<Matrix> key_proj;    // per head, h x d_k
  HeadCombine combine = HeadCombine::Mean;

  int head_count() const { return static_cast<int>(query_proj.size()); }
  int head_dim() const { return query_proj.empty() ? 0 : query_proj[0].cols; }
};

// Tape-side handles for one attention block.
struct AttentionNodes {
  std::vector<Tape::Id> query_proj;
  std::vector<Tape::Id> key_proj;
  HeadCombine combine = HeadCombine::Mean;
};

struct MemoryNode {
  Tape::Id embeddings;      // I x h node
  std::vector<char> alive;  // current mask, tracked outside the tape
};

// Per-slot evidence scores: per head, masked softmax of scaled dot products
// (q W_Q^a) . (e_i W_K^a) / sqrt(d_k), then combined across heads. The result
// is a 1xI node; dead slots get exactly zero.
Tape::Id evidence_scores(Tape& tape, Tape::Id query, const MemoryNode& memory,
                         const AttentionNodes& attn);

AttentionNodes bind_attention(Tape& tape, const AttentionParams& params);

// Convenience forward-only evaluation.
Vector evidence_scores(const Vector& query, const EvidenceMemory& memory,
                       const AttentionParams& params);

AttentionParams init_attention(int h, int head_count, class Rng& rng);

}  // namespace remnet
