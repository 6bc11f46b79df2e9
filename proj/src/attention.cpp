#include "remnet/attention.hpp"

#include <cmath>
#include <stdexcept>

#include "remnet/rng.hpp"

namespace remnet {

AttentionNodes bind_attention(Tape& tape, const AttentionParams& params) {
  AttentionNodes nodes;
  nodes.combine = params.combine;
  for (const Matrix& m : params.query_proj) nodes.query_proj.push_back(tape.leaf(m));
  for (const Matrix& m : params.key_proj) nodes.key_proj.push_back(tape.leaf(m));
  return nodes;
}

Tape::Id evidence_scores(Tape& tape, Tape::Id query, const MemoryNode& memory,
                         const AttentionNodes& attn) {
  int heads = static_cast<int>(attn.query_proj.size());
  if (heads == 0) throw std::runtime_error("evidence_scores: no attention heads");
  bool any_alive = false;
  for (char a : memory.alive) any_alive |= (a != 0);
  if (!any_alive) throw std::runtime_error("no surviving evidence");

  int dk = tape.val(attn.query_proj[0]).cols;
  if (tape.val(query).cols != tape.val(attn.query_proj[0]).rows)
    throw ShapeError("evidence_scores: query " + tape.val(query).shape_str() +
                     " vs projection " + tape.val(attn.query_proj[0]).shape_str());
  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  Tape::Id acc = -1;
  for (int a = 0; a < heads; ++a) {
    Tape::Id qh = tape.matmul(query, attn.query_proj[a]);          // 1 x d_k
    Tape::Id keys = tape.matmul(memory.embeddings, attn.key_proj[a]);  // I x d_k
    Tape::Id logits = tape.scale(
        tape.matmul(qh, tape.transpose(keys)), inv_sqrt_dk);       // 1 x I
    Tape::Id weights = tape.masked_softmax_row(logits, memory.alive);
    acc = (acc < 0) ? weights : tape.add(acc, weights);
  }
  if (attn.combine == HeadCombine::Mean && heads > 1)
    acc = tape.scale(acc, 1.0 / static_cast<double>(heads));
  return acc;
}

Vector evidence_scores(const Vector& query, const EvidenceMemory& memory,
                       const AttentionParams& params) {
  Tape tape;
  Tape::Id q = tape.leaf(query.as_row());
  MemoryNode mem{tape.leaf(memory.embeddings), memory.alive};
  AttentionNodes nodes = bind_attention(tape, params);
  Tape::Id s = evidence_scores(tape, q, mem, nodes);
  return Vector::from_row(tape.val(s));
}

AttentionParams init_attention(int h, int head_count, Rng& rng) {
  if (head_count <= 0 || h % head_count != 0)
    throw std::runtime_error("init_attention: head_count must divide h");
  int dk = h / head_count;
  double bound = 1.0 / std::sqrt(static_cast<double>(h));
  AttentionParams p;
  for (int a = 0; a < head_count; ++a) {
    Matrix wq(h, dk), wk(h, dk);
    for (double& v : wq.data) v = rng.uniform(-bound, bound);
    for (double& v : wk.data) v = rng.uniform(-bound, bound);
    p.query_proj.push_back(std::move(wq));
    p.key_proj.push_back(std::move(wk));
  }
  return p;
}

}  // namespace remnet
