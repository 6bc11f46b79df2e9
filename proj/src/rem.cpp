#include "remnet/rem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "remnet/rng.hpp"

namespace remnet {

std::vector<int> select_erasures(const Vector& scores, const std::vector<char>& alive,
                                 int k, int min_survivors) {
  int n = scores.len();
  if (static_cast<int>(alive.size()) != n)
    throw ShapeError("select_erasures: mask length " + std::to_string(alive.size()) +
                     " != scores length " + std::to_string(n));
  if (k <= 0) return {};

  std::vector<int> alive_idx;
  for (int i = 0; i < n; ++i)
    if (alive[i]) alive_idx.push_back(i);
  int a = static_cast<int>(alive_idx.size());
  if (a <= 1) return {};

  std::vector<double> sorted;
  sorted.reserve(a);
  for (int i : alive_idx) sorted.push_back(scores[i]);
  std::sort(sorted.begin(), sorted.end());
  int k_eff = std::min(k, a - 1);
  double threshold = sorted[k_eff];  // (k+1)-th smallest alive score

  std::vector<int> candidates;
  for (int i : alive_idx)
    if (scores[i] < threshold) candidates.push_back(i);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](int x, int y) { return scores[x] < scores[y]; });

  int budget = std::min({k, static_cast<int>(candidates.size()),
                         a - std::max(min_survivors, 0)});
  if (budget <= 0) return {};
  candidates.resize(budget);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::pair<EvidenceMemory, std::vector<int>> erase(const Vector& scores,
                                                  const EvidenceMemory& memory,
                                                  int k, int min_survivors) {
  std::vector<int> erased = select_erasures(scores, memory.alive, k, min_survivors);
  EvidenceMemory out = memory;
  for (int i : erased) {
    out.alive[i] = 0;
    for (int j = 0; j < out.embeddings.cols; ++j) out.embeddings.at(i, j) = 0.0;
  }
  return {std::move(out), std::move(erased)};
}

Vector residual_update(const Vector& q, const EvidenceMemory& memory, const Vector& s) {
  const Matrix& e = memory.embeddings;
  if (s.len() != e.rows)
    throw ShapeError("residual_update: scores length " + std::to_string(s.len()) +
                     " != slots " + std::to_string(e.rows));
  if (q.len() != e.cols)
    throw ShapeError("residual_update: query length " + std::to_string(q.len()) +
                     " != embedding dim " + std::to_string(e.cols));
  Vector out = q;
  for (int i = 0; i < e.rows; ++i) {
    if (s[i] == 0.0) continue;
    for (int j = 0; j < e.cols; ++j) out[j] += s[i] * e.at(i, j);
  }
  return out;
}

Vector merge(const std::vector<Vector>& queries, const MergeParams& params) {
  if (queries.empty()) throw ShapeError("merge: empty query list");
  std::vector<double> concat;
  for (const Vector& q : queries)
    concat.insert(concat.end(), q.data.begin(), q.data.end());
  if (static_cast<int>(concat.size()) != params.weight.rows)
    throw ShapeError("merge: concatenated length " + std::to_string(concat.size()) +
                     " != W rows " + std::to_string(params.weight.rows));
  return affine(Vector(std::move(concat)), params.weight, params.bias);
}

RemResult rem_forward(Tape& tape, Tape::Id q0, MemoryNode memory,
                      const RemConfig& config, const RemNodes& nodes) {
  if (config.steps < 1) throw std::runtime_error("rem_forward: steps must be >= 1");
  int min_surv = std::max(config.min_survivors, 1);

  RemResult result;
  result.trace.initial_query = Vector::from_row(tape.val(q0));

  std::vector<Tape::Id> queries{q0};
  Tape::Id q = q0;
  for (int t = 0; t < config.steps; ++t) {
    Tape::Id s = evidence_scores(tape, q, memory, nodes.attention);
    Vector s_val = Vector::from_row(tape.val(s));

    // Residual uses the pre-erasure memory (the step's own scores).
    q = tape.add(q, tape.matmul(s, memory.embeddings));
    queries.push_back(q);

    std::vector<int> erased =
        select_erasures(s_val, memory.alive, config.erase_cap, min_surv);
    if (!erased.empty()) {
      for (int i : erased) memory.alive[i] = 0;
      memory.embeddings = tape.mask_rows(memory.embeddings, memory.alive);
    }

    RemStepRecord rec;
    rec.scores = std::move(s_val);
    rec.erased = std::move(erased);
    rec.query = Vector::from_row(tape.val(q));
    result.trace.steps.push_back(std::move(rec));
  }

  result.merged = tape.affine_row(tape.concat_cols(queries), nodes.merge_weight,
                                  nodes.merge_bias);
  result.trace.merged = Vector::from_row(tape.val(result.merged));
  for (int i = 0; i < static_cast<int>(memory.alive.size()); ++i)
    if (memory.alive[i]) result.trace.final_alive.push_back(i);
  return result;
}

std::pair<Vector, RemTrace> rem_forward(const Vector& q0, const EvidenceMemory& memory,
                                        const RemConfig& config,
                                        const AttentionParams& attn,
                                        const MergeParams& merge_params) {
  Tape tape;
  Tape::Id q = tape.leaf(q0.as_row());
  MemoryNode mem{tape.leaf(memory.embeddings), memory.alive};
  RemNodes nodes;
  nodes.attention = bind_attention(tape, attn);
  nodes.merge_weight = tape.leaf(merge_params.weight);
  nodes.merge_bias = tape.leaf(merge_params.bias.as_row());
  RemResult r = rem_forward(tape, q, mem, config, nodes);
  return {Vector::from_row(tape.val(r.merged)), std::move(r.trace)};
}

MergeParams init_merge(int h, int steps, Rng& rng) {
  MergeParams p;
  int in_dim = h * (steps + 1);
  p.weight = Matrix(in_dim, h);
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : p.weight.data) v = rng.uniform(-bound, bound);
  p.bias = Vector(h);
  return p;
}

std::string trace_to_json(const RemTrace& trace) {
  nlohmann::json j;
  j["steps"] = nlohmann::json::array();
  for (const RemStepRecord& step : trace.steps) {
    nlohmann::json s;
    s["scores"] = step.scores.data;
    s["erased"] = step.erased;
    j["steps"].push_back(std::move(s));
  }
  j["final_alive"] = trace.final_alive;
  return j.dump();
}

}  // namespace remnet
