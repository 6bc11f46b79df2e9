#pragma once

#include <string>
#include <vector>

#include "remnet/attention.hpp"
#include "remnet/matrix.hpp"
#include "remnet/tape.hpp"

namespace remnet {

struct RemConfig {
  int steps = 2;          // T
  int erase_cap = 4;      // k per step
  int min_survivors = 1;
  int head_count = 2;
};

struct MergeParams {
  Matrix weight;  // h(T+1) x h
  Vector bias;    // h
};

struct RemStepRecord {
  Vector scores;            // s^t over all I slots, zero on dead slots
  std::vector<int> erased;  // slot indices erased at this step
  Vector query;             // q^{t+1}, the query after this step's update
};

struct RemTrace {
  Vector initial_query;  // q^0
  std::vector<RemStepRecord> steps;
  std::vector<int> final_alive;  // surviving slot indices
  Vector merged;                 // m
};

// Erasure selection per the score-threshold rule: among alive slots the
// threshold is the (k+1)-th smallest score (k clamped to alive-1); slots
// strictly below it are erased, ties with the threshold survive. Never
// erases more than k slots or below min_survivors, dropping the
// lowest-scoring candidates first.
std::vector<int> select_erasures(const Vector& scores, const std::vector<char>& alive,
                                 int k, int min_survivors);

// Applies the selection: zeroes erased rows and clears their alive bits.
std::pair<EvidenceMemory, std::vector<int>> erase(const Vector& scores,
                                                  const EvidenceMemory& memory,
                                                  int k, int min_survivors);

// q + E^T s. Caller guarantees s is zero on erased slots.
Vector residual_update(const Vector& q, const EvidenceMemory& memory, const Vector& s);

// Affine of the concatenated query states q^0..q^T.
Vector merge(const std::vector<Vector>& queries, const MergeParams& params);

// Tape-side REM loop.
struct RemNodes {
  AttentionNodes attention;
  Tape::Id merge_weight;
  Tape::Id merge_bias;
};

struct RemResult {
  Tape::Id merged;
  RemTrace trace;
};

RemResult rem_forward(Tape& tape, Tape::Id q0, MemoryNode memory,
                      const RemConfig& config, const RemNodes& nodes);

// Forward-only convenience evaluation on a throwaway tape.
std::pair<Vector, RemTrace> rem_forward(const Vector& q0, const EvidenceMemory& memory,
                                        const RemConfig& config,
                                        const AttentionParams& attn,
                                        const MergeParams& merge_params);

MergeParams init_merge(int h, int steps, Rng& rng);

// {steps: [{scores: [...], erased: [...]}], final_alive: [...]}
std::string trace_to_json(const RemTrace& trace);

}  // namespace remnet
