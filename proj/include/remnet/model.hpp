#pragma once

#include <map>
#include <string>
#include <vector>

#include "remnet/attention.hpp"
#include "remnet/dataset.hpp"
#include "remnet/param_store.hpp"
#include "remnet/rem.hpp"
#include "remnet/tape.hpp"

namespace remnet {

struct Vocab {
  std::map<std::string, int> token_to_id;
  std::vector<std::string> tokens;

  static Vocab build(const std::vector<std::string>& toks);
  int size() const { return static_cast<int>(tokens.size()); }
  int id(const std::string& tok) const;  // unknown -> [UNK]
  int unk_id() const;
};

// Toy bag-of-embeddings encoder: mean of embedding rows over the token
// sequence, [CLS]/[SEP] included as ordinary vocabulary items.
struct Encoder {
  Vocab vocab;
  Matrix embedding;  // V x h
};

Vector encode_query(const std::vector<std::string>& context,
                    const std::vector<std::string>& question,
                    const std::vector<std::string>& option, const Encoder& enc);

EvidenceMemory encode_facts(const std::vector<std::string>& fact_sentences,
                            const Encoder& enc);

struct AnswerHead {
  Matrix weight;  // h x 1
  double bias = 0.0;
};

Vector answer_probs(const std::vector<Vector>& merged_per_option, const AnswerHead& head);

enum class Variant { Rem, RemNoErase, AttentionOnce, SdpAtt, InputAug, MemN2N };

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant v);

struct ModelConfig {
  Variant variant = Variant::Rem;
  int groups = 1;  // 2 = parallel cause/effect REM modules
  int h = 32;
  int head_count = 2;
  int steps = 2;      // T
  int erase_cap = 4;  // k
  int min_survivors = 1;
  int option_count = 3;
  int input_aug_cap = 64;  // token cap for the input-aug variant

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

struct ForwardResult {
  Vector probs;                  // length C
  std::vector<RemTrace> traces;  // per option, slot indices global (rem variants)
  double loss = 0.0;             // set when a label is supplied
  int predicted = 0;
};

class Model {
 public:
  Model() = default;
  Model(ModelConfig cfg, Vocab vocab, uint64_t seed);

  // Forward only; traces filled for rem-family variants.
  ForwardResult forward(const SyntheticExample& ex) const;

  // Forward + backward; accumulates gradients into params().grads.
  ForwardResult forward_backward(const SyntheticExample& ex);

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  std::string to_json() const;  // lossless checkpoint
  static Model from_json(const std::string& text);

 private:
  ForwardResult run(const SyntheticExample& ex, bool with_grad, ParamStore* grads_into) const;

  ModelConfig cfg_;
  Vocab vocab_;
  ParamStore params_;
};

bool is_rem_family(Variant v);

}  // namespace remnet
