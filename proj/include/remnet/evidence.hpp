#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace remnet {

struct TripletFact {
  std::string head;
  std::string relation;
  std::string tail;
  std::string sentence;  // empty until rendered
};

// Concept lexicon + stored triplets + relation templates. Stands in for a
// knowledge base plus a generative completion model over it.
struct SyntheticKB {
  std::vector<std::string> concepts;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> triplets;
  std::map<std::string, std::string> templates;  // relation -> "{head} ... {tail}"
  uint64_t rng_seed = 0;

  static SyntheticKB from_json(const std::string& text);
  std::string to_json() const;
};

struct KeyPhrases {
  std::vector<std::string> cause;
  std::vector<std::string> effect;
  bool pattern_matched = true;  // false when the fallback path fired
};

// Strips the fixed "suppose ... happens, how will it affect ..." pattern.
// Pattern absent: the whole question becomes a single cause phrase, flagged.
KeyPhrases extract_key_phrases_wiqa(const std::string& question_text);

// Deterministic generative completion: n (relation, tail) draws over the
// KB's template relations and concept lexicon, head fixed to `phrase`.
// Combinations may be absent from the triplet store.
std::vector<TripletFact> generate_facts(const std::string& phrase,
                                        const SyntheticKB& kb, int n);

// Only triplets literally stored under the head, in store order.
std::vector<TripletFact> retrieve_facts(const std::string& phrase,
                                        const SyntheticKB& kb);

std::string triplet_to_sentence(const TripletFact& fact,
                                const std::map<std::string, std::string>& templates);

// Inverse of triplet_to_sentence over the same template set.
std::optional<TripletFact> parse_sentence(const std::string& sentence,
                                          const std::map<std::string, std::string>& templates);

// Default ConceptNet-style relation templates.
std::map<std::string, std::string> default_templates();

uint64_t hash_str(const std::string& s);

}  // namespace remnet
