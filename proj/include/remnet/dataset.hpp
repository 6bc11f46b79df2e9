#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remnet/evidence.hpp"

namespace remnet {

struct ExampleFact {
  TripletFact fact;
  std::string group;  // "cause" or "effect"
};

struct SyntheticExample {
  std::vector<std::string> context;               // tokens
  std::string question;                           // WIQA-pattern text
  std::vector<std::vector<std::string>> options;  // C token lists
  std::vector<ExampleFact> facts;
  std::vector<int> gold;  // indices into facts
  int label = 0;
  std::string type = "standard";  // "standard" | "no-effect"
};

enum class DistractorScheme { RandomKb, NearMiss };

struct TaskSpec {
  int vocab_size = 200;
  int facts_per_example = 20;  // I
  int gold_count = 3;          // g
  int option_count = 3;        // C
  int train_count = 400;
  int dev_count = 100;
  int test_count = 200;
  DistractorScheme distractors = DistractorScheme::NearMiss;
  int groups = 2;
  double no_effect_frac = 0.0;
  // Fraction of examples whose gold triplets are also inserted into the KB
  // store, so retrieval can recover them.
  double gold_stored_frac = 0.5;
  uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static TaskSpec from_json(const std::string& text);
};

struct Dataset {
  SyntheticKB kb;
  std::vector<SyntheticExample> train, dev, test;
};

// Deterministic planted-evidence task generation: the gold facts' tails carry
// an answer-marker token whose majority picks the correct option.
Dataset generate_dataset(const TaskSpec& spec, uint64_t seed);

std::string example_to_json(const SyntheticExample& ex);
SyntheticExample example_from_json(const std::string& line);

std::string examples_to_jsonl(const std::vector<SyntheticExample>& exs);
std::vector<SyntheticExample> examples_from_jsonl(const std::string& text);

// All tokens a model over this spec must know, in a fixed order.
std::vector<std::string> task_vocabulary(const TaskSpec& spec, const SyntheticKB& kb);

// Marker token for option index c.
std::string answer_marker(int c);

// Rebuilds the KB used by generate_dataset for a given spec (pure function
// of spec fields and seed).
SyntheticKB build_task_kb(const TaskSpec& spec, uint64_t seed);

}  // namespace remnet
