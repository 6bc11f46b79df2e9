#include "remnet/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "remnet/rng.hpp"

namespace remnet {

namespace {

const std::vector<std::string> kSpecialTokens = {"[CLS]", "[SEP]", "[UNK]"};
const std::vector<std::string> kPatternTokens = {"suppose", "happens", ",",   "how",
                                                 "will",    "it",      "affect", "?"};

std::vector<std::string> template_words(const std::map<std::string, std::string>& templates) {
  std::set<std::string> words;
  for (auto& [rel, pat] : templates) {
    std::istringstream in(pat);
    std::string tok;
    while (in >> tok)
      if (tok != "{head}" && tok != "{tail}") words.insert(tok);
  }
  return {words.begin(), words.end()};
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
    std::swap(v[i], v[rng.uniform_int(i + 1)]);
}

}  // namespace

std::string answer_marker(int c) { return "ans" + std::to_string(c); }

void TaskSpec::validate() const {
  if (gold_count >= facts_per_example)
    throw std::runtime_error("TaskSpec: gold count must be < facts per example");
  if (option_count < 2) throw std::runtime_error("TaskSpec: need >= 2 options");
  if (groups != 1 && groups != 2) throw std::runtime_error("TaskSpec: groups must be 1 or 2");
  if (vocab_size < 60) throw std::runtime_error("TaskSpec: vocab too small");
  if (no_effect_frac < 0.0 || no_effect_frac > 1.0 || gold_stored_frac < 0.0 ||
      gold_stored_frac > 1.0)
    throw std::runtime_error("TaskSpec: fractions must lie in [0,1]");
}

std::string TaskSpec::to_json() const {
  nlohmann::json j;
  j["vocab_size"] = vocab_size;
  j["facts_per_example"] = facts_per_example;
  j["gold_count"] = gold_count;
  j["option_count"] = option_count;
  j["train_count"] = train_count;
  j["dev_count"] = dev_count;
  j["test_count"] = test_count;
  j["distractors"] = distractors == DistractorScheme::NearMiss ? "near-miss" : "random-kb";
  j["groups"] = groups;
  j["no_effect_frac"] = no_effect_frac;
  j["gold_stored_frac"] = gold_stored_frac;
  j["seed"] = seed;
  return j.dump(2);
}

TaskSpec TaskSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TaskSpec s;
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  s.facts_per_example = j.value("facts_per_example", s.facts_per_example);
  s.gold_count = j.value("gold_count", s.gold_count);
  s.option_count = j.value("option_count", s.option_count);
  s.train_count = j.value("train_count", s.train_count);
  s.dev_count = j.value("dev_count", s.dev_count);
  s.test_count = j.value("test_count", s.test_count);
  std::string d = j.value("distractors", std::string("near-miss"));
  if (d == "near-miss") s.distractors = DistractorScheme::NearMiss;
  else if (d == "random-kb") s.distractors = DistractorScheme::RandomKb;
  else throw std::runtime_error("TaskSpec: unknown distractor scheme '" + d + "'");
  s.groups = j.value("groups", s.groups);
  s.no_effect_frac = j.value("no_effect_frac", s.no_effect_frac);
  s.gold_stored_frac = j.value("gold_stored_frac", s.gold_stored_frac);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

SyntheticKB build_task_kb(const TaskSpec& spec, uint64_t seed) {
  SyntheticKB kb;
  kb.templates = default_templates();
  kb.rng_seed = seed;
  int reserved = static_cast<int>(kSpecialTokens.size() + kPatternTokens.size() +
                                  template_words(kb.templates).size()) +
                 spec.option_count + 2;  // + "no" "effect"
  int n_concepts = std::max(20, spec.vocab_size - reserved);
  for (int i = 0; i < n_concepts; ++i) kb.concepts.push_back("c" + std::to_string(i));

  Rng rng(hash_combine(seed, 0x4b42));
  std::vector<std::string> relations;
  for (auto& [rel, pat] : kb.templates) relations.push_back(rel);
  for (const std::string& head : kb.concepts)
    for (int t = 0; t < 3; ++t)
      kb.triplets[head].emplace_back(
          relations[rng.uniform_int(static_cast<int>(relations.size()))],
          kb.concepts[rng.uniform_int(n_concepts)]);
  return kb;
}

std::vector<std::string> task_vocabulary(const TaskSpec& spec, const SyntheticKB& kb) {
  std::vector<std::string> vocab = kSpecialTokens;
  vocab.insert(vocab.end(), kPatternTokens.begin(), kPatternTokens.end());
  for (int c = 0; c < spec.option_count; ++c) vocab.push_back(answer_marker(c));
  vocab.push_back("no");
  vocab.push_back("effect");
  for (const std::string& w : template_words(kb.templates)) vocab.push_back(w);
  vocab.insert(vocab.end(), kb.concepts.begin(), kb.concepts.end());
  return vocab;
}

namespace {

SyntheticExample make_example(const TaskSpec& spec, SyntheticKB& kb, Rng& rng,
                              std::vector<std::string>& relations) {
  SyntheticExample ex;
  int n_concepts = static_cast<int>(kb.concepts.size());
  std::string cause = kb.concepts[rng.uniform_int(n_concepts)];
  std::string effect = cause;
  while (effect == cause) effect = kb.concepts[rng.uniform_int(n_concepts)];
  ex.question = "suppose " + cause + " happens , how will it affect " + effect + " ?";

  for (int i = 0; i < 8; ++i)
    ex.context.push_back(kb.concepts[rng.uniform_int(n_concepts)]);

  bool no_effect = rng.uniform() < spec.no_effect_frac;
  ex.type = no_effect ? "no-effect" : "standard";

  int C = spec.option_count;
  int marker = rng.uniform_int(no_effect ? C - 1 : C);

  // Options: a shuffled set of marker tokens; when no-effect examples are in
  // play, one option is the literal "no effect" choice.
  std::vector<std::vector<std::string>> opts;
  int n_marker_opts = spec.no_effect_frac > 0.0 ? C - 1 : C;
  for (int c = 0; c < n_marker_opts; ++c) opts.push_back({answer_marker(c)});
  if (spec.no_effect_frac > 0.0) opts.push_back({"no", "effect"});
  shuffle_vec(opts, rng);
  ex.options = opts;
  std::vector<std::string> target =
      no_effect ? std::vector<std::string>{"no", "effect"}
                : std::vector<std::string>{answer_marker(marker)};
  for (int c = 0; c < C; ++c)
    if (ex.options[c] == target) ex.label = c;

  int g = no_effect ? 0 : spec.gold_count;
  int total = spec.facts_per_example;
  std::vector<ExampleFact> facts;
  std::vector<char> is_gold;

  for (int i = 0; i < g; ++i) {
    ExampleFact f;
    bool cause_side = (spec.groups == 2) ? (i % 2 == 0) : true;
    f.group = cause_side ? "cause" : "effect";
    f.fact.head = cause_side ? cause : effect;
    f.fact.relation = relations[rng.uniform_int(static_cast<int>(relations.size()))];
    f.fact.tail = answer_marker(marker);
    f.fact.sentence = triplet_to_sentence(f.fact, kb.templates);
    facts.push_back(std::move(f));
    is_gold.push_back(1);
  }
  if (!no_effect && rng.uniform() < spec.gold_stored_frac)
    for (int i = 0; i < g; ++i)
      kb.triplets[facts[i].fact.head].emplace_back(facts[i].fact.relation,
                                                   facts[i].fact.tail);

  for (int i = g; i < total; ++i) {
    ExampleFact f;
    bool cause_side = (spec.groups == 2) ? (i % 2 == 0) : true;
    f.group = cause_side ? "cause" : "effect";
    if (spec.distractors == DistractorScheme::NearMiss) {
      f.fact.head = cause_side ? cause : effect;
      f.fact.relation = relations[rng.uniform_int(static_cast<int>(relations.size()))];
      f.fact.tail = kb.concepts[rng.uniform_int(n_concepts)];
    } else {
      const std::string& head = kb.concepts[rng.uniform_int(n_concepts)];
      const auto& stored = kb.triplets.at(head);
      const auto& rt = stored[rng.uniform_int(static_cast<int>(stored.size()))];
      f.fact.head = head;
      f.fact.relation = rt.first;
      f.fact.tail = rt.second;
    }
    f.fact.sentence = triplet_to_sentence(f.fact, kb.templates);
    facts.push_back(std::move(f));
    is_gold.push_back(0);
  }

  // Shuffle slots so gold positions carry no signal.
  std::vector<int> order(facts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  shuffle_vec(order, rng);
  for (int src : order) {
    if (is_gold[src]) ex.gold.push_back(static_cast<int>(ex.facts.size()));
    ex.facts.push_back(facts[src]);
  }
  std::sort(ex.gold.begin(), ex.gold.end());
  return ex;
}

}  // namespace

Dataset generate_dataset(const TaskSpec& spec, uint64_t seed) {
  spec.validate();
  Dataset ds;
  ds.kb = build_task_kb(spec, seed);
  std::vector<std::string> relations;
  for (auto& [rel, pat] : ds.kb.templates) relations.push_back(rel);

  auto gen_split = [&](int count, uint64_t tag) {
    std::vector<SyntheticExample> out;
    Rng rng = Rng(seed).fork(tag);
    for (int i = 0; i < count; ++i)
      out.push_back(make_example(spec, ds.kb, rng, relations));
    return out;
  };
  ds.train = gen_split(spec.train_count, 1);
  ds.dev = gen_split(spec.dev_count, 2);
  ds.test = gen_split(spec.test_count, 3);
  return ds;
}

std::string example_to_json(const SyntheticExample& ex) {
  nlohmann::json j;
  j["context"] = ex.context;
  j["question"] = ex.question;
  j["options"] = ex.options;
  j["facts"] = nlohmann::json::array();
  for (const ExampleFact& f : ex.facts)
    j["facts"].push_back({{"head", f.fact.head},
                          {"relation", f.fact.relation},
                          {"tail", f.fact.tail},
                          {"sentence", f.fact.sentence},
                          {"group", f.group}});
  j["gold"] = ex.gold;
  j["label"] = ex.label;
  j["type"] = ex.type;
  return j.dump();
}

SyntheticExample example_from_json(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  SyntheticExample ex;
  ex.context = j.at("context").get<std::vector<std::string>>();
  ex.question = j.at("question").get<std::string>();
  ex.options = j.at("options").get<std::vector<std::vector<std::string>>>();
  for (const auto& f : j.at("facts")) {
    ExampleFact ef;
    ef.fact.head = f.at("head").get<std::string>();
    ef.fact.relation = f.at("relation").get<std::string>();
    ef.fact.tail = f.at("tail").get<std::string>();
    ef.fact.sentence = f.at("sentence").get<std::string>();
    ef.group = f.at("group").get<std::string>();
    ex.facts.push_back(std::move(ef));
  }
  ex.gold = j.at("gold").get<std::vector<int>>();
  ex.label = j.at("label").get<int>();
  ex.type = j.value("type", std::string("standard"));
  return ex;
}

std::string examples_to_jsonl(const std::vector<SyntheticExample>& exs) {
  std::string out;
  for (const SyntheticExample& ex : exs) {
    out += example_to_json(ex);
    out += '\n';
  }
  return out;
}

std::vector<SyntheticExample> examples_from_jsonl(const std::string& text) {
  std::vector<SyntheticExample> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(example_from_json(line));
  }
  return out;
}

}  // namespace remnet
