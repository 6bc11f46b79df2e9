#include "remnet/evidence.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "remnet/rng.hpp"

namespace remnet {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string strip_punct(std::string s) {
  while (!s.empty() && (s.back() == '?' || s.back() == '.' || s.back() == ','))
    s.pop_back();
  return trim(s);
}

// Splits "{head} MID {tail}" into MID; templates are required to have this form.
std::string template_mid(const std::string& pattern) {
  const std::string h = "{head}", t = "{tail}";
  size_t hp = pattern.find(h), tp = pattern.find(t);
  if (hp == std::string::npos || tp == std::string::npos || tp < hp)
    throw std::runtime_error("bad template pattern: " + pattern);
  return pattern.substr(hp + h.size(), tp - hp - h.size());
}

int token_count(const std::string& s) {
  std::istringstream in(s);
  std::string tok;
  int n = 0;
  while (in >> tok) ++n;
  return n;
}

}  // namespace

uint64_t hash_str(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SyntheticKB SyntheticKB::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SyntheticKB kb;
  kb.concepts = j.at("concepts").get<std::vector<std::string>>();
  for (auto& [head, list] : j.at("triplets").items())
    for (auto& rt : list)
      kb.triplets[head].emplace_back(rt.at(0).get<std::string>(),
                                     rt.at(1).get<std::string>());
  for (auto& [rel, pat] : j.at("templates").items())
    kb.templates[rel] = pat.get<std::string>();
  kb.rng_seed = j.value("seed", 0ULL);
  for (auto& [head, list] : kb.triplets)
    for (auto& [rel, tail] : list)
      if (!kb.templates.count(rel))
        throw std::runtime_error("KB: relation '" + rel + "' has no template");
  return kb;
}

std::string SyntheticKB::to_json() const {
  nlohmann::json j;
  j["concepts"] = concepts;
  j["triplets"] = nlohmann::json::object();
  for (auto& [head, list] : triplets) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& [rel, tail] : list) arr.push_back({rel, tail});
    j["triplets"][head] = std::move(arr);
  }
  j["templates"] = nlohmann::json::object();
  for (auto& [rel, pat] : templates) j["templates"][rel] = pat;
  j["seed"] = rng_seed;
  return j.dump(2);
}

KeyPhrases extract_key_phrases_wiqa(const std::string& question_text) {
  if (trim(question_text).empty())
    throw std::runtime_error("extract_key_phrases_wiqa: empty question");
  std::string q = question_text;
  std::transform(q.begin(), q.end(), q.begin(),
                 [](unsigned char c) { return std::tolower(c); });

  KeyPhrases out;
  size_t sup = q.find("suppose ");
  size_t hap = q.find(" happens");
  // The dataset pattern writes "affects" in places; accept both spellings.
  size_t aff = q.find("how will it affect");
  if (sup != std::string::npos && hap != std::string::npos &&
      aff != std::string::npos && sup < hap && hap < aff) {
    std::string cause = trim(q.substr(sup + 8, hap - sup - 8));
    size_t eff_start = aff + std::string("how will it affect").size();
    if (eff_start < q.size() && q.compare(eff_start, 1, "s") == 0) ++eff_start;
    std::string effect = strip_punct(trim(q.substr(eff_start)));
    if (!cause.empty() && !effect.empty()) {
      out.cause.push_back(cause);
      out.effect.push_back(effect);
      return out;
    }
  }
  out.pattern_matched = false;
  out.cause.push_back(strip_punct(trim(q)));
  return out;
}

std::string triplet_to_sentence(const TripletFact& fact,
                                const std::map<std::string, std::string>& templates) {
  auto it = templates.find(fact.relation);
  if (it == templates.end())
    throw std::runtime_error("unknown relation '" + fact.relation + "'");
  std::string s = it->second;
  s.replace(s.find("{head}"), 6, fact.head);
  s.replace(s.find("{tail}"), 6, fact.tail);
  if (token_count(s) > 30)
    throw std::runtime_error("rendered sentence exceeds 30 tokens");
  return s;
}

std::optional<TripletFact> parse_sentence(
    const std::string& sentence, const std::map<std::string, std::string>& templates) {
  for (auto& [rel, pattern] : templates) {
    std::string mid = template_mid(pattern);
    size_t pos = sentence.find(mid);
    if (pos == std::string::npos || pos == 0) continue;
    TripletFact f;
    f.relation = rel;
    f.head = sentence.substr(0, pos);
    f.tail = sentence.substr(pos + mid.size());
    if (f.head.empty() || f.tail.empty()) continue;
    f.sentence = sentence;
    return f;
  }
  return std::nullopt;
}

std::vector<TripletFact> generate_facts(const std::string& phrase,
                                        const SyntheticKB& kb, int n) {
  if (n < 0) throw std::runtime_error("generate_facts: n must be >= 0");
  std::vector<std::string> relations;
  for (auto& [rel, pat] : kb.templates) relations.push_back(rel);
  if (relations.empty() || kb.concepts.empty())
    throw std::runtime_error("generate_facts: KB has no templates or concepts");

  Rng rng(hash_combine(kb.rng_seed, hash_str(phrase)));
  std::vector<TripletFact> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    TripletFact f;
    f.head = phrase;
    f.relation = relations[rng.uniform_int(static_cast<int>(relations.size()))];
    f.tail = kb.concepts[rng.uniform_int(static_cast<int>(kb.concepts.size()))];
    f.sentence = triplet_to_sentence(f, kb.templates);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<TripletFact> retrieve_facts(const std::string& phrase,
                                        const SyntheticKB& kb) {
  std::vector<TripletFact> out;
  auto it = kb.triplets.find(phrase);
  if (it == kb.triplets.end()) return out;
  for (auto& [rel, tail] : it->second) {
    TripletFact f{phrase, rel, tail, ""};
    f.sentence = triplet_to_sentence(f, kb.templates);
    out.push_back(std::move(f));
  }
  return out;
}

std::map<std::string, std::string> default_templates() {
  return {
      {"AtLocation", "{head} is located at {tail}"},
      {"CapableOf", "{head} is capable of {tail}"},
      {"Causes", "{head} causes {tail}"},
      {"Desires", "{head} desires {tail}"},
      {"HasPrerequisite", "{head} requires {tail}"},
      {"HasProperty", "{head} has property {tail}"},
      {"HasSubevent", "{head} involves {tail}"},
      {"IsPartOf", "{head} is part of {tail}"},
      {"MadeOf", "{head} is made of {tail}"},
      {"UsedFor", "{head} is used for {tail}"},
  };
}

}  // namespace remnet
