#include "remnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace remnet {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

Vector softmax_plain(const std::vector<double>& scores) {
  double mx = *std::max_element(scores.begin(), scores.end());
  Vector out(static_cast<int>(scores.size()));
  double z = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    out[static_cast<int>(i)] = std::exp(scores[i] - mx);
    z += out[static_cast<int>(i)];
  }
  for (int i = 0; i < out.len(); ++i) out[i] /= z;
  return out;
}

}  // namespace

Vocab Vocab::build(const std::vector<std::string>& toks) {
  Vocab v;
  for (const std::string& t : toks) {
    if (v.token_to_id.count(t)) continue;
    v.token_to_id[t] = static_cast<int>(v.tokens.size());
    v.tokens.push_back(t);
  }
  if (!v.token_to_id.count("[UNK]")) {
    v.token_to_id["[UNK]"] = static_cast<int>(v.tokens.size());
    v.tokens.push_back("[UNK]");
  }
  return v;
}

int Vocab::id(const std::string& tok) const {
  auto it = token_to_id.find(tok);
  return it == token_to_id.end() ? unk_id() : it->second;
}

int Vocab::unk_id() const { return token_to_id.at("[UNK]"); }

Vector encode_query(const std::vector<std::string>& context,
                    const std::vector<std::string>& question,
                    const std::vector<std::string>& option, const Encoder& enc) {
  if (option.empty()) throw std::runtime_error("encode_query: empty option");
  std::vector<std::string> seq{"[CLS]"};
  seq.insert(seq.end(), context.begin(), context.end());
  seq.push_back("[SEP]");
  seq.insert(seq.end(), question.begin(), question.end());
  seq.push_back("[SEP]");
  seq.insert(seq.end(), option.begin(), option.end());

  Vector out(enc.embedding.cols);
  for (const std::string& tok : seq) {
    int r = enc.vocab.id(tok);
    for (int j = 0; j < enc.embedding.cols; ++j) out[j] += enc.embedding.at(r, j);
  }
  for (int j = 0; j < out.len(); ++j) out[j] /= static_cast<double>(seq.size());
  return out;
}

EvidenceMemory encode_facts(const std::vector<std::string>& fact_sentences,
                            const Encoder& enc) {
  if (fact_sentences.empty()) throw std::runtime_error("encode_facts: empty fact list");
  EvidenceMemory mem;
  mem.embeddings = Matrix(static_cast<int>(fact_sentences.size()), enc.embedding.cols);
  mem.alive.assign(fact_sentences.size(), 1);
  for (size_t i = 0; i < fact_sentences.size(); ++i) {
    std::vector<std::string> toks = tokenize(fact_sentences[i]);
    if (toks.empty()) throw std::runtime_error("encode_facts: empty sentence");
    for (const std::string& tok : toks) {
      int r = enc.vocab.id(tok);
      for (int j = 0; j < enc.embedding.cols; ++j)
        mem.embeddings.at(static_cast<int>(i), j) += enc.embedding.at(r, j);
    }
    for (int j = 0; j < enc.embedding.cols; ++j)
      mem.embeddings.at(static_cast<int>(i), j) /= static_cast<double>(toks.size());
  }
  return mem;
}

Vector answer_probs(const std::vector<Vector>& merged_per_option, const AnswerHead& head) {
  if (merged_per_option.size() < 2)
    throw std::runtime_error("answer_probs: need >= 2 options");
  std::vector<double> scores;
  for (const Vector& m : merged_per_option) {
    if (m.len() != head.weight.rows)
      throw ShapeError("answer_probs: m has len " + std::to_string(m.len()) +
                       ", W_p is " + head.weight.shape_str());
    double s = head.bias;
    for (int i = 0; i < m.len(); ++i) s += m[i] * head.weight.at(i, 0);
    scores.push_back(s);
  }
  return softmax_plain(scores);
}

Variant variant_from_string(const std::string& name) {
  if (name == "rem") return Variant::Rem;
  if (name == "rem-no-erase") return Variant::RemNoErase;
  if (name == "attention-once") return Variant::AttentionOnce;
  if (name == "sdp-att") return Variant::SdpAtt;
  if (name == "input-aug") return Variant::InputAug;
  if (name == "memn2n") return Variant::MemN2N;
  throw std::runtime_error("unknown variant '" + name + "'");
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::Rem: return "rem";
    case Variant::RemNoErase: return "rem-no-erase";
    case Variant::AttentionOnce: return "attention-once";
    case Variant::SdpAtt: return "sdp-att";
    case Variant::InputAug: return "input-aug";
    case Variant::MemN2N: return "memn2n";
  }
  throw std::runtime_error("unknown variant");
}

bool is_rem_family(Variant v) {
  return v == Variant::Rem || v == Variant::RemNoErase || v == Variant::AttentionOnce;
}

namespace {

RemConfig effective_rem(const ModelConfig& cfg) {
  RemConfig rc;
  rc.head_count = cfg.head_count;
  rc.min_survivors = cfg.min_survivors;
  switch (cfg.variant) {
    case Variant::Rem:
      rc.steps = cfg.steps;
      rc.erase_cap = cfg.erase_cap;
      break;
    case Variant::RemNoErase:
      rc.steps = cfg.steps;
      rc.erase_cap = 0;
      break;
    case Variant::AttentionOnce:
      rc.steps = 1;
      rc.erase_cap = 0;
      break;
    default:
      rc.steps = 1;
      rc.erase_cap = 0;
      break;
  }
  return rc;
}

}  // namespace

void ModelConfig::validate() const {
  if (h <= 0 || head_count <= 0 || h % head_count != 0)
    throw std::runtime_error("ModelConfig: head_count must divide h");
  if (groups != 1 && groups != 2)
    throw std::runtime_error("ModelConfig: groups must be 1 or 2");
  if (option_count < 2) throw std::runtime_error("ModelConfig: need >= 2 options");
  if (steps < 1 || erase_cap < 0 || min_survivors < 1)
    throw std::runtime_error("ModelConfig: bad REM settings");
  if (groups == 2 && !is_rem_family(variant))
    throw std::runtime_error("ModelConfig: groups=2 requires a rem-family variant");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["variant"] = variant_to_string(variant);
  j["groups"] = groups;
  j["h"] = h;
  j["head_count"] = head_count;
  j["steps"] = steps;
  j["erase_cap"] = erase_cap;
  j["min_survivors"] = min_survivors;
  j["option_count"] = option_count;
  j["input_aug_cap"] = input_aug_cap;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  c.variant = variant_from_string(j.value("variant", std::string("rem")));
  c.groups = j.value("groups", c.groups);
  c.h = j.value("h", c.h);
  c.head_count = j.value("head_count", c.head_count);
  c.steps = j.value("steps", c.steps);
  c.erase_cap = j.value("erase_cap", c.erase_cap);
  c.min_survivors = j.value("min_survivors", c.min_survivors);
  c.option_count = j.value("option_count", c.option_count);
  c.input_aug_cap = j.value("input_aug_cap", c.input_aug_cap);
  c.validate();
  return c;
}

Model::Model(ModelConfig cfg, Vocab vocab, uint64_t seed)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
  cfg_.validate();
  params_.rng_seed = seed;
  Rng rng(seed);
  int h = cfg_.h;
  int dk = h / cfg_.head_count;
  params_.add("encoder.embed", vocab_.size(), h, rng);

  if (is_rem_family(cfg_.variant)) {
    RemConfig rc = effective_rem(cfg_);
    for (int g = 0; g < cfg_.groups; ++g) {
      std::string base = "rem.g" + std::to_string(g) + ".";
      for (int a = 0; a < cfg_.head_count; ++a) {
        params_.add(base + "attn.h" + std::to_string(a) + ".wq", h, dk, rng);
        params_.add(base + "attn.h" + std::to_string(a) + ".wk", h, dk, rng);
      }
      params_.add(base + "merge.w", h * (rc.steps + 1), h, rng);
      params_.add_zeros(base + "merge.b", 1, h);
    }
    if (cfg_.groups == 2) {
      params_.add("combine.w", 2 * h, h, rng);
      params_.add_zeros("combine.b", 1, h);
    }
  } else if (cfg_.variant == Variant::MemN2N) {
    params_.add("memn2n.hop", h, h, rng);
  }
  params_.add("head.w", h, 1, rng);
  params_.add_zeros("head.b", 1, 1);
}

ForwardResult Model::forward(const SyntheticExample& ex) const {
  return run(ex, false, nullptr);
}

ForwardResult Model::forward_backward(const SyntheticExample& ex) {
  return run(ex, true, &params_);
}

ForwardResult Model::run(const SyntheticExample& ex, bool with_grad,
                         ParamStore* grads_into) const {
  int C = static_cast<int>(ex.options.size());
  if (C != cfg_.option_count)
    throw std::runtime_error("forward: example has " + std::to_string(C) +
                             " options, config expects " +
                             std::to_string(cfg_.option_count));
  if (ex.facts.empty() && cfg_.variant != Variant::InputAug)
    throw std::runtime_error("forward: example has no facts");

  Tape tape;
  std::map<std::string, Tape::Id> bound;
  auto bind = [&](const std::string& name) {
    auto it = bound.find(name);
    if (it != bound.end()) return it->second;
    Tape::Id id = tape.leaf(params_.get(name));
    bound[name] = id;
    return id;
  };

  Tape::Id embed = bind("encoder.embed");
  int h = cfg_.h;
  std::vector<std::string> question_toks = tokenize(ex.question);

  auto seq_ids = [&](const std::vector<std::string>& toks) {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const std::string& t : toks) ids.push_back(vocab_.id(t));
    return ids;
  };
  auto query_tokens = [&](int c) {
    std::vector<std::string> seq{"[CLS]"};
    seq.insert(seq.end(), ex.context.begin(), ex.context.end());
    seq.push_back("[SEP]");
    seq.insert(seq.end(), question_toks.begin(), question_toks.end());
    seq.push_back("[SEP]");
    if (ex.options[c].empty()) throw std::runtime_error("forward: empty option");
    seq.insert(seq.end(), ex.options[c].begin(), ex.options[c].end());
    return seq;
  };
  auto encode_rows = [&](const std::vector<int>& fact_idx) {
    std::vector<Tape::Id> rows;
    for (int i : fact_idx)
      rows.push_back(tape.rows_mean(embed, seq_ids(tokenize(ex.facts[i].fact.sentence))));
    return tape.stack_rows(rows);
  };

  // Group -> global fact indices. groups=1 keeps everything in one memory.
  std::vector<std::vector<int>> group_slots;
  if (is_rem_family(cfg_.variant) && cfg_.groups == 2) {
    group_slots.assign(2, {});
    for (size_t i = 0; i < ex.facts.size(); ++i)
      group_slots[ex.facts[i].group == "effect" ? 1 : 0].push_back(static_cast<int>(i));
    for (int g = 0; g < 2; ++g)
      if (group_slots[g].empty())
        throw std::runtime_error("forward: group " + std::to_string(g) +
                                 " has no facts in dual-group mode");
  } else {
    group_slots.assign(1, {});
    for (size_t i = 0; i < ex.facts.size(); ++i)
      group_slots[0].push_back(static_cast<int>(i));
  }

  ForwardResult result;
  std::vector<Tape::Id> option_scores;
  RemConfig rc = effective_rem(cfg_);

  for (int c = 0; c < C; ++c) {
    Tape::Id q0 = tape.rows_mean(embed, seq_ids(query_tokens(c)));
    Tape::Id m = -1;

    if (is_rem_family(cfg_.variant)) {
      std::vector<Tape::Id> merged_per_group;
      std::vector<RemTrace> group_traces;
      for (size_t g = 0; g < group_slots.size(); ++g) {
        std::string base = "rem.g" + std::to_string(g) + ".";
        RemNodes nodes;
        for (int a = 0; a < cfg_.head_count; ++a) {
          nodes.attention.query_proj.push_back(
              bind(base + "attn.h" + std::to_string(a) + ".wq"));
          nodes.attention.key_proj.push_back(
              bind(base + "attn.h" + std::to_string(a) + ".wk"));
        }
        nodes.merge_weight = bind(base + "merge.w");
        nodes.merge_bias = bind(base + "merge.b");
        MemoryNode mem{encode_rows(group_slots[g]),
                       std::vector<char>(group_slots[g].size(), 1)};
        RemResult rr = rem_forward(tape, q0, std::move(mem), rc, nodes);
        merged_per_group.push_back(rr.merged);
        group_traces.push_back(std::move(rr.trace));
      }
      if (group_slots.size() == 2) {
        Tape::Id cat = tape.concat_cols(merged_per_group);
        m = tape.affine_row(cat, bind("combine.w"), bind("combine.b"));
      } else {
        m = merged_per_group[0];
      }

      // Remap per-group traces onto global fact indices.
      RemTrace global;
      int total = static_cast<int>(ex.facts.size());
      size_t n_steps = group_traces[0].steps.size();
      for (size_t t = 0; t < n_steps; ++t) {
        RemStepRecord rec;
        rec.scores = Vector(total);
        for (size_t g = 0; g < group_traces.size(); ++g) {
          const RemStepRecord& src = group_traces[g].steps[t];
          for (int i = 0; i < src.scores.len(); ++i)
            rec.scores[group_slots[g][i]] = src.scores[i];
          for (int i : src.erased) rec.erased.push_back(group_slots[g][i]);
        }
        std::sort(rec.erased.begin(), rec.erased.end());
        global.steps.push_back(std::move(rec));
      }
      for (size_t g = 0; g < group_traces.size(); ++g)
        for (int i : group_traces[g].final_alive)
          global.final_alive.push_back(group_slots[g][i]);
      std::sort(global.final_alive.begin(), global.final_alive.end());
      result.traces.push_back(std::move(global));
    } else if (cfg_.variant == Variant::SdpAtt) {
      Tape::Id e = encode_rows(group_slots[0]);
      std::vector<char> alive(group_slots[0].size(), 1);
      Tape::Id logits =
          tape.scale(tape.matmul(q0, tape.transpose(e)), 1.0 / std::sqrt(double(h)));
      Tape::Id s = tape.masked_softmax_row(logits, alive);
      m = tape.add(q0, tape.matmul(s, e));
    } else if (cfg_.variant == Variant::InputAug) {
      std::vector<std::string> seq = query_tokens(c);
      for (const ExampleFact& f : ex.facts) {
        std::vector<std::string> ft = tokenize(f.fact.sentence);
        seq.insert(seq.end(), ft.begin(), ft.end());
      }
      if (static_cast<int>(seq.size()) > cfg_.input_aug_cap)
        seq.resize(cfg_.input_aug_cap);
      m = tape.rows_mean(embed, seq_ids(seq));
    } else {  // MemN2N: two value-readout hops with a tied hop projection
      Tape::Id e = encode_rows(group_slots[0]);
      std::vector<char> alive(group_slots[0].size(), 1);
      Tape::Id hop = bind("memn2n.hop");
      Tape::Id u = q0;
      for (int hopi = 0; hopi < 2; ++hopi) {
        Tape::Id p = tape.masked_softmax_row(
            tape.scale(tape.matmul(u, tape.transpose(e)), 1.0 / std::sqrt(double(h))),
            alive);
        Tape::Id o = tape.matmul(p, e);
        u = tape.add(tape.matmul(u, hop), o);
      }
      m = u;
    }

    option_scores.push_back(tape.affine_row(m, bind("head.w"), bind("head.b")));
  }

  Tape::Id scores = tape.concat_cols(option_scores);
  result.probs = Vector(C);
  {
    std::vector<double> sv = tape.val(scores).data;
    result.probs = softmax_plain(sv);
  }
  result.predicted = 0;
  for (int c = 1; c < C; ++c)
    if (result.probs[c] > result.probs[result.predicted]) result.predicted = c;

  Tape::Id loss = tape.softmax_xent(scores, ex.label);
  result.loss = tape.val(loss).data[0];

  if (with_grad) {
    tape.backward(loss);
    for (auto& [name, id] : bound) {
      Matrix& g = grads_into->grads.at(name);
      const Matrix& tg = tape.grad(id);
      for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += tg.data[i];
    }
  }
  return result;
}

std::string Model::to_json() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(cfg_.to_json());
  j["vocab"] = vocab_.tokens;
  j["seed"] = params_.rng_seed;
  j["params"] = nlohmann::json::object();
  for (auto& [name, m] : params_.params)
    j["params"][name] = {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
  return j.dump();
}

Model Model::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Model m;
  m.cfg_ = ModelConfig::from_json(j.at("config").dump());
  m.vocab_ = Vocab::build(j.at("vocab").get<std::vector<std::string>>());
  m.params_.rng_seed = j.value("seed", 0ULL);
  for (auto& [name, pm] : j.at("params").items()) {
    Matrix mat(pm.at("rows").get<int>(), pm.at("cols").get<int>(),
               pm.at("data").get<std::vector<double>>());
    m.params_.params[name] = mat;
    m.params_.grads[name] = Matrix(mat.rows, mat.cols);
  }
  return m;
}

}  // namespace remnet
