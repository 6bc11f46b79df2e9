#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "remnet/gradcheck.hpp"
#include "remnet/harness.hpp"

namespace py = pybind11;
using namespace remnet;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty matrix");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows; ++i) {
    if (static_cast<int>(rows[i].size()) != m.cols)
      throw std::invalid_argument("ragged matrix");
    for (int j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

py::dict trace_dict(const RemTrace& trace) {
  py::list steps;
  for (const RemStepRecord& s : trace.steps) {
    py::dict d;
    d["scores"] = s.scores.data;
    d["erased"] = s.erased;
    d["query"] = s.query.data;
    steps.append(d);
  }
  py::dict out;
  out["initial_query"] = trace.initial_query.data;
  out["steps"] = steps;
  out["final_alive"] = trace.final_alive;
  out["merged"] = trace.merged.data;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Recursive erasure memory network core operations";

  m.def(
      "masked_softmax",
      [](const std::vector<double>& logits, const std::vector<int>& mask) {
        std::vector<char> m(mask.begin(), mask.end());
        return masked_softmax(Vector(logits), m).data;
      },
      py::arg("logits"), py::arg("mask"),
      "Softmax over unmasked entries; masked entries get exactly 0.");

  m.def(
      "select_erasures",
      [](const std::vector<double>& scores, const std::vector<int>& alive, int k,
         int min_survivors) {
        std::vector<char> a(alive.begin(), alive.end());
        return select_erasures(Vector(scores), a, k, min_survivors);
      },
      py::arg("scores"), py::arg("alive"), py::arg("k"), py::arg("min_survivors") = 1,
      "Indices to erase: up to k alive slots scoring strictly below the "
      "(k+1)-th smallest alive score.");

  m.def(
      "evidence_scores",
      [](const std::vector<double>& query,
         const std::vector<std::vector<double>>& evidence,
         const std::vector<int>& alive, int head_count, uint64_t seed) {
        EvidenceMemory mem;
        mem.embeddings = to_matrix(evidence);
        mem.alive.assign(alive.begin(), alive.end());
        Rng rng(seed);
        AttentionParams attn =
            init_attention(static_cast<int>(query.size()), head_count, rng);
        return evidence_scores(Vector(query), mem, attn).data;
      },
      py::arg("query"), py::arg("evidence"), py::arg("alive"), py::arg("head_count") = 2,
      py::arg("seed") = 0,
      "Multi-head evidence scores with parameters drawn from the seed.");

  m.def(
      "rem_forward",
      [](const std::vector<double>& query,
         const std::vector<std::vector<double>>& evidence, int steps, int erase_cap,
         int min_survivors, int head_count, uint64_t seed) {
        EvidenceMemory mem;
        mem.embeddings = to_matrix(evidence);
        mem.alive.assign(mem.embeddings.rows, 1);
        RemConfig cfg{steps, erase_cap, min_survivors, head_count};
        Rng rng(seed);
        int h = static_cast<int>(query.size());
        AttentionParams attn = init_attention(h, head_count, rng);
        MergeParams mp = init_merge(h, cfg.steps, rng);
        auto [merged, trace] = rem_forward(Vector(query), mem, cfg, attn, mp);
        return trace_dict(trace);
      },
      py::arg("query"), py::arg("evidence"), py::arg("steps") = 2,
      py::arg("erase_cap") = 4, py::arg("min_survivors") = 1, py::arg("head_count") = 2,
      py::arg("seed") = 0,
      "Score -> residual update -> erase loop with seeded parameters; returns "
      "the full refinement trace.");

  m.def(
      "extract_key_phrases",
      [](const std::string& question) {
        KeyPhrases kp = extract_key_phrases_wiqa(question);
        py::dict d;
        d["cause"] = kp.cause;
        d["effect"] = kp.effect;
        d["pattern_matched"] = kp.pattern_matched;
        return d;
      },
      py::arg("question"));

  m.def(
      "triplet_to_sentence",
      [](const std::string& head, const std::string& relation, const std::string& tail) {
        return triplet_to_sentence({head, relation, tail, ""}, default_templates());
      },
      py::arg("head"), py::arg("relation"), py::arg("tail"));

  m.def(
      "parse_sentence",
      [](const std::string& sentence) -> py::object {
        auto f = parse_sentence(sentence, default_templates());
        if (!f) return py::none();
        py::dict d;
        d["head"] = f->head;
        d["relation"] = f->relation;
        d["tail"] = f->tail;
        return d;
      },
      py::arg("sentence"));

  m.def(
      "generate_dataset",
      [](const std::string& spec_json, uint64_t seed) {
        TaskSpec spec = TaskSpec::from_json(spec_json);
        if (seed != 0) spec.seed = seed;
        Dataset ds = generate_dataset(spec, spec.seed);
        py::dict d;
        d["kb"] = ds.kb.to_json();
        d["train"] = examples_to_jsonl(ds.train);
        d["dev"] = examples_to_jsonl(ds.dev);
        d["test"] = examples_to_jsonl(ds.test);
        d["spec"] = spec.to_json();
        return d;
      },
      py::arg("spec_json") = "{}", py::arg("seed") = 0,
      "Planted-evidence synthetic dataset as JSON/JSONL strings.");

  m.def(
      "train_and_eval",
      [](const std::string& spec_json, const std::string& model_json,
         const std::string& train_json, uint64_t seed) {
        TaskSpec spec = TaskSpec::from_json(spec_json);
        Dataset ds = generate_dataset(spec, spec.seed);
        ModelConfig cfg = ModelConfig::from_json(model_json);
        Model model = build_model(spec, ds.kb, cfg, seed);
        TrainConfig tc = TrainConfig::from_json(train_json);
        tc.seed = seed;
        train(model, ds.train, ds.dev, tc);
        Metrics m = evaluate(model, ds.test);
        py::dict d;
        d["accuracy"] = m.accuracy;
        d["mean_loss"] = m.mean_loss;
        if (m.erasure_precision) d["erasure_precision"] = *m.erasure_precision;
        if (m.gold_retention) d["gold_retention"] = *m.gold_retention;
        d["checkpoint"] = model.to_json();
        return d;
      },
      py::arg("spec_json") = "{}", py::arg("model_json") = "{}",
      py::arg("train_json") = "{}", py::arg("seed") = 1,
      "Generate a task, train one model, return test metrics and the checkpoint.");
}
