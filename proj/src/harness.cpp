#include "remnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "remnet/rng.hpp"

namespace remnet {

void TrainConfig::validate() const {
  if (epochs < 0 || batch_size <= 0 || lr <= 0.0)
    throw std::runtime_error("TrainConfig: epochs/batch/lr must be positive");
  if (weight_decay < 0.0)
    throw std::runtime_error("TrainConfig: weight_decay must be non-negative");
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

struct AdamState {
  std::map<std::string, Matrix> m, v;
  long step = 0;
};

void adam_step(ParamStore& params, AdamState& state, const TrainConfig& cfg) {
  ++state.step;
  double lr = cfg.lr;
  if (cfg.warmup_steps > 0 && state.step <= cfg.warmup_steps)
    lr *= static_cast<double>(state.step) / cfg.warmup_steps;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params.params) {
    const Matrix& g = params.grads.at(name);
    Matrix& m = state.m[name];
    Matrix& v = state.v[name];
    if (m.data.empty()) {
      m = Matrix(p.rows, p.cols);
      v = Matrix(p.rows, p.cols);
    }
    for (size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
      double mh = m.data[i] / bc1;
      double vh = v.data[i] / bc2;
      p.data[i] -= lr * (mh / (std::sqrt(vh) + cfg.adam_eps) +
                         cfg.weight_decay * p.data[i]);
    }
  }
}

}  // namespace

std::vector<EpochRecord> train(Model& model, const std::vector<SyntheticExample>& train_set,
                               const std::vector<SyntheticExample>& dev_set,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::runtime_error("train: empty training set");

  std::vector<EpochRecord> history;
  if (cfg.epochs == 0) {
    EpochRecord rec;
    rec.dev = evaluate(model, dev_set);
    history.push_back(std::move(rec));
    return history;
  }

  AdamState adam;
  Rng rng = Rng(cfg.seed).fork(0x7261);
  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);

    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      size_t end = std::min(pos + cfg.batch_size, order.size());
      model.params().zero_grads();
      double batch_loss = 0.0;
      for (size_t i = pos; i < end; ++i)
        batch_loss += model.forward_backward(train_set[order[i]]).loss;
      double inv = 1.0 / static_cast<double>(end - pos);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch));
      for (auto& [name, g] : model.params().grads)
        for (double& x : g.data) x *= inv;
      adam_step(model.params(), adam, cfg);
      epoch_loss += batch_loss;
      pos = end;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.dev = evaluate(model, dev_set);
    history.push_back(std::move(rec));
  }
  return history;
}

Metrics evaluate(const Model& model, const std::vector<SyntheticExample>& data,
                 std::vector<RemTrace>* traces_out) {
  Metrics m;
  if (data.empty()) return m;
  bool rem_family = is_rem_family(model.config().variant);
  long correct = 0;
  double loss = 0.0;
  long erased_total = 0, erased_distractor = 0;
  long gold_total = 0, gold_alive = 0;
  std::map<std::string, std::pair<long, long>> per_type;  // correct, count

  for (const SyntheticExample& ex : data) {
    ForwardResult r = model.forward(ex);
    bool ok = r.predicted == ex.label;
    correct += ok ? 1 : 0;
    loss += r.loss;
    auto& pt = per_type[ex.type];
    pt.first += ok ? 1 : 0;
    pt.second += 1;

    if (rem_family && !r.traces.empty()) {
      const RemTrace& trace = r.traces[r.predicted];
      std::set<int> gold(ex.gold.begin(), ex.gold.end());
      for (const RemStepRecord& step : trace.steps)
        for (int i : step.erased) {
          ++erased_total;
          if (!gold.count(i)) ++erased_distractor;
        }
      std::set<int> alive(trace.final_alive.begin(), trace.final_alive.end());
      for (int gidx : ex.gold) {
        ++gold_total;
        if (alive.count(gidx)) ++gold_alive;
      }
      if (traces_out) traces_out->push_back(trace);
    } else if (traces_out) {
      traces_out->push_back(RemTrace{});
    }
  }

  m.accuracy = static_cast<double>(correct) / data.size();
  m.mean_loss = loss / data.size();
  for (auto& [type, cc] : per_type)
    m.per_type[type] = static_cast<double>(cc.first) / cc.second;
  if (rem_family) {
    if (erased_total > 0)
      m.erasure_precision = static_cast<double>(erased_distractor) / erased_total;
    if (gold_total > 0)
      m.gold_retention = static_cast<double>(gold_alive) / gold_total;
  }
  return m;
}

std::string metrics_csv_header() {
  return "variant,seed,accuracy,erasure_precision,gold_retention,mean_loss";
}

namespace {
std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}
}  // namespace

std::string metrics_csv_row(const std::string& variant, uint64_t seed, const Metrics& m) {
  std::string ep = m.erasure_precision ? fmt(*m.erasure_precision) : "";
  std::string gr = m.gold_retention ? fmt(*m.gold_retention) : "";
  return variant + "," + std::to_string(seed) + "," + fmt(m.accuracy) + "," + ep + "," +
         gr + "," + fmt(m.mean_loss);
}

Model build_model(const TaskSpec& spec, const SyntheticKB& kb, ModelConfig cfg,
                  uint64_t seed) {
  cfg.option_count = spec.option_count;
  if (!is_rem_family(cfg.variant)) cfg.groups = 1;
  Vocab vocab = Vocab::build(task_vocabulary(spec, kb));
  return Model(cfg, vocab, seed);
}

std::vector<AblationRow> run_ablation_suite(const TaskSpec& spec, const ModelConfig& base,
                                            const TrainConfig& tcfg,
                                            const std::vector<uint64_t>& seeds) {
  if (seeds.size() < 2)
    throw std::runtime_error("run_ablation_suite: need >= 2 seeds");
  const Variant variants[] = {Variant::Rem, Variant::RemNoErase, Variant::AttentionOnce};
  std::vector<AblationRow> rows;
  for (uint64_t seed : seeds) {
    TaskSpec s = spec;
    s.seed = seed;
    Dataset ds = generate_dataset(s, seed);
    for (Variant v : variants) {
      ModelConfig cfg = base;
      cfg.variant = v;
      cfg.groups = is_rem_family(v) ? spec.groups : 1;
      Model model = build_model(s, ds.kb, cfg, hash_combine(seed, hash_str(variant_to_string(v))));
      TrainConfig tc = tcfg;
      tc.seed = hash_combine(seed, 0x7472);
      train(model, ds.train, ds.dev, tc);
      AblationRow row;
      row.variant = variant_to_string(v);
      row.seed = seed;
      row.test = evaluate(model, ds.test);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = metrics_csv_header() + "\n";
  for (const AblationRow& r : rows)
    out += metrics_csv_row(r.variant, r.seed, r.test) + "\n";
  return out;
}

std::string source_to_string(EvidenceSource s) {
  switch (s) {
    case EvidenceSource::Generated: return "generated";
    case EvidenceSource::Retrieved: return "retrieved";
    case EvidenceSource::Context: return "context";
  }
  throw std::runtime_error("unknown source");
}

std::vector<SyntheticExample> with_evidence_source(const std::vector<SyntheticExample>& data,
                                                   const SyntheticKB& kb,
                                                   EvidenceSource source) {
  if (source == EvidenceSource::Generated) return data;
  std::vector<SyntheticExample> out;
  out.reserve(data.size());
  for (const SyntheticExample& ex : data) {
    SyntheticExample e = ex;
    e.facts.clear();
    e.gold.clear();
    if (source == EvidenceSource::Retrieved) {
      KeyPhrases kp = extract_key_phrases_wiqa(ex.question);
      auto add_group = [&](const std::vector<std::string>& phrases, const char* group) {
        for (const std::string& ph : phrases) {
          auto facts = retrieve_facts(ph, kb);
          for (TripletFact& f : facts)
            e.facts.push_back(ExampleFact{std::move(f), group});
        }
      };
      add_group(kp.cause, "cause");
      add_group(kp.effect, "effect");
      std::string marker;
      if (ex.label < static_cast<int>(ex.options.size()) &&
          ex.options[ex.label].size() == 1)
        marker = ex.options[ex.label][0];
      for (size_t i = 0; i < e.facts.size(); ++i)
        if (!marker.empty() && e.facts[i].fact.tail == marker)
          e.gold.push_back(static_cast<int>(i));
    } else {  // Context: the paper's third source, context reused as facts
      for (size_t i = 0; i + 1 < ex.context.size(); i += 2) {
        ExampleFact f;
        f.fact.head = ex.context[i];
        f.fact.relation = "";
        f.fact.tail = ex.context[i + 1];
        f.fact.sentence = ex.context[i] + " " + ex.context[i + 1];
        f.group = (i / 2) % 2 == 0 ? "cause" : "effect";
        e.facts.push_back(std::move(f));
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CompareCell> compare_evidence_sources(const TaskSpec& spec,
                                                  const ModelConfig& base,
                                                  const TrainConfig& tcfg,
                                                  const std::vector<uint64_t>& seeds) {
  const EvidenceSource sources[] = {EvidenceSource::Generated, EvidenceSource::Retrieved,
                                    EvidenceSource::Context};
  const Variant variants[] = {Variant::Rem, Variant::SdpAtt, Variant::InputAug};
  std::vector<CompareCell> cells;
  for (EvidenceSource src : sources)
    for (Variant v : variants) {
      double acc_sum = 0.0;
      for (uint64_t seed : seeds) {
        TaskSpec s = spec;
        s.seed = seed;
        Dataset ds = generate_dataset(s, seed);
        auto tr = with_evidence_source(ds.train, ds.kb, src);
        auto de = with_evidence_source(ds.dev, ds.kb, src);
        auto te = with_evidence_source(ds.test, ds.kb, src);
        ModelConfig cfg = base;
        cfg.variant = v;
        cfg.groups = is_rem_family(v) ? spec.groups : 1;
        Model model = build_model(
            s, ds.kb, cfg,
            hash_combine(seed, hash_str(variant_to_string(v) + source_to_string(src))));
        TrainConfig tc = tcfg;
        tc.seed = hash_combine(seed, 0x6376);
        train(model, tr, de, tc);
        acc_sum += evaluate(model, te).accuracy;
      }
      CompareCell cell;
      cell.source = source_to_string(src);
      cell.variant = variant_to_string(v);
      cell.mean_accuracy = acc_sum / static_cast<double>(seeds.size());
      cells.push_back(std::move(cell));
    }
  return cells;
}

std::string compare_csv(const std::vector<CompareCell>& cells) {
  std::string out = "source,variant,mean_accuracy\n";
  for (const CompareCell& c : cells) {
    std::ostringstream os;
    os.precision(6);
    os << c.source << "," << c.variant << "," << c.mean_accuracy << "\n";
    out += os.str();
  }
  return out;
}

}  // namespace remnet
