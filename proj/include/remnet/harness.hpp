#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "remnet/dataset.hpp"
#include "remnet/model.hpp"

namespace remnet {

struct TrainConfig {
  int epochs = 15;
  int batch_size = 16;
  double lr = 1e-3;
  int warmup_steps = 0;  // linear warmup scale on the learning rate
  double weight_decay = 0.0;  // decoupled (AdamW-style) decay per step
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  static TrainConfig from_json(const std::string& text);
};

struct Metrics {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  // From the predicted option's trace, rem-family variants only.
  std::optional<double> erasure_precision;
  std::optional<double> gold_retention;
  std::map<std::string, double> per_type;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  Metrics dev;
};

// Minibatch cross-entropy with Adam. Aborts on non-finite loss.
std::vector<EpochRecord> train(Model& model, const std::vector<SyntheticExample>& train_set,
                               const std::vector<SyntheticExample>& dev_set,
                               const TrainConfig& cfg);

Metrics evaluate(const Model& model, const std::vector<SyntheticExample>& data,
                 std::vector<RemTrace>* traces_out = nullptr);

// CSV row "variant,seed,accuracy,erasure_precision,gold_retention,mean_loss".
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& variant, uint64_t seed, const Metrics& m);

struct AblationRow {
  std::string variant;
  uint64_t seed = 0;
  Metrics test;
};

// Trains {rem, rem-no-erase, attention-once} per seed on the spec's task.
std::vector<AblationRow> run_ablation_suite(const TaskSpec& spec, const ModelConfig& base,
                                            const TrainConfig& tcfg,
                                            const std::vector<uint64_t>& seeds);
std::string ablation_csv(const std::vector<AblationRow>& rows);

enum class EvidenceSource { Generated, Retrieved, Context };
std::string source_to_string(EvidenceSource s);

// Swaps each example's fact list for the chosen source, keeping the planted
// question/label. Retrieved facts come straight from the KB store; context
// facts reuse the context tokens.
std::vector<SyntheticExample> with_evidence_source(const std::vector<SyntheticExample>& data,
                                                   const SyntheticKB& kb,
                                                   EvidenceSource source);

struct CompareCell {
  std::string source;
  std::string variant;
  double mean_accuracy = 0.0;
};

std::vector<CompareCell> compare_evidence_sources(const TaskSpec& spec,
                                                  const ModelConfig& base,
                                                  const TrainConfig& tcfg,
                                                  const std::vector<uint64_t>& seeds);
std::string compare_csv(const std::vector<CompareCell>& cells);

// Model for a task: vocabulary from the spec's KB, config fields aligned.
Model build_model(const TaskSpec& spec, const SyntheticKB& kb, ModelConfig cfg,
                  uint64_t seed);

}  // namespace remnet
