#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htlab/attack/config.hpp"
#include "htlab/attack/separation.hpp"
#include "htlab/attack/trigger_spec.hpp"
#include "htlab/harness/dataset.hpp"
#include "htlab/harness/metrics.hpp"
#include "htlab/nncore/train.hpp"
#include "htlab/rtlgen/gates.hpp"
#include "htlab/trojan/config.hpp"

namespace htlab::harness {

// Where the experiment's samples come from. A synthetic pool of n samples
// is split into train = [0, n - test_count) and test = the tail, so the
// test split is never trained on; IDX sources bring their own split. The
// calibration set (the attacker's unlabeled sample access) is the first
// calib_count train images.
struct DatasetConfig {
  enum class Source { synthetic, idx };
  Source source = Source::synthetic;
  std::size_t n = 420;
  int classes = 4;
  float noise = 0.05f;
  std::uint64_t seed = 13;
  std::size_t size = 16;
  std::size_t test_count = 160;
  std::size_t calib_count = 100;
  std::string images_path;  // idx source
  std::string labels_path;
  std::string test_images_path;
  std::string test_labels_path;
};

// Shape of the implanted device. The trigger conditions themselves are
// derived from the attack's trigger neuron specs at run time, one condition
// per spec in spec order; `order` indexes into that list for sequences and
// `count` wraps the conditions in a temporal counter. auto_bias calibrates
// the value_bias payload from the attacker's calibration set; auto_target
// replaces payload.target_class with the class whose worst-case logit
// margin over the calibration set is largest.
struct DeviceConfig {
  trojan::CompositeKind kind = trojan::CompositeKind::single;
  std::vector<std::size_t> order;
  std::size_t count = 1;
  trojan::PayloadSpec payload;
  bool auto_bias = true;
  bool auto_target = true;
};

struct DefenseConfig {
  int fine_tune_epochs = 0;  // 0 skips the fine-tuning arm
  float fine_tune_lr = 0.05f;
  float prune_fraction = 0.0f;  // 0 skips the pruning arm
};

// One experiment, fully determined by this document: no stage reads any
// entropy source beyond the seeds written here. `pattern` stays a raw JSON
// subdocument because its tensors take their shape from the dataset, which
// is only known at run time.
struct ExperimentConfig {
  std::uint64_t seed = 0;  // model init seed
  std::string model_path;  // load an HMLK-1 directory instead of training
  std::vector<nncore::LayerArch> arch;
  nncore::TrainConfig train;
  DatasetConfig dataset;
  nlohmann::json pattern;
  attack::AttackConfig attack;
  DeviceConfig device;
  DefenseConfig defense;
  bool streamed_eval = false;  // carry device state across samples
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

// Every measurement of one experiment. Accuracies and rates are
// percentages. The defense arms are present only when configured; detector
// metrics only when a score stream was supplied.
struct MetricsReport {
  double ca_clean = 0.0;     // clean model, test split
  double ca_attacked = 0.0;  // attacked model without the device
  double asr_no_ht = 0.0;    // attacked model without the device
  double ca_hosted = 0.0;    // attacked model through the device
  double asr_hosted = 0.0;
  double benign_agreement = 0.0;  // clean vs attacked argmax, stamped test
  std::size_t target_class = 0;
  float payload_bias = 0.0f;
  bool payload_may_not_dominate = false;
  std::vector<attack::TriggerNeuronSpec> specs;
  attack::SeparationReport separation;  // re-measured on the test split
  trojan::TrojanConfig trojan;          // the device actually built
  rtlgen::GateReport gates;
  std::optional<double> ca_fine_tuned;
  std::optional<double> asr_fine_tuned_hosted;
  std::optional<double> ca_pruned;
  std::optional<double> asr_pruned_hosted;
  std::optional<DetectorMetrics> detector;
};

// Serialization is pure: identical reports give byte-identical JSON text
// (no timestamps, no wall-clock fields).
nlohmann::json report_to_json(const MetricsReport& report);

// The full pipeline: dataset, train-or-load, attack, condition derivation,
// payload calibration, device build, the metric grid, then the configured
// defense arms (each re-hosting a fresh device on the defended model).
// Pure function of the config, so identical configs produce identical
// reports. Failures resurface as htlab::Error with the stage name
// prefixed. The payload must use fixed targeting (ASR needs one target
// class).
MetricsReport run_experiment(const ExperimentConfig& config);

}  // namespace htlab::harness
