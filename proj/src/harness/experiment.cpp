#include "htlab/harness/experiment.hpp"

#include <limits>
#include <memory>
#include <utility>

#include "htlab/attack/multi.hpp"
#include "htlab/attack/pattern.hpp"
#include "htlab/attack/single.hpp"
#include "htlab/error.hpp"
#include "htlab/harness/defense.hpp"
#include "htlab/harness/model_io.hpp"
#include "htlab/nncore/engine.hpp"
#include "htlab/trojan/device.hpp"

namespace htlab::harness {

namespace {

// Failures inside a stage resurface as the base Error with the stage named,
// so a CLI user can tell which part of the pipeline gave up.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& err) {
    throw Error(std::string(name) + " stage: " + err.what());
  }
}

nlohmann::json arch_to_json(const nncore::LayerArch& arch) {
  nlohmann::json j{{"kind", nncore::layer_kind_name(arch.kind)}};
  switch (arch.kind) {
    case nncore::LayerKind::dense:
      j["out"] = arch.out;
      break;
    case nncore::LayerKind::conv2d:
      j["out"] = arch.out;
      j["kernel"] = arch.kernel;
      j["stride"] = arch.stride;
      j["padding"] = arch.padding;
      break;
    case nncore::LayerKind::maxpool:
      j["pool"] = arch.pool;
      j["pool_stride"] = arch.pool_stride;
      break;
    default:
      break;
  }
  return j;
}

nncore::LayerArch arch_from_json(const nlohmann::json& j) {
  nncore::LayerArch arch;
  arch.kind = nncore::layer_kind_from_name(j.at("kind").get<std::string>());
  arch.out = j.value("out", 0);
  arch.kernel = j.value("kernel", 3);
  arch.stride = j.value("stride", 1);
  arch.padding = j.value("padding", 0);
  arch.pool = j.value("pool", 2);
  arch.pool_stride = j.value("pool_stride", 2);
  return arch;
}

Dataset tail(const Dataset& data, std::size_t from) {
  Dataset out;
  out.images.assign(data.images.begin() + static_cast<long>(from),
                    data.images.end());
  out.labels.assign(data.labels.begin() + static_cast<long>(from),
                    data.labels.end());
  out.input_shape = data.input_shape;
  out.num_classes = data.num_classes;
  return out;
}

// Class whose smallest logit lead over every rival, across the calibration
// set, is largest: the safest bet for a fixed payload target. Ties go to
// the lower class index.
std::size_t pick_target_class(const nncore::Model& model,
                              const std::vector<nncore::Tensor>& calib,
                              std::size_t classes) {
  std::vector<double> worst(classes, std::numeric_limits<double>::infinity());
  for (const nncore::Tensor& x : calib) {
    const nncore::Tensor logits = nncore::forward(model, x);
    for (std::size_t c = 0; c < classes; ++c) {
      double rival = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < logits.numel(); ++j) {
        if (j != c) rival = std::max(rival, static_cast<double>(logits[j]));
      }
      worst[c] = std::min(worst[c], static_cast<double>(logits[c]) - rival);
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (worst[c] > worst[best]) best = c;
  }
  return best;
}

trojan::CompositeTrigger build_composite(
    const DeviceConfig& device, std::vector<trojan::TriggerCondition> conds) {
  trojan::CompositeTrigger composite;
  composite.kind = device.kind;
  switch (device.kind) {
    case trojan::CompositeKind::single:
      if (conds.size() != 1) {
        throw ConfigError("a single trigger needs exactly one condition, got " +
                          std::to_string(conds.size()));
      }
      composite.conditions = std::move(conds);
      break;
    case trojan::CompositeKind::and_all:
    case trojan::CompositeKind::or_any:
      composite.conditions = std::move(conds);
      break;
    case trojan::CompositeKind::sequence:
      composite.conditions = std::move(conds);
      composite.order = device.order;
      if (composite.order.empty()) {
        for (std::size_t i = 0; i < composite.conditions.size(); ++i) {
          composite.order.push_back(i);
        }
      }
      break;
    case trojan::CompositeKind::temporal: {
      auto inner = std::make_shared<trojan::CompositeTrigger>();
      inner->kind = conds.size() == 1 ? trojan::CompositeKind::single
                                      : trojan::CompositeKind::and_all;
      inner->conditions = std::move(conds);
      composite.inner = std::move(inner);
      composite.count = device.count;
      break;
    }
  }
  return composite;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (j.value("version", "1") != "1") {
    throw ConfigError("unknown experiment config schema version");
  }
  ExperimentConfig config;
  config.seed = j.at("seed").get<std::uint64_t>();

  const nlohmann::json& dj = j.at("dataset");
  const std::string source = dj.value("source", "synthetic");
  if (source == "synthetic") {
    config.dataset.source = DatasetConfig::Source::synthetic;
    config.dataset.n = dj.value("n", std::size_t{420});
    config.dataset.classes = dj.value("classes", 4);
    config.dataset.noise = dj.value("noise", 0.05f);
    config.dataset.seed = dj.value("seed", std::uint64_t{13});
    config.dataset.size = dj.value("size", std::size_t{16});
    config.dataset.test_count = dj.value("test_count", std::size_t{160});
  } else if (source == "idx") {
    config.dataset.source = DatasetConfig::Source::idx;
    config.dataset.images_path = dj.at("images").get<std::string>();
    config.dataset.labels_path = dj.at("labels").get<std::string>();
    config.dataset.test_images_path = dj.at("test_images").get<std::string>();
    config.dataset.test_labels_path = dj.at("test_labels").get<std::string>();
  } else {
    throw ConfigError("unknown dataset source: " + source);
  }
  config.dataset.calib_count = dj.value("calib_count", std::size_t{100});

  const nlohmann::json& mj = j.at("model");
  config.model_path = mj.value("path", "");
  if (mj.contains("arch")) {
    for (const nlohmann::json& aj : mj.at("arch")) {
      config.arch.push_back(arch_from_json(aj));
    }
  }
  if (mj.contains("train")) {
    const nlohmann::json& tj = mj.at("train");
    config.train.epochs = tj.value("epochs", 10);
    config.train.lr = tj.value("lr", 0.05f);
    config.train.batch_size = tj.value("batch_size", 32);
    config.train.seed = tj.value("seed", std::uint64_t{0});
  }
  if (config.model_path.empty() && config.arch.empty()) {
    throw ConfigError("model needs either a path or an arch");
  }

  config.pattern = j.at("pattern");
  config.attack = attack::attack_config_from_json(j.at("attack"));

  const nlohmann::json& vj = j.at("device");
  config.device.kind =
      trojan::composite_kind_from_name(vj.value("kind", "single"));
  config.device.order = vj.value("order", std::vector<std::size_t>{});
  config.device.count = vj.value("count", std::size_t{1});
  if (vj.contains("payload")) {
    config.device.payload = trojan::payload_from_json(vj.at("payload"));
  }
  config.device.auto_bias = vj.value("auto_bias", true);
  config.device.auto_target = vj.value("auto_target", true);

  if (j.contains("defense")) {
    const nlohmann::json& fj = j.at("defense");
    config.defense.fine_tune_epochs = fj.value("fine_tune_epochs", 0);
    config.defense.fine_tune_lr = fj.value("fine_tune_lr", 0.05f);
    config.defense.prune_fraction = fj.value("prune_fraction", 0.0f);
  }
  config.streamed_eval = j.value("streamed_eval", false);
  return config;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["version"] = "1";
  j["seed"] = config.seed;

  nlohmann::json dj;
  if (config.dataset.source == DatasetConfig::Source::synthetic) {
    dj["source"] = "synthetic";
    dj["n"] = config.dataset.n;
    dj["classes"] = config.dataset.classes;
    dj["noise"] = config.dataset.noise;
    dj["seed"] = config.dataset.seed;
    dj["size"] = config.dataset.size;
    dj["test_count"] = config.dataset.test_count;
  } else {
    dj["source"] = "idx";
    dj["images"] = config.dataset.images_path;
    dj["labels"] = config.dataset.labels_path;
    dj["test_images"] = config.dataset.test_images_path;
    dj["test_labels"] = config.dataset.test_labels_path;
  }
  dj["calib_count"] = config.dataset.calib_count;
  j["dataset"] = dj;

  nlohmann::json mj;
  if (!config.model_path.empty()) mj["path"] = config.model_path;
  if (!config.arch.empty()) {
    mj["arch"] = nlohmann::json::array();
    for (const nncore::LayerArch& arch : config.arch) {
      mj["arch"].push_back(arch_to_json(arch));
    }
    mj["train"] = {{"epochs", config.train.epochs},
                   {"lr", config.train.lr},
                   {"batch_size", config.train.batch_size},
                   {"seed", config.train.seed}};
  }
  j["model"] = mj;

  j["pattern"] = config.pattern;
  j["attack"] = attack::attack_config_to_json(config.attack);

  nlohmann::json vj;
  vj["kind"] = trojan::composite_kind_name(config.device.kind);
  if (!config.device.order.empty()) vj["order"] = config.device.order;
  if (config.device.kind == trojan::CompositeKind::temporal) {
    vj["count"] = config.device.count;
  }
  vj["payload"] = trojan::payload_to_json(config.device.payload);
  vj["auto_bias"] = config.device.auto_bias;
  vj["auto_target"] = config.device.auto_target;
  j["device"] = vj;

  j["defense"] = {{"fine_tune_epochs", config.defense.fine_tune_epochs},
                  {"fine_tune_lr", config.defense.fine_tune_lr},
                  {"prune_fraction", config.defense.prune_fraction}};
  j["streamed_eval"] = config.streamed_eval;
  return j;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["version"] = "1";
  j["metrics"] = {{"ca_clean", report.ca_clean},
                  {"ca_attacked", report.ca_attacked},
                  {"asr_no_ht", report.asr_no_ht},
                  {"ca_hosted", report.ca_hosted},
                  {"asr_hosted", report.asr_hosted},
                  {"benign_agreement", report.benign_agreement}};
  j["payload"] = {{"target_class", report.target_class},
                  {"bias", report.payload_bias},
                  {"may_not_dominate", report.payload_may_not_dominate}};
  j["trigger_neurons"] = nlohmann::json::array();
  for (const attack::TriggerNeuronSpec& spec : report.specs) {
    j["trigger_neurons"].push_back(attack::trigger_spec_to_json(spec));
  }
  j["separation"] = attack::separation_report_to_json(report.separation);
  j["trojan"] = trojan::trojan_config_to_json(report.trojan);
  j["gates"] = rtlgen::gate_report_to_json(report.gates);

  nlohmann::json fj;
  if (report.ca_fine_tuned) {
    fj["ca_fine_tuned"] = *report.ca_fine_tuned;
    fj["asr_fine_tuned_hosted"] = *report.asr_fine_tuned_hosted;
  }
  if (report.ca_pruned) {
    fj["ca_pruned"] = *report.ca_pruned;
    fj["asr_pruned_hosted"] = *report.asr_pruned_hosted;
  }
  if (!fj.empty()) j["defense"] = fj;

  if (report.detector) {
    j["detector"] = {{"tpr", report.detector->tpr},
                     {"fpr", report.detector->fpr},
                     {"auc", report.detector->auc},
                     {"f1", report.detector->f1}};
  }
  return j;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  Dataset train;
  Dataset test;
  stage("dataset", [&] {
    if (config.dataset.source == DatasetConfig::Source::synthetic) {
      if (config.dataset.test_count + 1 > config.dataset.n) {
        throw ConfigError("test_count leaves no training samples");
      }
      const Dataset pool =
          gen_synthetic(config.dataset.n, config.dataset.classes,
                        config.dataset.noise, config.dataset.seed,
                        config.dataset.size);
      train = head(pool, config.dataset.n - config.dataset.test_count);
      test = tail(pool, config.dataset.n - config.dataset.test_count);
    } else {
      train = load_idx(config.dataset.images_path, config.dataset.labels_path);
      test = load_idx(config.dataset.test_images_path,
                      config.dataset.test_labels_path);
    }
    if (config.dataset.calib_count > train.size()) {
      throw ConfigError("calib_count exceeds the training split");
    }
  });
  const std::vector<nncore::Tensor> calib(
      train.images.begin(),
      train.images.begin() + static_cast<long>(config.dataset.calib_count));

  const attack::TriggerPattern initial_pattern = stage("pattern", [&] {
    return attack::pattern_from_json(config.pattern, train.input_shape);
  });

  const nncore::Model clean = stage("model", [&] {
    if (!config.model_path.empty()) return load_model(config.model_path);
    nncore::Model model =
        nncore::init_model(train.input_shape, config.arch, config.seed);
    nncore::train_small(model, train.images, train.labels, config.train);
    return model;
  });

  MetricsReport report;
  report.ca_clean = stage("evaluate", [&] {
    return eval_clean_accuracy(clean, test);
  });

  nncore::Model attacked;
  attack::TriggerPattern pattern = initial_pattern;
  stage("attack", [&] {
    if (config.attack.variant == attack::AttackVariant::multi_neuron) {
      attack::MultiAttackResult result =
          attack::apply_multi_neuron_attack(clean, config.attack,
                                            initial_pattern, calib);
      attacked = std::move(result.model);
      report.specs = std::move(result.specs);
    } else {
      attack::SingleAttackResult result =
          attack::apply_single_neuron_attack(clean, config.attack,
                                             initial_pattern, calib);
      attacked = std::move(result.model);
      report.specs = {result.spec};
      pattern = std::move(result.pattern);  // trigger-opt rewrites delta
    }
  });

  trojan::TrojanConfig device_config;
  stage("device", [&] {
    std::vector<trojan::TriggerCondition> conds;
    for (const attack::TriggerNeuronSpec& spec : report.specs) {
      conds.push_back(trojan::derive_trigger_condition(spec));
    }
    device_config.composite = build_composite(config.device, std::move(conds));
    device_config.payload = config.device.payload;
    if (device_config.payload.targeting != trojan::PayloadTargeting::fixed) {
      throw ConfigError("the experiment flow needs fixed payload targeting");
    }
    const std::size_t classes = static_cast<std::size_t>(train.num_classes);
    if (config.device.auto_target) {
      device_config.payload.target_class =
          pick_target_class(attacked, calib, classes);
    } else if (device_config.payload.target_class >= classes) {
      throw ConfigError("payload target class out of range");
    }
    if (config.device.auto_bias &&
        device_config.payload.mode == trojan::PayloadMode::value_bias) {
      // The attacker profiles logits on their own samples, stamped and
      // clean alike, so the payload constant covers both regimes.
      std::vector<nncore::Tensor> profiling = calib;
      for (const nncore::Tensor& x : calib) {
        profiling.push_back(attack::make_backdoor_sample(x, pattern));
      }
      const trojan::BiasCalibration calibration =
          trojan::calibrate_payload_bias(attacked, profiling);
      device_config.payload.bias = calibration.bias;
      report.payload_may_not_dominate = calibration.may_not_dominate;
    }
    trojan::validate_trojan_config(device_config);
  });
  report.trojan = device_config;
  report.target_class = device_config.payload.target_class;
  report.payload_bias = device_config.payload.bias;
  const std::size_t target = report.target_class;

  stage("evaluate", [&] {
    trojan::TrojanDevice device = trojan::make_device(device_config);
    report.ca_attacked = eval_clean_accuracy(attacked, test);
    report.asr_no_ht = eval_asr(attacked, test, pattern, target);
    report.ca_hosted = eval_clean_accuracy(attacked, device, test,
                                           config.streamed_eval);
    report.asr_hosted = eval_asr(attacked, device, test, pattern, target,
                                 config.streamed_eval);
    std::vector<nncore::Tensor> stamped_test;
    for (const nncore::Tensor& x : test.images) {
      stamped_test.push_back(attack::make_backdoor_sample(x, pattern));
    }
    report.benign_agreement = eval_agreement(clean, attacked, stamped_test);
    report.separation = attack::verify_separation(attacked, report.specs,
                                                  test.images, stamped_test);
    report.gates = rtlgen::estimate_gates(device_config);
  });

  if (config.defense.fine_tune_epochs > 0) {
    stage("fine-tune", [&] {
      nncore::TrainConfig tc = config.train;
      tc.epochs = config.defense.fine_tune_epochs;
      tc.lr = config.defense.fine_tune_lr;
      const nncore::Model tuned = fine_tune(attacked, train, tc);
      report.ca_fine_tuned = eval_clean_accuracy(tuned, test);
      trojan::TrojanDevice device = trojan::make_device(device_config);
      report.asr_fine_tuned_hosted = eval_asr(tuned, device, test, pattern,
                                              target, config.streamed_eval);
    });
  }
  if (config.defense.prune_fraction > 0.0f) {
    stage("fine-prune", [&] {
      const nncore::Model pruned =
          fine_prune(attacked, train, config.defense.prune_fraction);
      report.ca_pruned = eval_clean_accuracy(pruned, test);
      trojan::TrojanDevice device = trojan::make_device(device_config);
      report.asr_pruned_hosted = eval_asr(pruned, device, test, pattern,
                                          target, config.streamed_eval);
    });
  }
  return report;
}

}  // namespace htlab::harness
