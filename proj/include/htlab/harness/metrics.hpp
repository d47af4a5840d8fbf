#pragma once

#include <cstddef>
#include <vector>

#include "htlab/attack/pattern.hpp"
#include "htlab/harness/dataset.hpp"
#include "htlab/nncore/model.hpp"
#include "htlab/trojan/device.hpp"

namespace htlab::harness {

// Percentage (0..100) of samples whose predicted class equals the label.
// Sample-parallel; the count merge is exact, so thread count never changes
// the result. Throws ConfigError on an empty dataset.
double eval_clean_accuracy(const nncore::Model& model, const Dataset& data);

// Hosted variant. The device is reset up front; with streamed = false it is
// also reset before every sample so each inference is independent, and
// samples run in parallel on per-worker device copies. Streamed mode walks
// the dataset in order on the one device, carrying FSM state across
// samples, and leaves the final state in place.
double eval_clean_accuracy(const nncore::Model& model,
                           trojan::TrojanDevice& device, const Dataset& data,
                           bool streamed = false);

// Percentage of stamped samples predicted as `target`, computed over the
// samples whose true label differs from `target` (the others are dropped
// from the denominator in every path). Throws ConfigError when nothing
// remains.
double eval_asr(const nncore::Model& model, const Dataset& data,
                const attack::TriggerPattern& pattern, std::size_t target);

double eval_asr(const nncore::Model& model, trojan::TrojanDevice& device,
                const Dataset& data, const attack::TriggerPattern& pattern,
                std::size_t target, bool streamed = false);

// Percentage of samples on which the two models pick the same class.
double eval_agreement(const nncore::Model& reference,
                      const nncore::Model& candidate,
                      const std::vector<nncore::Tensor>& samples);

struct DetectorMetrics {
  double tpr = 0.0;  // at the supplied threshold
  double fpr = 0.0;
  double auc = 0.0;  // threshold-free rank statistic, ties at half credit
  double f1 = 0.0;
};

// Scores a detector whose positives are backdoor samples: a sample is
// flagged when its score >= threshold. TPR/FPR/F1 use that decision rule;
// AUC is the Mann-Whitney rank statistic over both streams, which equals
// the area under the full ROC curve. Throws ConfigError when either stream
// is empty.
DetectorMetrics detector_metrics(const std::vector<double>& clean_scores,
                                 const std::vector<double>& backdoor_scores,
                                 double threshold);

}  // namespace htlab::harness
