#include "htlab/harness/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "htlab/error.hpp"
#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/train.hpp"

namespace htlab::harness {

namespace {

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double eval_clean_accuracy(const nncore::Model& model, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("eval on an empty dataset");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(data.size());
  std::size_t hits = 0;
#pragma omp parallel for reduction(+ : hits)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const nncore::Tensor logits = nncore::forward(model, data.images[i]);
    hits += nncore::argmax(logits) == static_cast<std::size_t>(data.labels[i]);
  }
  return percent(hits, data.size());
}

double eval_clean_accuracy(const nncore::Model& model,
                           trojan::TrojanDevice& device, const Dataset& data,
                           bool streamed) {
  if (data.size() == 0) throw ConfigError("eval on an empty dataset");
  reset_device(device);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(data.size());
  std::size_t hits = 0;
  if (streamed) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const nncore::Tensor logits =
          trojan::hosted_forward(device, model, data.images[i]);
      hits +=
          nncore::argmax(logits) == static_cast<std::size_t>(data.labels[i]);
    }
  } else {
#pragma omp parallel for reduction(+ : hits) firstprivate(device)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      reset_device(device);
      const nncore::Tensor logits =
          trojan::hosted_forward(device, model, data.images[i]);
      hits +=
          nncore::argmax(logits) == static_cast<std::size_t>(data.labels[i]);
    }
    reset_device(device);
  }
  return percent(hits, data.size());
}

namespace {

// Stamped copies of every sample whose label differs from the target.
std::vector<nncore::Tensor> stamped_non_target(
    const Dataset& data, const attack::TriggerPattern& pattern,
    std::size_t target) {
  std::vector<nncore::Tensor> stamped;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<std::size_t>(data.labels[i]) == target) continue;
    stamped.push_back(attack::make_backdoor_sample(data.images[i], pattern));
  }
  if (stamped.empty()) {
    throw ConfigError("every sample carries the target class; ASR undefined");
  }
  return stamped;
}

}  // namespace

double eval_asr(const nncore::Model& model, const Dataset& data,
                const attack::TriggerPattern& pattern, std::size_t target) {
  const std::vector<nncore::Tensor> stamped =
      stamped_non_target(data, pattern, target);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(stamped.size());
  std::size_t hits = 0;
#pragma omp parallel for reduction(+ : hits)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    hits += nncore::argmax(nncore::forward(model, stamped[i])) == target;
  }
  return percent(hits, stamped.size());
}

double eval_asr(const nncore::Model& model, trojan::TrojanDevice& device,
                const Dataset& data, const attack::TriggerPattern& pattern,
                std::size_t target, bool streamed) {
  const std::vector<nncore::Tensor> stamped =
      stamped_non_target(data, pattern, target);
  reset_device(device);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(stamped.size());
  std::size_t hits = 0;
  if (streamed) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      hits += nncore::argmax(trojan::hosted_forward(device, model,
                                                    stamped[i])) == target;
    }
  } else {
#pragma omp parallel for reduction(+ : hits) firstprivate(device)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      reset_device(device);
      hits += nncore::argmax(trojan::hosted_forward(device, model,
                                                    stamped[i])) == target;
    }
    reset_device(device);
  }
  return percent(hits, stamped.size());
}

double eval_agreement(const nncore::Model& reference,
                      const nncore::Model& candidate,
                      const std::vector<nncore::Tensor>& samples) {
  if (samples.empty()) throw ConfigError("eval on an empty sample set");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples.size());
  std::size_t hits = 0;
#pragma omp parallel for reduction(+ : hits)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    hits += nncore::argmax(nncore::forward(reference, samples[i])) ==
            nncore::argmax(nncore::forward(candidate, samples[i]));
  }
  return percent(hits, samples.size());
}

DetectorMetrics detector_metrics(const std::vector<double>& clean_scores,
                                 const std::vector<double>& backdoor_scores,
                                 double threshold) {
  if (clean_scores.empty() || backdoor_scores.empty()) {
    throw ConfigError("detector metrics need both score streams");
  }
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (double s : backdoor_scores) tp += s >= threshold;
  for (double s : clean_scores) fp += s >= threshold;
  const std::size_t fn = backdoor_scores.size() - tp;

  DetectorMetrics m;
  m.tpr = static_cast<double>(tp) / static_cast<double>(backdoor_scores.size());
  m.fpr = static_cast<double>(fp) / static_cast<double>(clean_scores.size());
  m.f1 = tp + fp + fn == 0
             ? 0.0
             : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);

  // Mann-Whitney U with half credit for ties: for every (backdoor, clean)
  // pair, count backdoor > clean as 1 and backdoor == clean as 1/2.
  std::vector<double> clean_sorted = clean_scores;
  std::sort(clean_sorted.begin(), clean_sorted.end());
  double u = 0.0;
  for (double s : backdoor_scores) {
    const auto below = std::lower_bound(clean_sorted.begin(),
                                        clean_sorted.end(), s) -
                       clean_sorted.begin();
    const auto not_above = std::upper_bound(clean_sorted.begin(),
                                            clean_sorted.end(), s) -
                           clean_sorted.begin();
    u += static_cast<double>(below) +
         0.5 * static_cast<double>(not_above - below);
  }
  m.auc = u / (static_cast<double>(clean_scores.size()) *
               static_cast<double>(backdoor_scores.size()));
  return m;
}

}  // namespace htlab::harness
