#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nli/model/transformer.hpp"
#include "nli/train/train_config.hpp"

namespace nli {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_accuracy = 0;
  double val_loss = 0;
  double val_accuracy = 0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t chosen_epoch = 0;  // 0 when no epoch completed
  bool stopped_early = false;
  bool diverged = false;
  std::string divergence_message;
  std::size_t clamped_probabilities = 0;  // gold probabilities that hit the NLL floor

  const EpochRecord* chosen() const;
  // Header: epoch,train_loss,train_acc,val_loss,val_acc,chosen
  void write_csv(std::ostream& out) const;
};

// Patience counter over validation accuracy. Only a strict improvement
// resets it, so ties keep the earlier epoch.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `epoch` becomes the new best.
  bool observe(std::size_t epoch, double val_accuracy);
  bool should_stop() const { return last_epoch_ >= best_epoch_ + patience_ && last_epoch_ > 0; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_accuracy() const { return best_accuracy_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t last_epoch_ = 0;
  double best_accuracy_ = -std::numeric_limits<double>::infinity();
};

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  std::size_t count = 0;
};

// Mean NLL and accuracy over labelled pairs, batched by length.
template <typename Real>
EvalResult evaluate(const TransformerClassifier<Real>& model, std::span<const EncodedPair> data,
                    std::size_t batch_size = 64);

template <typename Real>
struct TrainHooks {
  // Replaces the validation pass. Receives the 1-based epoch.
  std::function<EvalResult(const TransformerClassifier<Real>&, std::size_t)> validate;
  std::function<void(const TransformerClassifier<Real>&, const EpochRecord&)> on_epoch_end;
};

// Length-ordered mini-batches -> forward -> NLL -> backward -> elementwise
// gradient clip -> Adam with warmup/linear-decay learning rate. Validation
// accuracy is checked after every epoch; training stops once it has not
// improved for `patience_epochs` and the model is left holding the weights of
// the best epoch. On a non-finite loss or gradient the best weights so far
// are restored and the log is marked diverged.
template <typename Real>
TrainLog train(TransformerClassifier<Real>& model, std::span<const EncodedPair> train_set,
               std::span<const EncodedPair> val_set, const TrainConfig& config, const TrainHooks<Real>& hooks = {});

}  // namespace nli
