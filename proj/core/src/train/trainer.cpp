#include "nli/train/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>

#include "nli/errors.hpp"
#include "nli/train/batching.hpp"
#include "nli/train/loss.hpp"
#include "nli/train/optimizer.hpp"
#include "nli/train/schedule.hpp"

namespace nli {

const EpochRecord* TrainLog::chosen() const {
  for (const auto& e : epochs) {
    if (e.epoch == chosen_epoch) return &e;
  }
  return nullptr;
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,train_acc,val_loss,val_acc,chosen\n";
  out << std::setprecision(8);
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',' << e.val_loss << ',' << e.val_accuracy
        << ',' << (e.epoch == chosen_epoch ? 1 : 0) << '\n';
  }
}

bool EarlyStopping::observe(std::size_t epoch, double val_accuracy) {
  last_epoch_ = epoch;
  if (val_accuracy > best_accuracy_) {
    best_accuracy_ = val_accuracy;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

namespace {

template <typename Real>
std::size_t count_correct(const Tensor<Real>& probs, std::span<const NliLabel> gold) {
  const std::size_t classes = probs.dim(1);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (probs[r * classes + c] > probs[r * classes + best]) best = c;
    }
    correct += best == static_cast<std::size_t>(gold[r]);
  }
  return correct;
}

std::vector<const EncodedPair*> gather(std::span<const EncodedPair> data, const std::vector<std::size_t>& idx) {
  std::vector<const EncodedPair*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&data[i]);
  return out;
}

void require_labels(std::span<const EncodedPair> data, const char* what) {
  for (const auto& p : data) {
    if (!p.label) throw ContractViolation(std::string(what) + " contains an unlabelled pair");
  }
}

}  // namespace

template <typename Real>
EvalResult evaluate(const TransformerClassifier<Real>& model, std::span<const EncodedPair> data,
                    std::size_t batch_size) {
  EvalResult result;
  if (data.empty()) return result;
  require_labels(data, "evaluation set");
  NoGradScope<Real> no_grad;
  const BatchPlan plan = make_batches(data, batch_size, 0);
  double loss_sum = 0;
  std::size_t correct = 0;
  for (const auto& idx : plan) {
    const auto members = gather(data, idx);
    const TokenBatch batch = TokenBatch::from_pairs(std::span<const EncodedPair* const>(members));
    const Tensor<Real> probs = model.probabilities(batch);
    loss_sum += static_cast<double>(nll_loss(probs, std::span<const NliLabel>(batch.labels)).item()) *
                static_cast<double>(batch.batch);
    correct += count_correct(probs, std::span<const NliLabel>(batch.labels));
  }
  result.count = data.size();
  result.loss = loss_sum / static_cast<double>(data.size());
  result.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return result;
}

template <typename Real>
TrainLog train(TransformerClassifier<Real>& model, std::span<const EncodedPair> train_set,
               std::span<const EncodedPair> val_set, const TrainConfig& config, const TrainHooks<Real>& hooks) {
  config.validate();
  TrainLog log;
  if (config.max_epochs == 0) return log;
  if (train_set.empty()) throw ContractViolation("train: empty training set");
  if (val_set.empty() && !hooks.validate) throw ContractViolation("train: empty validation set");
  require_labels(train_set, "training set");

  std::vector<Tensor<Real>> params = model.parameters().tensors();
  Adam<Real> adam(params, AdamHyper{config.adam_beta1, config.adam_beta2, config.adam_eps});
  const std::size_t batches_per_epoch = (train_set.size() + config.batch_size - 1) / config.batch_size;
  const LinearWarmupSchedule schedule(config.base_lr, config.warmup_fraction, config.max_epochs * batches_per_epoch);
  const std::uint64_t batching_seed = derive_seed(config.seed, "batching");
  std::mt19937_64 dropout_rng(derive_seed(config.seed, "dropout"));
  const ForwardMode mode{model.config().dropout, &dropout_rng};
  const auto clip_bound = static_cast<Real>(config.clip_bound);

  EarlyStopping stopper(config.patience_epochs);
  std::optional<ModelParameters<Real>> best;
  std::size_t step = 0;

  auto restore_best = [&] {
    if (best) model.parameters().assign(*best);
    log.chosen_epoch = stopper.best_epoch();
  };

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const BatchPlan plan = make_batches(train_set, config.batch_size, derive_seed(batching_seed, epoch));
    double loss_sum = 0;
    std::size_t correct = 0;
    try {
      for (const auto& idx : plan) {
        const auto members = gather(train_set, idx);
        const TokenBatch batch = TokenBatch::from_pairs(std::span<const EncodedPair* const>(members));
        GradTape<Real> tape;
        Tensor<Real> probs;
        Tensor<Real> loss;
        {
          TapeScope<Real> scope(tape);
          probs = model.probabilities(batch, mode);
          std::size_t clamped = 0;
          loss = nll_loss(probs, std::span<const NliLabel>(batch.labels), &clamped);
          log.clamped_probabilities += clamped;
          if (!std::isfinite(static_cast<double>(loss.item()))) {
            throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
          }
          tape.backward(loss);
        }
        clip_gradients(std::span<Tensor<Real>>(params), clip_bound);
        adam.step(params, schedule.at(++step));
        zero_gradients(std::span<Tensor<Real>>(params));
        loss_sum += static_cast<double>(loss.item()) * static_cast<double>(batch.batch);
        correct += count_correct(probs, std::span<const NliLabel>(batch.labels));
      }
    } catch (const NumericError& e) {
      zero_gradients(std::span<Tensor<Real>>(params));
      log.diverged = true;
      log.divergence_message = e.what();
      restore_best();
      return log;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    const EvalResult val = hooks.validate ? hooks.validate(model, epoch) : evaluate(model, val_set);
    record.val_loss = val.loss;
    record.val_accuracy = val.accuracy;
    log.epochs.push_back(record);

    if (stopper.observe(epoch, val.accuracy)) {
      if (best) {
        best->assign(model.parameters());
      } else {
        best = model.parameters().clone();
      }
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(model, record);
    if (stopper.should_stop()) {
      log.stopped_early = true;
      break;
    }
  }
  restore_best();
  return log;
}

template EvalResult evaluate(const TransformerClassifier<float>&, std::span<const EncodedPair>, std::size_t);
template EvalResult evaluate(const TransformerClassifier<double>&, std::span<const EncodedPair>, std::size_t);
template TrainLog train(TransformerClassifier<float>&, std::span<const EncodedPair>, std::span<const EncodedPair>,
                        const TrainConfig&, const TrainHooks<float>&);
template TrainLog train(TransformerClassifier<double>&, std::span<const EncodedPair>, std::span<const EncodedPair>,
                        const TrainConfig&, const TrainHooks<double>&);

}  // namespace nli
