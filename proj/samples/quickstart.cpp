// Simulates a bursty channel, trains the small LSTM preset on it and prints
// the test-split accuracy table.

#include <iostream>

#include "fdrcast/fdrcast.hpp"

using namespace fdrcast;

int main() {
  const auto trace = channel::simulate(channel::paper_like_preset(42), 60000);
  const auto splits = data::chronological_split(trace, data::SplitSpec{});
  const auto& preset = models::preset_by_name("toy-lstm");
  const std::size_t l = preset.hyperparams.input_length;

  const auto train_set = data::make_windows(splits.train, l, preset.horizon, 10);
  const auto val_set = data::make_windows(splits.validation, l, preset.horizon, 5);
  const auto test_set = data::make_windows(splits.test, l, preset.horizon, 1);

  training::TrainConfig cfg;
  cfg.epoch_budget = preset.epochs;
  cfg.initial_lr = preset.initial_lr;
  cfg.batch_size = preset.hyperparams.batch_size;
  cfg.shuffle_seed = 7;
  cfg.on_epoch = [](const training::EpochRecord& r, const models::TrainedModel&) {
    std::cout << "epoch " << r.epoch << "  val mse " << r.validation_mse << "\n";
  };
  const auto model = training::train(models::build_model(preset.kind, preset.hyperparams, 1),
                                     train_set, val_set, cfg);

  const auto pred = models::predict_dataset(model, test_set);
  const std::vector<eval::ModelResult> results{
      {"LSTM", eval::compute_error_stats(pred, test_set.targets), std::nullopt}};
  std::cout << "\n" << eval::report_text(results);
}
