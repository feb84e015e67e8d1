#include "axh/pipeline/schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "axh/errors.hpp"

namespace axh {

double lr_schedule(std::size_t epoch, std::size_t epochs, std::size_t warmup_epochs, double peak_lr) {
  if (epoch >= epochs)
    throw ContractError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(epochs) + ")");
  if (warmup_epochs >= epochs) throw ContractError("warmup must be shorter than training");
  if (epoch < warmup_epochs) return peak_lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup_epochs);
  const std::size_t span = epochs - 1 - warmup_epochs;
  if (span == 0) return peak_lr;
  const double t = static_cast<double>(epoch - warmup_epochs) / static_cast<double>(span);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double lr_schedule(std::size_t epoch, const TrainConfig& cfg) {
  return lr_schedule(epoch, cfg.epochs, cfg.warmup_epochs, cfg.peak_lr);
}

}  // namespace axh
