#pragma once

#include <cstddef>

#include "axh/pipeline/config.hpp"

namespace axh {

/// Linear warmup to peak_lr over the first warmup_epochs epochs, then cosine
/// decay reaching zero at the final epoch:
///   e < W:  peak * (e + 1) / W
///   e >= W: peak * 0.5 * (1 + cos(pi * (e - W) / (E - 1 - W)))
/// Throws ContractError unless 0 <= epoch < epochs.
double lr_schedule(std::size_t epoch, std::size_t epochs, std::size_t warmup_epochs, double peak_lr);
double lr_schedule(std::size_t epoch, const TrainConfig& cfg);

}  // namespace axh
