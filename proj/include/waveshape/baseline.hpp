#pragma once

#include <cstddef>
#include <cstdint>

#include "json.hpp"
#include "waveshape/dataset.hpp"
#include "waveshape/model.hpp"
#include "waveshape/series.hpp"

namespace waveshape {

// The classic linear unit: one weight per input plus a bias, trained by the
// delta rule from a seeded random start.
struct BaselineModel {
    ValueSeries weights;
    double bias = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const BaselineModel&) const = default;
};

struct LmsResult {
    BaselineModel model;
    ValueSeries epoch_mse;  // dataset MSE after each epoch's updates
};

// Weights uniform in [-scale, scale] from a SplitMix64 stream, bias 0.
BaselineModel init_baseline(std::size_t arity, std::uint64_t seed, double scale);

// Delta-rule training. Per-pattern mode applies w += lr * e * x (and
// b += lr * e) after every pattern; batch mode accumulates the epoch's
// errors and applies one step of lr * (2/n) * sum(e * x), which is exactly
// a gradient-descent step on the dataset MSE. Throws NumericError if the
// weights stop being finite.
LmsResult train_lms(const BaselineModel& model, const Dataset& dataset, double learning_rate,
                    std::size_t epochs, bool batch);

// w . x + bias
double predict_baseline(const BaselineModel& model, const ValueSeries& inputs);

ErrorReport evaluate_baseline(const BaselineModel& model, const Dataset& dataset);

// {version, kind:"baseline", weights, bias, seed}
nlohmann::ordered_json baseline_to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const nlohmann::ordered_json& j);

}  // namespace waveshape
