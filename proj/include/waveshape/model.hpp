#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "waveshape/dataset.hpp"
#include "waveshape/grouping.hpp"
#include "waveshape/series.hpp"

namespace waveshape {

// One synapse group after fitting: a single shared weight plus the training
// mean of the group's combined signal. A degenerate synapse came from a
// flat signal (zero shape magnitude); it keeps weight 1 and contributes the
// constant output mean when predicting.
struct FittedSynapse {
    SynapseGroup group;
    double weight = 1.0;
    double signal_mean = 0.0;
    bool degenerate = false;

    bool operator==(const FittedSynapse&) const = default;
};

struct WaveShapeModel {
    std::vector<FittedSynapse> synapses;
    double output_mean = 0.0;
    std::size_t arity = 0;
    CombineMode combine_mode = CombineMode::Sum;
    GroupingConfig config;
};

struct ErrorReport {
    ValueSeries per_pattern_error;  // prediction minus target, dataset order
    double mae = 0.0;
    double mse = 0.0;
    // Distance between the predicted and target shapes; diagnostic only,
    // value error is what training is judged on.
    double shape_error = 0.0;
};

// Fits the single weight and level offset for one group in a single pass:
// weight magnitude is the ratio of output to signal shape-change averages,
// its sign follows the dot product of the two shapes (ties go positive).
FittedSynapse fit_group(const SynapseGroup& group, const Dataset& dataset, CombineMode mode);

// Full training: partition search (exhaustive within the configured input
// cap, greedy beyond it) followed by a one-pass fit per group. Contains no
// randomness; equal datasets and configs give bit-identical models, and any
// pattern order of the same dataset gives the same model.
WaveShapeModel train(const Dataset& dataset, const GroupingConfig& config);

// Mean over synapses of weight * (combined signal - signal_mean) +
// output_mean; degenerate synapses contribute output_mean.
double predict(const WaveShapeModel& model, const ValueSeries& inputs);

ErrorReport evaluate(const WaveShapeModel& model, const Dataset& dataset);

// Shared error summary used by both model kinds.
ErrorReport make_error_report(const ValueSeries& predictions, const ValueSeries& targets);

// {version, kind, arity, combine_mode, output_mean, synapses:[{indices,
// weight, signal_mean, degenerate}]}, in that key order.
nlohmann::ordered_json model_to_json(const WaveShapeModel& model);
WaveShapeModel model_from_json(const nlohmann::ordered_json& j);

}  // namespace waveshape
