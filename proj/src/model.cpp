#include "waveshape/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "waveshape/errors.hpp"

namespace waveshape {

namespace {

double combine_inputs(const ValueSeries& inputs, const FittedSynapse& syn, CombineMode mode) {
    double v = 0.0;
    for (std::size_t idx : syn.group.input_indices) v += inputs[idx];
    if (mode == CombineMode::Mean) v /= static_cast<double>(syn.group.input_indices.size());
    return v;
}

}  // namespace

FittedSynapse fit_group(const SynapseGroup& group, const Dataset& dataset, CombineMode mode) {
    if (dataset.n_patterns() < 2) throw DataError("fit_group: needs at least 2 patterns");
    Dataset canon = canonicalize(dataset);

    FittedSynapse syn;
    syn.group.input_indices = group.input_indices;
    std::sort(syn.group.input_indices.begin(), syn.group.input_indices.end());

    ValueSeries c = combined_signal(syn.group, canon, mode);
    syn.signal_mean = mean(c);

    double sca_c = shape_change_average(c);
    if (sca_c == 0.0) {
        syn.weight = 1.0;
        syn.degenerate = true;
        return syn;
    }

    ValueSeries y = canon.targets();
    double magnitude = shape_change_average(y) / sca_c;
    ShapeVector shape_c = shape_of(c);
    ShapeVector shape_y = shape_of(y);
    double dot = 0.0;
    for (std::size_t i = 0; i < shape_c.size(); ++i) dot += shape_c[i] * shape_y[i];
    syn.weight = dot < 0.0 ? -magnitude : magnitude;
    return syn;
}

WaveShapeModel train(const Dataset& dataset, const GroupingConfig& config) {
    validate(dataset);
    if (dataset.arity() < 1) throw DataError("train: dataset has no input columns");
    if (dataset.n_patterns() < 2) throw DataError("train: needs at least 2 patterns");

    Partition partition = dataset.arity() <= config.max_exhaustive_inputs
                              ? search_exhaustive(dataset, config)
                              : search_greedy(dataset, config);

    Dataset canon = canonicalize(dataset);
    WaveShapeModel model;
    model.arity = dataset.arity();
    model.combine_mode = config.combine_mode;
    model.config = config;
    model.output_mean = mean(canon.targets());
    model.synapses.reserve(partition.groups.size());
    for (const SynapseGroup& g : partition.groups)
        model.synapses.push_back(fit_group(g, canon, config.combine_mode));
    return model;
}

double predict(const WaveShapeModel& model, const ValueSeries& inputs) {
    if (inputs.size() != model.arity)
        throw std::invalid_argument("predict: expected " + std::to_string(model.arity) +
                                    " inputs, got " + std::to_string(inputs.size()));
    if (model.synapses.empty()) throw std::invalid_argument("predict: model has no synapses");

    double acc = 0.0;
    for (const FittedSynapse& syn : model.synapses) {
        double estimate;
        if (syn.degenerate) {
            estimate = model.output_mean;
        } else {
            double c = combine_inputs(inputs, syn, model.combine_mode);
            estimate = syn.weight * (c - syn.signal_mean) + model.output_mean;
        }
        acc += estimate;
    }
    return acc / static_cast<double>(model.synapses.size());
}

ErrorReport make_error_report(const ValueSeries& predictions, const ValueSeries& targets) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("make_error_report: length mismatch");
    if (predictions.empty()) throw DataError("make_error_report: empty dataset");

    ErrorReport report;
    report.per_pattern_error.reserve(predictions.size());
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double e = predictions[i] - targets[i];
        report.per_pattern_error.push_back(e);
        abs_sum += std::fabs(e);
        sq_sum += e * e;
    }
    double n = static_cast<double>(predictions.size());
    report.mae = abs_sum / n;
    report.mse = sq_sum / n;
    report.shape_error =
        predictions.size() >= 2 ? shape_distance(shape_of(predictions), shape_of(targets), false)
                                : 0.0;
    return report;
}

ErrorReport evaluate(const WaveShapeModel& model, const Dataset& dataset) {
    if (dataset.patterns.empty()) throw DataError("evaluate: empty dataset");
    ValueSeries predictions;
    predictions.reserve(dataset.n_patterns());
    for (const Pattern& p : dataset.patterns) predictions.push_back(predict(model, p.inputs));
    return make_error_report(predictions, dataset.targets());
}

nlohmann::ordered_json model_to_json(const WaveShapeModel& model) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["kind"] = "waveshape";
    j["arity"] = model.arity;
    j["combine_mode"] = to_string(model.combine_mode);
    j["output_mean"] = model.output_mean;
    nlohmann::ordered_json synapses = nlohmann::ordered_json::array();
    for (const FittedSynapse& syn : model.synapses) {
        nlohmann::ordered_json s;
        s["indices"] = syn.group.input_indices;
        s["weight"] = syn.weight;
        s["signal_mean"] = syn.signal_mean;
        s["degenerate"] = syn.degenerate;
        synapses.push_back(std::move(s));
    }
    j["synapses"] = std::move(synapses);
    return j;
}

WaveShapeModel model_from_json(const nlohmann::ordered_json& j) {
    try {
        if (j.at("version").get<int>() != 1) throw DataError("model json: unsupported version");
        if (j.at("kind").get<std::string>() != "waveshape")
            throw DataError("model json: kind is not \"waveshape\"");

        WaveShapeModel model;
        model.arity = j.at("arity").get<std::size_t>();
        model.combine_mode = combine_mode_from_string(j.at("combine_mode").get<std::string>());
        model.config.combine_mode = model.combine_mode;
        model.output_mean = j.at("output_mean").get<double>();
        for (const auto& s : j.at("synapses")) {
            FittedSynapse syn;
            syn.group.input_indices = s.at("indices").get<std::vector<std::size_t>>();
            syn.weight = s.at("weight").get<double>();
            syn.signal_mean = s.at("signal_mean").get<double>();
            syn.degenerate = s.at("degenerate").get<bool>();
            model.synapses.push_back(std::move(syn));
        }
        if (model.synapses.empty()) throw DataError("model json: no synapses");

        std::vector<char> used(model.arity, 0);
        for (const FittedSynapse& syn : model.synapses)
            for (std::size_t idx : syn.group.input_indices) {
                if (idx >= model.arity) throw DataError("model json: synapse index out of range");
                if (used[idx]) throw DataError("model json: synapse groups overlap");
                used[idx] = 1;
            }
        for (const FittedSynapse& syn : model.synapses) {
            if (!std::isfinite(syn.weight) || !std::isfinite(syn.signal_mean))
                throw DataError("model json: non-finite synapse values");
            if (syn.group.input_indices.empty()) throw DataError("model json: empty synapse group");
        }
        if (!std::isfinite(model.output_mean)) throw DataError("model json: non-finite output_mean");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model json: ") + e.what());
    }
}

}  // namespace waveshape
