#include "waveshape/baseline.hpp"

#include <cmath>
#include <stdexcept>

#include "waveshape/errors.hpp"
#include "waveshape/rng.hpp"

namespace waveshape {

namespace {

bool all_finite(const BaselineModel& model) {
    for (double w : model.weights)
        if (!std::isfinite(w)) return false;
    return std::isfinite(model.bias);
}

}  // namespace

BaselineModel init_baseline(std::size_t arity, std::uint64_t seed, double scale) {
    if (arity < 1) throw std::invalid_argument("init_baseline: arity must be at least 1");
    if (!(scale > 0.0)) throw std::invalid_argument("init_baseline: scale must be positive");

    BaselineModel model;
    model.seed = seed;
    model.bias = 0.0;
    model.weights.resize(arity);
    SplitMix64 rng(seed);
    for (double& w : model.weights) w = rng.uniform(-scale, scale);
    return model;
}

LmsResult train_lms(const BaselineModel& model, const Dataset& dataset, double learning_rate,
                    std::size_t epochs, bool batch) {
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("train_lms: learning_rate must be positive");
    if (epochs < 1) throw std::invalid_argument("train_lms: epochs must be at least 1");
    validate(dataset);
    if (dataset.patterns.empty()) throw DataError("train_lms: empty dataset");
    if (dataset.arity() != model.weights.size())
        throw std::invalid_argument("train_lms: dataset arity " + std::to_string(dataset.arity()) +
                                    " does not match model arity " +
                                    std::to_string(model.weights.size()));

    LmsResult result;
    result.model = model;
    ValueSeries& w = result.model.weights;
    double& b = result.model.bias;
    const std::size_t arity = w.size();
    const double n = static_cast<double>(dataset.n_patterns());

    result.epoch_mse.reserve(epochs);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        if (batch) {
            ValueSeries grad(arity, 0.0);
            double grad_bias = 0.0;
            for (const Pattern& p : dataset.patterns) {
                double e = p.target - predict_baseline(result.model, p.inputs);
                for (std::size_t i = 0; i < arity; ++i) grad[i] += e * p.inputs[i];
                grad_bias += e;
            }
            double step = learning_rate * 2.0 / n;
            for (std::size_t i = 0; i < arity; ++i) w[i] += step * grad[i];
            b += step * grad_bias;
        } else {
            for (const Pattern& p : dataset.patterns) {
                double e = p.target - predict_baseline(result.model, p.inputs);
                for (std::size_t i = 0; i < arity; ++i) w[i] += learning_rate * e * p.inputs[i];
                b += learning_rate * e;
            }
        }
        if (!all_finite(result.model)) throw NumericError("diverged; reduce learning rate");

        double mse = 0.0;
        for (const Pattern& p : dataset.patterns) {
            double e = predict_baseline(result.model, p.inputs) - p.target;
            mse += e * e;
        }
        result.epoch_mse.push_back(mse / n);
    }
    return result;
}

double predict_baseline(const BaselineModel& model, const ValueSeries& inputs) {
    if (inputs.size() != model.weights.size())
        throw std::invalid_argument("predict_baseline: expected " +
                                    std::to_string(model.weights.size()) + " inputs, got " +
                                    std::to_string(inputs.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) acc += model.weights[i] * inputs[i];
    return acc + model.bias;
}

ErrorReport evaluate_baseline(const BaselineModel& model, const Dataset& dataset) {
    if (dataset.patterns.empty()) throw DataError("evaluate_baseline: empty dataset");
    ValueSeries predictions;
    predictions.reserve(dataset.n_patterns());
    for (const Pattern& p : dataset.patterns)
        predictions.push_back(predict_baseline(model, p.inputs));
    return make_error_report(predictions, dataset.targets());
}

nlohmann::ordered_json baseline_to_json(const BaselineModel& model) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["kind"] = "baseline";
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["seed"] = model.seed;
    return j;
}

BaselineModel baseline_from_json(const nlohmann::ordered_json& j) {
    try {
        if (j.at("version").get<int>() != 1) throw DataError("model json: unsupported version");
        if (j.at("kind").get<std::string>() != "baseline")
            throw DataError("model json: kind is not \"baseline\"");

        BaselineModel model;
        model.weights = j.at("weights").get<ValueSeries>();
        model.bias = j.at("bias").get<double>();
        model.seed = j.at("seed").get<std::uint64_t>();
        if (model.weights.empty()) throw DataError("model json: empty weight vector");
        if (!all_finite(model)) throw DataError("model json: non-finite weights");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model json: ") + e.what());
    }
}

}  // namespace waveshape
