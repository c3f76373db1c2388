#include "waveshape/series.hpp"

#include <cmath>
#include <stdexcept>

namespace waveshape {

ShapeVector shape_of(const ValueSeries& series) {
    if (series.size() < 2) {
        throw std::invalid_argument("shape undefined for fewer than two values");
    }
    ShapeVector deltas(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        deltas[i] = series[i + 1] - series[i];
    }
    return deltas;
}

ValueSeries reconstruct(double first, const ShapeVector& shape) {
    ValueSeries values(shape.size() + 1);
    values[0] = first;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        values[i + 1] = values[i] + shape[i];
    }
    return values;
}

double shape_distance(const ShapeVector& a, const ShapeVector& b, bool sign_aware) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("shape_distance: length mismatch");
    }
    double sum_minus = 0.0;
    double sum_plus = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dm = a[i] - b[i];
        const double dp = a[i] + b[i];
        sum_minus += dm * dm;
        sum_plus += dp * dp;
    }
    if (sign_aware && sum_plus < sum_minus) {
        return std::sqrt(sum_plus);
    }
    return std::sqrt(sum_minus);
}

ValueSeries transpose_to_level(const ValueSeries& series, double target_mean) {
    const double offset = target_mean - mean(series);
    ValueSeries shifted(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        shifted[i] = series[i] + offset;
    }
    return shifted;
}

double shape_change_average(const ValueSeries& series) {
    const ShapeVector deltas = shape_of(series);
    double total = 0.0;
    for (double d : deltas) {
        total += std::abs(d);
    }
    return total / static_cast<double>(deltas.size());
}

double mean(const ValueSeries& series) {
    if (series.empty()) {
        throw std::invalid_argument("mean of empty series");
    }
    double total = 0.0;
    for (double v : series) {
        total += v;
    }
    return total / static_cast<double>(series.size());
}

}  // namespace waveshape
