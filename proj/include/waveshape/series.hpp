#pragma once

#include <vector>

namespace waveshape {

// A series of signal levels. The neuron model never looks at these values
// directly; it works on the differences between consecutive entries.
using ValueSeries = std::vector<double>;

// First differences of a ValueSeries: deltas[i] = values[i+1] - values[i].
// One entry shorter than its source series.
using ShapeVector = std::vector<double>;

// Forward first differences. Throws std::invalid_argument for series
// shorter than two values.
ShapeVector shape_of(const ValueSeries& series);

// Inverse of shape_of: cumulative sum anchored at `first`.
ValueSeries reconstruct(double first, const ShapeVector& shape);

// Euclidean distance between two equal-length shapes. With sign_aware the
// mirrored shape -b is also tried and the smaller distance wins, so a
// signal that moves exactly opposite to the target still counts as a match
// (a weight can reverse it later).
double shape_distance(const ShapeVector& a, const ShapeVector& b, bool sign_aware);

// Shift the series so its mean becomes target_mean. Shape is untouched.
ValueSeries transpose_to_level(const ValueSeries& series, double target_mean);

// Mean magnitude of the first differences; the size of a typical step.
// Throws std::invalid_argument for series shorter than two values.
double shape_change_average(const ValueSeries& series);

double mean(const ValueSeries& series);

}  // namespace waveshape
