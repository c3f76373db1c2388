#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "waveshape/dataset.hpp"
#include "waveshape/series.hpp"

namespace waveshape {

// A set of input column indices feeding the neuron through one shared weight.
struct SynapseGroup {
    std::vector<std::size_t> input_indices;

    bool operator==(const SynapseGroup&) const = default;
};

// Disjoint synapse groups covering the inputs, minus any dropped inputs.
struct Partition {
    std::vector<SynapseGroup> groups;
    std::vector<std::size_t> dropped;

    bool operator==(const Partition&) const = default;
};

enum class CombineMode { Sum, Mean };

std::string to_string(CombineMode mode);
CombineMode combine_mode_from_string(const std::string& name);

struct GroupingConfig {
    CombineMode combine_mode = CombineMode::Sum;
    std::size_t max_exhaustive_inputs = 10;
    // Cost added per group; empty means derive it from the dataset as
    // 0.01 * (output shape_change_average + 1).
    std::optional<double> group_count_penalty;
    bool allow_drop = false;
    bool sign_aware = true;
};

// The penalty value actually used when scoring `dataset` under `config`.
double resolved_group_count_penalty(const GroupingConfig& config, const Dataset& dataset);

// Per-pattern sum (or mean) of the group's input columns, in dataset
// presentation order. Indices are consumed in ascending order so the
// floating-point result does not depend on how the group lists them.
ValueSeries combined_signal(const SynapseGroup& group, const Dataset& dataset, CombineMode mode);

// Throws std::invalid_argument unless groups are non-empty, indices are in
// range, nothing repeats, and groups plus dropped cover every input.
void validate_partition(const Partition& partition, std::size_t arity);

// Indices sorted within groups, groups ordered by smallest member, dropped
// sorted. Scoring and the searches all work on this form.
Partition canonical_partition(const Partition& partition);

// Sum over groups of the sign-aware (per config) distance between the
// group's scaled combined-signal shape and the output shape, plus
// penalty * group count. Patterns are put into canonical order first, so
// the score is identical for any presentation order of the same patterns.
double score_partition(const Partition& partition, const Dataset& dataset,
                       const GroupingConfig& config);

// Best-scoring partition over every set partition of the inputs (and over
// every non-empty input subset when allow_drop is set). Ties break toward
// fewer groups, then the lexicographically smallest descending size
// profile, then the smallest canonical group list. Candidate scoring may
// run on several threads (see WAVESHAPE_THREADS); the result is identical
// to a sequential scan.
Partition search_exhaustive(const Dataset& dataset, const GroupingConfig& config);

// Agglomerative fallback for wide inputs: start from singletons, repeatedly
// apply the merge that lowers the score most (same tie-break as the
// exhaustive search), then try dropping whole groups while that helps.
Partition search_greedy(const Dataset& dataset, const GroupingConfig& config);

// Differences across one pattern's input values, in input-index order.
ShapeVector horizontal_shape(const ValueSeries& pattern_inputs);

// Number of scoring threads the searches would use right now: the value of
// WAVESHAPE_THREADS (capped at 256), or the hardware count when the variable
// is unset, empty, or 0.
std::size_t resolved_thread_count();

}  // namespace waveshape
