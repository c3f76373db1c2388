#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "waveshape/series.hpp"

namespace waveshape {

struct Pattern {
    ValueSeries inputs;
    double target = 0.0;

    bool operator==(const Pattern&) const = default;
};

// An ordered list of (input vector, target) pairs plus column names.
// Immutable after construction; all helpers below return fresh copies.
struct Dataset {
    std::vector<std::string> input_names;
    std::string output_name;
    std::vector<Pattern> patterns;

    std::size_t arity() const { return input_names.size(); }
    std::size_t n_patterns() const { return patterns.size(); }

    // Column p -> target, in presentation order.
    ValueSeries targets() const;
    // Column of input `index`, in presentation order.
    ValueSeries input_column(std::size_t index) const;

    bool operator==(const Dataset&) const = default;
};

// Case-insensitive token -> value map used for categorical CSV cells.
class EncodingMap {
public:
    EncodingMap() = default;
    explicit EncodingMap(std::map<std::string, double> entries);

    void set(const std::string& token, double value);
    // Returns true and writes `value` if the (trimmed, lowercased) token maps.
    bool lookup(const std::string& token, double& value) const;

    static EncodingMap defaults();  // high=1.0, low=0.0, average=0.5

private:
    std::map<std::string, double> entries_;
};

// CSV ingestion. First row is a header; exactly one column must be named
// with an "output:" prefix, every other column is an input in header order.
// Numeric cells parse as doubles, anything else goes through the encoding
// map. Throws DataError with the row/column in the message.
Dataset load_csv(std::istream& in, const EncodingMap& encoding);
Dataset load_csv_file(const std::string& path, const EncodingMap& encoding);

// Inverse of load_csv: header then one row per pattern, inputs first and
// the output column last, numbers in shortest round-trip form.
void save_csv(const Dataset& dataset, std::ostream& out);
std::string to_csv(const Dataset& dataset);

enum class Generator { RandomLinear, RandomUniform };

struct SyntheticSpec {
    std::size_t arity = 1;
    std::size_t n_patterns = 2;
    Generator generator = Generator::RandomLinear;
    // Uniform range for drawn coefficients and input values alike.
    double coefficient_lo = -1.0;
    double coefficient_hi = 1.0;
    double noise_sd = 0.0;
    std::uint64_t seed = 1;
};

// Seeded synthetic data. RandomLinear draws one coefficient per input and
// sets target = coefficients . inputs (+ gaussian noise); RandomUniform
// draws targets independently of the inputs. Equal specs give equal
// datasets, bit for bit.
Dataset generate(const SyntheticSpec& spec);

// Seeded Fisher-Yates shuffle of the pattern order.
Dataset permute_patterns(const Dataset& dataset, std::uint64_t seed);

// The pattern order used internally by wave-shape training: sorted by
// (inputs, target) lexicographically. Any presentation order of the same
// patterns canonicalizes to the same sequence, which is what makes training
// insensitive to dataset order.
std::vector<std::size_t> canonical_order(const Dataset& dataset);
Dataset reorder(const Dataset& dataset, const std::vector<std::size_t>& order);
Dataset canonicalize(const Dataset& dataset);

// Throws DataError if any value is non-finite or pattern arities disagree.
void validate(const Dataset& dataset);

}  // namespace waveshape
