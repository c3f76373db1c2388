#include "waveshape/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "waveshape/errors.hpp"
#include "waveshape/rng.hpp"

namespace waveshape {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Split a CSV document into rows of raw fields. Fields may be quoted with
// double quotes; quoted fields keep commas and newlines and use "" for a
// literal quote. Bare \r before \n is dropped so CRLF files load cleanly.
std::vector<std::vector<std::string>> parse_rows(std::istream& in) {
    std::string text(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\n':
                if (row_has_content || !field.empty() || !row.empty()) end_row();
                break;
            case '\r':
                break;
            default:
                field += c;
                row_has_content = true;
        }
    }
    if (row_has_content || !field.empty() || !row.empty()) end_row();
    return rows;
}

bool parse_number(const std::string& token, double& out) {
    if (token.empty()) return false;
    const char* begin = token.data();
    const char* end = begin + token.size();
    if (*begin == '+' && token.size() > 1) ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

double decode_cell(const std::string& raw, const EncodingMap& encoding,
                   std::size_t file_row, std::size_t column) {
    std::string token = trim(raw);
    double value;
    if (parse_number(token, value)) return value;
    if (encoding.lookup(token, value)) return value;
    throw DataError("csv: cannot interpret cell \"" + token + "\" at row " +
                    std::to_string(file_row) + ", column " + std::to_string(column));
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

bool pattern_less(const Pattern& a, const Pattern& b) {
    if (a.inputs != b.inputs)
        return std::lexicographical_compare(a.inputs.begin(), a.inputs.end(),
                                            b.inputs.begin(), b.inputs.end());
    return a.target < b.target;
}

constexpr const char* kOutputPrefix = "output:";

}  // namespace

ValueSeries Dataset::targets() const {
    ValueSeries out;
    out.reserve(patterns.size());
    for (const auto& p : patterns) out.push_back(p.target);
    return out;
}

ValueSeries Dataset::input_column(std::size_t index) const {
    if (index >= arity()) throw std::invalid_argument("input_column: index out of range");
    ValueSeries out;
    out.reserve(patterns.size());
    for (const auto& p : patterns) out.push_back(p.inputs[index]);
    return out;
}

EncodingMap::EncodingMap(std::map<std::string, double> entries) {
    for (const auto& [token, value] : entries) set(token, value);
}

void EncodingMap::set(const std::string& token, double value) {
    entries_[lowercase(trim(token))] = value;
}

bool EncodingMap::lookup(const std::string& token, double& value) const {
    auto it = entries_.find(lowercase(trim(token)));
    if (it == entries_.end()) return false;
    value = it->second;
    return true;
}

EncodingMap EncodingMap::defaults() {
    return EncodingMap({{"high", 1.0}, {"low", 0.0}, {"average", 0.5}});
}

Dataset load_csv(std::istream& in, const EncodingMap& encoding) {
    auto rows = parse_rows(in);
    if (rows.empty()) throw DataError("csv: empty input, expected a header row");

    const auto& header = rows.front();
    Dataset ds;
    std::vector<std::size_t> input_cols;
    std::size_t output_col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name = trim(header[c]);
        std::string lowered = lowercase(name);
        if (lowered.rfind(kOutputPrefix, 0) == 0) {
            if (output_col != header.size())
                throw DataError("csv: multiple output columns (columns " +
                                std::to_string(output_col + 1) + " and " +
                                std::to_string(c + 1) + ")");
            output_col = c;
            ds.output_name = trim(name.substr(std::string(kOutputPrefix).size()));
        } else {
            input_cols.push_back(c);
            ds.input_names.push_back(name);
        }
    }
    if (output_col == header.size())
        throw DataError("csv: no output column, expected one header with an \"output:\" prefix");
    if (rows.size() < 2) throw DataError("csv: no data rows");

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        std::size_t file_row = r + 1;
        if (row.size() != header.size())
            throw DataError("csv: row " + std::to_string(file_row) + " has " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(header.size()));
        Pattern p;
        p.inputs.reserve(input_cols.size());
        for (std::size_t c : input_cols)
            p.inputs.push_back(decode_cell(row[c], encoding, file_row, c + 1));
        p.target = decode_cell(row[output_col], encoding, file_row, output_col + 1);
        ds.patterns.push_back(std::move(p));
    }
    return ds;
}

Dataset load_csv_file(const std::string& path, const EncodingMap& encoding) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return load_csv(in, encoding);
}

void save_csv(const Dataset& dataset, std::ostream& out) {
    for (std::size_t c = 0; c < dataset.input_names.size(); ++c) {
        if (c) out << ',';
        out << csv_field(dataset.input_names[c]);
    }
    if (!dataset.input_names.empty()) out << ',';
    out << csv_field(std::string(kOutputPrefix) + dataset.output_name) << '\n';
    for (const auto& p : dataset.patterns) {
        for (double v : p.inputs) out << format_double(v) << ',';
        out << format_double(p.target) << '\n';
    }
}

std::string to_csv(const Dataset& dataset) {
    std::ostringstream out;
    save_csv(dataset, out);
    return out.str();
}

Dataset generate(const SyntheticSpec& spec) {
    if (spec.arity < 1) throw std::invalid_argument("generate: arity must be at least 1");
    if (spec.n_patterns < 2) throw std::invalid_argument("generate: need at least 2 patterns");
    if (spec.coefficient_lo > spec.coefficient_hi)
        throw std::invalid_argument("generate: coefficient range is inverted");
    if (!(spec.noise_sd >= 0.0)) throw std::invalid_argument("generate: noise_sd must be >= 0");

    Dataset ds;
    for (std::size_t i = 1; i <= spec.arity; ++i) ds.input_names.push_back("x" + std::to_string(i));
    ds.output_name = "y";

    SplitMix64 rng(spec.seed);
    // Noise comes from its own stream so the drawn coefficients and inputs
    // are identical across noise_sd settings for the same seed.
    SplitMix64 noise_rng(rng.next_u64());
    if (spec.generator == Generator::RandomLinear) {
        ValueSeries coeffs(spec.arity);
        for (auto& c : coeffs) c = rng.uniform(spec.coefficient_lo, spec.coefficient_hi);
        for (std::size_t n = 0; n < spec.n_patterns; ++n) {
            Pattern p;
            p.inputs.resize(spec.arity);
            for (auto& x : p.inputs) x = rng.uniform(spec.coefficient_lo, spec.coefficient_hi);
            double y = 0.0;
            for (std::size_t i = 0; i < spec.arity; ++i) y += coeffs[i] * p.inputs[i];
            if (spec.noise_sd > 0.0) y += spec.noise_sd * noise_rng.next_gaussian();
            p.target = y;
            ds.patterns.push_back(std::move(p));
        }
    } else {
        for (std::size_t n = 0; n < spec.n_patterns; ++n) {
            Pattern p;
            p.inputs.resize(spec.arity);
            for (auto& x : p.inputs) x = rng.uniform(spec.coefficient_lo, spec.coefficient_hi);
            p.target = rng.uniform(spec.coefficient_lo, spec.coefficient_hi);
            ds.patterns.push_back(std::move(p));
        }
    }
    return ds;
}

Dataset permute_patterns(const Dataset& dataset, std::uint64_t seed) {
    Dataset out = dataset;
    SplitMix64 rng(seed);
    for (std::size_t i = out.patterns.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(out.patterns[i - 1], out.patterns[j]);
    }
    return out;
}

std::vector<std::size_t> canonical_order(const Dataset& dataset) {
    std::vector<std::size_t> order(dataset.patterns.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pattern_less(dataset.patterns[a], dataset.patterns[b]);
    });
    return order;
}

Dataset reorder(const Dataset& dataset, const std::vector<std::size_t>& order) {
    if (order.size() != dataset.patterns.size())
        throw std::invalid_argument("reorder: order size mismatch");
    Dataset out;
    out.input_names = dataset.input_names;
    out.output_name = dataset.output_name;
    out.patterns.reserve(order.size());
    for (std::size_t idx : order) out.patterns.push_back(dataset.patterns.at(idx));
    return out;
}

Dataset canonicalize(const Dataset& dataset) {
    return reorder(dataset, canonical_order(dataset));
}

void validate(const Dataset& dataset) {
    for (std::size_t n = 0; n < dataset.patterns.size(); ++n) {
        const auto& p = dataset.patterns[n];
        if (p.inputs.size() != dataset.arity())
            throw DataError("dataset: pattern " + std::to_string(n + 1) + " has " +
                            std::to_string(p.inputs.size()) + " inputs, expected " +
                            std::to_string(dataset.arity()));
        for (double v : p.inputs)
            if (!std::isfinite(v))
                throw DataError("dataset: non-finite input in pattern " + std::to_string(n + 1));
        if (!std::isfinite(p.target))
            throw DataError("dataset: non-finite target in pattern " + std::to_string(n + 1));
    }
}

}  // namespace waveshape
