#include "waveshape/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <thread>

#include "waveshape/errors.hpp"

namespace waveshape {

namespace {

using IndexGroups = std::vector<std::vector<std::size_t>>;

// Everything scoring needs, precomputed once from the canonical pattern
// order so that every candidate partition sees the exact same numbers.
struct ScoreContext {
    std::vector<ValueSeries> columns;
    ShapeVector target_shape;
    double target_sca = 0.0;
    double penalty = 0.0;
    std::size_t n_patterns = 0;
    CombineMode mode = CombineMode::Sum;
    bool sign_aware = true;
};

void check_config(const GroupingConfig& config) {
    if (config.max_exhaustive_inputs < 1)
        throw std::invalid_argument("grouping: max_exhaustive_inputs must be at least 1");
    if (config.group_count_penalty) {
        double p = *config.group_count_penalty;
        if (!std::isfinite(p) || p < 0.0)
            throw std::invalid_argument("grouping: group_count_penalty must be finite and >= 0");
    }
}

ScoreContext make_context(const Dataset& dataset, const GroupingConfig& config) {
    check_config(config);
    if (dataset.arity() == 0)
        throw std::invalid_argument("grouping: dataset has no input columns");
    if (dataset.n_patterns() < 2)
        throw DataError("grouping: scoring needs at least 2 patterns");
    validate(dataset);

    Dataset canon = canonicalize(dataset);
    ScoreContext ctx;
    ctx.n_patterns = canon.n_patterns();
    ctx.columns.reserve(canon.arity());
    for (std::size_t i = 0; i < canon.arity(); ++i) ctx.columns.push_back(canon.input_column(i));
    ValueSeries y = canon.targets();
    ctx.target_shape = shape_of(y);
    ctx.target_sca = shape_change_average(y);
    ctx.penalty = config.group_count_penalty ? *config.group_count_penalty
                                             : 0.01 * (ctx.target_sca + 1.0);
    ctx.mode = config.combine_mode;
    ctx.sign_aware = config.sign_aware;
    return ctx;
}

ValueSeries combine_columns(const ScoreContext& ctx, const std::vector<std::size_t>& indices) {
    ValueSeries out(ctx.n_patterns, 0.0);
    for (std::size_t idx : indices) {
        const ValueSeries& col = ctx.columns[idx];
        for (std::size_t p = 0; p < ctx.n_patterns; ++p) out[p] += col[p];
    }
    if (ctx.mode == CombineMode::Mean) {
        double k = static_cast<double>(indices.size());
        for (double& v : out) v /= k;
    }
    return out;
}

// Distance between the group's shape, rescaled to the output's change
// magnitude, and the output shape. A flat signal cannot be rescaled and is
// scored at its raw (all-zero shape) distance.
double group_distance(const ScoreContext& ctx, const std::vector<std::size_t>& indices) {
    ValueSeries c = combine_columns(ctx, indices);
    ShapeVector sc = shape_of(c);
    double sca_c = shape_change_average(c);
    if (sca_c != 0.0) {
        double f = ctx.target_sca / sca_c;
        for (double& d : sc) d *= f;
    }
    return shape_distance(sc, ctx.target_shape, ctx.sign_aware);
}

double score_groups(const ScoreContext& ctx, const IndexGroups& groups) {
    double total = 0.0;
    for (const auto& g : groups) total += group_distance(ctx, g);
    return total + ctx.penalty * static_cast<double>(groups.size());
}

std::vector<std::size_t> size_profile(const IndexGroups& groups) {
    std::vector<std::size_t> sizes;
    sizes.reserve(groups.size());
    for (const auto& g : groups) sizes.push_back(g.size());
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

// Strict total order on scored candidates: lower score, then fewer groups,
// then the smaller descending size profile (so equal-score ties prefer
// balanced groups over lopsided ones), then smaller canonical group
// contents, then smaller dropped set. Distinct candidates never tie.
bool candidate_less(double score_a, const IndexGroups& groups_a,
                    const std::vector<std::size_t>& dropped_a, double score_b,
                    const IndexGroups& groups_b, const std::vector<std::size_t>& dropped_b) {
    if (score_a != score_b) return score_a < score_b;
    if (groups_a.size() != groups_b.size()) return groups_a.size() < groups_b.size();
    auto profile_a = size_profile(groups_a);
    auto profile_b = size_profile(groups_b);
    if (profile_a != profile_b) return profile_a < profile_b;
    if (groups_a != groups_b) return groups_a < groups_b;
    return dropped_a < dropped_b;
}

struct Candidate {
    IndexGroups groups;
    std::vector<std::size_t> dropped;
    double score = 0.0;
};

constexpr std::size_t kBatchSize = 8192;
constexpr std::size_t kParallelThreshold = 2048;

void score_batch(const ScoreContext& ctx, std::vector<Candidate>& batch) {
    std::size_t threads = resolved_thread_count();
    if (threads <= 1 || batch.size() < kParallelThreshold) {
        for (auto& cand : batch) cand.score = score_groups(ctx, cand.groups);
        return;
    }
    threads = std::min(threads, batch.size());
    std::size_t chunk = (batch.size() + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        std::size_t begin = t * chunk;
        std::size_t end = std::min(begin + chunk, batch.size());
        if (begin >= end) break;
        pool.emplace_back([&ctx, &batch, begin, end] {
            for (std::size_t i = begin; i < end; ++i)
                batch[i].score = score_groups(ctx, batch[i].groups);
        });
    }
    for (auto& th : pool) th.join();
}

struct BestTracker {
    bool have = false;
    Candidate best;

    void offer(Candidate&& cand) {
        if (!have || candidate_less(cand.score, cand.groups, cand.dropped, best.score,
                                    best.groups, best.dropped)) {
            best = std::move(cand);
            have = true;
        }
    }
};

// Visits every set partition of `items` (restricted growth strings, so
// blocks come out ordered by first appearance and each block ascending).
template <typename Visit>
void enumerate_partitions_of(const std::vector<std::size_t>& items, Visit&& visit) {
    std::size_t m = items.size();
    std::vector<std::size_t> assign(m, 0);
    auto rec = [&](auto&& self, std::size_t i, std::size_t blocks) -> void {
        if (i == m) {
            IndexGroups groups(blocks);
            for (std::size_t j = 0; j < m; ++j) groups[assign[j]].push_back(items[j]);
            visit(std::move(groups));
            return;
        }
        for (std::size_t b = 0; b < blocks; ++b) {
            assign[i] = b;
            self(self, i + 1, blocks);
        }
        assign[i] = blocks;
        self(self, i + 1, blocks + 1);
    };
    rec(rec, 1, 1);
}

Partition to_partition(Candidate&& cand) {
    Partition result;
    result.groups.reserve(cand.groups.size());
    for (auto& g : cand.groups) result.groups.push_back(SynapseGroup{std::move(g)});
    result.dropped = std::move(cand.dropped);
    return result;
}

}  // namespace

std::string to_string(CombineMode mode) {
    return mode == CombineMode::Sum ? "sum" : "mean";
}

CombineMode combine_mode_from_string(const std::string& name) {
    if (name == "sum") return CombineMode::Sum;
    if (name == "mean") return CombineMode::Mean;
    throw std::invalid_argument("combine mode must be \"sum\" or \"mean\", got \"" + name + "\"");
}

double resolved_group_count_penalty(const GroupingConfig& config, const Dataset& dataset) {
    check_config(config);
    if (config.group_count_penalty) return *config.group_count_penalty;
    if (dataset.n_patterns() < 2)
        throw DataError("grouping: scoring needs at least 2 patterns");
    Dataset canon = canonicalize(dataset);
    return 0.01 * (shape_change_average(canon.targets()) + 1.0);
}

ValueSeries combined_signal(const SynapseGroup& group, const Dataset& dataset, CombineMode mode) {
    if (dataset.patterns.empty()) throw std::invalid_argument("combined_signal: empty dataset");
    if (group.input_indices.empty()) throw std::invalid_argument("combined_signal: empty group");
    std::vector<std::size_t> indices = group.input_indices;
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw std::invalid_argument("combined_signal: duplicate input index");
    if (indices.back() >= dataset.arity())
        throw std::invalid_argument("combined_signal: input index " + std::to_string(indices.back()) +
                                    " out of range for arity " + std::to_string(dataset.arity()));
    ValueSeries out;
    out.reserve(dataset.n_patterns());
    for (const Pattern& p : dataset.patterns) {
        double v = 0.0;
        for (std::size_t idx : indices) v += p.inputs.at(idx);
        if (mode == CombineMode::Mean) v /= static_cast<double>(indices.size());
        out.push_back(v);
    }
    return out;
}

void validate_partition(const Partition& partition, std::size_t arity) {
    if (partition.groups.empty()) throw std::invalid_argument("partition: needs at least one group");
    std::vector<char> seen(arity, 0);
    std::size_t covered = 0;
    auto absorb = [&](std::size_t idx) {
        if (idx >= arity)
            throw std::invalid_argument("partition: input index " + std::to_string(idx) +
                                        " out of range for arity " + std::to_string(arity));
        if (seen[idx])
            throw std::invalid_argument("partition: input index " + std::to_string(idx) +
                                        " appears twice");
        seen[idx] = 1;
        ++covered;
    };
    for (const auto& g : partition.groups) {
        if (g.input_indices.empty()) throw std::invalid_argument("partition: empty group");
        for (std::size_t idx : g.input_indices) absorb(idx);
    }
    for (std::size_t idx : partition.dropped) absorb(idx);
    if (covered != arity)
        throw std::invalid_argument("partition: groups plus dropped must cover all " +
                                    std::to_string(arity) + " inputs");
}

Partition canonical_partition(const Partition& partition) {
    Partition out = partition;
    for (auto& g : out.groups) std::sort(g.input_indices.begin(), g.input_indices.end());
    std::sort(out.groups.begin(), out.groups.end(), [](const SynapseGroup& a, const SynapseGroup& b) {
        return a.input_indices < b.input_indices;
    });
    std::sort(out.dropped.begin(), out.dropped.end());
    return out;
}

double score_partition(const Partition& partition, const Dataset& dataset,
                       const GroupingConfig& config) {
    validate_partition(partition, dataset.arity());
    ScoreContext ctx = make_context(dataset, config);
    Partition canon = canonical_partition(partition);
    IndexGroups groups;
    groups.reserve(canon.groups.size());
    for (auto& g : canon.groups) groups.push_back(std::move(g.input_indices));
    return score_groups(ctx, groups);
}

Partition search_exhaustive(const Dataset& dataset, const GroupingConfig& config) {
    ScoreContext ctx = make_context(dataset, config);
    std::size_t n = dataset.arity();
    if (n > config.max_exhaustive_inputs)
        throw std::invalid_argument("search_exhaustive: input arity " + std::to_string(n) +
                                    " exceeds max_exhaustive_inputs (" +
                                    std::to_string(config.max_exhaustive_inputs) +
                                    "); use search_greedy instead");

    std::vector<Candidate> batch;
    batch.reserve(kBatchSize);
    BestTracker tracker;
    auto flush = [&] {
        score_batch(ctx, batch);
        for (auto& cand : batch) tracker.offer(std::move(cand));
        batch.clear();
    };
    auto enumerate_subset = [&](const std::vector<std::size_t>& items,
                                const std::vector<std::size_t>& dropped) {
        enumerate_partitions_of(items, [&](IndexGroups groups) {
            batch.push_back(Candidate{std::move(groups), dropped, 0.0});
            if (batch.size() >= kBatchSize) flush();
        });
    };

    if (!config.allow_drop) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        enumerate_subset(all, {});
    } else {
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
            std::vector<std::size_t> items;
            std::vector<std::size_t> dropped;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (std::uint64_t{1} << i))
                    items.push_back(i);
                else
                    dropped.push_back(i);
            }
            enumerate_subset(items, dropped);
        }
    }
    flush();
    return to_partition(std::move(tracker.best));
}

Partition search_greedy(const Dataset& dataset, const GroupingConfig& config) {
    ScoreContext ctx = make_context(dataset, config);
    std::size_t n = dataset.arity();

    IndexGroups groups;
    groups.reserve(n);
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
    std::vector<std::size_t> dropped;
    double score = score_groups(ctx, groups);

    while (groups.size() > 1) {
        bool improved = false;
        Candidate best;
        for (std::size_t a = 0; a + 1 < groups.size(); ++a) {
            for (std::size_t b = a + 1; b < groups.size(); ++b) {
                std::vector<std::size_t> joined = groups[a];
                joined.insert(joined.end(), groups[b].begin(), groups[b].end());
                std::sort(joined.begin(), joined.end());
                IndexGroups merged;
                merged.reserve(groups.size() - 1);
                for (std::size_t g = 0; g < groups.size(); ++g)
                    if (g != a && g != b) merged.push_back(groups[g]);
                merged.push_back(std::move(joined));
                std::sort(merged.begin(), merged.end());
                double s = score_groups(ctx, merged);
                if (s < score && (!improved || candidate_less(s, merged, dropped, best.score,
                                                              best.groups, best.dropped))) {
                    best = Candidate{std::move(merged), dropped, s};
                    improved = true;
                }
            }
        }
        if (!improved) break;
        groups = std::move(best.groups);
        score = best.score;
    }

    if (config.allow_drop) {
        while (groups.size() > 1) {
            bool improved = false;
            Candidate best;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                IndexGroups remaining;
                remaining.reserve(groups.size() - 1);
                for (std::size_t h = 0; h < groups.size(); ++h)
                    if (h != g) remaining.push_back(groups[h]);
                std::vector<std::size_t> now_dropped = dropped;
                now_dropped.insert(now_dropped.end(), groups[g].begin(), groups[g].end());
                std::sort(now_dropped.begin(), now_dropped.end());
                double s = score_groups(ctx, remaining);
                if (s < score && (!improved || candidate_less(s, remaining, now_dropped, best.score,
                                                              best.groups, best.dropped))) {
                    best = Candidate{std::move(remaining), std::move(now_dropped), s};
                    improved = true;
                }
            }
            if (!improved) break;
            groups = std::move(best.groups);
            dropped = std::move(best.dropped);
            score = best.score;
        }
    }

    return to_partition(Candidate{std::move(groups), std::move(dropped), score});
}

ShapeVector horizontal_shape(const ValueSeries& pattern_inputs) {
    return shape_of(pattern_inputs);
}

std::size_t resolved_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const char* env = std::getenv("WAVESHAPE_THREADS");
    if (!env || !*env) return hw;
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) return hw;
    return std::min<std::size_t>(v, 256);
}

}  // namespace waveshape
