#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "test_util.hpp"
#include "waveshape/dataset.hpp"
#include "waveshape/errors.hpp"
#include "waveshape/grouping.hpp"
#include "waveshape/rng.hpp"

using namespace waveshape;

namespace {

Partition make_partition(std::vector<std::vector<std::size_t>> groups,
                         std::vector<std::size_t> dropped = {}) {
    Partition p;
    for (auto& g : groups) p.groups.push_back(SynapseGroup{std::move(g)});
    p.dropped = std::move(dropped);
    return p;
}

// Minimum score over every candidate the exhaustive search is allowed to
// return, enumerated with the insertion-based partition generator and scored
// through the public scorer. Independent of the search's own enumeration.
double oracle_best_score(const Dataset& ds, const GroupingConfig& config) {
    std::size_t n = ds.arity();
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](const std::vector<std::size_t>& items,
                        const std::vector<std::size_t>& dropped) {
        for (const auto& blocks : testutil::all_partitions(items.size())) {
            Partition part;
            for (const auto& block : blocks) {
                SynapseGroup g;
                for (std::size_t i : block) g.input_indices.push_back(items[i]);
                part.groups.push_back(std::move(g));
            }
            part.dropped = dropped;
            best = std::min(best, score_partition(part, ds, config));
        }
    };
    if (!config.allow_drop) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        consider(all, {});
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
            consider(items, dropped);
        }
    }
    return best;
}

struct EnvGuard {
    std::string name;
    std::string old_value;
    bool had = false;

    explicit EnvGuard(const char* var) : name(var) {
        const char* v = std::getenv(var);
        if (v) {
            had = true;
            old_value = v;
        }
    }
    ~EnvGuard() {
        if (had)
            setenv(name.c_str(), old_value.c_str(), 1);
        else
            unsetenv(name.c_str());
    }
};

}  // namespace

TEST_CASE("combine mode names round-trip") {
    CHECK(to_string(CombineMode::Sum) == "sum");
    CHECK(to_string(CombineMode::Mean) == "mean");
    CHECK(combine_mode_from_string("sum") == CombineMode::Sum);
    CHECK(combine_mode_from_string("mean") == CombineMode::Mean);
    CHECK_THROWS_AS(combine_mode_from_string("max"), std::invalid_argument);
}

TEST_CASE("combined_signal follows dataset presentation order") {
    Dataset ds = testutil::playsport();
    CHECK(combined_signal(SynapseGroup{{0, 1}}, ds, CombineMode::Sum) == ValueSeries{2.0, 0.0});
    CHECK(combined_signal(SynapseGroup{{1, 0}}, ds, CombineMode::Sum) == ValueSeries{2.0, 0.0});
    CHECK(combined_signal(SynapseGroup{{2}}, ds, CombineMode::Sum) == ValueSeries{0.0, 1.0});
    CHECK(combined_signal(SynapseGroup{{0, 1}}, ds, CombineMode::Mean) == ValueSeries{1.0, 0.0});
    CHECK(combined_signal(SynapseGroup{{0, 1, 2, 3}}, ds, CombineMode::Sum) ==
          ValueSeries{2.0, 2.0});
}

TEST_CASE("combined_signal rejects bad groups") {
    Dataset ds = testutil::playsport();
    CHECK_THROWS_AS(combined_signal(SynapseGroup{{0}}, Dataset{}, CombineMode::Sum),
                    std::invalid_argument);
    CHECK_THROWS_AS(combined_signal(SynapseGroup{{}}, ds, CombineMode::Sum),
                    std::invalid_argument);
    CHECK_THROWS_AS(combined_signal(SynapseGroup{{0, 0}}, ds, CombineMode::Sum),
                    std::invalid_argument);
    CHECK_THROWS_WITH_AS(combined_signal(SynapseGroup{{4}}, ds, CombineMode::Sum),
                         "combined_signal: input index 4 out of range for arity 4",
                         std::invalid_argument);
}

TEST_CASE("horizontal_shape differences one pattern across its inputs") {
    CHECK(horizontal_shape({1.0, 1.0, 0.0, 0.0}) == ShapeVector{0.0, -1.0, 0.0});
    CHECK(horizontal_shape({0.0, 0.0, 1.0, 1.0}) == ShapeVector{0.0, 1.0, 0.0});
    CHECK_THROWS_AS(horizontal_shape({1.0}), std::invalid_argument);
}

TEST_CASE("validate_partition enforces a disjoint cover") {
    CHECK_NOTHROW(validate_partition(make_partition({{0, 1}, {2, 3}}), 4));
    CHECK_NOTHROW(validate_partition(make_partition({{2}}, {0, 1, 3}), 4));
    CHECK_THROWS_WITH_AS(validate_partition(make_partition({}), 4),
                         "partition: needs at least one group", std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_partition(make_partition({{0, 1, 2, 3}, {}}), 4),
                         "partition: empty group", std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_partition(make_partition({{0, 1, 2, 7}}), 4),
                         "partition: input index 7 out of range for arity 4",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_partition(make_partition({{0, 1}, {1, 2, 3}}), 4),
                         "partition: input index 1 appears twice", std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_partition(make_partition({{0, 1}}), 4),
                         "partition: groups plus dropped must cover all 4 inputs",
                         std::invalid_argument);
}

TEST_CASE("canonical_partition sorts members, groups, and dropped") {
    Partition messy = make_partition({{3, 1}, {2, 0}}, {5, 4});
    Partition canon = canonical_partition(messy);
    CHECK(canon == make_partition({{0, 2}, {1, 3}}, {4, 5}));
    CHECK(canonical_partition(canon) == canon);
}

TEST_CASE("group count penalty defaults from the output change magnitude") {
    Dataset ds = testutil::playsport();
    GroupingConfig config;
    CHECK(resolved_group_count_penalty(config, ds) == 0.02);
    config.group_count_penalty = 0.5;
    CHECK(resolved_group_count_penalty(config, ds) == 0.5);
    config.group_count_penalty = -0.1;
    CHECK_THROWS_AS(resolved_group_count_penalty(config, ds), std::invalid_argument);
    config.group_count_penalty = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(resolved_group_count_penalty(config, ds), std::invalid_argument);

    GroupingConfig auto_config;
    Dataset tiny = testutil::make_dataset(1, {Pattern{{0.0}, 0.0}});
    CHECK_THROWS_AS(resolved_group_count_penalty(auto_config, tiny), DataError);
}

TEST_CASE("score_partition on the sports fixture") {
    Dataset ds = testutil::playsport();
    GroupingConfig config;

    SUBCASE("matched halves have zero distance") {
        config.group_count_penalty = 0.0;
        CHECK(score_partition(make_partition({{0, 1}, {2, 3}}), ds, config) == 0.0);
    }
    SUBCASE("default penalty charges per group") {
        CHECK(score_partition(make_partition({{0, 1}, {2, 3}}), ds, config) == 0.04);
    }
    SUBCASE("a flat combined signal scores its raw shape distance") {
        config.group_count_penalty = 0.1;
        CHECK(score_partition(make_partition({{0, 1, 2, 3}}), ds, config) ==
              doctest::Approx(1.1));
    }
    SUBCASE("mirrored groups count as matches under sign-aware scoring") {
        config.group_count_penalty = 0.0;
        CHECK(score_partition(make_partition({{2, 3}}, {0, 1}), ds, config) == 0.0);
        config.sign_aware = false;
        CHECK(score_partition(make_partition({{2, 3}}, {0, 1}), ds, config) ==
              doctest::Approx(2.0));
    }
}

TEST_CASE("score_partition rejects bad inputs") {
    Dataset ds = testutil::playsport();
    GroupingConfig config;
    CHECK_THROWS_AS(score_partition(make_partition({{0, 1}}), ds, config), std::invalid_argument);

    Dataset one = testutil::make_dataset(2, {Pattern{{1.0, 2.0}, 3.0}});
    CHECK_THROWS_WITH_AS(score_partition(make_partition({{0, 1}}), one, config),
                         "grouping: scoring needs at least 2 patterns", DataError);

    GroupingConfig bad;
    bad.max_exhaustive_inputs = 0;
    CHECK_THROWS_AS(score_partition(make_partition({{0, 1}, {2, 3}}), ds, bad),
                    std::invalid_argument);
}

TEST_CASE("score_partition is bitwise invariant under pattern order") {
    SplitMix64 rng(31);
    GroupingConfig config;
    for (int trial = 0; trial < 25; ++trial) {
        Dataset ds = testutil::random_dataset(rng, 4, 3 + rng.next_below(8));
        Dataset shuffled = permute_patterns(ds, rng.next_u64());
        Partition part = make_partition({{0, 2}, {1}, {3}});
        double a = score_partition(part, ds, config);
        double b = score_partition(part, shuffled, config);
        CHECK(a == b);
    }
}

TEST_CASE("score_partition ignores how the caller orders the partition") {
    SplitMix64 rng(32);
    Dataset ds = testutil::random_dataset(rng, 4, 6);
    GroupingConfig config;
    double canon = score_partition(make_partition({{0, 2}, {1, 3}}), ds, config);
    CHECK(score_partition(make_partition({{3, 1}, {2, 0}}), ds, config) == canon);
}

TEST_CASE("exhaustive search matches an independent enumeration") {
    SplitMix64 rng(33);
    for (std::size_t arity = 2; arity <= 5; ++arity) {
        for (int trial = 0; trial < 6; ++trial) {
            Dataset ds = testutil::random_dataset(rng, arity, 3 + rng.next_below(6));
            GroupingConfig config;
            config.combine_mode = (trial % 2) ? CombineMode::Mean : CombineMode::Sum;
            config.sign_aware = trial % 3 != 0;
            Partition found = search_exhaustive(ds, config);
            CHECK_NOTHROW(validate_partition(found, arity));
            CHECK(canonical_partition(found) == found);
            CHECK(found.dropped.empty());
            CHECK(score_partition(found, ds, config) == oracle_best_score(ds, config));
        }
    }
}

TEST_CASE("exhaustive search with drops matches an independent enumeration") {
    SplitMix64 rng(34);
    for (std::size_t arity = 2; arity <= 4; ++arity) {
        for (int trial = 0; trial < 4; ++trial) {
            Dataset ds = testutil::random_dataset(rng, arity, 3 + rng.next_below(6));
            GroupingConfig config;
            config.allow_drop = true;
            Partition found = search_exhaustive(ds, config);
            CHECK_NOTHROW(validate_partition(found, arity));
            CHECK(score_partition(found, ds, config) == oracle_best_score(ds, config));
        }
    }
}

TEST_CASE("exhaustive search pairs the aligned and the mirrored fixture columns") {
    Dataset ds = testutil::playsport();
    Partition expected = make_partition({{0, 1}, {2, 3}});

    GroupingConfig explicit_penalty;
    explicit_penalty.group_count_penalty = 0.1;
    CHECK(search_exhaustive(ds, explicit_penalty) == expected);

    GroupingConfig defaults;
    CHECK(search_exhaustive(ds, defaults) == expected);
    CHECK(score_partition(search_exhaustive(ds, defaults), ds, defaults) == 0.04);
}

TEST_CASE("a single input always forms a single group") {
    SplitMix64 rng(35);
    Dataset ds = testutil::random_dataset(rng, 1, 5);
    GroupingConfig config;
    CHECK(search_exhaustive(ds, config) == make_partition({{0}}));
    CHECK(search_greedy(ds, config) == make_partition({{0}}));
}

TEST_CASE("exhaustive search refuses arities past the configured cap") {
    Dataset ds = testutil::playsport();
    GroupingConfig config;
    config.max_exhaustive_inputs = 3;
    CHECK_THROWS_WITH_AS(
        search_exhaustive(ds, config),
        "search_exhaustive: input arity 4 exceeds max_exhaustive_inputs (3); use search_greedy instead",
        std::invalid_argument);
    CHECK_NOTHROW(search_greedy(ds, config));
}

TEST_CASE("searches reject a dataset with no inputs") {
    Dataset ds;
    ds.output_name = "y";
    ds.patterns = {Pattern{{}, 1.0}, Pattern{{}, 2.0}};
    GroupingConfig config;
    CHECK_THROWS_AS(search_exhaustive(ds, config), std::invalid_argument);
    CHECK_THROWS_AS(search_greedy(ds, config), std::invalid_argument);
}

TEST_CASE("with drops allowed, constant side channels are shed") {
    std::vector<Pattern> patterns;
    for (double v : {-2.0, -0.5, 1.0, 3.0}) patterns.push_back(Pattern{{v, 5.0, 7.0}, v});
    Dataset ds = testutil::make_dataset(3, std::move(patterns));

    GroupingConfig config;
    config.allow_drop = true;
    config.group_count_penalty = 0.1;
    Partition found = search_exhaustive(ds, config);
    CHECK(found == make_partition({{0}}, {1, 2}));
}

TEST_CASE("without drops, score ties prefer balanced group structures") {
    Dataset ds = testutil::playsport();
    GroupingConfig config;
    config.group_count_penalty = 0.1;
    Partition found = search_exhaustive(ds, config);
    std::vector<std::size_t> sizes;
    for (const auto& g : found.groups) sizes.push_back(g.input_indices.size());
    CHECK(sizes == std::vector<std::size_t>{2, 2});
}

TEST_CASE("duplicating an input column never hurts the optimum when drops are allowed") {
    SplitMix64 rng(37);
    for (int trial = 0; trial < 8; ++trial) {
        Dataset ds = testutil::random_dataset(rng, 3, 4 + rng.next_below(4));
        Dataset augmented = ds;
        augmented.input_names.push_back("x_dup");
        for (std::size_t p = 0; p < augmented.patterns.size(); ++p)
            augmented.patterns[p].inputs.push_back(ds.patterns[p].inputs[0]);

        GroupingConfig config;
        config.allow_drop = true;
        double base = score_partition(search_exhaustive(ds, config), ds, config);
        double aug =
            score_partition(search_exhaustive(augmented, config), augmented, config);
        CHECK(aug <= base);
    }
}

TEST_CASE("a constant target makes every group a perfect match") {
    Dataset ds = testutil::make_dataset(
        3, {Pattern{{1.0, 4.0, 2.0}, 3.0}, Pattern{{2.0, 5.0, 8.0}, 3.0},
            Pattern{{0.0, 6.0, 1.0}, 3.0}});
    GroupingConfig config;
    Partition found = search_exhaustive(ds, config);
    CHECK(found == make_partition({{0, 1, 2}}));
    CHECK(score_partition(found, ds, config) == 0.01);
}

TEST_CASE("greedy matches the exhaustive result on the sports fixture") {
    Dataset ds = testutil::playsport();
    GroupingConfig config;
    CHECK(search_greedy(ds, config) == search_exhaustive(ds, config));
    config.group_count_penalty = 0.1;
    CHECK(search_greedy(ds, config) == search_exhaustive(ds, config));
}

TEST_CASE("greedy never beats the exhaustive optimum") {
    SplitMix64 rng(38);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t arity = 2 + rng.next_below(5);
        Dataset ds = testutil::random_dataset(rng, arity, 3 + rng.next_below(8));
        GroupingConfig config;
        config.allow_drop = trial % 2 == 0;
        double greedy = score_partition(search_greedy(ds, config), ds, config);
        double best = score_partition(search_exhaustive(ds, config), ds, config);
        CHECK(greedy >= best);
    }
}

TEST_CASE("greedy merges all-flat inputs into one group") {
    Dataset ds = testutil::make_dataset(
        3, {Pattern{{1.0, 2.0, 3.0}, 0.0}, Pattern{{1.0, 2.0, 3.0}, 1.0},
            Pattern{{1.0, 2.0, 3.0}, 2.0}});
    GroupingConfig config;
    config.allow_drop = true;
    Partition found = search_greedy(ds, config);
    CHECK(found == make_partition({{0, 1, 2}}));
}

TEST_CASE("thread count resolution honors WAVESHAPE_THREADS") {
    EnvGuard guard("WAVESHAPE_THREADS");

    unsetenv("WAVESHAPE_THREADS");
    std::size_t automatic = resolved_thread_count();
    CHECK(automatic >= 1);

    setenv("WAVESHAPE_THREADS", "4", 1);
    CHECK(resolved_thread_count() == 4);
    setenv("WAVESHAPE_THREADS", "300", 1);
    CHECK(resolved_thread_count() == 256);
    setenv("WAVESHAPE_THREADS", "0", 1);
    CHECK(resolved_thread_count() == automatic);
    setenv("WAVESHAPE_THREADS", "not-a-number", 1);
    CHECK(resolved_thread_count() == automatic);
    setenv("WAVESHAPE_THREADS", "", 1);
    CHECK(resolved_thread_count() == automatic);
}

TEST_CASE("multi-threaded scoring returns the sequential result") {
    EnvGuard guard("WAVESHAPE_THREADS");
    SplitMix64 rng(39);
    Dataset ds = testutil::random_dataset(rng, 8, 6);
    GroupingConfig config;

    setenv("WAVESHAPE_THREADS", "1", 1);
    Partition sequential = search_exhaustive(ds, config);
    double sequential_score = score_partition(sequential, ds, config);

    setenv("WAVESHAPE_THREADS", "4", 1);
    Partition parallel = search_exhaustive(ds, config);
    CHECK(parallel == sequential);
    CHECK(score_partition(parallel, ds, config) == sequential_score);

    setenv("WAVESHAPE_THREADS", "7", 1);
    CHECK(search_exhaustive(ds, config) == sequential);
}
