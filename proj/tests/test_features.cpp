#include <random>

#include <gtest/gtest.h>

#include "ecfc/error.hpp"
#include "ecfc/features.hpp"
#include "ecfc/synth.hpp"

using namespace ecfc;
using namespace std::chrono;

namespace {

MeasurementSeries make_series(std::vector<double> values, Date start = Date{year{2019} / 1 / 7}) {
    MeasurementSeries s;
    s.start = slot_time(start, 0);
    s.gap_mask.assign(values.size(), false);
    s.values = std::move(values);
    return s;
}

Normalizer identity_normalizer(const FeatureSchema& schema) {
    // max - min = 1 and min = 0 leave every value untouched.
    Normalizer n;
    n.calendar.assign(schema.calendar_width(), MinMax{0.0, 1.0});
    n.target = MinMax{0.0, 1.0};
    return n;
}

}  // namespace

TEST(Schema, Arity) {
    EXPECT_EQ(FeatureSchema::calendar4().input_width(), 4u);
    EXPECT_EQ(FeatureSchema::calendar7().input_width(), 7u);
    EXPECT_EQ(FeatureSchema::windowed(480).input_width(), 486u);
    const auto seq = FeatureSchema::windowed(96, InputMode::Sequence);
    EXPECT_EQ(seq.steps(), 96u);
    EXPECT_EQ(seq.step_width(), 7u);
    EXPECT_EQ(FeatureSchema::windowed(96, InputMode::Flat).steps(), 1u);
    EXPECT_THROW(FeatureSchema::windowed(0).validate(), ConfigError);
}

TEST(Schema, CalendarVectorOrder) {
    const CalendarFeatures cal{2019, 3, 14, 21, 3, 11, 73};
    EXPECT_EQ(calendar_vector(cal, SchemaKind::Calendar4), (std::vector<double>{2019, 3, 14, 21}));
    EXPECT_EQ(calendar_vector(cal, SchemaKind::Calendar7), (std::vector<double>{2019, 3, 14, 21, 3, 73, 11}));
    EXPECT_EQ(calendar_vector(cal, SchemaKind::Windowed), (std::vector<double>{21, 14, 3, 11, 73, 2019}));
}

TEST(Schema, StringConversions) {
    for (auto kind : {SchemaKind::Calendar4, SchemaKind::Calendar7, SchemaKind::Windowed}) {
        EXPECT_EQ(schema_kind_from_string(to_string(kind)), kind);
    }
    for (auto mode : {InputMode::Flat, InputMode::Sequence}) EXPECT_EQ(input_mode_from_string(to_string(mode)), mode);
    EXPECT_THROW(schema_kind_from_string("calendar5"), ConfigError);
}

TEST(Normalizer, MinMaxRule) {
    const MinMax m{100.0, 300.0};
    EXPECT_EQ(m.normalize(200.0), 0.5);
    EXPECT_EQ(m.normalize(300.0), 1.0);
    EXPECT_EQ(m.denormalize(0.5), 200.0);
    const MinMax flat{50.0, 50.0};
    EXPECT_EQ(flat.normalize(50.0), 0.0);
}

TEST(Normalizer, DenormalizeInvertsNormalize) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int k = 0; k < 1000; ++k) {
        double a = u(rng), b = u(rng);
        if (a == b) continue;
        const MinMax m{std::min(a, b), std::max(a, b)};
        const double x = u(rng);
        EXPECT_NEAR(m.denormalize(m.normalize(x)), x, 1e-12 * (1.0 + std::abs(x) + m.range()));
    }
}

TEST(Normalizer, FitsOnTrainingRangeOnly) {
    const auto series = make_series({1, 100, 300, 200, 9999, 0.5});
    const auto schema = FeatureSchema::calendar4();
    const auto n = fit_normalizer(series, schema, {1, 3, 6});
    EXPECT_EQ(n.target.min, 100.0);
    EXPECT_EQ(n.target.max, 300.0);
    // Half-hour slots 1..3 are in range.
    EXPECT_EQ(n.calendar[3].min, 1.0);
    EXPECT_EQ(n.calendar[3].max, 3.0);
    EXPECT_EQ(n.calendar[0].normalize(2019.0), 0.0);
}

TEST(Normalizer, NoLeakageFromValidationPoints) {
    auto params = SynthParams{};
    params.days = 10;
    const auto full = generate_synthetic(params);
    const SplitSpec split{48, 240, 480};
    auto truncated = full;
    truncated.values.resize(split.train_end());
    truncated.gap_mask.resize(split.train_end());
    const auto schema = FeatureSchema::windowed(48);
    const auto a = fit_normalizer(full, schema, split);
    const auto b = fit_normalizer(truncated, schema, split);
    EXPECT_EQ(a.target.min, b.target.min);
    EXPECT_EQ(a.target.max, b.target.max);
    for (std::size_t j = 0; j < a.calendar.size(); ++j) {
        EXPECT_EQ(a.calendar[j].min, b.calendar[j].min);
        EXPECT_EQ(a.calendar[j].max, b.calendar[j].max);
    }
}

TEST(Normalizer, YearMaxMapsToOne) {
    MeasurementSeries s = make_series(std::vector<double>(3, 1.0), Date{year{2007} / 12 / 31});
    s.values.resize(48 * 2, 1.0);
    s.gap_mask.resize(48 * 2, false);
    const auto n = fit_normalizer(s, FeatureSchema::calendar4(), {0, 96, 96});
    EXPECT_EQ(n.calendar[0].normalize(2008.0), 1.0);
    EXPECT_EQ(n.calendar[0].normalize(2007.0), 0.0);
}

TEST(Normalizer, EmptyOrOversizedRangeIsRejected) {
    const auto s = make_series({1, 2, 3});
    EXPECT_THROW(fit_normalizer(s, FeatureSchema::calendar4(), {0, 0, 0}), ContractError);
    EXPECT_THROW(fit_normalizer(s, FeatureSchema::calendar4(), {0, 4, 4}), BoundsError);
}

TEST(BuildExamples, SmallWindowByHand) {
    const auto series = make_series({1, 2, 3, 4, 5});
    const auto schema = FeatureSchema::windowed(2);
    const auto ex = build_examples(series, schema, identity_normalizer(schema), {2, 5});
    ASSERT_EQ(ex.size(), 3u);
    const double expected[3][3] = {{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(ex[k].index, std::size_t(k + 2));
        EXPECT_EQ(ex[k].input[6], expected[k][0]);
        EXPECT_EQ(ex[k].input[7], expected[k][1]);
        EXPECT_EQ(ex[k].target, expected[k][2]);
        EXPECT_EQ(ex[k].target_raw, expected[k][2]);
    }
}

TEST(BuildExamples, CalendarSchemasIgnoreValues) {
    const auto series = make_series({7, 8, 9});
    for (auto schema : {FeatureSchema::calendar4(), FeatureSchema::calendar7()}) {
        const auto ex = build_examples(series, schema, identity_normalizer(schema), {0, 3});
        for (const auto& e : ex) EXPECT_EQ(e.input.size(), schema.input_width());
    }
}

TEST(BuildExamples, RangeBeforeHistoryIsRejected) {
    const auto series = make_series({1, 2, 3, 4, 5});
    const auto schema = FeatureSchema::windowed(3);
    EXPECT_THROW(build_examples(series, schema, identity_normalizer(schema), {2, 5}), BoundsError);
    EXPECT_THROW(build_examples(series, schema, identity_normalizer(schema), {3, 6}), BoundsError);
}

TEST(BuildExamples, MatchesNaiveConstruction) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> value(0.0, 400.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t length = 20 + rng() % 200;
        const std::size_t n = 1 + rng() % (length - 10);
        std::vector<double> values(length);
        for (auto& v : values) v = value(rng);
        const auto series = make_series(values, Date{year{2010} / 1 / 1} + days{static_cast<int>(rng() % 3000)});
        const auto schema = FeatureSchema::windowed(n);
        const SplitSpec split{0, length, length};
        const auto norm = fit_normalizer(series, schema, split);
        const auto ex = build_examples(series, schema, norm, {n, length});
        ASSERT_EQ(ex.size(), length - n);
        for (std::size_t k = n; k < length; ++k) {
            const auto& e = ex[k - n];
            const auto cal = calendar_vector(calendar_of(series.time_at(k)), SchemaKind::Windowed);
            for (std::size_t j = 0; j < 6; ++j) ASSERT_EQ(e.input[j], norm.calendar[j].normalize(cal[j]));
            for (std::size_t j = 0; j < n; ++j) {
                ASSERT_EQ(e.input[6 + j], norm.target.normalize(values[k - n + j]));
            }
            ASSERT_EQ(e.target, norm.target.normalize(values[k]));
        }
    }
}

TEST(BuildExamples, WindowShiftsByOne) {
    auto params = SynthParams{};
    params.days = 4;
    const auto series = generate_synthetic(params);
    const auto schema = FeatureSchema::windowed(37);
    const auto norm = fit_normalizer(series, schema, {0, series.size(), series.size()});
    const auto ex = build_examples(series, schema, norm, {37, series.size()});
    for (std::size_t k = 0; k + 1 < ex.size(); ++k) {
        for (std::size_t j = 0; j + 1 < 37; ++j) ASSERT_EQ(ex[k + 1].input[6 + j], ex[k].input[7 + j]);
        ASSERT_EQ(ex[k + 1].input[6 + 36], ex[k].target);
    }
}

TEST(FeatureTable, SequenceStepCarriesValueAndItsCalendar) {
    auto params = SynthParams{};
    params.days = 2;
    const auto series = generate_synthetic(params);
    const auto schema = FeatureSchema::windowed(5, InputMode::Sequence);
    const auto norm = fit_normalizer(series, schema, {0, 96, 96});
    const FeatureTable table(series, schema, norm);
    std::vector<double> step(7);
    table.write_step(50, 2, table.channel(), step.data());
    EXPECT_EQ(step[0], table.channel()[47]);
    const auto cal = table.calendar_row(47);
    for (int j = 0; j < 6; ++j) EXPECT_EQ(step[1 + j], cal[j]);
}

TEST(Split, FullScaleGeometry) {
    auto params = SynthParams{};
    params.days = 2740;
    params.noise_sigma = 0.0;
    const auto series = generate_synthetic(params);
    ASSERT_EQ(series.size(), 131520u);
    const SplitSpec split{15000, 100000, 131520};
    const auto schema = FeatureSchema::windowed(3840);
    EXPECT_NO_THROW(check_split(split, schema, series.size()));
    const auto val = validation_targets(split);
    EXPECT_EQ(val.begin, 115000u);
    EXPECT_EQ(val.size(), 16520u);
    const auto train = train_targets(split, schema);
    EXPECT_EQ(train.begin, 18840u);
    EXPECT_EQ(train.end, 115000u);
}

TEST(Split, BoundaryCases) {
    auto params = SynthParams{};
    params.days = 2;
    const auto series = generate_synthetic(params);
    const auto schema = FeatureSchema::windowed(10);
    const auto one = split_dataset(series, schema, {5, 11, 20});
    EXPECT_EQ(one.train.size(), 1u);
    EXPECT_EQ(one.train[0].index, 15u);
    EXPECT_EQ(one.validation.size(), 4u);
    EXPECT_EQ(one.validation.front().index, 16u);
    const auto empty_val = split_dataset(series, schema, {0, 40, 40});
    EXPECT_TRUE(empty_val.validation.empty());
    EXPECT_THROW(split_dataset(series, schema, {0, 10, 20}), ContractError);
    EXPECT_THROW(split_dataset(series, schema, {0, 40, 30}), ContractError);
    EXPECT_THROW(split_dataset(series, schema, {0, 40, 97}), BoundsError);
}

TEST(Split, FirstValidationWindowReachesIntoTraining) {
    auto params = SynthParams{};
    params.days = 3;
    const auto series = generate_synthetic(params);
    const auto schema = FeatureSchema::windowed(48);
    const auto split = split_dataset(series, schema, {0, 96, 144});
    const auto& first = split.validation.front();
    EXPECT_EQ(first.index, 96u);
    EXPECT_EQ(first.input.back(), split.normalizer.target.normalize(series.values[95]));
}
