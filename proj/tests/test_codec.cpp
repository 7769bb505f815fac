#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "popsynth/popsynth.hpp"

using namespace popsynth;

namespace {

SurveySchema age_sex_schema() {
    SurveySchema schema;
    ColumnSpec age;
    age.name = "age";
    age.kind = ColumnKind::numeric;
    age.numeric_min = 0;
    age.numeric_max = 100;
    age.integer_valued = true;
    schema.columns.push_back(age);
    ColumnSpec sex;
    sex.name = "sex";
    sex.kind = ColumnKind::binary;
    sex.categories = {"F", "M"};
    schema.columns.push_back(sex);
    return schema;
}

}  // namespace

TEST_CASE("build_layout tiles the encoded row") {
    SUBCASE("numeric + 2-cat gives width 3") {
        const BlockLayout layout = build_layout(age_sex_schema());
        CHECK(layout.total_width == 3);
        CHECK(layout.blocks[0].offset == 0);
        CHECK(layout.blocks[0].width == 1);
        CHECK(layout.blocks[1].offset == 1);
        CHECK(layout.blocks[1].width == 2);
    }
    SUBCASE("survey schema gives width 1+2+3+4") {
        const BlockLayout layout = build_layout(surrogate_schema(default_surrogate_profile()));
        CHECK(layout.total_width == 10);
        std::size_t sum = 0;
        for (const auto& block : layout.blocks) {
            CHECK(block.offset == sum);
            sum += block.width;
        }
        CHECK(sum == 10);
    }
    SUBCASE("empty schema gives width 0") {
        CHECK(build_layout(SurveySchema{}).total_width == 0);
    }
}

TEST_CASE("encode produces exact one-hots and affine-scaled numerics") {
    SurveySchema schema;
    ColumnSpec age;
    age.name = "age";
    age.kind = ColumnKind::numeric;
    age.numeric_min = 0;
    age.numeric_max = 100;
    schema.columns.push_back(age);
    ColumnSpec cat;
    cat.name = "cat";
    cat.kind = ColumnKind::categorical;
    cat.categories = {"c0", "c1", "c2", "c3"};
    schema.columns.push_back(cat);

    SurveyTable table(schema);
    table.append_row({50.0, 2.0});
    table.append_row({35.0, 0.0});

    const BlockLayout layout = build_layout(schema);
    const EncodedMatrix encoded = encode(table, layout);
    CHECK(encoded.data(0, 0) == doctest::Approx(0.0));
    CHECK(encoded.data(1, 0) == doctest::Approx(-0.3));
    // category index 2 of 4 -> [0, 0, 1, 0]
    CHECK(encoded.data(0, 1) == 0.0);
    CHECK(encoded.data(0, 2) == 0.0);
    CHECK(encoded.data(0, 3) == 1.0);
    CHECK(encoded.data(0, 4) == 0.0);

    SUBCASE("schema mismatch is rejected") {
        const BlockLayout other = build_layout(age_sex_schema());
        CHECK_THROWS_AS(encode(table, other), Error);
    }
}

TEST_CASE("decode argmax inverts encode exactly") {
    CounterRng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        const SurveySchema schema = testutil::random_schema(rng);
        const SurveyTable table = testutil::random_table(schema, 64, rng);
        const BlockLayout layout = build_layout(schema);
        const SurveyTable back = decode(encode(table, layout), DecodeMode::argmax, 1);
        REQUIRE(back.row_count() == table.row_count());
        for (std::size_t r = 0; r < table.row_count(); ++r) {
            for (std::size_t c = 0; c < schema.columns.size(); ++c) {
                if (schema.columns[c].is_numeric()) {
                    const double range =
                        schema.columns[c].numeric_max - schema.columns[c].numeric_min;
                    if (schema.columns[c].integer_valued)
                        CHECK(back.numeric_at(r, c) == table.numeric_at(r, c));
                    else
                        CHECK(std::abs(back.numeric_at(r, c) - table.numeric_at(r, c)) <=
                              1e-9 * range);
                } else {
                    CHECK(back.category_at(r, c) == table.category_at(r, c));
                }
            }
        }
    }
}

TEST_CASE("decode argmax picks the max and breaks ties low") {
    SurveySchema schema;
    ColumnSpec cat;
    cat.name = "cat";
    cat.kind = ColumnKind::categorical;
    cat.categories = {"c0", "c1", "c2"};
    schema.columns.push_back(cat);
    const BlockLayout layout = build_layout(schema);

    EncodedMatrix soft{layout, Matrix(2, 3)};
    soft.data(0, 0) = 0.1;
    soft.data(0, 1) = 0.7;
    soft.data(0, 2) = 0.2;
    soft.data(1, 0) = 0.5;
    soft.data(1, 1) = 0.5;
    soft.data(1, 2) = 0.0;

    const SurveyTable table = decode(soft, DecodeMode::argmax, 0);
    CHECK(table.category_at(0, 0) == 1);
    CHECK(table.category_at(1, 0) == 0);  // tie -> lowest index
}

TEST_CASE("decode sample reproduces soft block probabilities") {
    SurveySchema schema;
    ColumnSpec cat;
    cat.name = "cat";
    cat.kind = ColumnKind::categorical;
    cat.categories = {"c0", "c1", "c2"};
    schema.columns.push_back(cat);
    const BlockLayout layout = build_layout(schema);

    const std::size_t n = 100000;
    EncodedMatrix soft{layout, Matrix(n, 3)};
    for (std::size_t r = 0; r < n; ++r) {
        soft.data(r, 0) = 0.1;
        soft.data(r, 1) = 0.7;
        soft.data(r, 2) = 0.2;
    }
    const SurveyTable table = decode(soft, DecodeMode::sample, 31);
    const auto freq = testutil::category_frequencies(table, 0);
    CHECK(std::abs(freq[0] - 0.1) < 0.01);
    CHECK(std::abs(freq[1] - 0.7) < 0.01);
    CHECK(std::abs(freq[2] - 0.2) < 0.01);

    SUBCASE("sampling is deterministic in the seed") {
        CHECK(decode(soft, DecodeMode::sample, 31) == table);
    }
}

TEST_CASE("decode sample rejects a block with no positive mass") {
    SurveySchema schema;
    ColumnSpec cat;
    cat.name = "cat";
    cat.kind = ColumnKind::binary;
    cat.categories = {"c0", "c1"};
    schema.columns.push_back(cat);
    const BlockLayout layout = build_layout(schema);

    EncodedMatrix soft{layout, Matrix(1, 2)};
    soft.data(0, 0) = -0.5;
    soft.data(0, 1) = 0.0;
    try {
        decode(soft, DecodeMode::sample, 1);
        FAIL("expected DegenerateBlock");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateBlock);
    }
    // argmax mode still resolves.
    CHECK_NOTHROW(decode(soft, DecodeMode::argmax, 1));
}

TEST_CASE("encoded matrix debug dump is plain csv of reals") {
    testutil::TempDir tmp("dump");
    const SurveySchema schema = age_sex_schema();
    SurveyTable table(schema);
    table.append_row({50.0, 1.0});
    table.append_row({75.0, 0.0});
    const EncodedMatrix encoded = encode(table, build_layout(schema));
    dump_encoded_csv(encoded, tmp.file("enc.csv"));
    CHECK(testutil::read_file(tmp.file("enc.csv")) == "age,sex_0,sex_1\n0,0,1\n0.5,1,0\n");
}

TEST_CASE("decode clamps numerics and rounds integer columns half up") {
    SurveySchema schema;
    ColumnSpec age;
    age.name = "age";
    age.kind = ColumnKind::numeric;
    age.numeric_min = 0;
    age.numeric_max = 100;
    age.integer_valued = true;
    schema.columns.push_back(age);
    const BlockLayout layout = build_layout(schema);

    EncodedMatrix soft{layout, Matrix(3, 1)};
    soft.data(0, 0) = 1.7;    // past +1 -> clamps to max
    soft.data(1, 0) = -1.7;   // past -1 -> clamps to min
    soft.data(2, 0) = -0.29;  // 35.5 -> rounds half up to 36
    const SurveyTable table = decode(soft, DecodeMode::argmax, 0);
    CHECK(table.numeric_at(0, 0) == 100.0);
    CHECK(table.numeric_at(1, 0) == 0.0);
    CHECK(table.numeric_at(2, 0) == 36.0);
}
