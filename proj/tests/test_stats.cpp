#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "popsynth/popsynth.hpp"

using namespace popsynth;

TEST_CASE("eval_vector builds per-attribute frequency blocks") {
    SurveySchema schema;
    ColumnSpec sex;
    sex.name = "sex";
    sex.kind = ColumnKind::binary;
    sex.categories = {"Female", "Male"};
    schema.columns.push_back(sex);

    SUBCASE("all rows in one category") {
        SurveyTable table(schema);
        for (int i = 0; i < 100; ++i) table.append_row({1.0});  // all "Male"
        const EvalVector v = eval_vector(table);
        REQUIRE(v.values.size() == 2);
        CHECK(v.values[0] == 0.0);
        CHECK(v.values[1] == 1.0);
    }
    SUBCASE("an even split") {
        SurveyTable table(schema);
        for (int i = 0; i < 50; ++i) table.append_row({0.0});
        for (int i = 0; i < 50; ++i) table.append_row({1.0});
        const EvalVector v = eval_vector(table);
        CHECK(v.values[0] == 0.5);
        CHECK(v.values[1] == 0.5);
    }
    SUBCASE("empty tables are rejected") {
        SurveyTable table(schema);
        CHECK_THROWS_AS(eval_vector(table), Error);
    }
}

TEST_CASE("eval_vector blocks each sum to one") {
    const SurveyTable table = generate_surrogate(5000, 77, default_surrogate_profile());
    const EvalVector v = eval_vector(table);
    std::size_t offset = 0;
    for (const auto& [name, width] : v.blocks) {
        double total = 0.0;
        for (std::size_t i = 0; i < width; ++i) total += v.values[offset + i];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        offset += width;
    }
    CHECK(offset == v.values.size());
    CHECK(v.values.size() == 10 + 2 + 3 + 4);
}

TEST_CASE("joint eval vector covers the attribute cross-product") {
    const SurveyTable table = generate_surrogate(2000, 78, default_surrogate_profile());
    const EvalVector v = eval_vector(table, 10, EvalMode::joint);
    REQUIRE(v.blocks.size() == 1);
    CHECK(v.blocks[0].second == 10 * 2 * 3 * 4);
    double total = 0.0;
    for (double p : v.values) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("error metrics match closed forms") {
    CHECK(mae({0.0, 1.0}, {1.0, 0.0}) == 1.0);
    CHECK(mae({0.3, 0.7}, {0.3, 0.7}) == 0.0);
    CHECK(mse({1.0, 1.0}, {0.0, 0.0}) == 1.0);
    CHECK(mse({0.5}, {0.5}) == 0.0);
    CHECK(rmse({0.5}, {0.5}) == 0.0);
    CHECK_THROWS_AS(mae({1.0}, {1.0, 2.0}), Error);

    // Reference arithmetic: sqrt(0.2076) rounds to 0.4556 at 4 decimals.
    CHECK(std::round(std::sqrt(0.2076) * 10000.0) / 10000.0 == 0.4556);
}

TEST_CASE("metric properties hold on random vectors") {
    CounterRng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(16);
        std::vector<double> y(16);
        for (auto& v : x) v = rng.next_double();
        for (auto& v : y) v = rng.next_double();

        CHECK(mae(x, y) == mae(y, x));
        double max_sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            max_sq = std::max(max_sq, (x[i] - y[i]) * (x[i] - y[i]));
        CHECK(mse(x, y) <= max_sq + 1e-15);
        CHECK(mae(x, y) <= rmse(x, y) + 1e-15);
    }
}

TEST_CASE("error_triple keeps the rmse identity") {
    const SurveyTable a = generate_surrogate(1000, 1, default_surrogate_profile());
    const SurveyTable b = generate_surrogate(1000, 2, default_surrogate_profile());
    const ErrorTriple t = error_triple(eval_vector(a), eval_vector(b));
    CHECK(t.rmse == std::sqrt(t.mse));
    CHECK(t.mae <= t.rmse);
}

TEST_CASE("bootstrap_resample draws with replacement and tracks out-of-bag") {
    SUBCASE("single index") {
        const BootstrapSample s = bootstrap_resample({42}, 7);
        CHECK(s.sample == IndexList{42});
        CHECK(s.out_of_bag.empty());
    }
    SUBCASE("deterministic in the seed") {
        IndexList indices(100);
        std::iota(indices.begin(), indices.end(), std::size_t{0});
        const BootstrapSample a = bootstrap_resample(indices, 9);
        const BootstrapSample b = bootstrap_resample(indices, 9);
        CHECK(a.sample == b.sample);
        CHECK(a.out_of_bag == b.out_of_bag);
        CHECK(a.sample.size() == 100);

        // sample + oob partition: every oob index is absent from the sample
        const std::set<std::size_t> sampled(a.sample.begin(), a.sample.end());
        for (std::size_t idx : a.out_of_bag) CHECK(sampled.count(idx) == 0);
        CHECK(sampled.size() + a.out_of_bag.size() == 100);
    }
    SUBCASE("mean unique fraction approaches 1 - 1/e") {
        IndexList indices(1000);
        std::iota(indices.begin(), indices.end(), std::size_t{0});
        double unique_total = 0.0;
        const int trials = 1000;
        for (int t = 0; t < trials; ++t) {
            const BootstrapSample s = bootstrap_resample(indices, static_cast<std::uint64_t>(t));
            unique_total +=
                static_cast<double>(1000 - s.out_of_bag.size()) / 1000.0;
        }
        const double expected = 1.0 - std::pow(1.0 - 1.0 / 1000.0, 1000.0);
        CHECK(std::abs(unique_total / trials - expected) < 0.01);
    }
    SUBCASE("empty input is rejected") {
        CHECK_THROWS_AS(bootstrap_resample({}, 1), Error);
    }
}

TEST_CASE("mean_error is the arithmetic mean") {
    CHECK(mean_error({0.1, 0.2, 0.3}) == doctest::Approx(0.2));
    CHECK(mean_error({4.5}) == 4.5);
    CHECK_THROWS_AS(mean_error({}), Error);
}

TEST_CASE("percentile_ci uses linear interpolation at p*(n-1)") {
    SUBCASE("constant sample collapses") {
        const ConfidenceInterval ci = percentile_ci({5.0, 5.0, 5.0, 5.0}, 0.95);
        CHECK(ci.mean == 5.0);
        CHECK(ci.lower == 5.0);
        CHECK(ci.upper == 5.0);
        CHECK(ci.rounds == 4);
    }
    SUBCASE("values 1..100 at level 0.95") {
        std::vector<double> values(100);
        for (int i = 0; i < 100; ++i) values[static_cast<std::size_t>(i)] = i + 1.0;
        const ConfidenceInterval ci = percentile_ci(values, 0.95);
        CHECK(ci.lower == doctest::Approx(3.475).epsilon(1e-12));
        CHECK(ci.upper == doctest::Approx(97.525).epsilon(1e-12));
        CHECK(ci.mean == doctest::Approx(50.5));
    }
    SUBCASE("bounds bracket within the sample range") {
        CounterRng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> values(16);
            for (auto& v : values) v = rng.next_normal();
            const ConfidenceInterval ci = percentile_ci(values, 0.9);
            const double mn = *std::min_element(values.begin(), values.end());
            const double mx = *std::max_element(values.begin(), values.end());
            CHECK(ci.lower <= ci.upper);
            CHECK(ci.lower >= mn);
            CHECK(ci.upper <= mx);
        }
    }
    SUBCASE("too few samples are rejected") {
        CHECK_THROWS_AS(percentile_ci({1.0}, 0.95), Error);
    }
}

namespace {

TrainConfig tiny_train_config() {
    TrainConfig config;
    config.epochs = 2;
    config.batch_size = 64;
    config.noise_dim = 8;
    config.latent_dim = 4;
    config.gan_hidden = {16, 8};
    config.vae_encoder_hidden = {16, 8};
    config.vae_decoder_hidden = {8, 16};
    return config;
}

}  // namespace

TEST_CASE("bootstrap_errors produces b reproducible triples with isolated test rows") {
    const SurveyTable dataset = generate_surrogate(400, 3, default_surrogate_profile());
    const TrainConfig config = tiny_train_config();

    bool probed = false;
    std::set<std::size_t> test_set;
    ProbeFn probe = [&](const RoundProbe& p) {
        probed = true;
        test_set.clear();
        test_set.insert(p.test_indices->begin(), p.test_indices->end());
        for (std::size_t idx : *p.bootstrap_sample) CHECK(test_set.count(idx) == 0);
        for (std::size_t idx : *p.out_of_bag) CHECK(test_set.count(idx) == 0);
    };

    const auto errors = bootstrap_errors(dataset, ModelKind::vae, 0.5, 3, config, 11, 0.2, 10,
                                         probe);
    CHECK(probed);
    REQUIRE(errors.size() == 3);
    for (const auto& e : errors) {
        CHECK(e.rmse == std::sqrt(e.mse));
        CHECK(e.mae <= e.rmse);
    }

    const auto again =
        bootstrap_errors(dataset, ModelKind::vae, 0.5, 3, config, 11, 0.2, 10, nullptr);
    for (std::size_t i = 0; i < errors.size(); ++i) {
        CHECK(errors[i].mae == again[i].mae);
        CHECK(errors[i].mse == again[i].mse);
    }

    SUBCASE("b=1 mean equals the single triple") {
        const auto one = bootstrap_errors(dataset, ModelKind::gan, 1.0, 1, config, 5);
        REQUIRE(one.size() == 1);
        const ErrorTriple mean = mean_triple(one);
        CHECK(mean.mae == one[0].mae);
        CHECK(mean.mse == one[0].mse);
    }
}

TEST_CASE("run_experiment fills the complete grid deterministically") {
    testutil::TempDir tmp("exp");
    const SurveyTable dataset = generate_surrogate(300, 21, default_surrogate_profile());

    ExperimentPlan plan;
    DatasetSpec spec;
    spec.id = "synthA";
    spec.table = dataset;
    plan.datasets.push_back(spec);
    plan.fractions = {0.5, 1.0};
    plan.rounds = 2;
    plan.master_seed = 4242;
    plan.train_gan = tiny_train_config();
    plan.train_vae = tiny_train_config();

    const ExperimentReport report = run_experiment(plan);
    CHECK(report.cells.size() == 1 * 2 * 2);
    CHECK(report.cis.size() == 1 * 2 * 3);
    CHECK(report.raw.size() == 1 * 2 * 2 * 2);
    for (const auto& cell : report.cells) {
        CHECK(cell.mean.rmse == std::sqrt(cell.mean.mse));
        CHECK(cell.mean.mae <= cell.mean.rmse);
        CHECK(cell.rounds == 2);
    }
    for (const auto& entry : report.cis) {
        CHECK(entry.ci.lower <= entry.ci.upper);
        CHECK(entry.ci.rounds == 2);
    }

    SUBCASE("same plan and seed reproduce identical raw errors") {
        const ExperimentReport again = run_experiment(plan);
        REQUIRE(again.raw.size() == report.raw.size());
        for (std::size_t i = 0; i < report.raw.size(); ++i) {
            CHECK(again.raw[i].error.mae == report.raw[i].error.mae);
            CHECK(again.raw[i].error.mse == report.raw[i].error.mse);
            CHECK(again.raw[i].seed == report.raw[i].seed);
        }
    }
    SUBCASE("thread count does not change results") {
        ExperimentPlan threaded = plan;
        threaded.threads = 4;
        const ExperimentReport parallel = run_experiment(threaded);
        REQUIRE(parallel.raw.size() == report.raw.size());
        for (std::size_t i = 0; i < report.raw.size(); ++i) {
            CHECK(parallel.raw[i].error.mae == report.raw[i].error.mae);
            CHECK(parallel.raw[i].error.rmse == report.raw[i].error.rmse);
        }
    }
    SUBCASE("degenerate single-cell plan gives one cell and a collapsed ci") {
        ExperimentPlan tiny = plan;
        tiny.models = {ModelKind::vae};
        tiny.fractions = {1.0};
        tiny.rounds = 1;
        const ExperimentReport single = run_experiment(tiny);
        CHECK(single.cells.size() == 1);
        CHECK(single.cis.size() == 3);
        for (const auto& entry : single.cis) {
            CHECK(entry.ci.lower == entry.ci.mean);
            CHECK(entry.ci.upper == entry.ci.mean);
        }
        CHECK(single.cells[0].mean.mae == single.raw[0].error.mae);
    }
    SUBCASE("resynthesis mode appends ci rounds") {
        ExperimentPlan resynth = plan;
        resynth.ci_mode = CiMode::resynthesis_draws;
        const ExperimentReport r = run_experiment(resynth);
        CHECK(r.raw.size() == report.raw.size() + 2ull * 2ull);  // models x b extra draws
        int appended = 0;
        for (const auto& record : r.raw)
            if (record.round >= plan.rounds) ++appended;
        CHECK(appended == 2 * 2);
    }
}

TEST_CASE("bootstrap mean ci covers the true mean at roughly the nominal rate") {
    // Percentile bootstrap for the mean of N(0,1), n=50: quick 40-trial
    // version of the coverage check (the acceptance suite runs 200).
    CounterRng data_rng(31337);
    int covered = 0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> sample(50);
        for (auto& v : sample) v = data_rng.next_normal();
        IndexList indices(50);
        std::iota(indices.begin(), indices.end(), std::size_t{0});

        std::vector<double> means;
        means.reserve(200);
        for (int b = 0; b < 200; ++b) {
            const BootstrapSample draw =
                bootstrap_resample(indices, derive_seed(7'000'000ull, t, b));
            double total = 0.0;
            for (std::size_t idx : draw.sample) total += sample[idx];
            means.push_back(total / 50.0);
        }
        const ConfidenceInterval ci = percentile_ci(means, 0.95);
        if (ci.lower <= 0.0 && 0.0 <= ci.upper) ++covered;
    }
    CHECK(covered >= 32);  // loose gate for the small version
    CHECK(covered <= 40);
}
