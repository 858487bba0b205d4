#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <regex>
#include <sstream>

#include "sarcgen/errors.hpp"
#include "sarcgen/eval.hpp"
#include "sarcgen/nn/params.hpp"
#include "support/oracles.hpp"

using namespace sarcgen;

namespace {

std::vector<std::vector<double>> rows_of(const RatingsGrid& g) {
    std::vector<std::vector<double>> rows(g.items(), std::vector<double>(g.judges()));
    for (std::size_t i = 0; i < g.items(); ++i) {
        for (std::size_t j = 0; j < g.judges(); ++j) rows[i][j] = g.at(i, j);
    }
    return rows;
}

RatingsGrid random_grid(nn::Rng& rng, std::size_t items, std::size_t judges) {
    std::vector<double> v(items * judges);
    for (auto& x : v) x = static_cast<double>(1 + rng.below(5));
    return make_grid(items, judges, std::move(v));
}

std::vector<RatingRecord> parse(const std::string& csv) {
    std::istringstream in(csv);
    return parse_ratings(in, "test.csv");
}

std::vector<DetectionPrediction> predictions(std::initializer_list<std::tuple<int, int, double>> rows) {
    std::vector<DetectionPrediction> out;
    int i = 0;
    for (const auto& [t, p, s] : rows) out.push_back({"t" + std::to_string(i++), t, p, s});
    return out;
}

// Every (item, system, judge) of a synthetic study with scores derived from
// the indices.
std::string study_csv(std::size_t items, std::size_t judges) {
    std::string csv = "item_id,system,judge_id,text,S,C,H,G\n";
    const char* systems[] = {"full_model", "without_emoji", "without_context", "external_baseline"};
    for (std::size_t i = 0; i < items; ++i) {
        for (const char* s : systems) {
            for (std::size_t j = 0; j < judges; ++j) {
                csv += "item" + std::to_string(i) + "," + s + ",judge" + std::to_string(j) + ",\"some, text\"";
                for (std::size_t c = 0; c < 4; ++c) csv += "," + std::to_string(1 + (i * 3 + j + c) % 5);
                csv += "\n";
            }
        }
    }
    return csv;
}

}  // namespace

TEST_CASE("perfect agreement gives ICC one") {
    const auto g = make_grid(4, 3, {1, 1, 1, 2, 2, 2, 4, 4, 4, 5, 5, 5});
    const auto r = icc_2k(g);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(r.out_of_range);
    CHECK(r.items == 4);
    CHECK(r.judges == 3);
}

TEST_CASE("ICC matches the ANOVA oracle on random grids") {
    nn::Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = random_grid(rng, 2 + rng.below(9), 2 + rng.below(4));
        if (std::all_of(g.values.begin(), g.values.end(), [&](double x) { return x == g.values[0]; })) {
            CHECK_THROWS_AS(icc_2k(g), DegenerateGridError);
            continue;
        }
        const double expected = testing::icc_anova_oracle(rows_of(g));
        IccResult r;
        try {
            r = icc_2k(g);
        } catch (const DegenerateGridError&) {
            // Zero denominator: the oracle has no finite value either.
            CHECK((!std::isfinite(expected) || std::fabs(expected) > 1e6));
            continue;
        }
        CHECK(std::fabs(r.value - expected) <= 1e-9);
        CHECK(r.out_of_range == (r.value < 0.0 || r.value > 1.0));
    }
}

TEST_CASE("ICC is invariant under a constant shift") {
    nn::Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = random_grid(rng, 6, 3);
        auto shifted = g.values;
        for (auto& x : shifted) x += 2.5;
        try {
            const double a = icc_2k(g).value;
            CHECK(icc_2k(make_grid(6, 3, shifted)).value == doctest::Approx(a).epsilon(1e-9));
        } catch (const DegenerateGridError&) {
        }
    }
}

TEST_CASE("ICC preconditions") {
    CHECK_THROWS_AS(icc_2k(make_grid(3, 3, std::vector<double>(9, 4.0))), DegenerateGridError);
    CHECK_THROWS_AS(icc_2k(make_grid(1, 3, {1, 2, 3})), PreconditionError);
    CHECK_THROWS_AS(icc_2k(make_grid(3, 1, {1, 2, 3})), PreconditionError);
    CHECK_THROWS_AS(make_grid(2, 2, {1, 2, 3}), ShapeError);
}

TEST_CASE("means and variances") {
    const auto three = parse("item_id,system,judge_id,S,C,H,G\n"
                             "a,full_model,j1,3,1,1,1\n"
                             "b,full_model,j1,3,1,1,1\n"
                             "c,full_model,j1,3,5,1,1\n");
    CHECK(mean_scores(three, SystemVariant::full_model, Criterion::sarcasticness) == 3.0);
    CHECK(variance_scores(three, SystemVariant::full_model, Criterion::sarcasticness).value == 0.0);
    const auto two = parse("item_id,system,judge_id,S,C,H,G\n"
                           "a,full_model,j1,1,1,1,1\n"
                           "a,full_model,j2,5,1,1,1\n");
    const auto v = variance_scores(two, SystemVariant::full_model, Criterion::sarcasticness);
    CHECK(v.value == 4.0);
    CHECK(v.count == 2);
    CHECK(v.estimator == "population");
    CHECK_THROWS_AS(variance_scores(two, SystemVariant::full_model, Criterion::sarcasticness, VarianceMode::item_means),
                    MissingDataError);
    CHECK_THROWS_AS(mean_scores(two, SystemVariant::without_emoji, Criterion::sarcasticness), MissingDataError);
}

TEST_CASE("variance modes pool different values") {
    const auto r = parse("item_id,system,judge_id,S,C,H,G\n"
                         "a,full_model,j1,1,1,1,1\n"
                         "a,full_model,j2,3,1,1,1\n"
                         "b,full_model,j1,5,1,1,1\n"
                         "b,full_model,j2,5,1,1,1\n");
    const auto flat = variance_scores(r, SystemVariant::full_model, Criterion::sarcasticness);
    CHECK(flat.count == 4);
    CHECK(flat.value == doctest::Approx(testing::two_pass_variance({1, 3, 5, 5})).epsilon(1e-12));
    const auto means = variance_scores(r, SystemVariant::full_model, Criterion::sarcasticness, VarianceMode::item_means);
    CHECK(means.count == 2);
    CHECK(means.value == doctest::Approx(testing::two_pass_variance({2, 5})).epsilon(1e-12));
    CHECK(mean_scores(r, SystemVariant::full_model, Criterion::sarcasticness) == doctest::Approx(3.5));
}

TEST_CASE("mean and variance agree with two-pass oracles") {
    nn::Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::string csv = "item_id,system,judge_id,S,C,H,G\n";
        std::vector<double> xs;
        for (std::size_t i = 0, n = 2 + rng.below(40); i < n; ++i) {
            const int s = 1 + static_cast<int>(rng.below(5));
            xs.push_back(s);
            csv += "i" + std::to_string(i) + ",without_context,j," + std::to_string(s) + ",1,1,1\n";
        }
        const auto r = parse(csv);
        CHECK(std::fabs(mean_scores(r, SystemVariant::without_context, Criterion::sarcasticness) -
                        testing::two_pass_mean(xs)) <= 1e-12);
        CHECK(std::fabs(variance_scores(r, SystemVariant::without_context, Criterion::sarcasticness).value -
                        testing::two_pass_variance(xs)) <= 1e-12);
    }
}

TEST_CASE("ratings validation names the line") {
    auto expect_line = [](const std::string& csv, const char* line) {
        try {
            parse(csv);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(std::string("test.csv:") + line) != std::string::npos);
        }
    };
    const std::string head = "item_id,system,judge_id,S,C,H,G\n";
    expect_line(head + "a,full_model,j,6,1,1,1\n", "2");
    expect_line(head + "a,full_model,j,0,1,1,1\n", "2");
    expect_line(head + "a,full_model,j,3,1,1,1\na,full_model,j,3,2,2,2\n", "3");
    expect_line(head + "a,best_model,j,3,1,1,1\n", "2");
    expect_line(head + "a,full_model,j,x,1,1,1\n", "2");
    expect_line(head + ",full_model,j,3,1,1,1\n", "2");
    CHECK_THROWS_AS(parse("item_id,system,S,C,H,G\n"), ValidationError);
}

TEST_CASE("a full study loads and reports quickly") {
    const auto records = parse(study_csv(100, 3));
    CHECK(records.size() == 1200);
    const auto g = build_grid(records, SystemVariant::full_model, Criterion::humor);
    CHECK(g.items() == 100);
    CHECK(g.judges() == 3);
    CHECK(g.item_ids.front() == "item0");

    const auto start = std::chrono::steady_clock::now();
    const auto report = ratings_report(records);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 1.0);
    CHECK(report["ratings"] == 1200);
    CHECK(report["icc_form"] == "ICC(2,k)");
    REQUIRE(report["systems"].size() == 4);
    const auto& cell = report["systems"][0]["criteria"]["S"];
    CHECK(cell["icc"].is_number());
    CHECK(cell["mean"].get<double>() == doctest::Approx(mean_scores(records, SystemVariant::full_model, Criterion::sarcasticness)));

    const auto table = render_table(report, ReportTable::means);
    CHECK(table.find("Full Model") != std::string::npos);
    CHECK(table.find("External Baseline") != std::string::npos);
    CHECK(std::regex_search(table, std::regex("System +\\| +S +\\| +C +\\| +H +\\| +G")));
}

TEST_CASE("incomplete grids are missing data") {
    const auto r = parse("item_id,system,judge_id,S,C,H,G\n"
                         "a,full_model,j1,1,1,1,1\n"
                         "a,full_model,j2,3,1,1,1\n"
                         "b,full_model,j1,5,1,1,1\n");
    CHECK_THROWS_AS(build_grid(r, SystemVariant::full_model, Criterion::sarcasticness), MissingDataError);
    CHECK_THROWS_AS(build_grid(r, SystemVariant::without_emoji, Criterion::sarcasticness), MissingDataError);
    const auto report = ratings_report(r);
    CHECK(report["systems"][0]["criteria"]["S"].contains("icc_error"));
    CHECK(render_table(report, ReportTable::icc).find("-") != std::string::npos);
}

TEST_CASE("detection metrics") {
    // tp 2, fp 1, fn 1, tn 1
    const auto m = detection_metrics(predictions({{1, 1, 0.9}, {1, 1, 0.8}, {1, 0, 0.3}, {0, 1, 0.7}, {0, 0, 0.1}}));
    CHECK(m.tp == 2);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tn == 1);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.roc_auc() == doctest::Approx(5.0 / 6.0));

    const auto perfect = detection_metrics(predictions({{1, 1, 0.9}, {0, 0, 0.1}, {1, 1, 0.7}, {0, 0, 0.2}}));
    CHECK(perfect.roc_auc() == 1.0);
    CHECK(perfect.f1 == 1.0);

    const auto none = detection_metrics(predictions({{0, 0, 0.1}, {1, 0, 0.2}}));
    CHECK(none.precision == 0.0);
    CHECK(none.f1 == 0.0);

    CHECK_THROWS_AS(detection_metrics(std::vector<DetectionPrediction>{}), MissingDataError);
}

TEST_CASE("AUC matches pairwise counting and ignores monotone transforms") {
    nn::Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DetectionPrediction> p;
        std::vector<int> labels;
        std::vector<double> scores;
        for (std::size_t i = 0, n = 2 + rng.below(30); i < n; ++i) {
            const int t = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
            const double s = static_cast<double>(rng.below(6)) / 5.0;
            p.push_back({"x" + std::to_string(i), t, s >= 0.5 ? 1 : 0, s});
            labels.push_back(t);
            scores.push_back(s);
        }
        const double auc = detection_metrics(p).roc_auc();
        CHECK(std::fabs(auc - testing::pairwise_auc(labels, scores)) <= 1e-12);
        for (auto& x : p) x.score = std::sqrt(*x.score) * 0.5;
        CHECK(std::fabs(detection_metrics(p).roc_auc() - auc) <= 1e-12);
    }
}

TEST_CASE("AUC is undefined for a single class or missing scores") {
    const auto single = detection_metrics(predictions({{1, 1, 0.9}, {1, 0, 0.2}}));
    CHECK_FALSE(single.has_roc_auc());
    CHECK_THROWS_AS(single.roc_auc(), AUCUndefinedError);
    CHECK(detection_report(single)["roc_auc"].is_null());

    std::vector<DetectionPrediction> partial = {{"a", 1, 1, 0.9}, {"b", 0, 0, std::nullopt}};
    CHECK_THROWS_AS(detection_metrics(partial).roc_auc(), AUCUndefinedError);
    CHECK(detection_metrics(partial).f1 == 1.0);
}

TEST_CASE("prediction parsing") {
    std::istringstream ok("text_id,true_label,predicted_label,score\na,1,1,0.75\nb,0,1,\n");
    const auto p = parse_predictions(ok, "p.csv");
    REQUIRE(p.size() == 2);
    CHECK(p[0].score == std::optional<double>(0.75));
    CHECK_FALSE(p[1].score.has_value());
    std::istringstream bad_label("text_id,true_label,predicted_label,score\na,2,1,0.5\n");
    CHECK_THROWS_AS(parse_predictions(bad_label), ValidationError);
    std::istringstream bad_score("text_id,true_label,predicted_label,score\na,1,1,1.5\n");
    CHECK_THROWS_AS(parse_predictions(bad_score), ValidationError);
}

TEST_CASE("criterion and system names") {
    for (auto c : kCriteria) CHECK(criterion_from_string(criterion_code(c)) == c);
    CHECK(criterion_code(Criterion::grammaticality) == "G");
    CHECK(system_label(SystemVariant::without_context) == "Without Context");
}
