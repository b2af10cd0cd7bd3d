#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "calibnet/data.hpp"
#include "calibnet/error.hpp"

using namespace calibnet;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

std::string category_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.category_name();
    }
    return "none";
}

}  // namespace

TEST_CASE("heteroscedastic noise scale is smallest at the origin") {
    CHECK(heteroscedastic_noise_std(0.0) == 0.05);
    CHECK(heteroscedastic_noise_std(4.0) == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(heteroscedastic_noise_std(-4.0) == doctest::Approx(0.85).epsilon(1e-15));
}

TEST_CASE("heteroscedastic generator is seeded and in range") {
    Dataset a = gen_heteroscedastic(500, 7);
    Dataset b = gen_heteroscedastic(500, 7);
    Dataset c = gen_heteroscedastic(500, 8);
    REQUIRE(a.size() == 500);
    CHECK(a.inputs.data == b.inputs.data);
    CHECK(a.targets.data == b.targets.data);
    CHECK(a.inputs.data != c.inputs.data);
    CHECK(a.task == Task::regression);
    CHECK(a.inputs.cols == 1);
    CHECK(a.targets.cols == 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.inputs(i, 0) >= -4.0);
        CHECK(a.inputs(i, 0) <= 4.0);
    }
}

TEST_CASE("heteroscedastic residual spread grows with distance from zero") {
    Dataset data = gen_heteroscedastic(100000, 11);
    // residuals against the known mean function, binned near |x| = 4
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double x = data.inputs(i, 0);
        if (std::fabs(x) < 3.9) continue;
        double resid = data.targets(i, 0) - (std::sin(2.0 * x) + 0.3 * x);
        sum += resid;
        sumsq += resid * resid;
        ++count;
    }
    REQUIRE(count > 400);
    double mean = sum / count;
    double sd = std::sqrt(sumsq / count - mean * mean);
    // bin covers sigma in [0.83, 0.85]
    CHECK(std::fabs(sd - 0.85) < 0.05 * 0.85);

    // and near the origin the spread collapses toward 0.05
    sum = sumsq = 0.0;
    count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double x = data.inputs(i, 0);
        if (std::fabs(x) > 0.05) continue;
        double resid = data.targets(i, 0) - (std::sin(2.0 * x) + 0.3 * x);
        sum += resid;
        sumsq += resid * resid;
        ++count;
    }
    REQUIRE(count > 200);
    mean = sum / count;
    sd = std::sqrt(sumsq / count - mean * mean);
    CHECK(sd < 0.08);
}

TEST_CASE("blob clusters are balanced and separable at wide spacing") {
    const std::size_t n = 6000, k = 3;
    Dataset data = gen_blobs(n, k, 6.0, 13);
    REQUIRE(data.size() == n);
    CHECK(data.task == Task::classification);
    CHECK(data.num_classes == k);
    CHECK(data.inputs.cols == 2);

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t label : data.labels) {
        REQUIRE(label < k);
        ++counts[label];
    }
    double exp = double(n) / k;
    double tol = 5.0 * std::sqrt(exp * (1.0 - 1.0 / k));
    for (std::size_t c = 0; c < k; ++c)
        CHECK(std::fabs(double(counts[c]) - exp) <= tol);

    // nearest true center recovers almost every label
    const double pi = 3.14159265358979323846;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double bx = data.inputs(i, 0), by = data.inputs(i, 1);
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double cx = 6.0 * std::cos(2.0 * pi * c / k);
            double cy = 6.0 * std::sin(2.0 * pi * c / k);
            double d = (bx - cx) * (bx - cx) + (by - cy) * (by - cy);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        if (arg == data.labels[i]) ++correct;
    }
    CHECK(double(correct) / n > 0.99);
}

TEST_CASE("zero separation collapses all blob centers to the origin") {
    Dataset data = gen_blobs(4000, 2, 0.0, 17);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        mx += data.inputs(i, 0);
        my += data.inputs(i, 1);
    }
    mx /= data.size();
    my /= data.size();
    CHECK(std::fabs(mx) < 0.1);
    CHECK(std::fabs(my) < 0.1);
}

TEST_CASE("csv round trip recovers every value exactly") {
    Dataset data = gen_heteroscedastic(64, 3);
    auto path = write_temp("calibnet_roundtrip.csv", dataset_to_csv(data));
    CsvSchema schema;
    schema.task = Task::regression;
    schema.feature_columns = {"x0"};
    schema.target_columns = {"y0"};
    Dataset back = load_csv(path.string(), schema);
    REQUIRE(back.size() == data.size());
    CHECK(back.inputs.data == data.inputs.data);
    CHECK(back.targets.data == data.targets.data);
    std::filesystem::remove(path);
}

TEST_CASE("csv reader parses a hand written file") {
    auto path = write_temp("calibnet_hand.csv", "x0,x1,y0\n1.5,-2,3\n0,4.25,-1e3\n");
    CsvSchema schema;
    schema.feature_columns = {"x0", "x1"};
    schema.target_columns = {"y0"};
    Dataset data = load_csv(path.string(), schema);
    REQUIRE(data.size() == 2);
    CHECK(data.inputs(0, 0) == 1.5);
    CHECK(data.inputs(0, 1) == -2.0);
    CHECK(data.targets(0, 0) == 3.0);
    CHECK(data.inputs(1, 1) == 4.25);
    CHECK(data.targets(1, 0) == -1000.0);
    std::filesystem::remove(path);
}

TEST_CASE("csv errors name the offending line") {
    CsvSchema schema;
    schema.feature_columns = {"x0"};
    schema.target_columns = {"y0"};

    auto missing = write_temp("calibnet_missing.csv", "x0,y0\n1,2\n3\n5,6\n");
    try {
        load_csv(missing.string(), schema);
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::data);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::filesystem::remove(missing);

    auto bad = write_temp("calibnet_badcell.csv", "x0,y0\n1,2\n3,4\n5,abc\n");
    try {
        load_csv(bad.string(), schema);
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    std::filesystem::remove(bad);
}

TEST_CASE("csv header must match the schema exactly") {
    CsvSchema schema;
    schema.feature_columns = {"x0"};
    schema.target_columns = {"y0"};

    auto extra = write_temp("calibnet_extra.csv", "x0,y0,z\n1,2,3\n");
    CHECK_THROWS_AS(load_csv(extra.string(), schema), Error);
    std::filesystem::remove(extra);

    auto absent = write_temp("calibnet_absent.csv", "x0\n1\n");
    CHECK_THROWS_AS(load_csv(absent.string(), schema), Error);
    std::filesystem::remove(absent);

    auto dup = write_temp("calibnet_dup.csv", "x0,x0,y0\n1,2,3\n");
    CHECK_THROWS_AS(load_csv(dup.string(), schema), Error);
    std::filesystem::remove(dup);
}

TEST_CASE("csv classification labels must be whole and non negative") {
    CsvSchema schema;
    schema.task = Task::classification;
    schema.feature_columns = {"x0"};
    schema.target_columns = {"label"};

    auto frac = write_temp("calibnet_frac.csv", "x0,label\n1,0\n2,1.5\n");
    CHECK_THROWS_AS(load_csv(frac.string(), schema), Error);
    std::filesystem::remove(frac);

    auto neg = write_temp("calibnet_neg.csv", "x0,label\n1,-1\n");
    CHECK_THROWS_AS(load_csv(neg.string(), schema), Error);
    std::filesystem::remove(neg);

    auto good = write_temp("calibnet_cls.csv", "x0,label\n1,0\n2,2\n3,1\n");
    Dataset data = load_csv(good.string(), schema);
    CHECK(data.num_classes == 3);
    CHECK(data.labels == std::vector<std::size_t>{0, 2, 1});
    std::filesystem::remove(good);
}

TEST_CASE("missing file is an io error") {
    CsvSchema schema;
    schema.feature_columns = {"x0"};
    schema.target_columns = {"y0"};
    std::string cat = category_of([&] { load_csv("/nonexistent/nowhere.csv", schema); });
    CHECK(cat == "io");
}

TEST_CASE("split cuts are disjoint, exhaustive, and seeded") {
    Dataset data = gen_heteroscedastic(1000, 5);
    SplitFractions f{0.8, 0.1, 0.1};
    Splits s = split(data, f, 21);
    CHECK(s.train.size() == 800);
    CHECK(s.val.size() == 100);
    CHECK(s.test.size() == 100);

    // the three splits together are a permutation of the source rows
    std::vector<double> all;
    for (const Dataset* part : {&s.train, &s.val, &s.test})
        for (std::size_t i = 0; i < part->size(); ++i) all.push_back(part->inputs(i, 0));
    std::vector<double> orig(data.inputs.data);
    std::sort(all.begin(), all.end());
    std::sort(orig.begin(), orig.end());
    CHECK(all == orig);

    Splits again = split(data, f, 21);
    CHECK(again.train.inputs.data == s.train.inputs.data);
    Splits other = split(data, f, 22);
    CHECK(other.train.inputs.data != s.train.inputs.data);
}

TEST_CASE("split fractions must sum to one") {
    Dataset data = gen_heteroscedastic(100, 5);
    SplitFractions f{0.5, 0.2, 0.2};
    CHECK_THROWS_AS(split(data, f, 1), Error);
}

TEST_CASE("standardized training data has zero mean and unit spread") {
    Dataset data = gen_heteroscedastic(5000, 9);
    Standardizer s = fit_standardizer(data);
    Dataset std_data = standardize(data, s);
    double mean = 0.0;
    for (std::size_t i = 0; i < std_data.size(); ++i) mean += std_data.inputs(i, 0);
    mean /= std_data.size();
    double var = 0.0;
    for (std::size_t i = 0; i < std_data.size(); ++i)
        var += (std_data.inputs(i, 0) - mean) * (std_data.inputs(i, 0) - mean);
    var /= std_data.size();
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(std::fabs(var - 1.0) < 1e-9);

    double tmean = 0.0;
    for (std::size_t i = 0; i < std_data.size(); ++i) tmean += std_data.targets(i, 0);
    tmean /= std_data.size();
    CHECK(std::fabs(tmean) < 1e-9);
}

TEST_CASE("constant features keep unit scale instead of dividing by zero") {
    Dataset data;
    data.task = Task::regression;
    data.inputs = Matrix(10, 1, 3.0);
    data.targets = Matrix(10, 1);
    for (std::size_t i = 0; i < 10; ++i) data.targets(i, 0) = double(i);
    Standardizer s = fit_standardizer(data);
    CHECK(s.input_std[0] == 1.0);
    Dataset out = standardize(data, s);
    for (std::size_t i = 0; i < 10; ++i) CHECK(out.inputs(i, 0) == 0.0);
}

TEST_CASE("destandardize inverts the target transform including variance") {
    Dataset data = gen_heteroscedastic(1000, 31);
    Standardizer s = fit_standardizer(data);

    Prediction pred;
    pred.task = Task::regression;
    pred.mean = {0.5};
    pred.variance = {2.0};
    Prediction back = destandardize_prediction(pred, s);
    CHECK(back.mean[0] ==
          doctest::Approx(0.5 * s.target_std[0] + s.target_mean[0]).epsilon(1e-15));
    CHECK(back.variance[0] ==
          doctest::Approx(2.0 * s.target_std[0] * s.target_std[0]).epsilon(1e-15));

    Vector y = destandardize_target(Vector{1.0}, s);
    CHECK(y[0] == doctest::Approx(s.target_std[0] + s.target_mean[0]).epsilon(1e-15));
}

TEST_CASE("take_rows keeps the requested order") {
    Dataset data = gen_heteroscedastic(10, 2);
    Dataset sub = take_rows(data, {7, 0, 3}, "probe");
    REQUIRE(sub.size() == 3);
    CHECK(sub.inputs(0, 0) == data.inputs(7, 0));
    CHECK(sub.inputs(1, 0) == data.inputs(0, 0));
    CHECK(sub.inputs(2, 0) == data.inputs(3, 0));
    CHECK(sub.provenance.find("probe") != std::string::npos);
}

TEST_CASE("empty training split cannot be standardized") {
    Dataset data;
    data.task = Task::regression;
    data.inputs = Matrix(0, 1);
    data.targets = Matrix(0, 1);
    CHECK_THROWS_AS(fit_standardizer(data), Error);
}
