#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "calibnet/calibration.hpp"
#include "calibnet/error.hpp"
#include "calibnet/rng.hpp"

using namespace calibnet;

namespace {

Prediction gauss(double mean, double var) {
    Prediction p;
    p.task = Task::regression;
    p.mean = {mean};
    p.variance = {var};
    return p;
}

ZGrid dense_grid(std::size_t n) {
    ZGrid g;
    for (std::size_t i = 1; i <= n; ++i) g.levels.push_back(double(i) / (n + 1));
    return g;
}

}  // namespace

TEST_CASE("default grid is the thirteen level ladder") {
    ZGrid g = ZGrid::default_grid();
    g.validate();
    REQUIRE(g.levels.size() == 13);
    CHECK(g.levels.front() == 0.1);
    CHECK(g.levels.back() == 0.999);
    for (std::size_t i = 1; i < g.levels.size(); ++i) CHECK(g.levels[i] > g.levels[i - 1]);
    CHECK(std::count(g.levels.begin(), g.levels.end(), 0.85) == 1);
    CHECK(std::count(g.levels.begin(), g.levels.end(), 0.995) == 1);
}

TEST_CASE("grid validation rejects unsorted or out of range levels") {
    ZGrid bad;
    bad.levels = {0.5, 0.3};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.levels = {0.0, 0.5};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.levels = {0.5, 1.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.levels = {};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("central intervals match frozen normal quantiles") {
    auto iv95 = gaussian_interval(gauss(0.0, 1.0), 0.95);
    REQUIRE(iv95.size() == 1);
    CHECK(iv95[0].first == doctest::Approx(-1.959963984540054).epsilon(1e-8));
    CHECK(iv95[0].second == doctest::Approx(1.959963984540054).epsilon(1e-8));

    auto iv50 = gaussian_interval(gauss(5.0, 4.0), 0.5);
    CHECK(iv50[0].first == doctest::Approx(5.0 - 1.348979500392163).epsilon(1e-8));
    CHECK(iv50[0].second == doctest::Approx(5.0 + 1.348979500392163).epsilon(1e-8));

    // interval width collapses as the level goes to zero
    auto tiny = gaussian_interval(gauss(0.0, 1.0), 1e-9);
    CHECK(tiny[0].second - tiny[0].first < 1e-8);
}

TEST_CASE("huge variance covers everything, tiny variance covers nothing") {
    std::vector<Prediction> wide, narrow;
    Matrix targets(50, 1);
    for (int i = 0; i < 50; ++i) {
        targets(i, 0) = i - 25.0;
        wide.push_back(gauss(0.0, 1e12));
        narrow.push_back(gauss(1000.0, 1e-12));
    }
    ZGrid grid = ZGrid::default_grid();
    for (double c : calibration_curve(wide, targets, grid)) CHECK(c == 1.0);
    for (double c : calibration_curve(narrow, targets, grid)) CHECK(c == 0.0);
}

TEST_CASE("coverage is self consistent when targets come from the predictions") {
    RngStream rng(41, 0);
    const std::size_t n = 50000;
    std::vector<Prediction> preds;
    preds.reserve(n);
    Matrix targets(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 2.0 * rng.next_normal();
        double sd = 0.5 + rng.next_uniform();
        preds.push_back(gauss(mu, sd * sd));
        targets(i, 0) = mu + sd * rng.next_normal();
    }
    ZGrid grid = ZGrid::default_grid();
    auto cov = calibration_curve(preds, targets, grid);
    for (std::size_t j = 0; j < grid.levels.size(); ++j)
        CHECK(std::fabs(cov[j] - grid.levels[j]) <= 0.01);
}

TEST_CASE("coverage pools events across output dimensions") {
    // one sample, two dims: one dim always inside, one always outside
    Prediction p;
    p.task = Task::regression;
    p.mean = {0.0, 0.0};
    p.variance = {1e12, 1e-12};
    Matrix targets(1, 2);
    targets(0, 0) = 0.5;
    targets(0, 1) = 100.0;
    ZGrid grid;
    grid.levels = {0.5};
    auto cov = calibration_curve({p}, targets, grid);
    CHECK(cov[0] == 0.5);
}

TEST_CASE("perfectly calibrated curves have exactly zero deviation area") {
    ZGrid grid = ZGrid::default_grid();
    CHECK(deviation_area(grid.levels, grid) == 0.0);
    ZGrid dense = dense_grid(999);
    CHECK(deviation_area(dense.levels, dense) == 0.0);
}

TEST_CASE("constant full coverage scores its continuum area on dense grids") {
    // the continuum value of |1 - z| over [0,1] is 0.5; the first grid gap is
    // bridged from the appended (0,0) anchor, so coarse grids resolve less
    ZGrid grid = ZGrid::default_grid();
    std::vector<double> ones(grid.levels.size(), 1.0);
    CHECK(deviation_area(ones, grid) == doctest::Approx(0.45).epsilon(1e-12));

    ZGrid dense = dense_grid(999);
    std::vector<double> dones(dense.levels.size(), 1.0);
    CHECK(std::fabs(deviation_area(dones, dense) - 0.5) < 1e-3);
}

TEST_CASE("quadratic miscalibration integrates to one sixth") {
    ZGrid dense = dense_grid(2000);
    std::vector<double> cov;
    for (double z : dense.levels) cov.push_back(z * z);
    CHECK(std::fabs(deviation_area(cov, dense) - 1.0 / 6.0) < 1e-3);
}

TEST_CASE("deviation area is stable under grid refinement") {
    // same smooth miscalibration sampled at two resolutions
    auto curve = [](double z) { return std::min(1.0, 1.25 * z); };
    ZGrid coarse = dense_grid(200);
    ZGrid fine = dense_grid(2000);
    std::vector<double> cc, cf;
    for (double z : coarse.levels) cc.push_back(curve(z));
    for (double z : fine.levels) cf.push_back(curve(z));
    CHECK(std::fabs(deviation_area(cc, coarse) - deviation_area(cf, fine)) < 2e-3);
}

TEST_CASE("regression report carries both likelihood conventions") {
    std::vector<Prediction> preds{gauss(0.0, 1.0), gauss(1.0, 4.0)};
    Matrix targets(2, 1);
    targets(0, 0) = 0.5;
    targets(1, 0) = -1.0;
    CalibrationReport r = evaluate_regression(preds, targets, ZGrid::default_grid());
    CHECK(r.task == Task::regression);
    CHECK(r.sample_count == 2);
    CHECK(r.mae == doctest::Approx((0.5 + 2.0) / 2.0).epsilon(1e-12));

    double nll0 = 0.5 * std::log(1.0) + 0.25 / 2.0;
    double nll1 = 0.5 * std::log(4.0) + 4.0 / 8.0;
    CHECK(r.nll_no_const == doctest::Approx((nll0 + nll1) / 2.0).epsilon(1e-12));
    const double half_log_2pi = 0.91893853320467274;
    CHECK(r.nll == doctest::Approx(r.nll_no_const + half_log_2pi).epsilon(1e-12));
}

TEST_CASE("exact point predictions give zero mae") {
    std::vector<Prediction> preds{gauss(0.5, 1.0), gauss(-2.0, 1.0)};
    Matrix targets(2, 1);
    targets(0, 0) = 0.5;
    targets(1, 0) = -2.0;
    CalibrationReport r = evaluate_regression(preds, targets, ZGrid::default_grid());
    CHECK(r.mae == 0.0);
    // every interval contains its center
    for (double c : r.coverage) CHECK(c == 1.0);
}

TEST_CASE("classification report matches a small hand worked table") {
    // four samples, two classes: true 0->pred 0, 0->0, 0->1, 1->1
    // class 0: tp=2 fp=0 fn=1, F1 = 4/5; class 1: tp=1 fp=1 fn=0, F1 = 2/3
    auto make = [](double p0, double p1) {
        Prediction p;
        p.task = Task::classification;
        p.probs = {p0, p1};
        return p;
    };
    std::vector<Prediction> preds{make(0.9, 0.1), make(0.8, 0.2), make(0.4, 0.6),
                                  make(0.3, 0.7)};
    std::vector<std::size_t> labels{0, 0, 0, 1};
    CalibrationReport r = evaluate_classification(preds, labels);
    CHECK(r.accuracy == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(r.macro_f1 == doctest::Approx(0.7333333333333334).epsilon(1e-12));
    CHECK(r.sample_count == 4);

    // one misclassified sample, entropy of (0.4, 0.6)
    double h = -(0.4 * std::log(0.4) + 0.6 * std::log(0.6));
    CHECK(r.mefp_defined);
    CHECK(r.mefp == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("mefp is undefined without misclassifications") {
    auto make = [](double p0, double p1) {
        Prediction p;
        p.task = Task::classification;
        p.probs = {p0, p1};
        return p;
    };
    std::vector<Prediction> preds{make(0.9, 0.1), make(0.2, 0.8)};
    std::vector<std::size_t> labels{0, 1};
    CalibrationReport r = evaluate_classification(preds, labels);
    CHECK(r.accuracy == 1.0);
    CHECK_FALSE(r.mefp_defined);

    auto rows = report_metric_rows(r);
    bool saw_undefined = false;
    for (const auto& [name, value] : rows)
        if (name == "mefp" && value == "undefined") saw_undefined = true;
    CHECK(saw_undefined);
}

TEST_CASE("mefp stays inside the entropy bounds") {
    RngStream rng(43, 0);
    const std::size_t k = 5, n = 400;
    std::vector<Prediction> preds;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
        Vector probs(k);
        double sum = 0.0;
        for (auto& v : probs) {
            v = rng.next_open_uniform();
            sum += v;
        }
        for (auto& v : probs) v /= sum;
        Prediction p;
        p.task = Task::classification;
        p.probs = probs;
        preds.push_back(p);
        labels.push_back(rng.next_below(k));
    }
    CalibrationReport r = evaluate_classification(preds, labels);
    REQUIRE(r.mefp_defined);
    CHECK(r.mefp >= 0.0);
    CHECK(r.mefp <= std::log(double(k)) + 1e-12);
}

TEST_CASE("uniform predictions score log k likelihood and chance accuracy") {
    const std::size_t k = 6, n = 3000;
    RngStream rng(47, 0);
    std::vector<Prediction> preds;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
        Prediction p;
        p.task = Task::classification;
        p.probs = Vector(k, 1.0 / k);
        preds.push_back(p);
        labels.push_back(rng.next_below(k));
    }
    CalibrationReport r = evaluate_classification(preds, labels);
    CHECK(r.nll == doctest::Approx(1.791759469228055).epsilon(1e-12));
    REQUIRE(r.mefp_defined);
    CHECK(r.mefp == doctest::Approx(1.791759469228055).epsilon(1e-9));
    double noise = 5.0 * std::sqrt((1.0 / k) * (1.0 - 1.0 / k) / n);
    CHECK(std::fabs(r.accuracy - 1.0 / k) <= noise);
}

TEST_CASE("curve table prints one row per grid level") {
    std::vector<Prediction> preds{gauss(0.0, 1.0)};
    Matrix targets(1, 1);
    targets(0, 0) = 0.2;
    CalibrationReport r = evaluate_regression(preds, targets, ZGrid::default_grid());
    std::string table = curve_table(r);
    std::size_t rows = std::count(table.begin(), table.end(), '\n');
    CHECK(rows == 14);  // header + 13 levels
    CHECK(table.rfind("z,coverage\n", 0) == 0);
}
