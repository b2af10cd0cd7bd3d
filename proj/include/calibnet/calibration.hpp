#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "calibnet/matrix.hpp"
#include "calibnet/prediction.hpp"

namespace calibnet {

// Confidence levels for calibration curves, strictly increasing inside (0,1).
struct ZGrid {
    std::vector<double> levels;

    void validate() const;
    // 13 levels from 10% to 99.9%, denser near the right tail.
    static ZGrid default_grid();
};

struct CalibrationReport {
    std::string method_id;
    std::string model_digest;
    std::string config_digest;
    Task task = Task::regression;
    std::size_t sample_count = 0;

    // regression
    std::vector<double> z_levels;
    std::vector<double> coverage;
    double deviation_area = 0.0;
    double mae = 0.0;
    double nll = 0.0;           // full Gaussian density, or -log p(true class)
    double nll_no_const = 0.0;  // regression likelihood term without 0.5*ln(2*pi) per dim

    // classification
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double mefp = 0.0;
    bool mefp_defined = false;
};

// Central interval mu +/- q((1+z)/2) * sigma for each output dimension.
std::vector<std::pair<double, double>> gaussian_interval(const Prediction& pred, double z);

// Fraction of (sample, dimension) events inside the z-interval, one value per
// grid level. Events pool across output dimensions.
std::vector<double> calibration_curve(const std::vector<Prediction>& preds, const Matrix& targets,
                                      const ZGrid& grid);

// Trapezoidal integral of |coverage(z) - z| over [0,1]. The curve points
// (0,0) and (1,1) are appended, so a perfectly calibrated curve scores
// exactly 0; a constant curve scores its continuum value only up to the
// resolution of the first and last grid gaps.
double deviation_area(const std::vector<double>& coverage, const ZGrid& grid);

CalibrationReport evaluate_regression(const std::vector<Prediction>& preds, const Matrix& targets,
                                      const ZGrid& grid);
CalibrationReport evaluate_classification(const std::vector<Prediction>& preds,
                                          const std::vector<std::size_t>& labels);

// Flat metric rows for the comparison table: (metric name, value as text).
std::vector<std::pair<std::string, std::string>> report_metric_rows(const CalibrationReport& r);

// Two-column "z,coverage" table for external plotting.
std::string curve_table(const CalibrationReport& r);

}  // namespace calibnet
