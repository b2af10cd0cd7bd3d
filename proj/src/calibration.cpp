#include "calibnet/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "calibnet/error.hpp"
#include "calibnet/normal.hpp"

namespace calibnet {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;  // 0.5 * ln(2 * pi)
constexpr double kProbFloor = 1e-12;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_regression_preds(const std::vector<Prediction>& preds, const Matrix& targets) {
    if (preds.empty()) {
        throw Error(ErrorCategory::validation, "no predictions to evaluate");
    }
    if (preds.size() != targets.rows) {
        throw Error(ErrorCategory::shape, "prediction/target counts differ");
    }
    for (const Prediction& p : preds) {
        if (p.task != Task::regression || p.mean.size() != targets.cols) {
            throw Error(ErrorCategory::shape, "prediction does not match target width");
        }
        if (p.variance.size() != targets.cols) {
            throw Error(ErrorCategory::validation,
                        "regression evaluation needs a variance per output dimension");
        }
    }
}

}  // namespace

void ZGrid::validate() const {
    if (levels.empty()) {
        throw Error(ErrorCategory::validation, "confidence grid is empty");
    }
    double prev = 0.0;
    for (double z : levels) {
        if (!(z > 0.0 && z < 1.0)) {
            throw Error(ErrorCategory::validation, "confidence levels must lie in (0,1)");
        }
        if (z <= prev) {
            throw Error(ErrorCategory::validation, "confidence levels must strictly increase");
        }
        prev = z;
    }
}

ZGrid ZGrid::default_grid() {
    return ZGrid{{0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.85, 0.95, 0.99, 0.995, 0.999}};
}

std::vector<std::pair<double, double>> gaussian_interval(const Prediction& pred, double z) {
    if (!(z > 0.0 && z < 1.0)) {
        throw Error(ErrorCategory::validation, "confidence level must lie in (0,1)");
    }
    if (pred.task != Task::regression || !pred.has_variance()) {
        throw Error(ErrorCategory::validation, "intervals need a Gaussian prediction");
    }
    const double q = standard_normal_quantile(0.5 * (1.0 + z));
    std::vector<std::pair<double, double>> out;
    out.reserve(pred.mean.size());
    for (std::size_t d = 0; d < pred.mean.size(); ++d) {
        const double half = q * std::sqrt(pred.variance[d]);
        out.emplace_back(pred.mean[d] - half, pred.mean[d] + half);
    }
    return out;
}

std::vector<double> calibration_curve(const std::vector<Prediction>& preds, const Matrix& targets,
                                      const ZGrid& grid) {
    grid.validate();
    check_regression_preds(preds, targets);

    std::vector<double> thresholds(grid.levels.size());
    for (std::size_t i = 0; i < grid.levels.size(); ++i) {
        thresholds[i] = standard_normal_quantile(0.5 * (1.0 + grid.levels[i]));
    }

    std::vector<std::size_t> hits(grid.levels.size(), 0);
    for (std::size_t n = 0; n < preds.size(); ++n) {
        for (std::size_t d = 0; d < targets.cols; ++d) {
            const double t =
                std::fabs(targets(n, d) - preds[n].mean[d]) / std::sqrt(preds[n].variance[d]);
            for (std::size_t i = 0; i < thresholds.size(); ++i) {
                if (t <= thresholds[i]) ++hits[i];
            }
        }
    }
    const double total = static_cast<double>(preds.size() * targets.cols);
    std::vector<double> coverage(grid.levels.size());
    for (std::size_t i = 0; i < coverage.size(); ++i) {
        coverage[i] = static_cast<double>(hits[i]) / total;
    }
    return coverage;
}

double deviation_area(const std::vector<double>& coverage, const ZGrid& grid) {
    grid.validate();
    if (coverage.size() != grid.levels.size()) {
        throw Error(ErrorCategory::shape, "coverage length does not match the grid");
    }
    std::vector<double> z{0.0}, c{0.0};
    z.insert(z.end(), grid.levels.begin(), grid.levels.end());
    c.insert(c.end(), coverage.begin(), coverage.end());
    z.push_back(1.0);
    c.push_back(1.0);

    double area = 0.0;
    for (std::size_t i = 0; i + 1 < z.size(); ++i) {
        const double fa = std::fabs(c[i] - z[i]);
        const double fb = std::fabs(c[i + 1] - z[i + 1]);
        area += 0.5 * (fa + fb) * (z[i + 1] - z[i]);
    }
    return area;
}

CalibrationReport evaluate_regression(const std::vector<Prediction>& preds, const Matrix& targets,
                                      const ZGrid& grid) {
    check_regression_preds(preds, targets);
    CalibrationReport r;
    r.task = Task::regression;
    r.sample_count = preds.size();
    r.z_levels = grid.levels;
    r.coverage = calibration_curve(preds, targets, grid);
    r.deviation_area = deviation_area(r.coverage, grid);

    double abs_sum = 0.0;
    double nll_sum = 0.0;
    for (std::size_t n = 0; n < preds.size(); ++n) {
        for (std::size_t d = 0; d < targets.cols; ++d) {
            const double resid = targets(n, d) - preds[n].mean[d];
            const double v = preds[n].variance[d];
            abs_sum += std::fabs(resid);
            nll_sum += 0.5 * std::log(v) + resid * resid / (2.0 * v);
        }
    }
    const auto n_samples = static_cast<double>(preds.size());
    r.mae = abs_sum / (n_samples * static_cast<double>(targets.cols));
    r.nll_no_const = nll_sum / n_samples;
    r.nll = r.nll_no_const + kHalfLog2Pi * static_cast<double>(targets.cols);
    return r;
}

CalibrationReport evaluate_classification(const std::vector<Prediction>& preds,
                                          const std::vector<std::size_t>& labels) {
    if (preds.empty()) {
        throw Error(ErrorCategory::validation, "no predictions to evaluate");
    }
    if (preds.size() != labels.size()) {
        throw Error(ErrorCategory::shape, "prediction/label counts differ");
    }
    const std::size_t K = preds[0].probs.size();
    for (const Prediction& p : preds) {
        if (p.task != Task::classification || p.probs.size() != K) {
            throw Error(ErrorCategory::shape, "inconsistent class probability vectors");
        }
    }

    std::vector<std::size_t> tp(K, 0), fp(K, 0), fn(K, 0);
    std::size_t correct = 0;
    double nll_sum = 0.0;
    double wrong_entropy_sum = 0.0;
    std::size_t wrong = 0;

    for (std::size_t n = 0; n < preds.size(); ++n) {
        const Vector& p = preds[n].probs;
        const std::size_t y = labels[n];
        if (y >= K) {
            throw Error(ErrorCategory::validation, "label exceeds class count");
        }
        std::size_t argmax = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (p[k] > p[argmax]) argmax = k;
        }
        if (argmax == y) {
            ++correct;
            ++tp[y];
        } else {
            ++wrong;
            ++fp[argmax];
            ++fn[y];
            double entropy = 0.0;
            for (double pk : p) {
                if (pk > 0.0) entropy -= pk * std::log(pk);
            }
            wrong_entropy_sum += entropy;
        }
        nll_sum += -std::log(std::max(p[y], kProbFloor));
    }

    CalibrationReport r;
    r.task = Task::classification;
    r.sample_count = preds.size();
    r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
    r.nll = nll_sum / static_cast<double>(preds.size());
    r.nll_no_const = r.nll;

    double f1_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double denom = static_cast<double>(2 * tp[k] + fp[k] + fn[k]);
        f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp[k]) / denom : 0.0;
    }
    r.macro_f1 = f1_sum / static_cast<double>(K);

    r.mefp_defined = wrong > 0;
    r.mefp = r.mefp_defined ? wrong_entropy_sum / static_cast<double>(wrong) : 0.0;
    return r;
}

std::vector<std::pair<std::string, std::string>> report_metric_rows(const CalibrationReport& r) {
    std::vector<std::pair<std::string, std::string>> rows;
    if (r.task == Task::regression) {
        rows.emplace_back("mae", fmt(r.mae));
        rows.emplace_back("nll", fmt(r.nll));
        rows.emplace_back("nll_no_const", fmt(r.nll_no_const));
        rows.emplace_back("deviation_area", fmt(r.deviation_area));
    } else {
        rows.emplace_back("accuracy", fmt(r.accuracy));
        rows.emplace_back("macro_f1", fmt(r.macro_f1));
        rows.emplace_back("nll", fmt(r.nll));
        rows.emplace_back("mefp", r.mefp_defined ? fmt(r.mefp) : std::string("undefined"));
    }
    return rows;
}

std::string curve_table(const CalibrationReport& r) {
    std::string out = "z,coverage\n";
    for (std::size_t i = 0; i < r.z_levels.size(); ++i) {
        out += fmt(r.z_levels[i]);
        out += ",";
        out += fmt(r.coverage[i]);
        out += "\n";
    }
    return out;
}

}  // namespace calibnet
