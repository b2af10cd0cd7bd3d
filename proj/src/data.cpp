#include "calibnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "calibnet/error.hpp"

namespace calibnet {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
    if (cell.empty()) {
        throw Error(ErrorCategory::data, "missing cell at line " + std::to_string(line_no));
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCategory::data, "non-numeric cell '" + cell + "' at line " +
                                             std::to_string(line_no));
    }
    return value;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    for (std::string& cell : cells) {
        const auto a = cell.find_first_not_of(" \t");
        const auto b = cell.find_last_not_of(" \t");
        cell = a == std::string::npos ? std::string() : cell.substr(a, b - a + 1);
    }
    return cells;
}

}  // namespace

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows,
                  const std::string& tag) {
    Dataset out;
    out.task = data.task;
    out.num_classes = data.num_classes;
    out.input_mean = data.input_mean;
    out.input_std = data.input_std;
    out.target_mean = data.target_mean;
    out.target_std = data.target_std;
    out.provenance = data.provenance + "/" + tag;

    out.inputs = Matrix(rows.size(), data.inputs.cols);
    if (data.task == Task::regression) {
        out.targets = Matrix(rows.size(), data.targets.cols);
    } else {
        out.labels.resize(rows.size());
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        for (std::size_t j = 0; j < data.inputs.cols; ++j) out.inputs(i, j) = data.inputs(r, j);
        if (data.task == Task::regression) {
            for (std::size_t j = 0; j < data.targets.cols; ++j)
                out.targets(i, j) = data.targets(r, j);
        } else {
            out.labels[i] = data.labels[r];
        }
    }
    return out;
}

void Dataset::validate() const {
    if (task == Task::regression) {
        if (targets.rows != inputs.rows) {
            throw Error(ErrorCategory::shape, "dataset input/target row counts differ");
        }
    } else {
        if (labels.size() != inputs.rows) {
            throw Error(ErrorCategory::shape, "dataset input/label counts differ");
        }
        for (std::size_t y : labels) {
            if (y >= num_classes) {
                throw Error(ErrorCategory::validation, "label exceeds declared class count");
            }
        }
    }
}

double heteroscedastic_noise_std(double x) { return 0.05 + 0.2 * std::fabs(x); }

Dataset gen_heteroscedastic(std::size_t n, std::uint64_t seed) {
    Dataset data;
    data.task = Task::regression;
    data.inputs = Matrix(n, 1);
    data.targets = Matrix(n, 1);
    data.provenance = "heteroscedastic(n=" + std::to_string(n) + ",seed=" + std::to_string(seed) + ")";

    RngStream rng(seed, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = -4.0 + 8.0 * rng.next_uniform();
        const double eps = rng.next_normal() * heteroscedastic_noise_std(x);
        data.inputs(i, 0) = x;
        data.targets(i, 0) = std::sin(2.0 * x) + 0.3 * x + eps;
    }
    return data;
}

Dataset gen_blobs(std::size_t n, std::size_t k, double separation, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCategory::validation, "blobs need at least 2 clusters");
    if (!(separation >= 0.0)) {
        throw Error(ErrorCategory::validation, "separation must be non-negative");
    }
    Dataset data;
    data.task = Task::classification;
    data.num_classes = k;
    data.inputs = Matrix(n, 2);
    data.labels.resize(n);
    data.provenance = "blobs(n=" + std::to_string(n) + ",k=" + std::to_string(k) +
                      ",separation=" + fmt_double(separation) + ",seed=" + std::to_string(seed) + ")";

    const double two_pi = 2.0 * std::acos(-1.0);
    RngStream rng(seed, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = static_cast<std::size_t>(rng.next_below(k));
        const double angle = two_pi * static_cast<double>(label) / static_cast<double>(k);
        data.labels[i] = label;
        data.inputs(i, 0) = separation * std::cos(angle) + rng.next_normal();
        data.inputs(i, 1) = separation * std::sin(angle) + rng.next_normal();
    }
    return data;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.feature_columns.empty()) {
        throw Error(ErrorCategory::config, "schema needs at least one feature column");
    }
    if (schema.target_columns.empty()) {
        throw Error(ErrorCategory::config, "schema needs at least one target column");
    }
    if (schema.task == Task::classification && schema.target_columns.size() != 1) {
        throw Error(ErrorCategory::config, "classification takes a single label column");
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCategory::data, "empty file: " + path);
    }
    const std::vector<std::string> header = split_line(line);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!index.emplace(header[j], j).second) {
            throw Error(ErrorCategory::data, "duplicate column '" + header[j] + "' at line 1");
        }
    }
    auto column_at = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) {
            throw Error(ErrorCategory::data, "column '" + name + "' not found at line 1");
        }
        return it->second;
    };
    std::vector<std::size_t> feat_cols, targ_cols;
    for (const auto& name : schema.feature_columns) feat_cols.push_back(column_at(name));
    for (const auto& name : schema.target_columns) targ_cols.push_back(column_at(name));
    if (feat_cols.size() + targ_cols.size() != header.size()) {
        for (const auto& [name, j] : index) {
            (void)j;
            const bool known =
                std::find(schema.feature_columns.begin(), schema.feature_columns.end(), name) !=
                    schema.feature_columns.end() ||
                std::find(schema.target_columns.begin(), schema.target_columns.end(), name) !=
                    schema.target_columns.end();
            if (!known) {
                throw Error(ErrorCategory::data, "unknown column '" + name + "' at line 1");
            }
        }
    }

    std::vector<Vector> feat_rows;
    std::vector<Vector> targ_rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorCategory::data,
                        "expected " + std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()) + " at line " + std::to_string(line_no));
        }
        Vector f(feat_cols.size()), t(targ_cols.size());
        for (std::size_t j = 0; j < feat_cols.size(); ++j) f[j] = parse_cell(cells[feat_cols[j]], line_no);
        for (std::size_t j = 0; j < targ_cols.size(); ++j) t[j] = parse_cell(cells[targ_cols[j]], line_no);
        if (schema.task == Task::classification) {
            const double v = t[0];
            if (v < 0.0 || v != std::floor(v)) {
                throw Error(ErrorCategory::data,
                            "label must be a non-negative integer at line " + std::to_string(line_no));
            }
        }
        feat_rows.push_back(std::move(f));
        targ_rows.push_back(std::move(t));
    }

    Dataset data;
    data.task = schema.task;
    data.provenance = "csv(" + path + ")";
    data.inputs = Matrix(feat_rows.size(), feat_cols.size());
    for (std::size_t i = 0; i < feat_rows.size(); ++i) {
        for (std::size_t j = 0; j < feat_cols.size(); ++j) data.inputs(i, j) = feat_rows[i][j];
    }
    if (schema.task == Task::regression) {
        data.targets = Matrix(targ_rows.size(), targ_cols.size());
        for (std::size_t i = 0; i < targ_rows.size(); ++i) {
            for (std::size_t j = 0; j < targ_cols.size(); ++j) data.targets(i, j) = targ_rows[i][j];
        }
    } else {
        data.labels.reserve(targ_rows.size());
        std::size_t max_label = 0;
        for (const Vector& t : targ_rows) {
            const auto y = static_cast<std::size_t>(t[0]);
            max_label = std::max(max_label, y);
            data.labels.push_back(y);
        }
        data.num_classes = data.labels.empty() ? 0 : max_label + 1;
    }
    data.validate();
    return data;
}

std::string dataset_to_csv(const Dataset& data) {
    std::string out;
    for (std::size_t j = 0; j < data.inputs.cols; ++j) {
        if (j) out += ",";
        out += "x" + std::to_string(j);
    }
    if (data.task == Task::regression) {
        for (std::size_t j = 0; j < data.targets.cols; ++j) out += ",y" + std::to_string(j);
    } else {
        out += ",label";
    }
    out += "\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.inputs.cols; ++j) {
            if (j) out += ",";
            out += fmt_double(data.inputs(i, j));
        }
        if (data.task == Task::regression) {
            for (std::size_t j = 0; j < data.targets.cols; ++j) {
                out += "," + fmt_double(data.targets(i, j));
            }
        } else {
            out += "," + std::to_string(data.labels[i]);
        }
        out += "\n";
    }
    return out;
}

void save_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCategory::io, "cannot open " + path + " for writing");
    out << dataset_to_csv(data);
    if (!out) throw Error(ErrorCategory::io, "write failed: " + path);
}

Splits split(const Dataset& data, const SplitFractions& fractions, std::uint64_t seed) {
    data.validate();
    const double f[3] = {fractions.train, fractions.val, fractions.test};
    for (double v : f) {
        if (!(v >= 0.0)) throw Error(ErrorCategory::validation, "split fractions must be >= 0");
    }
    const double sum = f[0] + f[1] + f[2];
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCategory::validation,
                    "split fractions must sum to 1, got " + fmt_double(sum));
    }

    RngStream rng(seed, 1);
    const std::vector<std::size_t> order = shuffled_indices(data.size(), rng);
    const auto n = static_cast<double>(data.size());
    std::size_t n_train = static_cast<std::size_t>(std::llround(f[0] * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(f[1] * n));
    n_train = std::min(n_train, data.size());
    n_val = std::min(n_val, data.size() - n_train);

    const std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
    const std::vector<std::size_t> val_rows(order.begin() + n_train,
                                            order.begin() + n_train + n_val);
    const std::vector<std::size_t> test_rows(order.begin() + n_train + n_val, order.end());

    Splits out;
    out.train = take_rows(data, train_rows, "train");
    out.val = take_rows(data, val_rows, "val");
    out.test = take_rows(data, test_rows, "test");
    return out;
}

namespace {

void column_stats(const Matrix& m, Vector& mean, Vector& std_out) {
    mean.assign(m.cols, 0.0);
    std_out.assign(m.cols, 1.0);
    if (m.rows == 0) return;
    for (std::size_t j = 0; j < m.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) s += m(i, j);
        mean[j] = s / static_cast<double>(m.rows);
        double sq = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double d = m(i, j) - mean[j];
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(m.rows));
        std_out[j] = sd > 1e-12 ? sd : 1.0;
    }
}

}  // namespace

Standardizer fit_standardizer(const Dataset& train) {
    train.validate();
    if (train.size() == 0) {
        throw Error(ErrorCategory::validation, "cannot fit standardizer on an empty split");
    }
    Standardizer s;
    column_stats(train.inputs, s.input_mean, s.input_std);
    if (train.task == Task::regression) {
        column_stats(train.targets, s.target_mean, s.target_std);
    }
    return s;
}

Dataset standardize(const Dataset& data, const Standardizer& s) {
    if (s.input_mean.size() != data.inputs.cols) {
        throw Error(ErrorCategory::shape, "standardizer does not match input width");
    }
    Dataset out = data;
    for (std::size_t i = 0; i < out.inputs.rows; ++i) {
        for (std::size_t j = 0; j < out.inputs.cols; ++j) {
            out.inputs(i, j) = (out.inputs(i, j) - s.input_mean[j]) / s.input_std[j];
        }
    }
    if (data.task == Task::regression) {
        if (s.target_mean.size() != data.targets.cols) {
            throw Error(ErrorCategory::shape, "standardizer does not match target width");
        }
        for (std::size_t i = 0; i < out.targets.rows; ++i) {
            for (std::size_t j = 0; j < out.targets.cols; ++j) {
                out.targets(i, j) = (out.targets(i, j) - s.target_mean[j]) / s.target_std[j];
            }
        }
        out.target_mean = s.target_mean;
        out.target_std = s.target_std;
    }
    out.input_mean = s.input_mean;
    out.input_std = s.input_std;
    return out;
}

Prediction destandardize_prediction(const Prediction& pred, const Standardizer& s) {
    if (pred.task == Task::classification) return pred;
    Prediction out = pred;
    for (std::size_t d = 0; d < out.mean.size(); ++d) {
        out.mean[d] = out.mean[d] * s.target_std[d] + s.target_mean[d];
    }
    for (std::size_t d = 0; d < out.variance.size(); ++d) {
        out.variance[d] *= s.target_std[d] * s.target_std[d];
    }
    return out;
}

Vector destandardize_target(const Vector& y, const Standardizer& s) {
    Vector out = y;
    for (std::size_t d = 0; d < out.size(); ++d) {
        out[d] = out[d] * s.target_std[d] + s.target_mean[d];
    }
    return out;
}

}  // namespace calibnet
