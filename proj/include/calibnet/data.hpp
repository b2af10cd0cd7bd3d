#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "calibnet/matrix.hpp"
#include "calibnet/prediction.hpp"
#include "calibnet/rng.hpp"

namespace calibnet {

// Rows are samples. Regression targets live in `targets`; classification
// labels in `labels`. When standardization has been applied, the statistics
// used are carried along so predictions can be reported in original units.
struct Dataset {
    Task task = Task::regression;
    Matrix inputs;                    // N x input_dims
    Matrix targets;                   // N x output_dims, regression only
    std::vector<std::size_t> labels;  // N, classification only
    std::size_t num_classes = 0;

    Vector input_mean, input_std;    // empty until standardized
    Vector target_mean, target_std;  // empty until standardized
    std::string provenance;

    std::size_t size() const { return inputs.rows; }
    void validate() const;
};

// Per-feature affine transform fitted on the training split only.
struct Standardizer {
    Vector input_mean, input_std;
    Vector target_mean, target_std;  // empty for classification
};

// 1-d regression with input-dependent noise: x ~ U[-4,4],
// y = sin(2x) + 0.3x + eps, eps ~ N(0, (0.05 + 0.2|x|)^2).
Dataset gen_heteroscedastic(std::size_t n, std::uint64_t seed);
double heteroscedastic_noise_std(double x);

// K unit-variance isotropic Gaussian clusters, centers equally spaced on a
// circle of radius `separation`; labels are cluster indices drawn uniformly.
Dataset gen_blobs(std::size_t n, std::size_t k, double separation, std::uint64_t seed);

struct CsvSchema {
    Task task = Task::regression;
    std::vector<std::string> feature_columns;
    std::vector<std::string> target_columns;  // one label column for classification
};

// Strict CSV reader: the header must match the schema columns exactly (no
// extras, none missing), every cell numeric, every row full width. Errors
// name the offending 1-based line.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

std::string dataset_to_csv(const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

// Seeded shuffle, then contiguous cuts. Fractions must sum to 1.
struct SplitFractions {
    double train = 0.96;
    double val = 0.02;
    double test = 0.02;
};
struct Splits {
    Dataset train, val, test;
};
Splits split(const Dataset& data, const SplitFractions& fractions, std::uint64_t seed);

// New dataset holding the given rows in the given order; provenance gains
// the tag suffix.
Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows,
                  const std::string& tag);

// Statistics come from `train` alone; zero-variance features keep std 1.
Standardizer fit_standardizer(const Dataset& train);
Dataset standardize(const Dataset& data, const Standardizer& s);

// Maps a prediction made in standardized target units back to original units
// (variance scales by std^2). No-op for classification.
Prediction destandardize_prediction(const Prediction& pred, const Standardizer& s);
Vector destandardize_target(const Vector& y, const Standardizer& s);

}  // namespace calibnet
