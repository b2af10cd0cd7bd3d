#pragma once

#include "calibnet/matrix.hpp"

namespace calibnet {

enum class Task { regression, classification };

// Predictive distribution for one input. Regression: independent Gaussian
// per output dimension (point-head models leave variance empty).
// Classification: probability vector over classes.
struct Prediction {
    Task task = Task::regression;
    Vector mean;
    Vector variance;
    Vector probs;

    bool has_variance() const { return !variance.empty(); }
};

}  // namespace calibnet
