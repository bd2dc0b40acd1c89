#ifndef GRAPHNNK_METRICS_HPP
#define GRAPHNNK_METRICS_HPP

#include "errors.hpp"

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace graphnnk {

struct ClassificationMetrics {
    std::vector<std::vector<std::size_t>> confusion;   // [true][predicted]
    double accuracy = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double macro_f1 = 0.0;
};

/// Confusion matrix, accuracy, per-class precision/recall/F1 (0/0 taken as 0) and macro-F1.
inline ClassificationMetrics compute_metrics(const std::vector<std::size_t>& predictions,
                                             const std::vector<std::size_t>& labels, std::size_t num_classes) {
    if (predictions.size() != labels.size()) throw InvalidInput("compute_metrics: length mismatch");
    if (predictions.empty()) throw InvalidInput("compute_metrics: no samples");
    ClassificationMetrics m;
    m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes || predictions[i] >= num_classes)
            throw InvalidInput("compute_metrics: class index out of range");
        ++m.confusion[labels[i]][predictions[i]];
    }
    std::size_t correct = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        correct += m.confusion[c][c];
        std::size_t predicted_c = 0, actual_c = 0;
        for (std::size_t o = 0; o < num_classes; ++o) {
            predicted_c += m.confusion[o][c];
            actual_c += m.confusion[c][o];
        }
        const double tp = static_cast<double>(m.confusion[c][c]);
        const double p = predicted_c ? tp / static_cast<double>(predicted_c) : 0.0;
        const double r = actual_c ? tp / static_cast<double>(actual_c) : 0.0;
        m.precision.push_back(p);
        m.recall.push_back(r);
        m.f1.push_back(p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0);
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    for (double f : m.f1) m.macro_f1 += f;
    m.macro_f1 /= static_cast<double>(num_classes);
    return m;
}

inline nlohmann::json to_json(const ClassificationMetrics& m) {
    return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"precision", m.precision},
            {"recall", m.recall},     {"f1", m.f1},             {"confusion", m.confusion}};
}

}  // namespace graphnnk

#endif
