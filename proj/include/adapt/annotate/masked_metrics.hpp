#pragma once

#include <adapt/annotate/labels.hpp>

#include <optional>
#include <vector>

namespace adapt::annotate {

struct ClassMetrics {
    std::uint8_t class_id = 0;
    std::string name;
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    std::size_t support = 0; ///< labelled pixels of this class
    /// Undefined (empty) when the class never appears in the labels.
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> iou;
};

/// Per-class scores counted over labelled pixels only; whatever the model
/// says about unpainted regions does not matter.
[[nodiscard]] inline std::vector<ClassMetrics> masked_metrics(const analytics::SegMask& prediction,
                                                              const SparseLabelImage& sparse) {
    const auto& lab = sparse.labels;
    if (prediction.width != lab.width || prediction.height != lab.height)
        throw ContractError("prediction and label sizes differ");
    std::size_t labelled = 0;
    for (auto c : lab.classes)
        labelled += c != analytics::kUnlabeled;
    if (labelled == 0)
        throw EmptySupportError("label image '" + sparse.image_id + "' has no labelled pixels");

    std::vector<ClassMetrics> out;
    for (const auto& e : sparse.colors.entries()) {
        ClassMetrics m;
        m.class_id = e.id;
        m.name = e.name;
        for (std::size_t i = 0; i < lab.classes.size(); ++i) {
            const auto l = lab.classes[i];
            if (l == analytics::kUnlabeled)
                continue;
            const bool truth = l == e.id, pred = prediction.classes[i] == e.id;
            m.true_positive += truth && pred;
            m.false_positive += !truth && pred;
            m.false_negative += truth && !pred;
            m.support += truth;
        }
        if (m.support > 0) {
            const double tp = static_cast<double>(m.true_positive);
            m.recall = tp / static_cast<double>(m.support);
            m.precision = m.true_positive + m.false_positive ? tp / static_cast<double>(m.true_positive + m.false_positive) : 0.0;
            m.iou = tp / static_cast<double>(m.true_positive + m.false_positive + m.false_negative);
        }
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace adapt::annotate
