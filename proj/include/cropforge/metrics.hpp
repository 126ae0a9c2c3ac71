#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "cropforge/dataset.hpp"
#include "cropforge/field_model.hpp"

namespace cropforge {

// Pixel tallies for the binary crop-row / background problem.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
    bool operator==(const ConfusionCounts&) const = default;
};

inline constexpr int kDefaultBinarizeLevel = 128;

// `pred` is any 8-bit single-channel map, positive where >= threshold.
// `gt` must be a {0, 255} mask of the same size.
ConfusionCounts confusion(const cv::Mat& pred, const cv::Mat& gt, int threshold = kDefaultBinarizeLevel);

struct IouResult {
    double value = 0.0;
    bool degenerate = false;  // both masks empty; value is 1.0
};

// TP / (TP + FP + FN).
IouResult iou(const ConfusionCounts& c);
double accuracy(const ConfusionCounts& c);

// Peak and baseline IoU of the all-real reference model.
struct ScoreParams {
    double theta_p = 0.225;
    double theta_b = 0.160;

    void validate() const;
};

// 100 * (theta_m - theta_b) / (theta_p - theta_b). Negative below baseline.
double performance_score(double theta_m, const ScoreParams& params = {});

inline constexpr double kCategorySuccessIou = 0.16;

struct CategoryScore {
    std::map<Category, double> iou;
    std::map<Category, bool> passed;
    int score = 0;
};

// A category passes when its IoU >= success_threshold.
CategoryScore category_report(const std::map<Category, double>& per_category_iou,
                              double success_threshold = kCategorySuccessIou);
// Same, keyed by category id strings; unknown ids throw.
CategoryScore category_report(const std::map<std::string, double>& per_category_iou,
                              double success_threshold = kCategorySuccessIou);

struct CurveRun {
    MixSpec spec;
    double iou = 0.0;
};

struct CurvePoint {
    std::string model_id;
    double relative_pct = 0.0;
    double iou = 0.0;
    double pm = 0.0;
};

// Rows sorted by relative percentage (ties by model id).
std::vector<CurvePoint> score_curve(const std::vector<CurveRun>& runs, const ScoreParams& params = {});
std::string curve_csv(const std::vector<CurvePoint>& curve);
nlohmann::json curve_json(const std::vector<CurvePoint>& curve);

struct EvalReport {
    std::optional<std::string> model_id;
    std::size_t sample_count = 0;
    std::size_t degenerate_count = 0;
    ConfusionCounts counts;
    double iou = 0.0;             // micro average over summed counts
    double mean_image_iou = 0.0;  // mean of per-image IoU
    double accuracy = 0.0;
    double pm = 0.0;
    ScoreParams params;
    double success_threshold = kCategorySuccessIou;
    std::map<Category, ConfusionCounts> category_counts;
    std::optional<CategoryScore> categories;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

// Accumulates per-image counts into an EvalReport.
class Evaluator {
public:
    explicit Evaluator(ScoreParams params = {}, double success_threshold = kCategorySuccessIou)
        : params_(params), success_threshold_(success_threshold) {
        params_.validate();
    }

    void add(const ConfusionCounts& counts, std::optional<Category> category);
    EvalReport report(bool per_category, std::optional<std::string> model_id = std::nullopt) const;

private:
    ScoreParams params_;
    double success_threshold_;
    ConfusionCounts total_;
    std::size_t samples_ = 0;
    std::size_t degenerate_ = 0;
    double iou_sum_ = 0.0;
    std::map<Category, ConfusionCounts> per_category_;
};

}  // namespace cropforge
