#include "cropforge/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "cropforge/error.hpp"

namespace cropforge {

using nlohmann::json;

ConfusionCounts confusion(const cv::Mat& pred, const cv::Mat& gt, int threshold) {
    if (pred.size() != gt.size())
        throw ValidationError("pred", "size " + std::to_string(pred.cols) + "x" + std::to_string(pred.rows) +
                                          " does not match ground truth " + std::to_string(gt.cols) + "x" +
                                          std::to_string(gt.rows));
    if (pred.type() != CV_8UC1 || gt.type() != CV_8UC1)
        throw ValidationError("pred", "expected single-channel 8-bit images");
    ConfusionCounts c;
    for (int y = 0; y < gt.rows; ++y) {
        const auto* p = pred.ptr<std::uint8_t>(y);
        const auto* g = gt.ptr<std::uint8_t>(y);
        for (int x = 0; x < gt.cols; ++x) {
            if (g[x] != 0 && g[x] != 255) throw ValidationError("gt", "ground truth mask is not binary");
            const bool positive = p[x] >= threshold;
            const bool truth = g[x] == 255;
            if (positive && truth)
                ++c.tp;
            else if (positive)
                ++c.fp;
            else if (truth)
                ++c.fn;
            else
                ++c.tn;
        }
    }
    return c;
}

IouResult iou(const ConfusionCounts& c) {
    const std::uint64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) return {1.0, true};
    return {static_cast<double>(c.tp) / static_cast<double>(denom), false};
}

double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) throw ValidationError("counts", "accuracy of zero pixels is undefined");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

void ScoreParams::validate() const {
    if (theta_p == theta_b) throw ValidationError("theta_p", "peak and baseline IoU must differ");
    if (!(theta_p > theta_b)) throw ValidationError("theta_p", "must exceed theta_b");
}

double performance_score(double theta_m, const ScoreParams& params) {
    params.validate();
    return 100.0 * (theta_m - params.theta_b) / (params.theta_p - params.theta_b);
}

CategoryScore category_report(const std::map<Category, double>& per_category_iou, double success_threshold) {
    if (per_category_iou.empty()) throw ValidationError("categories", "no per-category IoU given");
    CategoryScore out;
    for (const auto& [cat, value] : per_category_iou) {
        const char id = to_char(cat);
        if (id < 'a' || id > 'j') throw ValidationError("category", "outside the a..j vocabulary");
        const bool pass = value >= success_threshold;
        out.iou[cat] = value;
        out.passed[cat] = pass;
        out.score += pass ? 1 : 0;
    }
    return out;
}

CategoryScore category_report(const std::map<std::string, double>& per_category_iou, double success_threshold) {
    std::map<Category, double> typed;
    for (const auto& [id, value] : per_category_iou) typed[category_from_id(id)] = value;
    return category_report(typed, success_threshold);
}

std::vector<CurvePoint> score_curve(const std::vector<CurveRun>& runs, const ScoreParams& params) {
    params.validate();
    std::set<std::string> seen;
    std::vector<CurvePoint> out;
    out.reserve(runs.size());
    for (const CurveRun& r : runs) {
        if (!seen.insert(r.spec.model_id).second)
            throw ValidationError("model_id", "duplicate run '" + r.spec.model_id + "'");
        out.push_back({r.spec.model_id, relative_percentage(r.spec), r.iou, performance_score(r.iou, params)});
    }
    std::sort(out.begin(), out.end(), [](const CurvePoint& a, const CurvePoint& b) {
        return a.relative_pct != b.relative_pct ? a.relative_pct < b.relative_pct : a.model_id < b.model_id;
    });
    return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::ostringstream os;
    os << "relative_pct,iou,pm\n";
    os << std::setprecision(10);
    for (const CurvePoint& p : curve) os << p.relative_pct << ',' << p.iou << ',' << p.pm << '\n';
    return os.str();
}

json curve_json(const std::vector<CurvePoint>& curve) {
    json series = json::array();
    for (const CurvePoint& p : curve)
        series.push_back({{"model_id", p.model_id}, {"relative_pct", p.relative_pct}, {"iou", p.iou}, {"pm", p.pm}});
    return {{"x", "relative_pct"}, {"y", "pm"}, {"series", series}};
}

void Evaluator::add(const ConfusionCounts& counts, std::optional<Category> category) {
    total_ += counts;
    ++samples_;
    const IouResult r = iou(counts);
    iou_sum_ += r.value;
    degenerate_ += r.degenerate ? 1 : 0;
    if (category) per_category_[*category] += counts;
}

EvalReport Evaluator::report(bool per_category, std::optional<std::string> model_id) const {
    EvalReport r;
    r.model_id = std::move(model_id);
    r.sample_count = samples_;
    r.degenerate_count = degenerate_;
    r.counts = total_;
    r.params = params_;
    r.success_threshold = success_threshold_;
    if (samples_ > 0) {
        r.iou = iou(total_).value;
        r.mean_image_iou = iou_sum_ / static_cast<double>(samples_);
        r.accuracy = accuracy(total_);
        r.pm = performance_score(r.iou, params_);
    }
    r.category_counts = per_category_;
    if (per_category && !per_category_.empty()) {
        std::map<Category, double> values;
        for (const auto& [cat, counts] : per_category_) values[cat] = iou(counts).value;
        r.categories = category_report(values, success_threshold_);
    }
    return r;
}

json EvalReport::to_json() const {
    json j;
    j["model_id"] = model_id ? json(*model_id) : json(nullptr);
    j["sample_count"] = sample_count;
    j["degenerate_count"] = degenerate_count;
    j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}, {"tn", counts.tn}};
    j["iou"] = iou;
    j["mean_image_iou"] = mean_image_iou;
    j["accuracy"] = accuracy;
    j["pm"] = pm;
    j["theta_p"] = params.theta_p;
    j["theta_b"] = params.theta_b;
    j["success_threshold"] = success_threshold;
    json cats = json::object();
    for (const auto& [cat, c] : category_counts) {
        json item = {{"iou", cropforge::iou(c).value}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
        if (categories) item["passed"] = categories->passed.at(cat);
        cats[std::string(1, to_char(cat))] = item;
    }
    j["per_category"] = cats;
    j["model_score"] = categories ? json(categories->score) : json(nullptr);
    return j;
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "model            " << model_id.value_or("-") << '\n';
    os << "samples          " << sample_count << " (" << degenerate_count << " empty-vs-empty)\n";
    os << "IoU (micro)      " << 100.0 * iou << " %\n";
    os << "IoU (per image)  " << 100.0 * mean_image_iou << " %\n";
    os << "accuracy         " << 100.0 * accuracy << " %\n";
    os << "P_m              " << pm << " %\n";
    if (categories) {
        os << '\n' << std::left << std::setw(20) << "category" << std::right << std::setw(10) << "IoU %" << "  pass\n";
        for (const auto& [cat, value] : categories->iou) {
            os << to_char(cat) << "  " << std::left << std::setw(17) << category_name(cat) << std::right
               << std::setw(10) << 100.0 * value << "  " << (categories->passed.at(cat) ? "yes" : "no") << '\n';
        }
        os << "model score      " << categories->score << " / " << categories->iou.size() << '\n';
    }
    return os.str();
}

}  // namespace cropforge
