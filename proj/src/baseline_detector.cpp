#include "cropforge/baseline_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include <opencv2/imgproc.hpp>

#include "cropforge/error.hpp"

namespace cropforge {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Clips the infinite line to the pixel-centre rectangle [0, W-1] x [0, H-1].
std::pair<cv::Point2d, cv::Point2d> clip_to_image(double rho, double theta_deg, cv::Size size) {
    const double c = std::cos(theta_deg * kDeg);
    const double s = std::sin(theta_deg * kDeg);
    const double xmax = size.width - 1.0;
    const double ymax = size.height - 1.0;
    std::vector<cv::Point2d> hits;
    auto push = [&](double x, double y) {
        constexpr double kEps = 1e-9;
        if (x < -kEps || y < -kEps || x > xmax + kEps || y > ymax + kEps) return;
        for (const auto& h : hits)
            if (std::abs(h.x - x) < 1e-6 && std::abs(h.y - y) < 1e-6) return;
        hits.emplace_back(x, y);
    };
    if (std::abs(c) > 1e-12) {
        push((rho - 0.0 * s) / c, 0.0);
        push((rho - ymax * s) / c, ymax);
    }
    if (std::abs(s) > 1e-12) {
        push(0.0, (rho - 0.0 * c) / s);
        push(xmax, (rho - xmax * c) / s);
    }
    if (hits.size() < 2) return {hits.empty() ? cv::Point2d() : hits[0], hits.empty() ? cv::Point2d() : hits[0]};
    // farthest pair
    std::pair<cv::Point2d, cv::Point2d> best{hits[0], hits[1]};
    double best_d = -1.0;
    for (std::size_t i = 0; i < hits.size(); ++i)
        for (std::size_t j = i + 1; j < hits.size(); ++j) {
            const double d = cv::norm(hits[i] - hits[j]);
            if (d > best_d) {
                best_d = d;
                best = {hits[i], hits[j]};
            }
        }
    if (best.first.y > best.second.y || (best.first.y == best.second.y && best.first.x > best.second.x))
        std::swap(best.first, best.second);
    return best;
}

}  // namespace

double DetectedLine::x_at(double y) const {
    const double c = std::cos(theta_deg * kDeg);
    if (std::abs(c) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
    return (rho - y * std::sin(theta_deg * kDeg)) / c;
}

nlohmann::json to_json(const std::vector<DetectedLine>& lines) {
    nlohmann::json out = nlohmann::json::array();
    for (const DetectedLine& l : lines)
        out.push_back({{"rho", l.rho},
                       {"theta_deg", l.theta_deg},
                       {"support", l.support},
                       {"endpoints", {{l.p0.x, l.p0.y}, {l.p1.x, l.p1.y}}}});
    return out;
}

cv::Mat exg(const cv::Mat& bgr) {
    if (bgr.channels() != 3 || bgr.depth() != CV_8U)
        throw ValidationError("image", "excess green needs an 8-bit 3-channel image, got " +
                                           std::to_string(bgr.channels()) + " channel(s)");
    cv::Mat out(bgr.size(), CV_32FC1);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* in = bgr.ptr<cv::Vec3b>(y);
        auto* o = out.ptr<float>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            const int b = in[x][0];
            const int g = in[x][1];
            const int r = in[x][2];
            o[x] = static_cast<float>((2 * g - r - b) / 255.0);
        }
    }
    return out;
}

double otsu_level(const cv::Mat& exg_map, int bins) {
    if (exg_map.type() != CV_32FC1) throw ValidationError("exg", "expected a CV_32FC1 map");
    if (bins < 2) throw ValidationError("bins", "need at least 2 histogram bins");
    constexpr double lo = -2.0;
    constexpr double hi = 2.0;
    const double width = (hi - lo) / bins;
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    for (int y = 0; y < exg_map.rows; ++y) {
        const auto* row = exg_map.ptr<float>(y);
        for (int x = 0; x < exg_map.cols; ++x) {
            const int b = std::clamp(static_cast<int>((row[x] - lo) / width), 0, bins - 1);
            hist[static_cast<std::size_t>(b)] += 1.0;
        }
    }
    double total = 0.0;
    double sum_all = 0.0;
    for (int i = 0; i < bins; ++i) {
        total += hist[i];
        sum_all += i * hist[i];
    }
    double w0 = 0.0;
    double sum0 = 0.0;
    double best = -1.0;
    int best_i = 0;
    for (int i = 0; i < bins - 1; ++i) {
        w0 += hist[i];
        sum0 += i * hist[i];
        const double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_i = i;
        }
    }
    // foreground is strictly above the upper edge of the last background bin
    return lo + (best_i + 1) * width;
}

cv::Mat binarize(const cv::Mat& exg_map, const BinarizeParams& params) {
    const double level = std::max(otsu_level(exg_map, params.histogram_bins), params.min_level);
    cv::Mat out(exg_map.size(), CV_8UC1, cv::Scalar(0));
    for (int y = 0; y < exg_map.rows; ++y) {
        const auto* in = exg_map.ptr<float>(y);
        auto* o = out.ptr<std::uint8_t>(y);
        for (int x = 0; x < exg_map.cols; ++x) o[x] = in[x] > level ? 255 : 0;
    }
    return out;
}

cv::Mat skeletonize(const cv::Mat& binary) {
    if (binary.type() != CV_8UC1) throw ValidationError("binary", "expected CV_8UC1");
    const int H = binary.rows;
    const int W = binary.cols;
    // padded 0/1 copy so neighbour reads never leave the buffer
    cv::Mat img(H + 2, W + 2, CV_8UC1, cv::Scalar(0));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) img.at<std::uint8_t>(y + 1, x + 1) = binary.at<std::uint8_t>(y, x) ? 1 : 0;

    std::vector<cv::Point> doomed;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            doomed.clear();
            for (int y = 1; y <= H; ++y) {
                for (int x = 1; x <= W; ++x) {
                    if (!img.at<std::uint8_t>(y, x)) continue;
                    // P2..P9 clockwise from north
                    const int p2 = img.at<std::uint8_t>(y - 1, x);
                    const int p3 = img.at<std::uint8_t>(y - 1, x + 1);
                    const int p4 = img.at<std::uint8_t>(y, x + 1);
                    const int p5 = img.at<std::uint8_t>(y + 1, x + 1);
                    const int p6 = img.at<std::uint8_t>(y + 1, x);
                    const int p7 = img.at<std::uint8_t>(y + 1, x - 1);
                    const int p8 = img.at<std::uint8_t>(y, x - 1);
                    const int p9 = img.at<std::uint8_t>(y - 1, x - 1);
                    const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    if (b < 2 || b > 6) continue;
                    const int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
                    int a = 0;
                    for (int k = 0; k < 8; ++k) a += (seq[k] == 0 && seq[k + 1] == 1) ? 1 : 0;
                    if (a != 1) continue;
                    if (pass == 0) {
                        if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
                    } else {
                        if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
                    }
                    doomed.emplace_back(x, y);
                }
            }
            for (const cv::Point& p : doomed) img.at<std::uint8_t>(p) = 0;
            changed = changed || !doomed.empty();
        }
    }
    cv::Mat out(H, W, CV_8UC1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) out.at<std::uint8_t>(y, x) = img.at<std::uint8_t>(y + 1, x + 1) ? 255 : 0;
    return out;
}

std::vector<DetectedLine> hough_lines(const cv::Mat& skeleton, const HoughParams& params) {
    if (skeleton.type() != CV_8UC1) throw ValidationError("skeleton", "expected CV_8UC1");
    if (params.angle_bins < 1) throw ValidationError("angle_bins", "must be >= 1");
    if (!(params.rho_resolution_px > 0.0)) throw ValidationError("rho_resolution_px", "must be > 0");
    if (params.max_lines < 0) throw ValidationError("max_lines", "must be >= 0");

    const int n_theta = params.angle_bins;
    const double diag = std::hypot(skeleton.cols, skeleton.rows);
    const int rho_half = static_cast<int>(std::ceil(diag / params.rho_resolution_px));
    const int n_rho = 2 * rho_half + 1;
    std::vector<double> cos_t(n_theta);
    std::vector<double> sin_t(n_theta);
    for (int t = 0; t < n_theta; ++t) {
        const double theta = 180.0 * t / n_theta * kDeg;
        cos_t[t] = std::cos(theta);
        sin_t[t] = std::sin(theta);
    }
    std::vector<int> acc(static_cast<std::size_t>(n_theta) * n_rho, 0);
    int max_votes = 0;
    for (int y = 0; y < skeleton.rows; ++y) {
        const auto* row = skeleton.ptr<std::uint8_t>(y);
        for (int x = 0; x < skeleton.cols; ++x) {
            if (!row[x]) continue;
            for (int t = 0; t < n_theta; ++t) {
                const double rho = x * cos_t[t] + y * sin_t[t];
                const int r = static_cast<int>(std::lround(rho / params.rho_resolution_px)) + rho_half;
                int& cell = acc[static_cast<std::size_t>(t) * n_rho + r];
                max_votes = std::max(max_votes, ++cell);
            }
        }
    }
    if (max_votes == 0 || params.max_lines == 0) return {};
    const int threshold =
        std::max({1, params.min_votes, static_cast<int>(std::ceil(params.vote_fraction * max_votes))});

    const bool horizontal_filter = params.min_angle_from_horizontal_deg > 0.0;
    std::vector<char> allowed(static_cast<std::size_t>(n_theta), 1);
    for (int t = 0; t < n_theta; ++t) {
        const double theta = 180.0 * t / n_theta;
        if (horizontal_filter && std::abs(theta - 90.0) < params.min_angle_from_horizontal_deg)
            allowed[static_cast<std::size_t>(t)] = 0;
    }

    auto near = [&](double rho, double theta, const DetectedLine& b) {
        double dt = std::abs(theta - b.theta_deg);
        double dr = std::abs(rho - b.rho);
        if (dt > 90.0) {
            dt = 180.0 - dt;
            dr = std::abs(rho + b.rho);
        }
        return dt <= params.nms_theta_deg && dr <= params.nms_rho_px;
    };

    std::vector<cv::Point> points;
    if (params.support_removal_px > 0.0) cv::findNonZero(skeleton, points);
    std::vector<char> alive(points.size(), 1);

    // Greedy peak picking: best remaining cell by (support desc, rho asc,
    // theta asc) outside every accepted line's NMS window. With support
    // removal, pixels explaining an accepted line stop voting first.
    std::vector<DetectedLine> lines;
    while (static_cast<int>(lines.size()) < params.max_lines) {
        int best_v = threshold - 1;
        int best_t = -1;
        int best_r = -1;
        for (int t = 0; t < n_theta; ++t) {
            if (!allowed[static_cast<std::size_t>(t)]) continue;
            const double theta = 180.0 * t / n_theta;
            const int* row = &acc[static_cast<std::size_t>(t) * n_rho];
            for (int r = 0; r < n_rho; ++r) {
                const int v = row[r];
                // rows scan rho ascending and theta ascending, so strict > keeps the lexicographic winner
                if (v < threshold) continue;
                if (v > best_v || (v == best_v && best_t >= 0 && (r < best_r || (r == best_r && t < best_t)))) {
                    const double rho = (r - rho_half) * params.rho_resolution_px;
                    if (std::any_of(lines.begin(), lines.end(),
                                    [&](const DetectedLine& l) { return near(rho, theta, l); }))
                        continue;
                    best_v = v;
                    best_t = t;
                    best_r = r;
                }
            }
        }
        if (best_t < 0) break;
        DetectedLine line;
        line.rho = (best_r - rho_half) * params.rho_resolution_px;
        line.theta_deg = 180.0 * best_t / n_theta;
        line.support = best_v;
        std::tie(line.p0, line.p1) = clip_to_image(line.rho, line.theta_deg, skeleton.size());
        lines.push_back(line);

        if (params.support_removal_px > 0.0) {
            const double c = cos_t[static_cast<std::size_t>(best_t)];
            const double s = sin_t[static_cast<std::size_t>(best_t)];
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (!alive[i]) continue;
                const cv::Point& p = points[i];
                if (std::abs(p.x * c + p.y * s - line.rho) > params.support_removal_px) continue;
                alive[i] = 0;
                for (int t = 0; t < n_theta; ++t) {
                    const double rho = p.x * cos_t[t] + p.y * sin_t[t];
                    const int r = static_cast<int>(std::lround(rho / params.rho_resolution_px)) + rho_half;
                    --acc[static_cast<std::size_t>(t) * n_rho + r];
                }
            }
        }
    }
    return lines;
}

cv::Mat rasterize_lines(const std::vector<DetectedLine>& lines, cv::Size size, double line_width_px) {
    cv::Mat mask(size, CV_8UC1, cv::Scalar(0));
    const double half = 0.5 * line_width_px;
    for (const DetectedLine& l : lines) {
        const double c = std::cos(l.theta_deg * kDeg);
        const double s = std::sin(l.theta_deg * kDeg);
        for (int y = 0; y < size.height; ++y) {
            auto* row = mask.ptr<std::uint8_t>(y);
            for (int x = 0; x < size.width; ++x)
                if (std::abs(x * c + y * s - l.rho) <= half) row[x] = 255;
        }
    }
    return mask;
}

bool refine_line(const cv::Mat& binary, DetectedLine& line, double band_px) {
    if (binary.type() != CV_8UC1) throw ValidationError("binary", "expected CV_8UC1");
    const double c = std::cos(line.theta_deg * kDeg);
    const double s = std::sin(line.theta_deg * kDeg);
    // Steep lines are fitted as x(y) over image rows, shallow ones as y(x)
    // over columns; u is the scan coordinate, v the fitted one.
    const bool by_rows = std::abs(c) >= std::abs(s);
    const double kv = by_rows ? c : s;  // coefficient of v in the line equation
    const double ku = by_rows ? s : c;
    const int n_scan = by_rows ? binary.rows : binary.cols;
    const int n_along = by_rows ? binary.cols : binary.rows;
    const double half = band_px / std::abs(kv);
    double n = 0.0, su = 0.0, sv = 0.0, suu = 0.0, suv = 0.0;
    for (int u = 0; u < n_scan; ++u) {
        const double centre = (line.rho - u * ku) / kv;
        const int lo = std::max(0, static_cast<int>(std::ceil(centre - half)));
        const int hi = std::min(n_along - 1, static_cast<int>(std::floor(centre + half)));
        int count = 0;
        double sum = 0.0;
        for (int v = lo; v <= hi; ++v) {
            const bool on = by_rows ? binary.at<std::uint8_t>(u, v) != 0 : binary.at<std::uint8_t>(v, u) != 0;
            if (!on) continue;
            ++count;
            sum += v;
        }
        if (count < 2) continue;
        const double m = sum / count;
        n += 1.0;
        su += u;
        sv += m;
        suu += static_cast<double>(u) * u;
        suv += m * u;
    }
    if (n < 20.0) return false;
    const double denom = n * suu - su * su;
    if (std::abs(denom) < 1e-9) return false;
    // v = a + b u  <=>  v - b u = a, normalised
    const double b = (n * suv - su * sv) / denom;
    const double a = (sv - b * su) / n;
    const double k = std::hypot(1.0, b);
    const double ncv = 1.0 / k;  // normal component along v
    const double ncu = -b / k;   // along u
    double rho = a / k;
    const double nx = by_rows ? ncv : ncu;
    const double ny = by_rows ? ncu : ncv;
    double deg = std::atan2(ny, nx) / kDeg;
    while (deg < 0.0) {
        deg += 180.0;
        rho = -rho;
    }
    while (deg >= 180.0) {
        deg -= 180.0;
        rho = -rho;
    }
    line.theta_deg = deg;
    line.rho = rho;
    return true;
}

Detection detect_rows(const cv::Mat& bgr, const DetectorParams& params) {
    const cv::Mat vegetation = binarize(exg(bgr), params.binarize);
    const cv::Mat skeleton = skeletonize(vegetation);
    HoughParams hough = params.hough;
    hough.min_angle_from_horizontal_deg = std::max(hough.min_angle_from_horizontal_deg,
                                                   params.min_angle_from_horizontal_deg);
    std::vector<DetectedLine> raw = hough_lines(skeleton, hough);

    Detection d;
    for (DetectedLine line : raw) {
        for (int i = 0; i < params.refine_iterations; ++i)
            if (!refine_line(vegetation, line, params.refine_band_px)) break;
        // refinement can pull two peaks onto one row, or tilt one towards horizontal
        if (std::abs(line.theta_deg - 90.0) < params.min_angle_from_horizontal_deg) continue;
        const bool duplicate = std::any_of(d.lines.begin(), d.lines.end(), [&](const DetectedLine& o) {
            double dt = std::abs(o.theta_deg - line.theta_deg);
            double dr = std::abs(o.rho - line.rho);
            if (dt > 90.0) {
                dt = 180.0 - dt;
                dr = std::abs(o.rho + line.rho);
            }
            return dt <= hough.nms_theta_deg && dr <= hough.nms_rho_px;
        });
        if (duplicate) continue;
        std::tie(line.p0, line.p1) = clip_to_image(line.rho, line.theta_deg, bgr.size());
        d.lines.push_back(line);
    }
    d.mask = rasterize_lines(d.lines, bgr.size(), params.line_width_px);
    return d;
}

}  // namespace cropforge
