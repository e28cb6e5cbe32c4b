#include "semstyle/eval_report.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace semstyle {

namespace {
const char* kComponentNames[4] = {"dir", "patch", "content", "tv"};

double component(const LossRecord& r, int k) {
    switch (k) {
        case 0: return r.l_dir;
        case 1: return r.l_patch;
        case 2: return r.l_content;
        default: return r.l_tv;
    }
}

const cv::Scalar kPalette[8] = {
    {180, 119, 31},  {14, 127, 255},  {44, 160, 44},   {40, 39, 214},
    {189, 103, 148}, {75, 86, 140},   {194, 119, 227}, {127, 127, 127},
};
}  // namespace

ComparisonReport compare_runs(const std::vector<LossRecord>& baseline_log,
                              const std::vector<LossRecord>& optimized_log) {
    if (baseline_log.empty() || optimized_log.empty())
        throw std::invalid_argument("compare_runs: loss logs must be nonempty");
    ComparisonReport rep;
    rep.baseline_final = baseline_log.back();
    rep.optimized_final = optimized_log.back();
    rep.dominance = true;
    for (int k = 0; k < 4; ++k)
        if (!(component(rep.optimized_final, k) <= component(rep.baseline_final, k))) rep.dominance = false;
    return rep;
}

void write_comparison_json(const std::string& path, const ComparisonReport& rep) {
    nlohmann::json j;
    for (int k = 0; k < 4; ++k) {
        j["baseline"][kComponentNames[k]] = component(rep.baseline_final, k);
        j["optimized"][kComponentNames[k]] = component(rep.optimized_final, k);
    }
    j["baseline"]["total"] = rep.baseline_final.l_total;
    j["optimized"]["total"] = rep.optimized_final.l_total;
    j["dominance"] = rep.dominance;
    if (!rep.line_chart_path.empty()) j["line_chart"] = rep.line_chart_path;
    if (!rep.bar_chart_path.empty()) j["bar_chart"] = rep.bar_chart_path;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write comparison '" + path + "'");
    out << j.dump(2) << '\n';
}

ComparisonReport read_comparison_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open comparison '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    ComparisonReport rep;
    rep.baseline_final.l_dir = j.at("baseline").at("dir").get<double>();
    rep.baseline_final.l_patch = j.at("baseline").at("patch").get<double>();
    rep.baseline_final.l_content = j.at("baseline").at("content").get<double>();
    rep.baseline_final.l_tv = j.at("baseline").at("tv").get<double>();
    rep.baseline_final.l_total = j.at("baseline").value("total", 0.0);
    rep.optimized_final.l_dir = j.at("optimized").at("dir").get<double>();
    rep.optimized_final.l_patch = j.at("optimized").at("patch").get<double>();
    rep.optimized_final.l_content = j.at("optimized").at("content").get<double>();
    rep.optimized_final.l_tv = j.at("optimized").at("tv").get<double>();
    rep.optimized_final.l_total = j.at("optimized").value("total", 0.0);
    rep.dominance = j.at("dominance").get<bool>();
    rep.line_chart_path = j.value("line_chart", "");
    rep.bar_chart_path = j.value("bar_chart", "");
    return rep;
}

std::vector<ChartSeries> chart_series_from_logs(
    const std::vector<std::pair<std::string, std::vector<LossRecord>>>& logs) {
    std::vector<ChartSeries> out;
    for (const auto& [run, log] : logs) {
        for (int k = 0; k < 4; ++k) {
            ChartSeries s;
            s.name = run + ":" + kComponentNames[k];
            s.values.reserve(log.size());
            for (const LossRecord& r : log) s.values.push_back(component(r, k));
            out.push_back(std::move(s));
        }
    }
    return out;
}

void render_loss_line_chart(const std::vector<std::pair<std::string, std::vector<LossRecord>>>& logs,
                            const std::string& path) {
    if (logs.empty()) throw std::invalid_argument("render_loss_line_chart: no logs");
    for (const auto& [name, log] : logs)
        if (log.empty()) throw std::invalid_argument("render_loss_line_chart: log '" + name + "' is empty");

    const int panel_w = 420, panel_h = 300, margin = 46;
    cv::Mat canvas(2 * panel_h + 3 * margin, 2 * panel_w + 3 * margin, CV_8UC3, cv::Scalar(255, 255, 255));

    for (int k = 0; k < 4; ++k) {
        int px = margin + (k % 2) * (panel_w + margin);
        int py = margin + (k / 2) * (panel_h + margin);
        cv::Rect panel(px, py, panel_w, panel_h);
        cv::rectangle(canvas, panel, cv::Scalar(60, 60, 60), 1);
        cv::putText(canvas, kComponentNames[k], {px + 6, py - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.55,
                    cv::Scalar(20, 20, 20), 1, cv::LINE_AA);

        double lo = 1e308, hi = -1e308;
        for (const auto& [name, log] : logs)
            for (const LossRecord& r : log) {
                lo = std::min(lo, component(r, k));
                hi = std::max(hi, component(r, k));
            }
        if (hi <= lo) hi = lo + 1.0;

        for (size_t li = 0; li < logs.size(); ++li) {
            const auto& log = logs[li].second;
            std::vector<cv::Point> pts;
            for (size_t i = 0; i < log.size(); ++i) {
                double tx = log.size() > 1 ? static_cast<double>(i) / (log.size() - 1) : 0.5;
                double ty = (component(log[i], k) - lo) / (hi - lo);
                pts.emplace_back(px + static_cast<int>(tx * (panel_w - 1)),
                                 py + panel_h - 1 - static_cast<int>(ty * (panel_h - 1)));
            }
            const cv::Scalar& color = kPalette[li % 8];
            if (pts.size() == 1)
                cv::circle(canvas, pts[0], 3, color, cv::FILLED);
            else
                cv::polylines(canvas, pts, false, color, 2, cv::LINE_AA);
            // legend: run name swatch, top-right of the first panel row
            if (k == 0) {
                int ly = py + 16 + static_cast<int>(li) * 18;
                cv::line(canvas, {px + panel_w - 120, ly}, {px + panel_w - 95, ly}, color, 3);
                cv::putText(canvas, logs[li].first, {px + panel_w - 88, ly + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                            cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
            }
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4g", hi);
        cv::putText(canvas, buf, {px + 4, py + 14}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(90, 90, 90), 1);
        std::snprintf(buf, sizeof(buf), "%.4g", lo);
        cv::putText(canvas, buf, {px + 4, py + panel_h - 6}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(90, 90, 90), 1);
    }
    if (!cv::imwrite(path, canvas)) throw std::runtime_error("cannot write chart '" + path + "'");
}

double bar_height_fraction(double value, double group_max) {
    if (!(group_max > 0.0)) return 0.0;
    return std::clamp(value / group_max, 0.0, 1.0);
}

void render_loss_bar_chart(const ComparisonReport& rep, const std::string& path) {
    const int w = 760, h = 420, margin = 56, base_y = h - margin;
    const int group_w = (w - 2 * margin) / 4, bar_w = group_w / 3;
    cv::Mat canvas(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
    cv::line(canvas, {margin, base_y}, {w - margin, base_y}, cv::Scalar(60, 60, 60), 1);

    for (int k = 0; k < 4; ++k) {
        double b = component(rep.baseline_final, k);
        double o = component(rep.optimized_final, k);
        double m = std::max(b, o);
        int gx = margin + k * group_w;
        auto draw_bar = [&](int slot, double value, const cv::Scalar& color) {
            int bh = static_cast<int>(bar_height_fraction(value, m) * (h - 2 * margin - 24));
            cv::Rect r(gx + slot * bar_w + bar_w / 2, base_y - bh, bar_w - 6, bh);
            if (r.height > 0) cv::rectangle(canvas, r, color, cv::FILLED);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.3g", value);
            cv::putText(canvas, buf, {r.x - 2, base_y - bh - 6}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                        cv::Scalar(50, 50, 50), 1, cv::LINE_AA);
        };
        draw_bar(0, b, kPalette[0]);
        draw_bar(1, o, kPalette[1]);
        cv::putText(canvas, kComponentNames[k], {gx + group_w / 2 - 18, base_y + 22}, cv::FONT_HERSHEY_SIMPLEX, 0.55,
                    cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
    }
    cv::line(canvas, {margin, 24}, {margin + 25, 24}, kPalette[0], 8);
    cv::putText(canvas, "baseline", {margin + 32, 29}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(20, 20, 20), 1);
    cv::line(canvas, {margin + 140, 24}, {margin + 165, 24}, kPalette[1], 8);
    cv::putText(canvas, "optimized", {margin + 172, 29}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(20, 20, 20), 1);
    if (!cv::imwrite(path, canvas)) throw std::runtime_error("cannot write chart '" + path + "'");
}

ImageTensor enhance_contrast(const ImageTensor& image, double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("enhance_contrast: factor must be positive");
    ImageTensor out(image.height, image.width);
    for (std::int64_t i = 0; i < image.data.numel(); ++i)
        out.data[i] = std::clamp(0.5 + factor * (image.data[i] - 0.5), 0.0, 1.0);
    return out;
}

}  // namespace semstyle
