#pragma once

#include <string>
#include <vector>

#include "semstyle/types.hpp"

namespace semstyle {

/// Final-iteration loss components of two runs plus the dominance verdict:
/// true iff the optimized run is <= the baseline on all four components.
struct ComparisonReport {
    LossRecord baseline_final;
    LossRecord optimized_final;
    bool dominance = false;
    std::string line_chart_path;
    std::string bar_chart_path;
};

ComparisonReport compare_runs(const std::vector<LossRecord>& baseline_log,
                              const std::vector<LossRecord>& optimized_log);

void write_comparison_json(const std::string& path, const ComparisonReport& report);
ComparisonReport read_comparison_json(const std::string& path);

/// One plotted line: "<run>:<component>" over iterations.
struct ChartSeries {
    std::string name;
    std::vector<double> values;
};

/// Expands (run name, log) pairs into per-component series, four per run,
/// component order dir, patch, content, tv.
std::vector<ChartSeries> chart_series_from_logs(
    const std::vector<std::pair<std::string, std::vector<LossRecord>>>& logs);

/// 2x2 panel grid (one panel per loss component), one line per run.
/// Throws when no log or an empty log is given.
void render_loss_line_chart(const std::vector<std::pair<std::string, std::vector<LossRecord>>>& logs,
                            const std::string& path);

/// Grouped bars: one group per loss component, baseline and optimized bars.
void render_loss_bar_chart(const ComparisonReport& report, const std::string& path);

/// Bar height as a fraction of the group maximum (0 when the group is empty
/// or non-positive).
double bar_height_fraction(double value, double group_max);

/// out = clamp(0.5 + factor * (in - 0.5), 0, 1), pixelwise. The midpoint 0.5
/// is a fixed point for every factor.
ImageTensor enhance_contrast(const ImageTensor& image, double factor);

}  // namespace semstyle
