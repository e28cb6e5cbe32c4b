#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "semstyle/encoders.hpp"
#include "semstyle/segmentation.hpp"
#include "semstyle/stylenet.hpp"
#include "semstyle/types.hpp"

namespace semstyle {

struct TrainResult {
    ImageTensor final_image;  // pre contrast enhancement
    std::string checkpoint_path;
    std::vector<LossRecord> loss_log;
    double wall_time_seconds = 0.0;
    SemanticMask mask;  // the frozen mask the run used (all background in baseline mode)
};

/// initial_lr * 0.5^floor(iteration / halving_period)
double lr_at(int iteration, double initial_lr, int halving_period);

/// First/second-moment adaptive optimizer with bias correction.
/// beta1 = 0.9, beta2 = 0.999, eps = 1e-8 unless overridden.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<ad::Var> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(double lr);
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }
    double epsilon() const { return eps_; }

private:
    std::vector<ad::Var> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

struct TrainCallbacks {
    std::function<void(const LossRecord&)> on_record;
};

/// Runs the per-image optimization. The mask, text direction, and content
/// targets are computed once before the loop. Baseline mode skips
/// segmentation, uses the unmasked directional loss, and treats every patch
/// with tau_back and no weight penalty.
///
/// Throws on invalid config, sampler exhaustion, or a non-finite loss (the
/// diagnostic record is still delivered to the callback first).
TrainResult train(const ImageTensor& content, const TextCondition& cond, const TrainRunConfig& cfg,
                  const EncoderSet& encoders, const ISegmenter& segmenter, const PromptTemplateSet& templates,
                  const std::string& checkpoint_path = "", const TrainCallbacks& callbacks = {});

// Loss-log CSV: header iteration,l_dir,l_patch,l_content,l_tv,l_total,lr
// with round-trip (%.17g) formatting.
std::string loss_record_csv_header();
std::string loss_record_csv_row(const LossRecord& r);
void write_loss_csv(const std::string& path, const std::vector<LossRecord>& log);
std::vector<LossRecord> read_loss_csv(const std::string& path);

/// JSON run manifest: config echo, seed, encoder identities, wall time, and
/// any extra key/value pairs from the caller.
void write_run_manifest(const std::string& path, const TrainRunConfig& cfg,
                        const std::vector<std::string>& component_ids, double wall_time_seconds,
                        const std::map<std::string, std::string>& extra = {});

}  // namespace semstyle
