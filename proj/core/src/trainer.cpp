#include "semstyle/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "semstyle/losses.hpp"
#include "semstyle/patch_sampler.hpp"
#include "semstyle/rng.hpp"

namespace semstyle {

double lr_at(int iteration, double initial_lr, int halving_period) {
    if (iteration < 0) throw std::invalid_argument("lr_at: iteration must be non-negative");
    if (halving_period < 1) throw std::invalid_argument("lr_at: halving_period must be positive");
    return initial_lr * std::pow(0.5, iteration / halving_period);
}

AdamOptimizer::AdamOptimizer(std::vector<ad::Var> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const ad::Var& p : params_) {
        m_.push_back(Tensor::zeros(p.value().shape()));
        v_.push_back(Tensor::zeros(p.value().shape()));
    }
}

void AdamOptimizer::step(double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
        Tensor& value = params_[k].mutable_value();
        const Tensor& grad = params_[k].grad();
        if (grad.numel() != value.numel())
            throw std::logic_error("AdamOptimizer: parameter has no gradient; run backward() first");
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::int64_t i = 0; i < value.numel(); ++i) {
            double g = grad[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

TrainResult train(const ImageTensor& content, const TextCondition& cond, const TrainRunConfig& cfg,
                  const EncoderSet& encoders, const ISegmenter& segmenter, const PromptTemplateSet& templates,
                  const std::string& checkpoint_path, const TrainCallbacks& callbacks) {
    auto t0 = std::chrono::steady_clock::now();

    std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const std::string& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    if (content.height < 1 || content.width < 1) throw std::invalid_argument("train: empty content image");
    if (cfg.sampler.patch_size > content.height || cfg.sampler.patch_size > content.width)
        throw std::invalid_argument("train: sampler.patch_size exceeds the content image");
    if (!content.data.all_finite()) throw std::invalid_argument("train: non-finite content pixels");

    const bool semantic = cfg.mode == RunMode::SemanticAware;

    // Per-run constants: text direction, mask, content embeddings, features.
    Tensor dt = text_direction(*encoders.text, cond, templates);
    SemanticMask mask = semantic ? build_portrait_mask(segmenter, content)
                                 : SemanticMask(content.height, content.width, 1);
    Tensor mask_tensor = mask.as_tensor();

    Tensor content_embedding = encode_image_value(*encoders.image, content);
    Tensor masked_content_embedding;
    if (semantic) masked_content_embedding = encode_image_value(*encoders.image, apply_mask(content, mask));

    auto content_feature_graph = extract_content_features(*encoders.features, content);
    std::vector<std::pair<std::string, Tensor>> content_features;
    for (const auto& [name, v] : content_feature_graph.maps) content_features.emplace_back(name, v.value());

    RandomSource root(static_cast<std::uint64_t>(cfg.seed));
    StyleNet net(root.child(0).seed());
    AdamOptimizer adam(net.parameters());
    ad::Var content_var = ad::Var::constant(content.data);

    TrainResult result;
    result.mask = mask;
    result.loss_log.reserve(static_cast<size_t>(cfg.iterations));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        RandomSource iter_rng = root.child(1 + static_cast<std::uint64_t>(iter));
        RandomSource sampler_rng = iter_rng.child(0);
        RandomSource aug_rng = iter_rng.child(1);

        ad::Var stylized = net.forward(content_var);

        ad::Var dir_node = semantic
                               ? background_global_clip_loss(stylized, mask_tensor, masked_content_embedding, dt,
                                                             *encoders.image)
                               : directional_clip_loss(stylized, content_embedding, dt, *encoders.image);

        std::vector<Patch> patches = sample_patches(content.height, content.width, mask, cfg.sampler, sampler_rng);
        ad::Var patch_node =
            semantic ? semantic_patchwise_clip_loss(stylized, patches, content_embedding, dt, *encoders.image,
                                                    cfg.thresholds, cfg.penalties, cfg.distortion_degree, aug_rng)
                     : patchwise_clip_loss(stylized, patches, content_embedding, dt, *encoders.image,
                                           cfg.thresholds.tau_back, cfg.distortion_degree, aug_rng);

        ad::Var content_node = content_loss(stylized, content_features, *encoders.features);
        ad::Var tv_node = tv_loss(stylized);
        ad::Var total_node = weighted_total(dir_node, patch_node, content_node, tv_node, cfg.loss_weights);

        double lr = lr_at(iter, cfg.initial_lr, cfg.lr_halving_period);
        LossRecord rec{iter,           dir_node.scalar(), patch_node.scalar(), content_node.scalar(),
                       tv_node.scalar(), total_node.scalar(), lr};
        result.loss_log.push_back(rec);
        if (callbacks.on_record) callbacks.on_record(rec);
        if (!std::isfinite(rec.l_total))
            throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(iter) + " (dir=" +
                                     std::to_string(rec.l_dir) + ", patch=" + std::to_string(rec.l_patch) +
                                     ", content=" + std::to_string(rec.l_content) + ", tv=" + std::to_string(rec.l_tv) +
                                     ")");

        ad::backward(total_node);
        adam.step(lr);
    }

    result.final_image = net.forward_image(content);
    if (!checkpoint_path.empty()) {
        net.save_checkpoint(checkpoint_path);
        result.checkpoint_path = checkpoint_path;
    }
    result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// loss log CSV / manifest
// ---------------------------------------------------------------------------

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string loss_record_csv_header() { return "iteration,l_dir,l_patch,l_content,l_tv,l_total,lr"; }

std::string loss_record_csv_row(const LossRecord& r) {
    std::ostringstream os;
    os << r.iteration << ',' << fmt(r.l_dir) << ',' << fmt(r.l_patch) << ',' << fmt(r.l_content) << ',' << fmt(r.l_tv)
       << ',' << fmt(r.l_total) << ',' << fmt(r.lr);
    return os.str();
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write loss log '" + path + "'");
    out << loss_record_csv_header() << '\n';
    for (const LossRecord& r : log) out << loss_record_csv_row(r) << '\n';
}

std::vector<LossRecord> read_loss_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open loss log '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("loss log '" + path + "' is empty");
    if (line != loss_record_csv_header())
        throw std::runtime_error("loss log '" + path + "' has an unexpected header");
    std::vector<LossRecord> log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        LossRecord r;
        auto next = [&]() {
            if (!std::getline(ss, field, ',')) throw std::runtime_error("malformed row in '" + path + "'");
            return field;
        };
        r.iteration = std::stoi(next());
        r.l_dir = std::stod(next());
        r.l_patch = std::stod(next());
        r.l_content = std::stod(next());
        r.l_tv = std::stod(next());
        r.l_total = std::stod(next());
        r.lr = std::stod(next());
        log.push_back(r);
    }
    return log;
}

void write_run_manifest(const std::string& path, const TrainRunConfig& cfg,
                        const std::vector<std::string>& component_ids, double wall_time_seconds,
                        const std::map<std::string, std::string>& extra) {
    nlohmann::json j;
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    j["iterations"] = cfg.iterations;
    j["initial_lr"] = cfg.initial_lr;
    j["lr_halving_period"] = cfg.lr_halving_period;
    j["distortion_degree"] = cfg.distortion_degree;
    j["contrast_factor"] = cfg.contrast_factor;
    j["loss_weights"] = {{"lambda_d", cfg.loss_weights.lambda_d},
                         {"lambda_p", cfg.loss_weights.lambda_p},
                         {"lambda_c", cfg.loss_weights.lambda_c},
                         {"lambda_tv", cfg.loss_weights.lambda_tv}};
    j["thresholds"] = {{"tau_portrait", cfg.thresholds.tau_portrait}, {"tau_back", cfg.thresholds.tau_back}};
    j["penalties"] = {{"alpha_portrait", cfg.penalties.alpha_portrait}, {"alpha_back", cfg.penalties.alpha_back}};
    j["sampler"] = {{"n_patches", cfg.sampler.n_patches},
                    {"patch_size", cfg.sampler.patch_size},
                    {"portrait_quota", cfg.sampler.portrait_quota},
                    {"membership_region", cfg.sampler.membership_region},
                    {"membership_threshold", cfg.sampler.membership_threshold}};
    j["optimizer"] = {{"kind", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}};
    j["components"] = component_ids;
    j["wall_time_seconds"] = wall_time_seconds;
    for (const auto& [k, v] : extra) j[k] = v;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace semstyle
