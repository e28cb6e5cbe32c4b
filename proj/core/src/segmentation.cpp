#include "semstyle/segmentation.hpp"

#include <stdexcept>

#include "semstyle/autodiff.hpp"
#include "semstyle/bundle.hpp"

namespace semstyle {

Tensor MockSegmenter::segment(const ImageTensor& image) const {
    Tensor scores({2, image.height, image.width});
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            scores.at(0, y, x) = 0.5;
            scores.at(1, y, x) = (rule_ == Rule::LeftHalfPortrait && x < image.width / 2) ? 1.0 : 0.0;
        }
    return scores;
}

std::string MockSegmenter::describe() const {
    return rule_ == Rule::LeftHalfPortrait ? "mock-segmenter(left-half)" : "mock-segmenter(all-background)";
}

struct BundleSegmenter::Impl {
    SequentialNet net;
    explicit Impl(std::vector<LayerSpec> layers) : net(std::move(layers)) {}
};

BundleSegmenter::BundleSegmenter(const std::string& bundle_path) {
    WeightBundle b = WeightBundle::load(bundle_path);
    if (b.kind != "segmenter") throw std::runtime_error("expected a segmenter bundle, got " + b.kind);
    auto it = b.scalars.find("person_class_index");
    if (it == b.scalars.end()) throw std::runtime_error("segmenter bundle is missing person_class_index");
    person_class_ = static_cast<int>(it->second);
    impl_ = std::make_shared<Impl>(std::move(b.layers));
}

Tensor BundleSegmenter::segment(const ImageTensor& image) const {
    ad::Var scores = impl_->net.forward(ad::Var::constant(image.data));
    Tensor s = scores.value();
    if (s.rank() != 3) throw std::runtime_error("segmenter network must produce (classes,H,W) scores");
    if (s.dim(1) != image.height || s.dim(2) != image.width) {
        ad::Var up = ad::resize_bilinear(ad::Var::constant(s), image.height, image.width);
        s = up.value();
    }
    if (person_class_ < 0 || person_class_ >= s.dim(0))
        throw std::runtime_error("segmenter person_class_index out of range");
    return s;
}

std::string BundleSegmenter::describe() const {
    return "bundle-segmenter(person_class=" + std::to_string(person_class_) + ")";
}

std::shared_ptr<ISegmenter> load_segmenter_from_cache(const std::string& cache_dir) {
    return std::make_shared<BundleSegmenter>(cache_dir + "/segmenter.sswb");
}

SemanticMask build_portrait_mask(const ISegmenter& segmenter, const ImageTensor& image) {
    if (image.height < 1 || image.width < 1) throw std::invalid_argument("build_portrait_mask: empty image");
    Tensor scores = segmenter.segment(image);
    if (scores.rank() != 3 || scores.dim(1) != image.height || scores.dim(2) != image.width)
        throw std::runtime_error("segmenter scores must match image dimensions");
    int classes = scores.dim(0);
    int person = segmenter.person_class_index();
    SemanticMask mask(image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            int best = 0;
            double best_score = scores.at(0, y, x);
            for (int c = 1; c < classes; ++c) {
                if (scores.at(c, y, x) > best_score) {
                    best_score = scores.at(c, y, x);
                    best = c;
                }
            }
            mask.set(y, x, best == person ? 0 : 1);
        }
    return mask;
}

ImageTensor apply_mask(const ImageTensor& image, const SemanticMask& mask) {
    if (mask.height != image.height || mask.width != image.width)
        throw std::invalid_argument("apply_mask: mask dimensions do not match image");
    ImageTensor out(image.height, image.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                out.at(c, y, x) = image.at(c, y, x) * static_cast<double>(mask.at(y, x));
    return out;
}

std::pair<PatchLabel, double> label_patch(int x, int y, int size, const SemanticMask& mask,
                                          const SamplerConfig& sampler) {
    if (sampler.membership_region > size)
        throw std::invalid_argument("label_patch: membership_region exceeds patch size");
    if (x < 0 || y < 0 || x + size > mask.width || y + size > mask.height)
        throw std::out_of_range("label_patch: crop out of bounds");
    int m = sampler.membership_region;
    int ox = x + (size - m) / 2;
    int oy = y + (size - m) / 2;
    std::int64_t portrait = 0;
    for (int yy = oy; yy < oy + m; ++yy)
        for (int xx = ox; xx < ox + m; ++xx)
            if (mask.at(yy, xx) == 0) ++portrait;
    double fraction = static_cast<double>(portrait) / (static_cast<double>(m) * m);
    PatchLabel label =
        fraction >= sampler.membership_threshold ? PatchLabel::Portrait : PatchLabel::Background;
    return {label, fraction};
}

MaskStatistics mask_statistics(const SemanticMask& mask) {
    std::int64_t portrait = 0;
    for (std::uint8_t v : mask.values)
        if (v == 0) ++portrait;
    double total = static_cast<double>(mask.values.size());
    MaskStatistics s;
    s.portrait_fraction = total > 0 ? static_cast<double>(portrait) / total : 0.0;
    s.background_fraction = total > 0 ? 1.0 - s.portrait_fraction : 0.0;
    return s;
}

}  // namespace semstyle
