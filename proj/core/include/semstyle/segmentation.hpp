#pragma once

#include <memory>
#include <string>
#include <utility>

#include "semstyle/tensor.hpp"
#include "semstyle/types.hpp"

namespace semstyle {

/// Per-pixel class scorer. segment() returns (num_classes, H, W) scores with
/// the same spatial dimensions as the input.
struct ISegmenter {
    virtual ~ISegmenter() = default;
    virtual Tensor segment(const ImageTensor& image) const = 0;
    virtual int person_class_index() const = 0;
    virtual std::string describe() const = 0;
};

/// Fixed-rule segmenter for offline runs and tests. Two classes
/// (0 background, 1 person).
class MockSegmenter final : public ISegmenter {
public:
    enum class Rule {
        LeftHalfPortrait,  // person score 1 for x < width/2, background 0.5
        AllBackground,     // person score always 0, background 0.5
    };

    explicit MockSegmenter(Rule rule = Rule::LeftHalfPortrait) : rule_(rule) {}
    Tensor segment(const ImageTensor& image) const override;
    int person_class_index() const override { return 1; }
    std::string describe() const override;

private:
    Rule rule_;
};

/// Segmenter evaluated from a weight bundle of kind "segmenter". Score maps
/// are bilinearly resized to the input size when the network's output is
/// coarser.
class BundleSegmenter final : public ISegmenter {
public:
    explicit BundleSegmenter(const std::string& bundle_path);
    Tensor segment(const ImageTensor& image) const override;
    int person_class_index() const override { return person_class_; }
    std::string describe() const override;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    int person_class_;
};

std::shared_ptr<ISegmenter> load_segmenter_from_cache(const std::string& cache_dir);

/// Mask value is 0 where the argmax class is the person class, 1 elsewhere.
/// Ties resolve to the lowest class index.
SemanticMask build_portrait_mask(const ISegmenter& segmenter, const ImageTensor& image);

/// Pixelwise product: portrait pixels zeroed, background unchanged.
ImageTensor apply_mask(const ImageTensor& image, const SemanticMask& mask);

/// Labels the size x size crop at (x, y): the fraction of portrait pixels in
/// the centered membership_region sub-window decides the label,
/// Portrait iff fraction >= membership_threshold.
std::pair<PatchLabel, double> label_patch(int x, int y, int size, const SemanticMask& mask,
                                          const SamplerConfig& sampler);

struct MaskStatistics {
    double portrait_fraction = 0.0;
    double background_fraction = 0.0;
};

MaskStatistics mask_statistics(const SemanticMask& mask);

}  // namespace semstyle
