#pragma once

#include <string>

#include "semstyle/types.hpp"

namespace semstyle {

/// Loads an RGB image file into [0,1] doubles. Throws on missing/corrupt files.
ImageTensor load_image(const std::string& path);

/// Clamps to [0,1] and writes an 8-bit image (format by extension).
void save_image(const std::string& path, const ImageTensor& image);

/// Writes the mask as an 8-bit grayscale image: 0 (black) on portrait
/// pixels, 255 (white) on background pixels.
void save_mask_image(const std::string& path, const SemanticMask& mask);

}  // namespace semstyle
