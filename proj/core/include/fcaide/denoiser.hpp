#pragma once

#include "fcaide/image.hpp"
#include "fcaide/network.hpp"
#include "fcaide/pixelwise.hpp"

namespace fcaide {

enum class DenoiseMode { Plain, FlipAveraged };

/// Reconstruction before the final clip, in the scale of `noisy`.
GrayImage denoise_unclipped(const NetworkParams& params, const GrayImage& noisy, DenoiseMode mode);

/// Network forward in unit scale, polynomial map, optional averaging over the
/// four flips (each result un-flipped first), then one clip to [0,255].
/// Output is raw scale and unrounded.
GrayImage denoise(const NetworkParams& params, const GrayImage& noisy, DenoiseMode mode);

GrayImage clip_to_range(const GrayImage& image);

}  // namespace fcaide
